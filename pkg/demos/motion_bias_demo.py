"""Motion-bias prediction walkthrough.

Applies the conventional stationary-device estimator to a device that is
actually moving and compares its empirical position RMSE against the
closed-form first-order prediction, for several speeds. No plotting; the
table tells the story: the bias grows with speed while the analytic
predictor tracks it closely.

Run:  python3 demos/motion_bias_demo.py [--trials N]
"""

import argparse

import numpy as np

from toaloc import (
    Mode,
    Scenario,
    SolverConfig,
    UdState,
    benchmark_scenario,
    default_initial,
    generate,
    solve,
    stationary_assumption_bias,
)


def empirical_rmse(scenario, trials, rng):
    errors = []
    for _ in range(trials):
        meas = generate(scenario, rng)
        initial = default_initial(
            Mode.STATIONARY, scenario.ud.position + [30.0, -30.0], meas
        )
        report = solve(meas, scenario.anchors, SolverConfig(), initial)
        if report.converged:
            err = report.estimate.position - scenario.ud.position
            errors.append(err @ err)
    return float(np.sqrt(np.mean(errors)))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=500, help="trials per speed")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    base = benchmark_scenario(rng, sigma_m=0.1, speed_mps=1.0)
    direction = base.ud.velocity / np.linalg.norm(base.ud.velocity)

    print(f"{'speed [m/s]':>12} {'empirical RMSE [m]':>20} {'predicted RMSE [m]':>20}")
    for speed in (0.0, 10.0, 20.0, 30.0, 40.0, 50.0):
        ud = UdState(
            base.ud.position, speed * direction, base.ud.clock_offset, base.ud.clock_drift
        )
        scenario = Scenario(base.anchors, ud, base.schedule, base.noise)
        pred = stationary_assumption_bias(
            scenario.anchors, scenario.ud, scenario.schedule, scenario.noise
        )
        rmse = empirical_rmse(scenario, args.trials, rng)
        print(f"{speed:>12g} {rmse:>20.4f} {pred.predicted_rmse_position:>20.4f}")

    print("\nat zero speed both columns sit on the noise-only floor;")
    print("every extra 10 m/s of unmodeled motion adds a predictable bias.")


if __name__ == "__main__":
    main()
