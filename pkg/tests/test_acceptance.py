"""End-to-end acceptance criteria for the estimator suite.

Each test prints exactly one summary line of the form

    [criterion N] <name>: PASS|FAIL

and asserts it. These run full Monte-Carlo sweeps at reduced (desk) scale
and dominate the suite's wall time; run them with ``pytest tests/test_acceptance.py``.
"""

import numpy as np
import pytest

from toaloc.analysis import (
    check_known_velocity_advantage,
    check_two_way_advantage,
    fim,
    stationary_assumption_bias,
    velocity_mismatch_bias,
)
from toaloc.estimator import (
    Mode,
    ParamVector,
    SolverConfig,
    default_initial,
    design_matrix,
    model_h,
    solve,
)
from toaloc.measurement import generate
from toaloc.montecarlo import ExperimentConfig, aggregate, run_experiment, run_sweep_point
from toaloc.scenario import (
    AnchorSet,
    NoiseSpec,
    ResponseSchedule,
    Scenario,
    UdState,
    benchmark_scenario,
)


def _report(number: int, name: str, ok: bool, detail: str = "") -> None:
    verdict = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"\n[criterion {number}] {name}: {verdict}{suffix}")
    assert ok, f"criterion {number} {name}: {detail}"


@pytest.fixture(scope="module")
def noise_sweep_summaries():
    config = ExperimentConfig(
        kind="noise-sweep",
        sweep_values=(0.01, 0.1, 1.0, 10.0),
        trials=5000,
        modes=(Mode.KNOWN_VELOCITY, Mode.ESTIMATED_VELOCITY, Mode.ONE_WAY),
    )
    return run_experiment(config)


def _by_mode(summaries, sweep_value, mode_label):
    return next(
        s for s in summaries if s.sweep_value == sweep_value and s.mode == mode_label
    )


class TestCriterion1:
    def test_crlb_attainment(self, noise_sweep_summaries):
        worst = 0.0
        ok = True
        for sigma in (0.01, 0.1, 1.0, 10.0):
            for label in ("known-velocity", "estimated-velocity"):
                s = _by_mode(noise_sweep_summaries, sigma, label)
                for rmse, crlb in ((s.pos_rmse_m, s.pos_crlb_m), (s.clk_rmse_m, s.clk_crlb_m)):
                    dev = abs(rmse / crlb - 1.0)
                    worst = max(worst, dev)
                    ok &= dev <= 0.05
        _report(1, "CRLB attainment", ok, f"worst RMSE/CRLB deviation {worst:.3%}")


class TestCriterion2:
    def test_mode_ordering_and_theorems(self, noise_sweep_summaries):
        ordering_ok = True
        for sigma in (0.01, 0.1, 1.0, 10.0):
            kv = _by_mode(noise_sweep_summaries, sigma, "known-velocity").pos_rmse_m
            ev = _by_mode(noise_sweep_summaries, sigma, "estimated-velocity").pos_rmse_m
            ow = _by_mode(noise_sweep_summaries, sigma, "one-way").pos_rmse_m
            ordering_ok &= kv <= 1.02 * ev <= 1.02 * 1.02 * ow

        rng = np.random.default_rng(20260823)
        violations = 0
        worst_equal_margin = 0.0
        for _ in range(1000):
            m = int(rng.integers(4, 9))
            anchors = AnchorSet(rng.uniform(-400, 400, (m, 2)))
            ud = UdState(
                rng.uniform(-250, 250, 2),
                rng.uniform(-50, 50, 2),
                float(rng.uniform(-1, 1)),
                float(rng.uniform(-1e-5, 1e-5)),
            )
            noise = NoiseSpec.uniform(0.1, m)
            schedule = ResponseSchedule(0.01 * np.arange(1, m + 1))
            kv_check = check_known_velocity_advantage(anchors, ud, schedule, noise)
            tw_check = check_two_way_advantage(anchors, ud, schedule, noise)
            if not (kv_check["holds"] and tw_check["holds"]):
                violations += 1
            equal = ResponseSchedule(np.full(m, 0.01))
            tw_equal = check_two_way_advantage(anchors, ud, equal, noise)
            # margins are differences of CRLBs, so their round-off lives at
            # the CRLB scale; judge the equality residual relative to it
            crlb_scale = float(
                np.max(fim(Mode.ONE_WAY, anchors, ud, equal, noise).crlb_diag)
            )
            worst_equal_margin = max(
                worst_equal_margin,
                float(np.max(np.abs(tw_equal["margins"]))) / crlb_scale,
            )
        theorem_ok = violations == 0 and worst_equal_margin <= 1e-9
        _report(
            2,
            "method ordering and theorem checks",
            ordering_ok and theorem_ok,
            f"{violations} violations/1000, worst relative equal-delay margin {worst_equal_margin:.2e}",
        )


class TestCriterion3:
    def test_velocity_irrelevance(self):
        config = ExperimentConfig(
            kind="speed-sweep",
            sweep_values=(0.0, 10.0, 20.0, 30.0, 40.0, 50.0),
            trials=2000,
            sigma_m=0.1,
            modes=(Mode.KNOWN_VELOCITY, Mode.ESTIMATED_VELOCITY),
        )
        summaries = run_experiment(config)
        worst = 0.0
        ok = True
        for label in ("known-velocity", "estimated-velocity"):
            for metric in ("pos_rmse_m", "clk_rmse_m"):
                values = [
                    getattr(_by_mode(summaries, v, label), metric)
                    for v in config.sweep_values
                ]
                for a, b in zip(values, values[1:]):
                    rel = abs(b - a) / a
                    worst = max(worst, rel)
                    ok &= rel < 0.03
        _report(
            3,
            "velocity irrelevance of the moving-device estimators",
            ok,
            f"worst adjacent-point RMSE variation {worst:.3%}",
        )


class TestCriterion4:
    def test_stationary_baseline_degradation(self):
        speeds = (0.0, 10.0, 20.0, 30.0, 40.0, 50.0)
        config = ExperimentConfig(
            kind="stationary-baseline",
            sweep_values=speeds,
            trials=2000,
            sigma_m=0.1,
            delay_step_ms=(5.0, 10.0, 20.0),
        )
        summaries = run_experiment(config)

        def rmse(speed, step_ms):
            return _by_mode(summaries, speed, f"stationary@dt{step_ms:g}ms")

        # strictly increasing in the delay step at the highest speed
        at50 = [rmse(50.0, s).pos_rmse_m for s in (5.0, 10.0, 20.0)]
        increasing_dt = all(b > a for a, b in zip(at50, at50[1:]))

        # strictly increasing in speed at every delay step
        increasing_v = True
        for step in (5.0, 10.0, 20.0):
            values = [rmse(v, step).pos_rmse_m for v in speeds]
            increasing_v &= all(b > a for a, b in zip(values, values[1:]))

        # analytic predictor agreement, skipping the unbiased v=0 point where
        # the prediction is the plain CRLB floor
        worst = 0.0
        for step in (5.0, 10.0, 20.0):
            for v in speeds:
                s = rmse(v, step)
                worst = max(worst, abs(s.pos_rmse_m / s.pred_rmse_m - 1.0))
        predictor_ok = worst <= 0.10

        _report(
            4,
            "stationary-baseline degradation with motion and delay",
            increasing_dt and increasing_v and predictor_ok,
            f"worst empirical/predicted deviation {worst:.3%}",
        )


class TestCriterion5:
    def test_deviated_velocity_prediction(self):
        config = ExperimentConfig(
            kind="velocity-mismatch",
            sweep_values=(0.0, 4.0, 8.0, 12.0, 16.0, 20.0),
            trials=2000,
            sigma_m=0.1,
        )
        worst = 0.0
        ok = True
        for index, deviation in enumerate(config.sweep_values):
            records = run_sweep_point(config, index)
            summary = aggregate(
                records, "known-velocity", deviation, correctness_filter=False
            )
            outcomes = [r.outcomes["known-velocity"] for r in records]
            clk_pred = float(
                np.sqrt(np.mean([o.pred_rmse_clk**2 for o in outcomes]))
            )
            for rmse, pred in (
                (summary.pos_rmse_m, summary.pred_rmse_m),
                (summary.clk_rmse_m, clk_pred),
            ):
                dev = abs(rmse / pred - 1.0)
                worst = max(worst, dev)
                ok &= dev <= 0.10
        _report(
            5,
            "deviated-velocity bias/RMSE prediction",
            ok,
            f"worst empirical/predicted deviation {worst:.3%}",
        )


class TestCriterion6:
    def test_success_rates(self):
        config = ExperimentConfig(
            kind="success-rate",
            sweep_values=(10.0, 50.0, 100.0, 200.0),
            trials=10_000,
            sigma_m=5.0,
            modes=(Mode.KNOWN_VELOCITY, Mode.ESTIMATED_VELOCITY),
        )
        summaries = run_experiment(config)
        floors = {
            ("known-velocity", 10.0): 0.999,
            ("known-velocity", 50.0): 0.999,
            ("known-velocity", 100.0): 0.999,
            ("known-velocity", 200.0): 0.998,
            ("estimated-velocity", 10.0): 0.999,
            ("estimated-velocity", 50.0): 0.999,
            ("estimated-velocity", 100.0): 0.998,
            ("estimated-velocity", 200.0): 0.980,
        }
        ok = True
        worst = ""
        for (label, radius), floor in floors.items():
            rate = _by_mode(summaries, radius, label).success_rate
            if rate < floor:
                ok = False
                worst = f"{label}@{radius:g}m {rate:.4f} < {floor}"
        _report(6, "initialization success rates", ok, worst or "all cells above floor")


class TestCriterion7:
    def test_convergence_profile(self):
        config = ExperimentConfig(
            kind="iteration-profile",
            sweep_values=tuple(float(v) for v in range(1, 11)),
            trials=1500,
            sigma_m=0.1,
            initial_radius_m=50.0,
            modes=(Mode.KNOWN_VELOCITY, Mode.ESTIMATED_VELOCITY),
        )
        summaries = run_experiment(config)
        early_ok = True
        worst = 0.0
        for label in ("known-velocity", "estimated-velocity"):
            two = _by_mode(summaries, 2.0, label).pos_rmse_m
            ten = _by_mode(summaries, 10.0, label).pos_rmse_m
            dev = abs(two / ten - 1.0)
            worst = max(worst, dev)
            early_ok &= dev <= 0.01

        # total time should grow linearly with the iteration budget: the fit
        # residual band is generous because per-trial timing is noisy
        linear_ok = True
        for label in ("known-velocity", "estimated-velocity"):
            budgets = np.array([float(v) for v in range(1, 11)])
            times = np.array(
                [_by_mode(summaries, v, label).mean_solve_us for v in budgets]
            )
            slope, intercept = np.polyfit(budgets, times, 1)
            fitted = slope * budgets + intercept
            linear_ok &= slope > 0
            linear_ok &= float(np.max(np.abs(times - fitted)) / np.mean(times)) < 0.25
        _report(
            7,
            "early convergence and linear per-iteration cost",
            early_ok and linear_ok,
            f"worst 2-vs-10 iteration RMSE deviation {worst:.4%}",
        )


class TestCriterion8:
    def test_property_oracles(self):
        rng = np.random.default_rng(88)
        failures = []

        # Jacobian versus central finite differences on 100 random instances
        worst_jac = 0.0
        for _ in range(100):
            m = int(rng.integers(4, 8))
            anchors = AnchorSet(rng.uniform(-400, 400, (m, 2)))
            schedule = ResponseSchedule(np.sort(rng.uniform(0.002, 0.08, m)))
            while True:
                p = rng.uniform(-250, 250, 2)
                if np.min(np.linalg.norm(anchors.positions - p, axis=1)) > 5.0:
                    break
            mode = [Mode.KNOWN_VELOCITY, Mode.ESTIMATED_VELOCITY, Mode.ONE_WAY][
                int(rng.integers(3))
            ]
            theta = ParamVector(
                mode=mode,
                position=p,
                clock_offset_m=float(rng.uniform(-1e3, 1e3)),
                clock_drift_mps=None if mode is Mode.ONE_WAY else float(rng.uniform(-100, 100)),
                velocity=rng.uniform(-50, 50, 2) if mode is Mode.ESTIMATED_VELOCITY else None,
            )
            kv = rng.uniform(-50, 50, 2) if mode is Mode.KNOWN_VELOCITY else None
            g = design_matrix(theta, anchors, schedule, kv)
            base = theta.to_array()
            cols = []
            for j in range(base.size):
                hi, lo = base.copy(), base.copy()
                hi[j] += 1e-4
                lo[j] -= 1e-4
                f_hi = model_h(ParamVector.from_array(mode, hi, 2), anchors, schedule, kv)
                f_lo = model_h(ParamVector.from_array(mode, lo, 2), anchors, schedule, kv)
                cols.append((f_hi - f_lo) / 2e-4)
            worst_jac = max(worst_jac, float(np.max(np.abs(g - np.column_stack(cols)))))
        if worst_jac > 1e-6:
            failures.append(f"jacobian-vs-fd {worst_jac:.2e}")

        # noise-free exact recovery for every mode
        worst_rec = 0.0
        for mode in Mode:
            sc = benchmark_scenario(np.random.default_rng(89))
            ud = sc.ud
            if mode is Mode.STATIONARY:
                ud = UdState(ud.position, np.zeros(2), ud.clock_offset, ud.clock_drift)
            quiet = Scenario(sc.anchors, ud, sc.schedule, NoiseSpec.uniform(0.0, 4))
            meas = generate(quiet, np.random.default_rng(0))
            initial = default_initial(mode, ud.position + [40.0, -40.0], meas)
            solver = SolverConfig(
                convergence_threshold_m=1e-7,
                known_velocity_mps=ud.velocity if mode is Mode.KNOWN_VELOCITY else None,
            )
            out = solve(meas, sc.anchors, solver, initial)
            err = float(np.linalg.norm(out.estimate.position - ud.position))
            worst_rec = max(worst_rec, err)
            if not out.converged or err >= 1e-6:
                failures.append(f"noise-free recovery {mode.value} {err:.2e}")

        # FIM versus a numerically differentiated Jacobian
        worst_fim = 0.0
        for _ in range(20):
            m = int(rng.integers(4, 8))
            anchors = AnchorSet(rng.uniform(-400, 400, (m, 2)))
            schedule = ResponseSchedule(np.sort(rng.uniform(0.002, 0.08, m)))
            while True:
                p = rng.uniform(-250, 250, 2)
                if np.min(np.linalg.norm(anchors.positions - p, axis=1)) > 10.0:
                    break
            ud = UdState(p, rng.uniform(-50, 50, 2), 1e-9, 1e-9)
            noise = NoiseSpec.uniform(0.1, m)
            report = fim(Mode.ESTIMATED_VELOCITY, anchors, ud, schedule, noise)
            theta = ParamVector(
                Mode.ESTIMATED_VELOCITY, ud.position, ud.clock_offset_m,
                ud.clock_drift_mps, ud.velocity,
            )
            base = theta.to_array()
            cols = []
            for j in range(base.size):
                hi, lo = base.copy(), base.copy()
                hi[j] += 1e-4
                lo[j] -= 1e-4
                f_hi = model_h(
                    ParamVector.from_array(Mode.ESTIMATED_VELOCITY, hi, 2), anchors, schedule
                )
                f_lo = model_h(
                    ParamVector.from_array(Mode.ESTIMATED_VELOCITY, lo, 2), anchors, schedule
                )
                cols.append((f_hi - f_lo) / 2e-4)
            jac = np.column_stack(cols)
            numeric = jac.T @ jac * (1.0 / 0.1**2)
            scale = float(np.max(np.abs(numeric)))
            worst_fim = max(worst_fim, float(np.max(np.abs(report.fim - numeric)) / scale))
        if worst_fim > 1e-6:
            failures.append(f"fim-vs-fd {worst_fim:.2e}")

        # stationary baseline is bit-equivalent to known-velocity with v = 0
        sc = benchmark_scenario(np.random.default_rng(90), sigma_m=0.5)
        meas = generate(sc, np.random.default_rng(1))
        guess = sc.ud.position + [25.0, -25.0]
        a = solve(
            meas, sc.anchors,
            SolverConfig(known_velocity_mps=np.zeros(2)),
            default_initial(Mode.KNOWN_VELOCITY, guess, meas),
        )
        b = solve(
            meas, sc.anchors, SolverConfig(),
            default_initial(Mode.STATIONARY, guess, meas),
        )
        if not np.array_equal(a.estimate.to_array(), b.estimate.to_array()):
            failures.append("stationary not bit-equal to known-velocity(v=0)")

        # mismatch predictor reduces to the stationary predictor at zero
        # assumed velocity
        for _ in range(10):
            sc = benchmark_scenario(rng)
            a = stationary_assumption_bias(sc.anchors, sc.ud, sc.schedule, sc.noise)
            b = velocity_mismatch_bias(
                sc.anchors, sc.ud, sc.schedule, sc.noise, np.zeros(2)
            )
            if float(np.max(np.abs(a.bias - b.bias))) > 1e-12:
                failures.append("mismatch predictor does not reduce to stationary")
                break

        _report(8, "property-based oracle suite", not failures, "; ".join(failures))
