import numpy as np
import pytest

from toaloc.scenario import (
    BENCHMARK_ANCHORS_M,
    AnchorSet,
    NoiseSpec,
    ResponseSchedule,
    Scenario,
    UdState,
    benchmark_scenario,
    ppm_to_drift,
    propagate,
)


def make_state(p=(0.0, 0.0), v=(0.0, 0.0), b=0.0, w=0.0):
    return UdState(np.asarray(p, float), np.asarray(v, float), b, w)


class TestPropagate:
    def test_static_state_keeps_offset(self):
        s = make_state(b=0.5)
        out = propagate(s, 1.0)
        assert np.array_equal(out.position, s.position)
        assert out.clock_offset == 0.5

    def test_direct_evaluation(self):
        s = make_state(v=(10.0, 0.0), w=1e-5)
        out = propagate(s, 0.01)
        assert np.allclose(out.position, [0.1, 0.0], atol=1e-15)
        assert out.clock_offset == pytest.approx(1e-7, rel=1e-12)

    def test_semigroup(self):
        s = make_state(p=(3.0, -4.0), v=(1.5, 2.5), b=0.2, w=3e-6)
        a = propagate(propagate(s, 0.25), 0.75)
        b = propagate(s, 1.0)
        assert np.array_equal(a.position, b.position)
        assert a.clock_offset == b.clock_offset

    def test_affine_in_dt(self):
        # three-point collinearity on each component
        s = make_state(p=(1.0, 2.0), v=(3.0, -1.0), b=0.1, w=5e-6)
        s0, s1, s2 = propagate(s, 0.0), propagate(s, 1.0), propagate(s, 2.0)
        assert np.allclose(s2.position - s1.position, s1.position - s0.position)
        assert (s2.clock_offset - s1.clock_offset) == pytest.approx(
            s1.clock_offset - s0.clock_offset
        )

    def test_negative_dt_rejected(self):
        with pytest.raises(ValueError):
            propagate(make_state(), -0.1)


class TestTypes:
    def test_coincident_anchors_rejected(self):
        with pytest.raises(ValueError):
            AnchorSet(np.array([[0.0, 0.0], [0.0, 0.0]]))

    def test_schedule_positive(self):
        with pytest.raises(ValueError):
            ResponseSchedule(np.array([0.0, 0.01]))

    def test_sequential_validation(self):
        ResponseSchedule(np.array([0.01, 0.02])).validate_sequential()
        equal = ResponseSchedule(np.array([0.01, 0.01]))  # allowed in general
        with pytest.raises(ValueError):
            equal.validate_sequential()

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            NoiseSpec(np.array([-0.1]), 0.1)


class TestBenchmarkScenario:
    def test_deterministic(self):
        a = benchmark_scenario(np.random.default_rng(11))
        b = benchmark_scenario(np.random.default_rng(11))
        assert np.array_equal(a.ud.position, b.ud.position)
        assert np.array_equal(a.ud.velocity, b.ud.velocity)
        assert a.ud.clock_offset == b.ud.clock_offset

    def test_anchor_coordinates(self):
        sc = benchmark_scenario(np.random.default_rng(0))
        assert np.array_equal(sc.anchors.positions, np.asarray(BENCHMARK_ANCHORS_M))

    def test_schedule_is_incremental_10ms(self):
        sc = benchmark_scenario(np.random.default_rng(0))
        assert np.allclose(sc.schedule.delays, [0.01, 0.02, 0.03, 0.04])

    def test_speed_mean(self):
        rng = np.random.default_rng(12)
        speeds = np.array(
            [np.linalg.norm(benchmark_scenario(rng).ud.velocity) for _ in range(100_000)]
        )
        assert abs(speeds.mean() - 25.0) < 0.5

    def test_draw_supports(self):
        rng = np.random.default_rng(13)
        for _ in range(2000):
            sc = benchmark_scenario(rng)
            assert np.all(np.abs(sc.ud.position) <= 250.0)
            assert -1.0 <= sc.ud.clock_offset <= 1.0
            assert abs(sc.ud.clock_drift) <= ppm_to_drift(10.0)
            assert np.linalg.norm(sc.ud.velocity) <= 50.0

    def test_fixed_speed_override(self):
        sc = benchmark_scenario(np.random.default_rng(14), speed_mps=30.0)
        assert np.linalg.norm(sc.ud.velocity) == pytest.approx(30.0)


class TestSerialization:
    def test_json_round_trip(self):
        sc = benchmark_scenario(np.random.default_rng(15), sigma_m=0.5)
        back = Scenario.from_json(sc.to_json())
        assert np.allclose(back.anchors.positions, sc.anchors.positions)
        assert np.allclose(back.ud.position, sc.ud.position)
        assert np.allclose(back.ud.velocity, sc.ud.velocity)
        assert back.ud.clock_offset == pytest.approx(sc.ud.clock_offset, rel=1e-15)
        assert back.ud.clock_drift == pytest.approx(sc.ud.clock_drift, rel=1e-15)
        assert np.allclose(back.schedule.delays, sc.schedule.delays)
        assert np.allclose(back.noise.sigma_request, sc.noise.sigma_request)
        assert back.noise.sigma_response == sc.noise.sigma_response

    def test_json_field_names(self):
        import json

        doc = json.loads(benchmark_scenario(np.random.default_rng(16)).to_json())
        assert set(doc) >= {"anchors", "ud", "schedule_ms", "noise_m"}
