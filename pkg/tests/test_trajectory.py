import numpy as np
import pytest

from ttsalab.engine import RunConfig, run_ensemble
from ttsalab.errors import InsufficientValues, OutOfHorizon
from ttsalab.schedule import StepSchedule
from ttsalab.trajectory import build_path, eval_path, sample_fdd


def harmonic():
    return StepSchedule.polynomial(1.0, 1.0, 1.0, 1.0)


class TestBuildPath:
    def test_anchor_times_are_partial_sums(self):
        path = build_path("alpha", 1, [[0.0], [1.0], [3.0]], harmonic())
        assert np.allclose(path.anchor_times, [0.0, 0.5, 0.5 + 1.0 / 3.0])

    def test_value_at_zero(self):
        path = build_path("alpha", 2, [[1.5], [2.5]], harmonic())
        assert eval_path(path, 0.0) == pytest.approx([1.5])

    def test_needs_two_values(self):
        with pytest.raises(InsufficientValues):
            build_path("alpha", 0, [[1.0]], harmonic())

    def test_anchor_spacing_matches_steps(self):
        sched = StepSchedule.polynomial(0.7, 0.6, 2.5, 0.9)
        path = build_path("beta", 10, np.zeros((8, 2)), sched)
        gaps = np.diff(path.anchor_times)
        steps = [sched.beta_at(10 + k) for k in range(7)]
        assert np.allclose(gaps, steps, rtol=1e-12)


class TestEvalPath:
    def test_anchors_reproduced_exactly(self):
        rng = np.random.default_rng(0)
        values = rng.standard_normal((12, 3))
        sched = StepSchedule.polynomial(0.7, 0.6, 2.5, 0.9)
        path = build_path("beta", 7, values, sched)
        for k, t in enumerate(path.anchor_times):
            out = eval_path(path, float(t))
            assert np.array_equal(out, values[k])

    def test_constant_values_stay_constant(self):
        path = build_path("alpha", 3, np.full((6, 2), 1.25), harmonic())
        rng = np.random.default_rng(1)
        for _ in range(50):
            t = rng.uniform(0, path.horizon)
            assert np.allclose(eval_path(path, t), 1.25, atol=1e-14)

    def test_midpoint(self):
        sched = StepSchedule.from_tables([1.0, 1.0], [1.0, 1.0])
        path = build_path("alpha", 0, [[0.0], [1.0]], sched)
        assert eval_path(path, 0.5) == pytest.approx([0.5])

    def test_hand_worked_segment(self):
        # alpha_k = 1/(k+1), start 1, values [0, 1, 3]: at t = 0.7 the
        # bracketing segment starts at 0.5 with step 1/3:
        # 1 + ((0.7 - 0.5) / (1/3)) * (3 - 1) = 2.2
        path = build_path("alpha", 1, [[0.0], [1.0], [3.0]], harmonic())
        assert eval_path(path, 0.7) == pytest.approx([2.2], abs=1e-12)

    def test_continuity(self):
        rng = np.random.default_rng(3)
        values = rng.standard_normal((30, 2))
        sched = StepSchedule.polynomial(0.7, 0.6, 2.5, 0.9)
        path = build_path("alpha", 5, values, sched)
        for _ in range(100):
            t = rng.uniform(0, path.horizon * 0.999)
            idx, t_floor = sched.locate("alpha", 5, t)
            step = sched.alpha_at(idx)
            k = idx - 5
            slope = np.linalg.norm(values[k + 1] - values[k]) / step
            # stay within the current segment so one slope bounds the move
            eps = 0.5 * (t_floor + step - t)
            diff = np.linalg.norm(eval_path(path, t + eps) - eval_path(path, t))
            assert diff <= slope * eps + 1e-12

    def test_out_of_horizon(self):
        path = build_path("alpha", 0, [[0.0], [1.0]], harmonic())
        with pytest.raises(OutOfHorizon):
            eval_path(path, path.horizon + 1e-9)
        with pytest.raises(OutOfHorizon):
            eval_path(path, -0.5)


class TestSampleFdd:
    def test_time_zero_returns_initial_values(self):
        sched = harmonic()
        paths = [build_path("beta", 2, [[float(i)], [float(i + 1)]], sched)
                 for i in range(5)]
        out = sample_fdd(paths, [0.0])
        assert out.shape == (5, 1, 1)
        assert np.allclose(out[:, 0, 0], np.arange(5, dtype=float))

    def test_single_replica_at_anchors(self):
        values = np.array([[1.0, 0.0], [2.0, -1.0], [0.5, 0.5]])
        sched = harmonic()
        path = build_path("alpha", 1, values, sched)
        out = sample_fdd([path], path.anchor_times)
        assert np.array_equal(out[0], values)

    def test_reconstructs_engine_sequence(self, benchmark_problem,
                                          benchmark_schedule):
        # a path built from a contiguous range of engine snapshots recovers
        # the recorded rescaled sequence exactly at its anchor times
        n0, count = 40, 9
        cps = tuple(range(n0, n0 + count))
        cfg = RunConfig(n_iters=n0 + count, n_replicas=3, master_seed=17,
                        checkpoint_indices=cps)
        result = run_ensemble(benchmark_problem, benchmark_schedule, cfg)
        by_n = {s.n: s for s in result.snapshots}
        for rid in range(3):
            values = [by_n[m].y_check[rid] for m in cps]
            path = build_path("beta", n0, values, benchmark_schedule)
            for k, t in enumerate(path.anchor_times):
                assert np.array_equal(eval_path(path, float(t)), values[k])
