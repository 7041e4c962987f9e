import numpy as np
import pytest

from conftest import (
    BENCH_A,
    BENCH_ALPHA0,
    BENCH_B,
    BENCH_B1,
    BENCH_B2,
    BENCH_B3,
    BENCH_BETA0,
    BENCH_W,
)
from oracles import linear_error_cov_propagation, scalar_linear_trace
from ttsalab.engine import (
    IterateState,
    RunConfig,
    replica_rng,
    rescale,
    run_ensemble,
    step_once,
)
from ttsalab.errors import Diverged, IndexOutOfRange, NotHurwitz, TooManyDivergences
from ttsalab.limits import fast_limit, slow_limit
from ttsalab.problem import linear_problem
from ttsalab.schedule import StepSchedule

# frozen from the scalar reference loop in oracles.py (seed 123, replica 0,
# 10 steps on the canonical benchmark)
GOLDEN_X10 = [0.6082967075340693, -0.06735894239767357]
GOLDEN_Y10 = [-0.23305843674717197, 0.3487424267493114]


def zero_noise_problem(b1, b2, b3, h_star=None):
    dim = np.asarray(b1).shape[0]
    return linear_problem(b1, b2, b3, h_star=h_star,
                          sigma_xi=np.zeros((dim, dim)),
                          sigma_psi=np.zeros((dim, dim)))


class TestStepOnce:
    def test_one_dimensional_step(self):
        p = zero_noise_problem([[1.0]], [[0.0]], [[1.0]])
        sched = StepSchedule.polynomial(0.5, 0.6, 0.25, 0.9)
        state = IterateState(n=0, x=np.array([1.0]), y=np.array([1.0]))
        new = step_once(p, sched, state, np.random.default_rng(0))
        assert new.n == 1
        assert new.x == pytest.approx([0.5])
        assert new.y == pytest.approx([0.75])

    def test_root_is_fixed_point(self, benchmark_schedule):
        p = zero_noise_problem(BENCH_B1, BENCH_B2, BENCH_B3, h_star=BENCH_W)
        state = IterateState(n=0, x=p.x_star.copy(), y=p.y_star.copy())
        rng = np.random.default_rng(0)
        for _ in range(25):
            state = step_once(p, benchmark_schedule, state, rng)
        assert np.allclose(state.x, p.x_star, atol=1e-15)
        assert np.allclose(state.y, p.y_star, atol=1e-15)

    def test_golden_trace(self, benchmark_problem, benchmark_schedule):
        state = IterateState(n=0, x=np.ones(2), y=np.ones(2))
        rng = replica_rng(123, 0)
        for _ in range(10):
            state = step_once(benchmark_problem, benchmark_schedule, state, rng)
        assert np.allclose(state.x, GOLDEN_X10, rtol=1e-12, atol=1e-14)
        assert np.allclose(state.y, GOLDEN_Y10, rtol=1e-12, atol=1e-14)
        # the frozen values come from the independent scalar loop
        ox, oy = scalar_linear_trace(BENCH_B1, BENCH_B2, BENCH_B3, BENCH_W,
                                     123, 0, 10, BENCH_ALPHA0, BENCH_A,
                                     BENCH_BETA0, BENCH_B)
        assert ox == GOLDEN_X10 and oy == GOLDEN_Y10

    def test_divergence_raises(self):
        p = linear_problem([[1.0]], [[0.0]], [[1.0]], sigma_xi=[[1.0]])
        sched = StepSchedule.polynomial(1e9, 0.6, 1e9, 0.9)
        state = IterateState(n=0, x=np.array([1.0]), y=np.array([1.0]))
        rng = np.random.default_rng(0)
        with pytest.raises(Diverged):
            for _ in range(40):
                state = step_once(p, sched, state, rng)


class TestRescale:
    def test_scalar_example(self):
        # x_hat = 0.2 with alpha_{n-1} = 0.25 gives x_check = 0.4
        p = zero_noise_problem([[1.0]], [[0.0]], [[1.0]])
        sched = StepSchedule.from_tables([0.25, 0.25], [0.01, 0.01])
        r = rescale(p, sched, 1, np.array([0.2]), np.array([0.0]))
        assert r.x_check == pytest.approx([0.4])

    def test_root_gives_zeros(self, benchmark_problem, benchmark_schedule):
        r = rescale(benchmark_problem, benchmark_schedule, 5,
                    benchmark_problem.x_star, benchmark_problem.y_star)
        for field in r:
            assert np.allclose(field, 0.0, atol=1e-15)

    def test_auxiliary_arithmetic(self):
        # y_check = 1, kappa = 0.04, B2 B1^{-1} = 2, x_check = 1.5
        # => z_check = 1 - 0.2 * 2 * 1.5 = 0.4
        p = zero_noise_problem([[1.0]], [[2.0]], [[1.0]])
        sched = StepSchedule.from_tables([0.25, 0.25], [0.01, 0.01])
        x = np.array([1.5 * np.sqrt(0.25)])
        y = np.array([1.0 * np.sqrt(0.01)])
        r = rescale(p, sched, 1, x, y)
        assert r.y_check == pytest.approx([1.0])
        assert r.x_check == pytest.approx([1.5])
        assert r.z_check == pytest.approx([0.4])

    def test_index_zero_rejected(self, benchmark_problem, benchmark_schedule):
        with pytest.raises(IndexOutOfRange):
            rescale(benchmark_problem, benchmark_schedule, 0,
                    np.ones(2), np.ones(2))


class TestRunEnsemble:
    def small_cfg(self, **kw):
        defaults = dict(n_iters=64, n_replicas=24, master_seed=99,
                        checkpoint_indices=(16, 64))
        defaults.update(kw)
        return RunConfig(**defaults)

    def test_repeated_runs_identical(self, benchmark_problem, benchmark_schedule):
        cfg = self.small_cfg()
        r1 = run_ensemble(benchmark_problem, benchmark_schedule, cfg)
        r2 = run_ensemble(benchmark_problem, benchmark_schedule, cfg)
        for s1, s2 in zip(r1.snapshots, r2.snapshots):
            assert np.array_equal(s1.y_check, s2.y_check)
            assert np.array_equal(s1.x_check, s2.x_check)

    def test_thread_and_block_invariance(self, benchmark_problem,
                                         benchmark_schedule):
        cfg = self.small_cfg()
        base = run_ensemble(benchmark_problem, benchmark_schedule, cfg,
                            n_threads=1, block_size=1024, chunk_size=1024)
        for threads, block, chunk in ((2, 7, 16), (8, 5, 64), (1, 24, 7)):
            other = run_ensemble(benchmark_problem, benchmark_schedule, cfg,
                                 n_threads=threads, block_size=block,
                                 chunk_size=chunk)
            for s1, s2 in zip(base.snapshots, other.snapshots):
                for q in ("x_hat", "y_hat", "x_check", "y_check", "z_check"):
                    assert np.array_equal(s1.quantity(q), s2.quantity(q))

    def test_matches_step_once(self, benchmark_problem, benchmark_schedule):
        cfg = self.small_cfg(n_iters=50, n_replicas=3,
                             checkpoint_indices=(50,))
        result = run_ensemble(benchmark_problem, benchmark_schedule, cfg,
                              chunk_size=16)
        snap = result.snapshot_at(50)
        for rid in range(3):
            state = IterateState(n=0, x=np.ones(2), y=np.ones(2))
            rng = replica_rng(99, rid)
            for _ in range(50):
                state = step_once(benchmark_problem, benchmark_schedule,
                                  state, rng)
            r = rescale(benchmark_problem, benchmark_schedule, 50,
                        state.x, state.y)
            assert np.allclose(snap.x_check[rid], r.x_check, rtol=1e-12)
            assert np.allclose(snap.y_check[rid], r.y_check, rtol=1e-12)
            assert np.allclose(snap.z_check[rid], r.z_check, rtol=1e-12)

    def test_golden_trace_in_ensemble(self, benchmark_problem,
                                      benchmark_schedule):
        cfg = RunConfig(n_iters=10, n_replicas=2, master_seed=123,
                        checkpoint_indices=(10,))
        snap = run_ensemble(benchmark_problem, benchmark_schedule,
                            cfg).snapshot_at(10)
        x = np.asarray(GOLDEN_X10)
        y = np.asarray(GOLDEN_Y10)
        w = np.asarray(BENCH_W)
        assert np.allclose(snap.x_hat[0], x - w @ y, rtol=1e-12)
        assert np.allclose(snap.y_hat[0], y, rtol=1e-12)

    def test_bad_checkpoints_rejected(self, benchmark_problem,
                                      benchmark_schedule):
        with pytest.raises(ValueError):
            run_ensemble(benchmark_problem, benchmark_schedule,
                         self.small_cfg(checkpoint_indices=(0, 5)))
        with pytest.raises(ValueError):
            run_ensemble(benchmark_problem, benchmark_schedule,
                         self.small_cfg(checkpoint_indices=(5, 5)))

    def test_non_hurwitz_rejected(self, benchmark_schedule):
        p = zero_noise_problem([[1.0]], [[0.0]], [[-1.0]])
        with pytest.raises(NotHurwitz):
            run_ensemble(p, benchmark_schedule,
                         self.small_cfg(n_replicas=4))

    def test_divergence_abort_and_exclusion(self):
        p = linear_problem([[1.0]], [[0.0]], [[1.0]], sigma_xi=[[1.0]],
                           sigma_psi=[[1.0]])
        sched = StepSchedule.polynomial(1e8, 0.6, 1e8, 0.9)
        cfg = RunConfig(n_iters=200, n_replicas=16, master_seed=0,
                        checkpoint_indices=(200,))
        with pytest.raises(TooManyDivergences):
            run_ensemble(p, sched, cfg)
        result = run_ensemble(p, sched, cfg, max_divergence_fraction=1.0)
        assert result.n_diverged == 16
        assert result.snapshot_at(200).x_check.shape[0] == 0

    def test_zero_noise_contraction(self):
        # decoupled diagonal drifts contract monotonically once steps are
        # below the stability threshold
        p = zero_noise_problem(np.diag([2.0, 3.0]), np.zeros((2, 2)),
                               np.diag([1.5, 2.0]))
        sched = StepSchedule.polynomial(0.4, 0.6, 0.5, 0.9)
        state = IterateState(n=0, x=np.ones(2), y=np.ones(2))
        rng = np.random.default_rng(0)
        norms = []
        for _ in range(1500):
            state = step_once(p, sched, state, rng)
            norms.append(np.linalg.norm(state.x - p.H(state.y))
                         + np.linalg.norm(state.y - p.y_star))
        tail = norms[10:]
        assert all(b <= a for a, b in zip(tail, tail[1:]))
        assert tail[-1] < 0.01 * tail[0]

    def test_auxiliary_gap_bound(self, benchmark_problem, benchmark_schedule):
        # ||z - y|| = sqrt(kappa) ||B2 B1^-1 x_check|| pointwise, so the
        # ensemble mean obeys the operator-norm bound with slack 2
        cfg = RunConfig(n_iters=512, n_replicas=300, master_seed=5,
                        checkpoint_indices=(128, 256, 512))
        result = run_ensemble(benchmark_problem, benchmark_schedule, cfg)
        corr_norm = np.linalg.norm(benchmark_problem.correction, 2)
        ratios = []
        for snap in result.snapshots:
            _, _, kappa = benchmark_schedule.step_at(snap.n - 1)
            gap = np.linalg.norm(snap.z_check - snap.y_check, axis=1).mean()
            xbar = np.linalg.norm(snap.x_check, axis=1).mean()
            assert gap <= 2.0 * np.sqrt(kappa) * corr_norm * xbar
            ratios.append(gap / np.sqrt(kappa))
        assert max(ratios) / np.median(ratios) < 3.0

    def test_covariance_matches_exact_propagation(self, benchmark_problem,
                                                  benchmark_schedule):
        # Monte Carlo second moments against the deterministic covariance
        # recursion of the linear-Gaussian benchmark
        n, reps = 2000, 2000
        cfg = RunConfig(n_iters=n, n_replicas=reps, master_seed=31,
                        checkpoint_indices=(n,))
        result = run_ensemble(benchmark_problem, benchmark_schedule, cfg)
        snap = result.snapshot_at(n)
        alphas = benchmark_schedule.step_array("alpha", n)
        betas = benchmark_schedule.step_array("beta", n)
        exact = linear_error_cov_propagation(
            BENCH_B1, BENCH_B2, BENCH_B3, BENCH_W, np.eye(2), np.eye(2),
            np.zeros((2, 2)), alphas, betas, np.ones(2), np.ones(2), [n])[n]
        cov_x = snap.x_hat.T @ snap.x_hat / reps
        cov_y = snap.y_hat.T @ snap.y_hat / reps
        rel_x = np.linalg.norm(cov_x - exact[:2, :2]) / np.linalg.norm(exact[:2, :2])
        rel_y = np.linalg.norm(cov_y - exact[2:, 2:]) / np.linalg.norm(exact[2:, 2:])
        assert rel_x < 0.12
        assert rel_y < 0.12

    def test_limits_hurwitz_gate_uses_beta_tilde(self):
        # beta_tilde = 1/beta0 can push the slow drift out of stability
        p = zero_noise_problem([[1.0]], [[0.0]], [[0.4]])
        bad = StepSchedule.polynomial(0.5, 0.6, 1.0, 1.0)   # beta_tilde = 1
        with pytest.raises(NotHurwitz):
            run_ensemble(p, bad, self.small_cfg(n_replicas=4))
        ok = StepSchedule.polynomial(0.5, 0.6, 4.0, 1.0)    # beta_tilde = 0.25
        run_ensemble(p, ok, self.small_cfg(n_replicas=4))
