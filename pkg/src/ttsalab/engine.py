"""Two-time-scale iteration engine and reproducible Monte Carlo ensembles.

Replicas are independent work units.  Each replica r draws its noise from a
counter-based Philox stream keyed by (master_seed, r), so ensemble output
is bit-identical for any thread count or replica blocking.  Blocks of
replicas are advanced together with vectorized array arithmetic; the time
loop is the only Python-level loop.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import Diverged, IndexOutOfRange, NotHurwitz, TooManyDivergences
from .linalg import spectral_report
from .problem import ProblemSpec, eval_operators, sample_noise
from .schedule import StepSchedule

QUANTITIES = ("x_hat", "y_hat", "x_check", "y_check", "z_check")

DIVERGENCE_THRESHOLD = 1e12
MAX_DIVERGENCE_FRACTION = 0.01


@dataclass(frozen=True)
class RunConfig:
    """Ensemble run parameters.

    Iterates start at the root plus the given offsets (default 1.0 in every
    coordinate).  Rescaled quantities exist only for n >= 1, so checkpoint
    indices must be strictly increasing within [1, n_iters].
    """

    n_iters: int
    n_replicas: int
    master_seed: int
    checkpoint_indices: tuple[int, ...]
    initial_offset_x: np.ndarray | None = None
    initial_offset_y: np.ndarray | None = None

    def validated(self, problem: ProblemSpec) -> "RunConfig":
        cps = tuple(int(m) for m in self.checkpoint_indices)
        if any(m2 <= m1 for m1, m2 in zip(cps, cps[1:])):
            raise ValueError("checkpoint indices must be strictly increasing")
        if cps and (cps[0] < 1 or cps[-1] > self.n_iters):
            raise ValueError("checkpoint indices must lie in [1, n_iters]")
        if self.n_iters < 1 or self.n_replicas < 1:
            raise ValueError("n_iters and n_replicas must be positive")
        ox = (np.ones(problem.dim_x) if self.initial_offset_x is None
              else np.asarray(self.initial_offset_x, dtype=float).reshape(problem.dim_x))
        oy = (np.ones(problem.dim_y) if self.initial_offset_y is None
              else np.asarray(self.initial_offset_y, dtype=float).reshape(problem.dim_y))
        return RunConfig(self.n_iters, self.n_replicas, int(self.master_seed),
                         cps, ox, oy)


@dataclass
class IterateState:
    """Raw iterates after n update steps."""

    n: int
    x: np.ndarray
    y: np.ndarray


class RescaledIterate(NamedTuple):
    x_hat: np.ndarray
    y_hat: np.ndarray
    x_check: np.ndarray
    y_check: np.ndarray
    z_check: np.ndarray


@dataclass
class EnsembleSnapshot:
    """Per-replica derived quantities at one checkpoint index.

    Rows are ordered by replica id and cover only replicas that never
    diverged during the full run.
    """

    n: int
    replica_ids: np.ndarray
    x_hat: np.ndarray
    y_hat: np.ndarray
    x_check: np.ndarray
    y_check: np.ndarray
    z_check: np.ndarray

    def quantity(self, name: str) -> np.ndarray:
        if name not in QUANTITIES:
            raise KeyError(name)
        return getattr(self, name)


@dataclass
class EnsembleResult:
    snapshots: list[EnsembleSnapshot]
    diverged_replicas: np.ndarray
    n_replicas: int

    @property
    def n_diverged(self) -> int:
        return int(self.diverged_replicas.size)

    def snapshot_at(self, n: int) -> EnsembleSnapshot:
        for snap in self.snapshots:
            if snap.n == n:
                return snap
        raise KeyError(f"no snapshot recorded at n={n}")


def replica_rng(master_seed: int, replica_id: int) -> np.random.Generator:
    """Counter-based stream for one replica: Philox keyed by
    (master_seed, replica_id)."""
    key = np.array([master_seed & 0xFFFFFFFFFFFFFFFF, replica_id],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def step_once(problem: ProblemSpec, sched: StepSchedule, state: IterateState,
              rng: np.random.Generator,
              divergence_threshold: float = DIVERGENCE_THRESHOLD) -> IterateState:
    """One synchronous update of both iterates.

    F, G and the noise draw all read the same (x_n, y_n).
    """
    alpha_n, beta_n, _ = sched.step_at(state.n)
    f_val, g_val, _ = eval_operators(problem, state.x, state.y)
    xi, psi = sample_noise(problem, rng, state.x, state.y)
    x_new = state.x - alpha_n * (f_val + xi)
    y_new = state.y - beta_n * (g_val + psi)
    if (np.abs(x_new).max(initial=0.0) > divergence_threshold
            or np.abs(y_new).max(initial=0.0) > divergence_threshold):
        raise Diverged(f"iterate exceeded {divergence_threshold:g} at step {state.n}")
    return IterateState(n=state.n + 1, x=x_new, y=y_new)


def rescale(problem: ProblemSpec, sched: StepSchedule, n: int, x, y) -> RescaledIterate:
    """Derived error/rescaled/auxiliary vectors at index n >= 1.

    x_hat = x - H(y) with H at the current y, y_hat = y - y*,
    x_check = x_hat / sqrt(alpha_{n-1}), y_check = y_hat / sqrt(beta_{n-1}),
    z_check = y_check - sqrt(kappa_{n-1}) B2 B1^{-1} x_check.
    """
    if n < 1:
        raise IndexOutOfRange("rescaled quantities are defined only for n >= 1")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    alpha_p, beta_p, kappa_p = sched.step_at(n - 1)
    x_hat = x - problem.H(y)
    y_hat = y - problem.y_star
    x_check = x_hat / np.sqrt(alpha_p)
    y_check = y_hat / np.sqrt(beta_p)
    z_check = y_check - np.sqrt(kappa_p) * (x_check @ problem.correction.T)
    return RescaledIterate(x_hat, y_hat, x_check, y_check, z_check)


def check_stability(problem: ProblemSpec, sched: StepSchedule) -> None:
    """Verify the drift conditions required for the run to converge."""
    rep1 = spectral_report(problem.B1)
    if not rep1.hurwitz_for_negation:
        raise NotHurwitz(
            f"-B1 is not Hurwitz (min real part {rep1.min_real_part:.3e})")
    drift = problem.B3 - 0.5 * sched.beta_tilde() * np.eye(problem.dim_y)
    rep3 = spectral_report(drift)
    if not rep3.hurwitz_for_negation:
        raise NotHurwitz(
            "-(B3 - beta_tilde I / 2) is not Hurwitz "
            f"(min real part {rep3.min_real_part:.3e})")


def _run_block(problem, sched, cfg, alphas, betas, cp_slots, chunk_size, block):
    lo, hi = block
    n_rep = hi - lo
    n_iters = cfg.n_iters
    gens = [replica_rng(cfg.master_seed, rid) for rid in range(lo, hi)]
    x = np.tile(problem.x_star + cfg.initial_offset_x, (n_rep, 1))
    y = np.tile(problem.y_star + cfg.initial_offset_y, (n_rep, 1))
    alive = np.ones(n_rep, dtype=bool)
    noise = problem.noise
    corr_t = problem.correction.T
    y_star = problem.y_star
    snaps = {
        slot: tuple(np.empty((n_rep, problem.dim_x if q in ("x_hat", "x_check")
                              else problem.dim_y)) for q in QUANTITIES)
        for slot in cp_slots.values()
    }
    # Divergence is detected at chunk granularity: a replica that exceeds
    # the threshold is excluded in full, so in-chunk garbage never leaks
    # into the returned snapshots.
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        for start in range(0, n_iters, chunk_size):
            length = min(chunk_size, n_iters - start)
            raw = noise.presample_block(gens, length)
            for j in range(length):
                n = start + j
                xi, psi = noise.noise_at(raw, j, x, y)
                f_val, g_val = problem.eval_fg(x, y)
                x = x - alphas[n] * (f_val + xi)
                y = y - betas[n] * (g_val + psi)
                slot = cp_slots.get(n + 1)
                if slot is not None:
                    sqrt_a = np.sqrt(alphas[n])
                    sqrt_b = np.sqrt(betas[n])
                    x_hat = x - problem.H(y)
                    y_hat = y - y_star
                    x_check = x_hat / sqrt_a
                    y_check = y_hat / sqrt_b
                    z_check = y_check - (sqrt_b / sqrt_a) * (x_check @ corr_t)
                    dest = snaps[slot]
                    dest[0][:] = x_hat
                    dest[1][:] = y_hat
                    dest[2][:] = x_check
                    dest[3][:] = y_check
                    dest[4][:] = z_check
            bad = (~np.isfinite(x).all(axis=1) | ~np.isfinite(y).all(axis=1)
                   | (np.abs(x) > DIVERGENCE_THRESHOLD).any(axis=1)
                   | (np.abs(y) > DIVERGENCE_THRESHOLD).any(axis=1))
            if bad.any():
                alive &= ~bad
                x[~alive] = 0.0
                y[~alive] = 0.0
    return snaps, alive


def run_ensemble(problem: ProblemSpec, sched: StepSchedule, cfg: RunConfig, *,
                 n_threads: int | None = None, block_size: int = 1024,
                 chunk_size: int = 1024,
                 max_divergence_fraction: float = MAX_DIVERGENCE_FRACTION,
                 ) -> EnsembleResult:
    """Run n_replicas independent two-time-scale iterations.

    Output is a pure function of (problem, sched, cfg); ``n_threads``,
    ``block_size`` and ``chunk_size`` are performance knobs that cannot
    change results.  Replicas whose iterates leave the divergence threshold
    are excluded from every snapshot and reported in the result.
    """
    cfg = cfg.validated(problem)
    check_stability(problem, sched)
    alphas = sched.step_array("alpha", cfg.n_iters)
    betas = sched.step_array("beta", cfg.n_iters)
    cp_slots = {m: i for i, m in enumerate(cfg.checkpoint_indices)}
    blocks = [(i, min(i + block_size, cfg.n_replicas))
              for i in range(0, cfg.n_replicas, block_size)]
    if n_threads is None or n_threads <= 0:
        n_threads = os.cpu_count() or 1

    def work(block):
        return _run_block(problem, sched, cfg, alphas, betas, cp_slots,
                          chunk_size, block)

    if n_threads == 1 or len(blocks) == 1:
        block_results = [work(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            block_results = list(pool.map(work, blocks))

    alive = np.concatenate([res[1] for res in block_results])
    diverged = np.flatnonzero(~alive)
    if diverged.size > max_divergence_fraction * cfg.n_replicas:
        raise TooManyDivergences(
            f"{diverged.size} of {cfg.n_replicas} replicas diverged "
            f"(> {max_divergence_fraction:.0%})")
    replica_ids = np.flatnonzero(alive)
    snapshots = []
    for m, slot in cp_slots.items():
        stacked = [
            np.concatenate([res[0][slot][qi] for res in block_results])[alive]
            for qi in range(len(QUANTITIES))
        ]
        snapshots.append(EnsembleSnapshot(
            n=m, replica_ids=replica_ids,
            x_hat=stacked[0], y_hat=stacked[1], x_check=stacked[2],
            y_check=stacked[3], z_check=stacked[4]))
    return EnsembleResult(snapshots=snapshots, diverged_replicas=diverged,
                          n_replicas=cfg.n_replicas)
