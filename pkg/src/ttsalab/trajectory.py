"""Piecewise-linear continuous trajectories over rescaled iterates.

A path anchors the recorded rescaled vectors at the partial step-sum times
of its scale (alpha for the fast sequence, beta for the slow and auxiliary
ones) and interpolates linearly in between, so the value at an anchor time
reproduces the stored vector exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientValues, OutOfHorizon
from .schedule import StepSchedule


@dataclass(frozen=True)
class PiecewiseLinearPath:
    """Continuous trajectory anchored at step-sum times.

    ``anchor_times[k]`` is the partial sum of steps from ``start_index`` to
    ``start_index + k`` (so ``anchor_times[0] == 0``) and
    ``anchor_values[k]`` is the rescaled vector recorded at iteration
    ``start_index + k``.
    """

    start_index: int
    scale: str
    anchor_times: np.ndarray
    anchor_values: np.ndarray
    schedule: StepSchedule

    @property
    def horizon(self) -> float:
        return float(self.anchor_times[-1])

    @property
    def dim(self) -> int:
        return self.anchor_values.shape[1]


def build_path(scale: str, n: int, values, sched: StepSchedule) -> PiecewiseLinearPath:
    """Anchor a recorded value sequence starting at iteration index n."""
    if scale not in ("alpha", "beta"):
        raise ValueError(f"scale must be 'alpha' or 'beta', got {scale!r}")
    vals = np.atleast_2d(np.asarray(values, dtype=float))
    if vals.shape[0] < 2:
        raise InsufficientValues("a path needs at least 2 anchor values")
    times = sched.gamma_grid(scale, n, vals.shape[0])
    return PiecewiseLinearPath(start_index=n, scale=scale,
                               anchor_times=times, anchor_values=vals,
                               schedule=sched)


def eval_path(path: PiecewiseLinearPath, t: float) -> np.ndarray:
    """Interpolated path value at rescaled time t within the horizon."""
    if t < 0:
        raise OutOfHorizon("t must be nonnegative")
    if t > path.horizon:
        raise OutOfHorizon(
            f"t={t:g} beyond covered horizon {path.horizon:g}")
    n = path.start_index
    idx, t_floor = path.schedule.locate(path.scale, n, t)
    k = idx - n
    if k >= path.anchor_values.shape[0] - 1:
        # only reachable at the exact right endpoint of the horizon
        return path.anchor_values[-1].copy()
    step = (path.schedule.alpha_at(idx) if path.scale == "alpha"
            else path.schedule.beta_at(idx))
    frac = (t - t_floor) / step
    left = path.anchor_values[k]
    right = path.anchor_values[k + 1]
    return left + frac * (right - left)


def sample_fdd(paths, times) -> np.ndarray:
    """Evaluate an ensemble of paths at the given times.

    Returns an array of shape (n_paths, n_times, dim) ordered by the input
    path order (replica id order, by convention).
    """
    paths = list(paths)
    times = np.asarray(times, dtype=float)
    if not paths:
        raise InsufficientValues("need at least one path")
    out = np.empty((len(paths), times.size, paths[0].dim))
    for i, path in enumerate(paths):
        for j, t in enumerate(times):
            out[i, j] = eval_path(path, float(t))
    return out
