"""Closed-form weak limits and an exact Ornstein-Uhlenbeck reference sampler.

The fast rescaled error converges to the stationary OU process with drift
B1 and diffusion covariance Sigma_xi; the slow one to the OU process with
drift B3 - (beta_tilde/2) I and the corrected diffusion covariance built
from the asymptotic law of psi_n - B2 B1^{-1} xi_n.  Stationary covariances
solve the associated Lyapunov equations, and the sampler uses exact
Gaussian transitions, so it carries no discretization error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotHurwitz, SingularB1
from .linalg import (
    as_matrix,
    as_square,
    matrix_exp,
    psd_factor,
    solve_lyapunov,
    spectral_report,
)
from .problem import ProblemSpec, asymptotic_noise_cov
from .schedule import StepSchedule

_CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class LimitSpec:
    """One OU limit law: drift, diffusion covariance, stationary covariance.

    Satisfies drift @ stationary + stationary @ drift.T = diffusion by
    construction, with -drift Hurwitz.
    """

    drift: np.ndarray
    diffusion_cov: np.ndarray
    stationary_cov: np.ndarray

    @property
    def dim(self) -> int:
        return self.drift.shape[0]

    def to_json(self) -> dict:
        return {
            "drift": self.drift.tolist(),
            "diffusion_cov": self.diffusion_cov.tolist(),
            "stationary_cov": self.stationary_cov.tolist(),
        }


def make_limit(drift, diffusion_cov) -> LimitSpec:
    """Assemble a LimitSpec, solving the Lyapunov equation for the
    stationary covariance and enforcing the Hurwitz requirement."""
    B = as_square(drift, "drift")
    rep = spectral_report(B)
    if not rep.hurwitz_for_negation:
        raise NotHurwitz(
            f"-drift is not Hurwitz (min real part {rep.min_real_part:.3e})")
    C = as_square(diffusion_cov, "diffusion_cov")
    return LimitSpec(drift=B, diffusion_cov=0.5 * (C + C.T),
                     stationary_cov=solve_lyapunov(B, C))


def sigma_tilde_psi(sigma_psi, sigma_xipsi, sigma_xi, b1, b2) -> np.ndarray:
    """Corrected slow diffusion covariance.

    Computes Sigma_psi - M Sigma_xipsi - Sigma_xipsi^T M^T + M Sigma_xi M^T
    with M = B2 B1^{-1}: the asymptotic covariance of psi - B2 B1^{-1} xi.
    The result is symmetrized to remove round-off skew.
    """
    s_psi = as_square(sigma_psi, "sigma_psi")
    s_xi = as_square(sigma_xi, "sigma_xi")
    s_xp = as_matrix(sigma_xipsi, "sigma_xipsi")
    B1 = as_square(b1, "b1")
    B2 = as_matrix(b2, "b2")
    if np.linalg.cond(B1) > _CONDITION_LIMIT:
        raise SingularB1("B1 is numerically singular")
    m = B2 @ np.linalg.inv(B1)
    out = s_psi - m @ s_xp - s_xp.T @ m.T + m @ s_xi @ m.T
    out = 0.5 * (out + out.T)
    scale = max(np.abs(out).max(), 1.0)
    if np.linalg.eigvalsh(out).min() < -1e-10 * scale:
        raise ValueError("corrected diffusion covariance is not PSD")
    return out


def fast_limit(problem: ProblemSpec) -> LimitSpec:
    """OU limit of the rescaled inner error: drift B1, diffusion Sigma_xi."""
    s_xi, _, _ = asymptotic_noise_cov(problem)
    return make_limit(problem.B1, s_xi)


def slow_limit(problem: ProblemSpec, sched: StepSchedule) -> LimitSpec:
    """OU limit of the rescaled outer error.

    The drift is B3 - (beta_tilde/2) I, so the limit law depends on the
    slow step-size family through beta_tilde; the diffusion is the
    corrected covariance from ``sigma_tilde_psi``.
    """
    s_xi, s_psi, s_xp = asymptotic_noise_cov(problem)
    beta_tilde = sched.beta_tilde()
    drift = problem.B3 - 0.5 * beta_tilde * np.eye(problem.dim_y)
    diffusion = sigma_tilde_psi(s_psi, s_xp, s_xi, problem.B1, problem.B2)
    return make_limit(drift, diffusion)


def ou_autocov(lim: LimitSpec, s: float) -> np.ndarray:
    """Stationary autocovariance Cov(U(t), U(t+s)) = Sigma exp(-B^T s)."""
    if s < 0:
        raise ValueError("lag s must be nonnegative")
    return lim.stationary_cov @ matrix_exp(-lim.drift.T, s)


def ou_sample_paths(lim: LimitSpec, times, rng: np.random.Generator,
                    n_paths: int, start="stationary") -> np.ndarray:
    """Exact finite-dimensional OU samples at the given times.

    ``start`` is either the string ``"stationary"`` (U at the first time is
    drawn from N(0, stationary_cov); the whole path is then stationary) or a
    fixed vector taken as the state at time 0.  Transitions between
    consecutive times use the exact Gaussian kernel
    U(t+h) = exp(-B h) U(t) + N(0, Sigma - exp(-B h) Sigma exp(-B^T h)),
    so there is no discretization error at any spacing.

    Returns an array of shape (n_paths, n_times, dim).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1-D sequence")
    if np.any(np.diff(times) < 0) or times[0] < 0:
        raise ValueError("times must be sorted and nonnegative")
    d = lim.dim
    sigma = lim.stationary_cov
    out = np.empty((n_paths, times.size, d))
    if isinstance(start, str) and start == "stationary":
        u = rng.standard_normal((n_paths, d)) @ psd_factor(sigma).T
        gaps = np.diff(times)
    else:
        u0 = np.asarray(start, dtype=float).reshape(d)
        u = np.tile(u0, (n_paths, 1))
        gaps = np.diff(np.concatenate([[0.0], times]))
        first = gaps[0]
        if first > 0:
            u = _ou_transition(lim, u, first, rng)
        gaps = gaps[1:]
    out[:, 0] = u
    for j, h in enumerate(gaps, start=1):
        if h > 0:
            u = _ou_transition(lim, u, float(h), rng)
        out[:, j] = u
    return out


def _ou_transition(lim: LimitSpec, u: np.ndarray, h: float,
                   rng: np.random.Generator) -> np.ndarray:
    decay = matrix_exp(-lim.drift, h)
    q = lim.stationary_cov - decay @ lim.stationary_cov @ decay.T
    factor = psd_factor(0.5 * (q + q.T))
    mean = u @ decay.T
    if not np.any(factor):
        return mean
    return mean + rng.standard_normal(u.shape) @ factor.T


def ou_sample_path(lim: LimitSpec, times, rng: np.random.Generator,
                   start="stationary") -> np.ndarray:
    """Single exact OU path at the given times; see ``ou_sample_paths``."""
    return ou_sample_paths(lim, times, rng, 1, start=start)[0]
