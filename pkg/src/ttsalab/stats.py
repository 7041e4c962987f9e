"""Estimators and tests that turn ensembles into pass/fail verdicts.

Covariance estimates are raw second moments: the theoretical limits are
mean-zero Gaussians, and subtracting a noisy sample mean would mask bias.
A mean-magnitude report is attached instead, flagging coordinates whose
sample mean exceeds four standard errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSamples, NonPositiveInput

KS_SERIES_TERMS = 100
MEAN_FLAG_SIGMAS = 4.0


@dataclass(frozen=True)
class CovEstimate:
    """Raw second-moment matrix with jackknife standard errors."""

    matrix: np.ndarray
    n_samples: int
    std_errors: np.ndarray
    mean: np.ndarray
    mean_std_errors: np.ndarray
    mean_flagged: np.ndarray

    def to_json(self) -> dict:
        return {
            "matrix": self.matrix.tolist(),
            "n_samples": self.n_samples,
            "std_errors": self.std_errors.tolist(),
            "mean": self.mean.tolist(),
            "mean_std_errors": self.mean_std_errors.tolist(),
            "mean_flagged": self.mean_flagged.tolist(),
        }


@dataclass(frozen=True)
class TestVerdict:
    """One named pass/fail decision with its statistic and rule."""

    name: str
    statistic: float
    threshold: float
    passed: bool
    p_value: float | None = None
    context: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "passed": bool(self.passed),
            "p_value": self.p_value,
            "context": self.context,
        }


def _second_moment(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    return left.T @ right / left.shape[0]


def empirical_cov(samples) -> CovEstimate:
    """Second-moment matrix of replica samples, one row per replica.

    The mean is NOT subtracted.  Standard errors per entry come from the
    leave-one-out jackknife, which for a sample mean reduces to
    std(products, ddof=1) / sqrt(R).
    """
    u = np.atleast_2d(np.asarray(samples, dtype=float))
    n = u.shape[0]
    if n < 2:
        raise InsufficientSamples("need at least 2 replicas")
    m = _second_moment(u, u)
    m = 0.5 * (m + m.T)
    products = u[:, :, None] * u[:, None, :]
    se = products.std(axis=0, ddof=1) / np.sqrt(n)
    mean = u.mean(axis=0)
    mean_se = u.std(axis=0, ddof=1) / np.sqrt(n)
    flagged = np.abs(mean) > MEAN_FLAG_SIGMAS * np.where(mean_se > 0, mean_se, np.inf)
    return CovEstimate(matrix=m, n_samples=n, std_errors=se, mean=mean,
                       mean_std_errors=mean_se, mean_flagged=flagged)


def rate_slope(ns, mean_sq_norms, steps) -> tuple[float, float]:
    """Log-log least-squares slope of mean squared norms against steps.

    A slope near 1 confirms proportionality of the error scale to its own
    step-size sequence.  Returns (slope, r_squared).
    """
    ns = np.asarray(ns)
    msn = np.asarray(mean_sq_norms, dtype=float)
    st = np.asarray(steps, dtype=float)
    if not (ns.size == msn.size == st.size):
        raise ValueError("ns, mean_sq_norms and steps must have equal length")
    if ns.size < 4:
        raise InsufficientSamples("need at least 4 checkpoints")
    if np.any(msn <= 0) or np.any(st <= 0):
        raise NonPositiveInput("mean squared norms and steps must be positive")
    lx = np.log(st)
    ly = np.log(msn)
    design = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(design, ly, rcond=None)
    fitted = design @ coef
    ss_res = float(((ly - fitted) ** 2).sum())
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r_sq = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), r_sq


def ks_statistic(samples, reference_cdf) -> float:
    """Two-sided one-sample Kolmogorov-Smirnov statistic.

    sup over the sorted sample of max(i/n - F(x_i), F(x_i) - (i-1)/n).
    Defined for any sample size; ``ks_test_1d`` adds the size gate.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise InsufficientSamples("empty sample")
    try:
        cdf_vals = np.asarray(reference_cdf(x), dtype=float)
        if cdf_vals.shape != x.shape:
            raise TypeError("scalar-only cdf")
    except (TypeError, ValueError):
        cdf_vals = np.asarray([reference_cdf(v) for v in x], dtype=float)
    grid = np.arange(1, n + 1) / n
    d_plus = float((grid - cdf_vals).max())
    d_minus = float((cdf_vals - (grid - 1.0 / n)).max())
    return max(d_plus, d_minus)


def kolmogorov_pvalue(lam: float, terms: int = KS_SERIES_TERMS) -> float:
    """Asymptotic Kolmogorov survival function Q(lam), truncated series."""
    if lam <= 0:
        return 1.0
    k = np.arange(1, terms + 1)
    series = 2.0 * ((-1.0) ** (k - 1) * np.exp(-2.0 * (k * lam) ** 2)).sum()
    return float(min(max(series, 0.0), 1.0))


def ks_test_1d(samples, reference_cdf, name: str = "ks",
               p_threshold: float = 0.01, context: dict | None = None) -> TestVerdict:
    """One-sample KS test with the asymptotic Kolmogorov p-value.

    Passes when p > ``p_threshold``.  Sample sizes in this artifact are
    large (>= 1e4 in the verification suites), so no finite-sample
    correction is applied to sqrt(n) * D.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 50:
        raise InsufficientSamples("KS test needs at least 50 samples")
    stat = ks_statistic(x, reference_cdf)
    p = kolmogorov_pvalue(np.sqrt(x.size) * stat)
    return TestVerdict(name=name, statistic=stat, threshold=p_threshold,
                       passed=p > p_threshold, p_value=p,
                       context=dict(context or {}))


def autocov_estimate(fdd_samples, t_index: int, s_index: int) -> np.ndarray:
    """Cross second moment E[U(t) U(s)^T] across replicas.

    ``fdd_samples`` has shape (replica, time, coordinate).  No mean is
    subtracted.  With ``t_index == s_index`` this equals the second-moment
    matrix of that time slice exactly.
    """
    u = np.asarray(fdd_samples, dtype=float)
    if u.ndim != 3:
        raise ValueError("fdd_samples must have shape (replica, time, coord)")
    if u.shape[0] < 2:
        raise InsufficientSamples("need at least 2 replicas")
    n_times = u.shape[1]
    if not (0 <= t_index < n_times and 0 <= s_index < n_times):
        raise IndexError("time index out of range")
    m = _second_moment(u[:, t_index, :], u[:, s_index, :])
    if t_index == s_index:
        m = 0.5 * (m + m.T)
    return m
