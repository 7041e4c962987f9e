"""Step-size schedules, their limits, and time-interpolation maps.

A schedule owns the two step sequences alpha_n (fast) and beta_n (slow),
their ratio kappa_n = beta_n / alpha_n, the tail limit
beta_tilde = lim (1/beta_{n+1} - 1/beta_n), and the partial-sum machinery
used to place discrete iterates on a continuous time axis: the step sums
Gamma, the index map N(n, t), and its floor time.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import IndexOutOfRange, NoLimit, Unsupported

BETA_TILDE_TABLE_TOL = 1e-6


@dataclass(frozen=True)
class ConditionCheck:
    """Verdict for one step-size condition, with a readable reason."""

    condition: str
    passed: bool
    reason: str


@dataclass(frozen=True)
class AssumptionReport:
    """Per-condition verdicts for the step-size requirements."""

    checks: tuple[ConditionCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failing(self) -> list[ConditionCheck]:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "conditions": [
                {"condition": c.condition, "passed": c.passed, "reason": c.reason}
                for c in self.checks
            ],
        }


class StepSchedule:
    """Fast/slow step-size sequences with cached partial sums.

    Two kinds are supported:

    * ``polynomial``: alpha_n = alpha0 * (n+1)**(-a), beta_n = beta0 * (n+1)**(-b)
      with exponents in (0, 1].
    * ``table``: explicit finite sequences of alpha and beta values.

    Instances are immutable after construction; the internal cumulative-sum
    caches are grown lazily under a lock so concurrent readers are safe.
    """

    def __init__(self, kind, alpha0=None, a=None, beta0=None, b=None,
                 alphas=None, betas=None):
        if kind not in ("polynomial", "table"):
            raise ValueError(f"unknown schedule kind {kind!r}")
        self.kind = kind
        if kind == "polynomial":
            for name, val in (("alpha0", alpha0), ("beta0", beta0)):
                if val is None or val <= 0:
                    raise ValueError(f"{name} must be positive")
            for name, val in (("a", a), ("b", b)):
                if val is None or not (0 < val <= 1):
                    raise ValueError(f"exponent {name} must lie in (0, 1]")
            self.alpha0, self.a = float(alpha0), float(a)
            self.beta0, self.b = float(beta0), float(b)
            self.alphas = self.betas = None
        else:
            self.alphas = np.asarray(alphas, dtype=float)
            self.betas = np.asarray(betas, dtype=float)
            for name, seq in (("alpha", self.alphas), ("beta", self.betas)):
                if seq.ndim != 1 or seq.size == 0:
                    raise ValueError(f"{name} table must be a non-empty 1-D sequence")
                if np.any(seq <= 0):
                    raise ValueError(f"{name} table must be strictly positive")
                if np.any(np.diff(seq) > 0):
                    raise ValueError(f"{name} table must be non-increasing")
            if self.alphas.size != self.betas.size:
                raise ValueError("alpha and beta tables must have equal length")
            self.alpha0 = self.a = self.beta0 = self.b = None
        self._lock = threading.Lock()
        # prefix[scale][k] = sum of the first k steps; prefix[scale][0] = 0
        self._prefix = {"alpha": np.zeros(1), "beta": np.zeros(1)}

    @classmethod
    def polynomial(cls, alpha0: float, a: float, beta0: float, b: float) -> "StepSchedule":
        return cls("polynomial", alpha0=alpha0, a=a, beta0=beta0, b=b)

    @classmethod
    def from_tables(cls, alphas, betas) -> "StepSchedule":
        return cls("table", alphas=alphas, betas=betas)

    # ------------------------------------------------------------------
    # point and array access
    # ------------------------------------------------------------------

    def _check_index(self, n: int) -> None:
        if n < 0:
            raise IndexOutOfRange(f"index {n} is negative")
        if self.kind == "table" and n >= self.alphas.size:
            raise IndexOutOfRange(
                f"index {n} beyond stored table length {self.alphas.size}"
            )

    def alpha_at(self, n: int) -> float:
        self._check_index(n)
        if self.kind == "polynomial":
            return self.alpha0 * (n + 1) ** (-self.a)
        return float(self.alphas[n])

    def beta_at(self, n: int) -> float:
        self._check_index(n)
        if self.kind == "polynomial":
            return self.beta0 * (n + 1) ** (-self.b)
        return float(self.betas[n])

    def step_at(self, n: int) -> tuple[float, float, float]:
        """Return (alpha_n, beta_n, kappa_n)."""
        alpha = self.alpha_at(n)
        beta = self.beta_at(n)
        return alpha, beta, beta / alpha

    def step_array(self, scale: str, n_steps: int) -> np.ndarray:
        """Vectorized steps for indices 0..n_steps-1 of the chosen scale."""
        self._check_scale(scale)
        if self.kind == "polynomial":
            grid = np.arange(1, n_steps + 1, dtype=float)
            if scale == "alpha":
                return self.alpha0 * grid ** (-self.a)
            return self.beta0 * grid ** (-self.b)
        table = self.alphas if scale == "alpha" else self.betas
        if n_steps > table.size:
            raise IndexOutOfRange(
                f"requested {n_steps} steps, table holds {table.size}"
            )
        return table[:n_steps].copy()

    @staticmethod
    def _check_scale(scale: str) -> None:
        if scale not in ("alpha", "beta"):
            raise ValueError(f"scale must be 'alpha' or 'beta', got {scale!r}")

    # ------------------------------------------------------------------
    # tail limit
    # ------------------------------------------------------------------

    def beta_tilde(self) -> float:
        """Limit of 1/beta_{n+1} - 1/beta_n.

        For the polynomial family this is 1/beta0 when b = 1 and 0 when
        b < 1.  For tables the tail differences must stabilize within
        ``BETA_TILDE_TABLE_TOL``.
        """
        if self.kind == "polynomial":
            return 1.0 / self.beta0 if self.b == 1.0 else 0.0
        inv = 1.0 / self.betas
        diffs = np.diff(inv)
        if diffs.size < 2:
            raise NoLimit("table too short to estimate the tail difference")
        tail = diffs[-min(10, diffs.size):]
        if np.abs(tail - tail[-1]).max() > BETA_TILDE_TABLE_TOL:
            raise NoLimit(
                "tail differences of 1/beta_n do not stabilize within "
                f"{BETA_TILDE_TABLE_TOL:g}"
            )
        return float(tail[-1])

    # ------------------------------------------------------------------
    # assumption validation
    # ------------------------------------------------------------------

    def validate(self, delta_h: float, delta_f: float, delta_g: float) -> AssumptionReport:
        """Check the step-size conditions for the polynomial family.

        ``delta_h`` in [0.5, 1] and ``delta_f``, ``delta_g`` in (0, 1] are
        the declared local-linearity orders of the problem; they are inputs,
        never estimated.  Table schedules are not certifiable and raise
        ``Unsupported``.
        """
        if self.kind != "polynomial":
            raise Unsupported("assumption validation supports only polynomial schedules")
        if not (0.5 <= delta_h <= 1.0):
            raise ValueError("delta_h must lie in [0.5, 1]")
        for name, val in (("delta_f", delta_f), ("delta_g", delta_g)):
            if not (0.0 < val <= 1.0):
                raise ValueError(f"{name} must lie in (0, 1]")
        a, b = self.a, self.b
        checks = []
        if b > a:
            checks.append(ConditionCheck(
                "i", True,
                f"a={a:g}, b={b:g} in (0,1] with b > a: steps and their ratio "
                "decrease to zero"))
        else:
            checks.append(ConditionCheck(
                "i", False,
                f"b={b:g} <= a={a:g}: kappa_n = beta_n/alpha_n does not vanish"))
        checks.append(ConditionCheck(
            "ii", True,
            "polynomial family: beta_{n-1}/beta_n = 1 + O(1/n) = 1 + O(beta_n) "
            f"for b <= 1, and beta_tilde = {self.beta_tilde():g} exists"))
        checks.append(ConditionCheck(
            "iii", True,
            "polynomial family: alpha and kappa ratios are 1 + O(1/n) = 1 + O(beta_n)"))
        checks.append(ConditionCheck(
            "iv", True,
            f"n*alpha_n ~ n^(1-a) and n*beta_n ~ n^(1-b) are non-decreasing for "
            f"a={a:g}, b={b:g} <= 1"))
        ratio = b / a
        upper = 1.0 + min(delta_f, delta_g)
        lower = 2.0 / (1.0 + delta_h)
        if ratio >= upper:
            checks.append(ConditionCheck(
                "v", False,
                f"b/a = {ratio:g} >= 1 + min(delta_F, delta_G) = {upper:g}: "
                "higher-order residuals of the slow recursion are not negligible"))
        elif ratio < lower:
            checks.append(ConditionCheck(
                "v", False,
                f"b/a = {ratio:g} < 2/(1+delta_H) = {lower:g}: the inner-loop "
                "linearization residual is not negligible"))
        else:
            checks.append(ConditionCheck(
                "v", True,
                f"{lower:g} <= b/a = {ratio:g} < {upper:g}"))
        return AssumptionReport(checks=tuple(checks))

    # ------------------------------------------------------------------
    # time interpolation
    # ------------------------------------------------------------------

    def _prefix_upto(self, scale: str, m: int) -> np.ndarray:
        """Prefix sums S with S[k] = sum of the first k steps, k <= m."""
        cache = self._prefix[scale]
        if cache.size > m:
            return cache
        with self._lock:
            cache = self._prefix[scale]
            if cache.size > m:
                return cache
            target = max(m + 1, 2 * cache.size)
            if self.kind == "table":
                table = self.alphas if scale == "alpha" else self.betas
                if m > table.size:
                    raise IndexOutOfRange(
                        f"partial sum up to {m} exceeds table length {table.size}"
                    )
                target = min(target, table.size + 1)
            new_steps = self.step_array(scale, target - 1)[cache.size - 1:]
            grown = np.concatenate([cache, cache[-1] + np.cumsum(new_steps)])
            self._prefix[scale] = grown
            return grown

    def gamma_sum(self, scale: str, n: int, m: int) -> float:
        """Partial step sum over indices n..m-1; zero when m <= n."""
        self._check_scale(scale)
        if n < 0:
            raise IndexOutOfRange(f"index {n} is negative")
        if m <= n:
            return 0.0
        prefix = self._prefix_upto(scale, m)
        return float(prefix[m] - prefix[n])

    def gamma_grid(self, scale: str, n: int, count: int) -> np.ndarray:
        """Array of partial sums Gamma_{n, n+j} for j = 0..count-1."""
        self._check_scale(scale)
        prefix = self._prefix_upto(scale, n + count - 1)
        return prefix[n:n + count] - prefix[n]

    def locate(self, scale: str, n: int, t: float) -> tuple[int, float]:
        """Largest index N >= n with Gamma_{n,N} <= t, and that floor sum.

        The returned pair satisfies t_floor <= t < t_floor + step(N).  The
        search compares the partial sums exactly as ``gamma_sum`` computes
        them, so ``locate(n, gamma_sum(n, m))`` returns ``m`` exactly.
        """
        self._check_scale(scale)
        if t < 0:
            raise ValueError("t must be nonnegative")
        if n < 0:
            raise IndexOutOfRange(f"index {n} is negative")
        if self.kind == "table" and n >= self.alphas.size:
            raise IndexOutOfRange(
                f"start index {n} beyond stored table length {self.alphas.size}")
        # exponential growth until the sum passes t, then bisection
        hi = n + 1
        while True:
            if self.kind == "table":
                hi = min(hi, self.alphas.size)
            prefix = self._prefix_upto(scale, hi)
            if prefix[hi] - prefix[n] > t:
                break
            if self.kind == "table" and hi >= self.alphas.size:
                raise IndexOutOfRange(
                    f"time t={t:g} beyond the horizon of the stored table"
                )
            hi = 2 * hi + 1
        lo = n  # invariant: Gamma_{n,lo} <= t < Gamma_{n,hi}
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if prefix[mid] - prefix[n] <= t:
                lo = mid
            else:
                hi = mid
        return lo, float(prefix[lo] - prefix[n])

    # ------------------------------------------------------------------
    # serialization
    # ------------------------------------------------------------------

    def to_json(self) -> dict:
        if self.kind == "polynomial":
            return {"alpha0": self.alpha0, "a": self.a,
                    "beta0": self.beta0, "b": self.b}
        return {"alphas": self.alphas.tolist(), "betas": self.betas.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "StepSchedule":
        if "alphas" in data:
            return cls.from_tables(data["alphas"], data["betas"])
        return cls.polynomial(data["alpha0"], data["a"], data["beta0"], data["b"])
