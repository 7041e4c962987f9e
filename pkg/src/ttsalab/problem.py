"""Problem definitions: operator pairs, roots, linearizations, noise.

A problem bundles the fast operator F, the slow operator G, the inner
solution H (with F(H(y), y) = 0), the root pair, the linearization matrices
at the root, and a noise source.  Built-in constructors cover the linear
benchmark, averaged SGD, the stochastic heavy ball, and off-policy
gradient TD (GTD2 / TDC) on a finite MDP.

All operator callables accept both single vectors ``(d,)`` and replica->
batches ``(R, d)`` with coordinates on the last axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    CholeskyFailure,
    DimensionMismatch,
    IdentityViolation,
    SingularB1,
    SingularInnerJacobian,
)
from .linalg import as_matrix, as_square, psd_factor

_CONDITION_LIMIT = 1e12


# ----------------------------------------------------------------------
# finite MDP for gradient TD
# ----------------------------------------------------------------------

@dataclass
class MDPSpec:
    """Finite MDP with linear features for off-policy evaluation.

    ``transitions[s, a, s']`` is the next-state law, ``target_policy`` and
    ``behavior_policy`` are row-stochastic, ``mu`` is the i.i.d. state
    sampling law, and rewards lie in [0, 1].
    """

    features: np.ndarray          # (n_states, d)
    rewards: np.ndarray           # (n_states, n_actions)
    transitions: np.ndarray       # (n_states, n_actions, n_states)
    target_policy: np.ndarray     # (n_states, n_actions)
    behavior_policy: np.ndarray   # (n_states, n_actions)
    mu: np.ndarray                # (n_states,)
    gamma: float

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.rewards = np.asarray(self.rewards, dtype=float)
        self.transitions = np.asarray(self.transitions, dtype=float)
        self.target_policy = np.asarray(self.target_policy, dtype=float)
        self.behavior_policy = np.asarray(self.behavior_policy, dtype=float)
        self.mu = np.asarray(self.mu, dtype=float)
        self.validate()

    @property
    def n_states(self) -> int:
        return self.features.shape[0]

    @property
    def n_actions(self) -> int:
        return self.rewards.shape[1]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def validate(self) -> None:
        ns, na = self.rewards.shape
        if self.features.shape[0] != ns:
            raise DimensionMismatch("features and rewards disagree on state count")
        if self.transitions.shape != (ns, na, ns):
            raise DimensionMismatch("transitions must have shape (S, A, S)")
        for name, mat in (("target_policy", self.target_policy),
                          ("behavior_policy", self.behavior_policy)):
            if mat.shape != (ns, na):
                raise DimensionMismatch(f"{name} must have shape (S, A)")
        if self.mu.shape != (ns,):
            raise DimensionMismatch("mu must have shape (S,)")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        for name, arr, axis in (
            ("transitions", self.transitions, -1),
            ("target_policy", self.target_policy, -1),
            ("behavior_policy", self.behavior_policy, -1),
            ("mu", self.mu, -1),
        ):
            if np.any(arr < 0):
                raise ValueError(f"{name} has negative entries")
            sums = arr.sum(axis=axis)
            if np.abs(sums - 1.0).max() > 1e-12:
                raise ValueError(f"{name} rows must sum to 1 within 1e-12")
        covered = (self.target_policy > 0) & (self.behavior_policy <= 0)
        if np.any(covered):
            raise ValueError(
                "behavior policy must be positive wherever the target policy is"
            )
        A, _, C, _ = gtd_matrices(self, _validate=False)
        if np.linalg.cond(A) > _CONDITION_LIMIT:
            raise ValueError("mean update matrix A is numerically singular")
        if np.linalg.eigvalsh(C).min() <= 0:
            raise ValueError("feature second moment C is not positive definite")

    def to_json(self) -> dict:
        return {
            "features": self.features.tolist(),
            "rewards": self.rewards.tolist(),
            "transitions": self.transitions.tolist(),
            "target_policy": self.target_policy.tolist(),
            "behavior_policy": self.behavior_policy.tolist(),
            "mu": self.mu.tolist(),
            "gamma": self.gamma,
        }

    @classmethod
    def from_json(cls, data: dict) -> "MDPSpec":
        return cls(
            features=data["features"],
            rewards=data["rewards"],
            transitions=data["transitions"],
            target_policy=data["target_policy"],
            behavior_policy=data["behavior_policy"],
            mu=data["mu"],
            gamma=data["gamma"],
        )


def three_state_mdp() -> MDPSpec:
    """Frozen 3-state, 2-action benchmark MDP with 2-D features.

    Chosen so that the mean update matrix A is well conditioned and the
    slow drift has eigenvalues near 2, which keeps the pre-asymptotic bias
    of desk-scale runs small.
    """
    return MDPSpec(
        features=[[-1.097, -0.924], [0.390, 2.074], [2.276, 0.116]],
        rewards=[[0.976, 0.086], [0.142, 0.906], [0.009, 0.829]],
        transitions=[
            [[0.4494, 0.0797, 0.4709], [0.4106, 0.5401, 0.0493]],
            [[0.1616, 0.1772, 0.6612], [0.2543, 0.2240, 0.5217]],
            [[0.5591, 0.0871, 0.3538], [0.7342, 0.1530, 0.1128]],
        ],
        target_policy=[[0.4442, 0.5558], [0.4063, 0.5937], [0.5904, 0.4096]],
        behavior_policy=[[0.4721, 0.5279], [0.4531, 0.5469], [0.5452, 0.4548]],
        mu=[0.2516, 0.4690, 0.2794],
        gamma=0.9,
    )


def _gtd_outcomes(mdp: MDPSpec):
    """Enumerate (probability, A_n, b_n, C_n, D_n) over all (s, a, s')."""
    phi = mdp.features
    out = []
    for s in range(mdp.n_states):
        for a in range(mdp.n_actions):
            pb = mdp.behavior_policy[s, a]
            if pb == 0.0:
                continue
            rho = mdp.target_policy[s, a] / pb
            for sp in range(mdp.n_states):
                p = mdp.mu[s] * pb * mdp.transitions[s, a, sp]
                if p == 0.0:
                    continue
                a_n = rho * np.outer(phi[s], phi[s] - mdp.gamma * phi[sp])
                b_n = rho * mdp.rewards[s, a] * phi[s]
                c_n = np.outer(phi[s], phi[s])
                d_n = mdp.gamma * rho * np.outer(phi[s], phi[sp])
                out.append((p, a_n, b_n, c_n, d_n))
    return out


def gtd_matrices(mdp: MDPSpec, _validate: bool = True):
    """Exact expectations (A, b, C, D) by enumeration over (s, a, s').

    The identity C - D.T = A.T holds exactly for these expectations; a
    violation beyond 1e-10 signals an implementation bug and raises.
    """
    d = mdp.dim
    A = np.zeros((d, d))
    b = np.zeros(d)
    C = np.zeros((d, d))
    D = np.zeros((d, d))
    for p, a_n, b_n, c_n, d_n in _gtd_outcomes(mdp):
        A += p * a_n
        b += p * b_n
        C += p * c_n
        D += p * d_n
    if _validate:
        gap = np.abs(C - D.T - A.T).max()
        if gap > 1e-10:
            raise IdentityViolation(
                f"C - D^T differs from A^T by {gap:.3e}; enumeration is broken"
            )
    return A, b, C, D


# ----------------------------------------------------------------------
# noise models
# ----------------------------------------------------------------------

class GaussianJointNoise:
    """I.i.d. joint Gaussian noise with fixed block covariance.

    Draws are exactly mean-zero with covariance
    [[Sigma_xi, Sigma_xipsi], [Sigma_xipsi^T, Sigma_psi]].
    """

    kind = "gaussian_joint"

    def __init__(self, sigma_xi, sigma_psi, sigma_xipsi=None):
        self.sigma_xi = as_square(sigma_xi, "sigma_xi")
        self.sigma_psi = as_square(sigma_psi, "sigma_psi")
        dx, dy = self.sigma_xi.shape[0], self.sigma_psi.shape[0]
        if sigma_xipsi is None:
            self.sigma_xipsi = np.zeros((dx, dy))
        else:
            self.sigma_xipsi = as_matrix(sigma_xipsi, "sigma_xipsi")
        if self.sigma_xipsi.shape != (dx, dy):
            raise DimensionMismatch("sigma_xipsi must have shape (dim_x, dim_y)")
        self.dim_xi, self.dim_psi = dx, dy
        joint = np.block([[self.sigma_xi, self.sigma_xipsi],
                          [self.sigma_xipsi.T, self.sigma_psi]])
        scale = max(np.abs(joint).max(), 1.0)
        if np.linalg.eigvalsh(0.5 * (joint + joint.T)).min() < -1e-10 * scale:
            raise CholeskyFailure("joint noise covariance is not PSD")
        self._factor = psd_factor(joint)
        self._factor_is_identity = np.array_equal(self._factor,
                                                  np.eye(dx + dy))
        self.raw_dim = dx + dy

    def presample(self, rng: np.random.Generator, n_steps: int) -> np.ndarray:
        return rng.standard_normal((n_steps, self.raw_dim))

    def noise_from_raw(self, raw, x, y):
        z = raw @ self._factor.T
        return z[..., :self.dim_xi], z[..., self.dim_xi:]

    def presample_block(self, rngs, n_steps: int) -> np.ndarray:
        """Pre-draw and correlate a (replica, step, dim) noise block.

        Each replica fills its slab from its own stream, preserving the
        per-replica draw order of ``presample``; the covariance factor is
        applied once for the whole chunk.
        """
        raw = np.empty((len(rngs), n_steps, self.raw_dim))
        for i, rng in enumerate(rngs):
            rng.standard_normal(out=raw[i])
        if not self._factor_is_identity:
            raw = (raw.reshape(-1, self.raw_dim) @ self._factor.T
                   ).reshape(raw.shape)
        return raw

    def noise_at(self, block, j, x, y):
        z = block[:, j, :]
        return z[:, :self.dim_xi], z[:, self.dim_xi:]

    def asymptotic_cov(self):
        return self.sigma_xi, self.sigma_psi, self.sigma_xipsi


class GTDSamplingNoise:
    """Sampled (s, a, s') noise for GTD2/TDC updates.

    Each draw takes s ~ mu, a ~ behavior_policy(.|s), s' ~ P(.|s, a) (i.i.d.
    tuples, not a trajectory) and returns the stochastic update minus its
    exact conditional mean at the current iterate, which is a martingale
    difference by construction.
    """

    raw_dim = 3

    def __init__(self, mdp: MDPSpec, algo: str):
        if algo not in ("gtd2", "tdc"):
            raise ValueError(f"algo must be 'gtd2' or 'tdc', got {algo!r}")
        self.kind = "gtd_sampling"
        self.mdp = mdp
        self.algo = algo
        A, b, C, D = gtd_matrices(mdp)
        self.A, self.b, self.C, self.D = A, b, C, D
        self.phi = mdp.features
        self.gamma = mdp.gamma
        self.rho_table = np.where(mdp.behavior_policy > 0,
                                  mdp.target_policy / np.where(
                                      mdp.behavior_policy > 0,
                                      mdp.behavior_policy, 1.0),
                                  0.0)
        # normalized cumulative tables for inverse-CDF sampling
        self._cum_mu = self._cum(mdp.mu)
        self._cum_pib = np.stack([self._cum(r) for r in mdp.behavior_policy])
        self._cum_p = np.stack([
            np.stack([self._cum(mdp.transitions[s, a])
                      for a in range(mdp.n_actions)])
            for s in range(mdp.n_states)
        ])
        self._ystar = np.linalg.solve(A, b)
        self._asymptotic = self._exact_cov_at_root()

    @staticmethod
    def _cum(p: np.ndarray) -> np.ndarray:
        c = np.cumsum(p)
        return c / c[-1]

    def presample(self, rng: np.random.Generator, n_steps: int) -> np.ndarray:
        return rng.random((n_steps, self.raw_dim))

    def presample_block(self, rngs, n_steps: int) -> np.ndarray:
        raw = np.empty((len(rngs), n_steps, self.raw_dim))
        for i, rng in enumerate(rngs):
            rng.random(out=raw[i])
        return raw

    def noise_at(self, block, j, x, y):
        return self.noise_from_raw(block[:, j, :], x, y)

    def decode(self, raw):
        """Map uniform triples to (s, a, s') index arrays."""
        u = np.atleast_2d(raw)
        s = np.minimum((u[:, 0:1] >= self._cum_mu).sum(axis=1),
                       self.mdp.n_states - 1)
        a = np.minimum((u[:, 1:2] >= self._cum_pib[s]).sum(axis=1),
                       self.mdp.n_actions - 1)
        sp = np.minimum((u[:, 2:3] >= self._cum_p[s, a]).sum(axis=1),
                        self.mdp.n_states - 1)
        return s, a, sp

    def noise_from_raw(self, raw, x, y):
        s, a, sp = self.decode(raw)
        phi_s = self.phi[s]
        phi_sp = self.phi[sp]
        rho = self.rho_table[s, a]
        r = self.mdp.rewards[s, a]
        px = (phi_s * x).sum(axis=-1)
        delta = r + ((self.gamma * phi_sp - phi_s) * y).sum(axis=-1)
        upd_x = (px - rho * delta)[..., None] * phi_s
        f_val = x @ self.C.T + y @ self.A.T - self.b
        xi = upd_x - f_val
        if self.algo == "gtd2":
            upd_y = (rho * px)[..., None] * (self.gamma * phi_sp - phi_s)
            g_val = -(x @ self.A)
        else:
            upd_y = ((rho * px * self.gamma)[..., None] * phi_sp
                     - (rho * delta)[..., None] * phi_s)
            g_val = x @ self.D + y @ self.A.T - self.b
        psi = upd_y - g_val
        return xi, psi

    def _exact_cov_at_root(self):
        # at the root x* = 0, so xi reduces to A_n y* - b_n;
        # the GTD2 slow noise vanishes there while TDC's equals xi
        d = self.mdp.dim
        sxi = np.zeros((d, d))
        for p, a_n, b_n, _c, _d in _gtd_outcomes(self.mdp):
            v = a_n @ self._ystar - b_n
            sxi += p * np.outer(v, v)
        if self.algo == "gtd2":
            return sxi, np.zeros((d, d)), np.zeros((d, d))
        return sxi, sxi.copy(), sxi.copy()

    def asymptotic_cov(self):
        return self._asymptotic


# ----------------------------------------------------------------------
# problem specification
# ----------------------------------------------------------------------

@dataclass
class ProblemSpec:
    """One two-time-scale root-finding problem.

    ``F``, ``G``, ``H`` are batch-safe callables; ``B1``, ``B2``, ``B3`` and
    ``H_star`` are the linearization matrices at the root (declared for the
    built-in problems, or estimable by finite differences).  ``delta_*`` are
    the declared local-linearity orders used by the schedule validator.
    """

    name: str
    dim_x: int
    dim_y: int
    F: callable
    G: callable
    H: callable
    x_star: np.ndarray
    y_star: np.ndarray
    noise: object
    B1: np.ndarray | None = None
    B2: np.ndarray | None = None
    B3: np.ndarray | None = None
    H_star: np.ndarray | None = None
    delta_H: float = 1.0
    delta_F: float = 1.0
    delta_G: float = 1.0
    # optional fused evaluator returning (F, G) with shared subexpressions;
    # the engine falls back to separate F and G calls when absent
    FG: callable | None = None

    def eval_fg(self, x, y):
        if self.FG is not None:
            return self.FG(x, y)
        return self.F(x, y), self.G(x, y)

    def __post_init__(self):
        self.x_star = np.asarray(self.x_star, dtype=float).reshape(self.dim_x)
        self.y_star = np.asarray(self.y_star, dtype=float).reshape(self.dim_y)
        for attr in ("B1", "B2", "B3", "H_star"):
            val = getattr(self, attr)
            if val is not None:
                setattr(self, attr, np.asarray(val, dtype=float))

    @cached_property
    def correction(self) -> np.ndarray:
        """B2 @ B1^{-1}, the slow-on-fast correction used by the
        auxiliary sequence."""
        if self.B1 is None or self.B2 is None:
            b1, b2, _, _ = linearize(self)
        else:
            b1, b2 = self.B1, self.B2
        if np.linalg.cond(b1) > _CONDITION_LIMIT:
            raise SingularB1("B1 is numerically singular")
        return b2 @ np.linalg.inv(b1)

    def validate_root(self, rng: np.random.Generator | None = None,
                      n_probes: int = 100) -> None:
        """Check the declared root and the inner-solution property."""
        f0, g0, _ = eval_operators(self, self.x_star, self.y_star)
        if np.linalg.norm(f0) > 1e-10 or np.linalg.norm(g0) > 1e-10:
            raise ValueError(
                f"declared root violates F/G residuals: |F|={np.linalg.norm(f0):.2e}, "
                f"|G|={np.linalg.norm(g0):.2e}")
        rng = rng or np.random.default_rng(0)
        ys = self.y_star + rng.uniform(-0.5, 0.5, size=(n_probes, self.dim_y))
        res = self.F(self.H(ys), ys)
        worst = np.abs(res).max()
        if worst > 1e-8:
            raise ValueError(f"F(H(y), y) residual {worst:.2e} exceeds 1e-8")


def eval_operators(p: ProblemSpec, x, y):
    """Evaluate (F, G, H) at one point or a batch of points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != p.dim_x or y.shape[-1] != p.dim_y:
        raise DimensionMismatch(
            f"expected trailing dims ({p.dim_x}, {p.dim_y}), "
            f"got {x.shape} and {y.shape}")
    return p.F(x, y), p.G(x, y), p.H(y)


def linearize(p: ProblemSpec, force_numeric: bool = False):
    """Return (B1, B2, B3, H_star) at the root.

    Declared matrices are returned unchanged.  Otherwise the Jacobians are
    estimated by central finite differences with step 1e-5 * (1 + |root|)
    and composed as B3 = dG/dy - dG/dx (dF/dx)^{-1} dF/dy.
    """
    declared = (p.B1, p.B2, p.B3, p.H_star)
    if not force_numeric and all(m is not None for m in declared):
        return declared
    x0, y0 = p.x_star, p.y_star
    h = 1e-5 * (1.0 + np.sqrt(np.dot(x0, x0) + np.dot(y0, y0)))

    def jac(fun, at, dim_out):
        cols = []
        for j in range(at.size):
            e = np.zeros_like(at)
            e[j] = h
            cols.append((fun(at + e) - fun(at - e)) / (2 * h))
        return np.column_stack(cols).reshape(dim_out, at.size)

    dfdx = jac(lambda v: p.F(v, y0), x0, p.dim_x)
    dfdy = jac(lambda v: p.F(x0, v), y0, p.dim_x)
    dgdx = jac(lambda v: p.G(v, y0), x0, p.dim_y)
    dgdy = jac(lambda v: p.G(x0, v), y0, p.dim_y)
    h_star = jac(p.H, y0, p.dim_x)
    if np.linalg.cond(dfdx) > _CONDITION_LIMIT:
        raise SingularInnerJacobian("dF/dx at the root is numerically singular")
    b3 = dgdy - dgdx @ np.linalg.solve(dfdx, dfdy)
    return dfdx, dgdx, b3, h_star


def sample_noise(p: ProblemSpec, rng: np.random.Generator, x, y):
    """Draw one martingale-difference noise pair (xi, psi) at (x, y)."""
    x = np.asarray(x, dtype=float).reshape(1, p.dim_x)
    y = np.asarray(y, dtype=float).reshape(1, p.dim_y)
    raw = p.noise.presample(rng, 1)
    xi, psi = p.noise.noise_from_raw(raw, x, y)
    return xi[0], psi[0]


def asymptotic_noise_cov(p: ProblemSpec):
    """Limit covariance blocks (Sigma_xi, Sigma_psi, Sigma_xipsi)."""
    return p.noise.asymptotic_cov()


# ----------------------------------------------------------------------
# built-in problems
# ----------------------------------------------------------------------

def linear_problem(b1, b2, b3, h_star=None, y_star=None,
                   sigma_xi=None, sigma_psi=None, sigma_xipsi=None,
                   name: str = "linear") -> ProblemSpec:
    """Generic linear problem with inner solution H(y) = W y.

    F(x, y) = B1 (x - W y) and G(x, y) = B2 (x - W y) + B3 (y - y*), so the
    root is (W y*, y*) and the declared linearization is exact.
    """
    B1 = as_square(b1, "b1")
    B3 = as_square(b3, "b3")
    dx, dy = B1.shape[0], B3.shape[0]
    B2 = as_matrix(b2, "b2")
    if B2.shape != (dy, dx):
        raise DimensionMismatch(f"b2 must have shape ({dy}, {dx})")
    W = np.zeros((dx, dy)) if h_star is None else as_matrix(h_star, "h_star")
    if W.shape != (dx, dy):
        raise DimensionMismatch(f"h_star must have shape ({dx}, {dy})")
    ys = np.zeros(dy) if y_star is None else np.asarray(y_star, dtype=float)
    xs = W @ ys
    sxi = np.eye(dx) if sigma_xi is None else as_square(sigma_xi)
    spsi = np.zeros((dy, dy)) if sigma_psi is None else as_square(sigma_psi)

    def F(x, y):
        return (x - y @ W.T) @ B1.T

    def G(x, y):
        return (x - y @ W.T) @ B2.T + (y - ys) @ B3.T

    def H(y):
        return y @ W.T

    def FG(x, y):
        hx = x - y @ W.T
        return hx @ B1.T, hx @ B2.T + (y - ys) @ B3.T

    return ProblemSpec(
        name=name, dim_x=dx, dim_y=dy, F=F, G=G, H=H, FG=FG,
        x_star=xs, y_star=ys,
        noise=GaussianJointNoise(sxi, spsi, sigma_xipsi),
        B1=B1, B2=B2, B3=B3, H_star=W,
    )


def pr_averaging_problem(q=None, sigma_xi=None) -> ProblemSpec:
    """SGD with iterate averaging on f(x) = x^T Q x / 2.

    The fast iterate runs SGD (F(x, y) = Q x); the slow iterate is the
    running average (G(x, y) = y - x, noiseless).  H is constant at the
    minimizer, so H* = 0; B1 = Q, B2 = -I, B3 = I.
    """
    Q = np.diag([1.0, 2.0]) if q is None else as_square(q, "q")
    d = Q.shape[0]
    sxi = np.eye(d) if sigma_xi is None else as_square(sigma_xi)

    def F(x, y):
        return x @ Q.T

    def G(x, y):
        return y - x

    def H(y):
        return np.zeros(y.shape[:-1] + (d,))

    return ProblemSpec(
        name="pr_averaging", dim_x=d, dim_y=d, F=F, G=G, H=H,
        x_star=np.zeros(d), y_star=np.zeros(d),
        noise=GaussianJointNoise(sxi, np.zeros((d, d))),
        B1=Q, B2=-np.eye(d), B3=np.eye(d), H_star=np.zeros((d, d)),
    )


def shb_problem(q=None, sigma_xi=None) -> ProblemSpec:
    """Normalized stochastic heavy ball on f(y) = y^T Q y / 2.

    F(x, y) = x - grad f(y), G(x, y) = x, H(y) = grad f(y) = Q y; the root
    is (0, 0) and B1 = I, B2 = I, B3 = Q.
    """
    Q = np.diag([1.0, 2.0]) if q is None else as_square(q, "q")
    d = Q.shape[0]
    sxi = np.eye(d) if sigma_xi is None else as_square(sigma_xi)

    def F(x, y):
        return x - y @ Q.T

    def G(x, y):
        return x

    def H(y):
        return y @ Q.T

    return ProblemSpec(
        name="shb", dim_x=d, dim_y=d, F=F, G=G, H=H,
        x_star=np.zeros(d), y_star=np.zeros(d),
        noise=GaussianJointNoise(sxi, np.zeros((d, d))),
        B1=np.eye(d), B2=np.eye(d), B3=Q, H_star=Q,
    )


def gtd_problem(mdp: MDPSpec | None = None, algo: str = "gtd2") -> ProblemSpec:
    """GTD2 or TDC policy evaluation as a two-time-scale problem.

    F(x, y) = C x + A y - b for both algorithms; the slow operator is
    G = -A^T x for GTD2 and G = D^T x + A y - b for TDC.  Both share the
    root (0, A^{-1} b), B1 = C and B3 = A^T C^{-1} A.
    """
    mdp = mdp or three_state_mdp()
    A, b, C, D = gtd_matrices(mdp)
    d = mdp.dim
    ystar = np.linalg.solve(A, b)
    c_inv = np.linalg.inv(C)
    b3 = A.T @ c_inv @ A

    def F(x, y):
        return x @ C.T + y @ A.T - b

    def H(y):
        return (b - y @ A.T) @ c_inv.T

    if algo == "gtd2":
        def G(x, y):
            return -(x @ A)
        b2 = -A.T
    elif algo == "tdc":
        def G(x, y):
            return x @ D + y @ A.T - b
        b2 = D.T
    else:
        raise ValueError(f"algo must be 'gtd2' or 'tdc', got {algo!r}")

    return ProblemSpec(
        name=algo, dim_x=d, dim_y=d, F=F, G=G, H=H,
        x_star=np.zeros(d), y_star=ystar,
        noise=GTDSamplingNoise(mdp, algo),
        B1=C, B2=b2, B3=b3, H_star=-c_inv @ A,
    )
