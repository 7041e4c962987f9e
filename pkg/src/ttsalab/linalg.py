"""Dense real-matrix kernel: Lyapunov solves, matrix exponentials, spectra.

All routines operate on small (desk-scale) dense float64 arrays and are pure
functions, safe for concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NonConvergence, NotHurwitz

LYAPUNOV_RESIDUAL_TOL = 1e-10
SYMMETRY_TOL = 1e-8


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce input to a float64 2-D array with all entries finite."""
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_square(m, name: str = "matrix") -> np.ndarray:
    arr = as_matrix(m, name)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class SpectralReport:
    """Eigenvalue real parts of a square matrix.

    ``hurwitz_for_negation`` is true iff every eigenvalue of the inspected
    matrix M has strictly positive real part, i.e. iff -M is Hurwitz.
    """

    real_parts: np.ndarray
    min_real_part: float
    hurwitz_for_negation: bool


def spectral_report(m) -> SpectralReport:
    """Compute eigenvalue real parts and the negated-Hurwitz verdict."""
    arr = as_square(m)
    try:
        eigs = np.linalg.eigvals(arr)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - QR rarely fails
        raise NonConvergence(f"eigenvalue iteration failed: {exc}") from exc
    real_parts = np.sort(eigs.real)
    min_real = float(real_parts[0])
    return SpectralReport(
        real_parts=real_parts,
        min_real_part=min_real,
        hurwitz_for_negation=min_real > 0.0,
    )


def solve_lyapunov(b, c) -> np.ndarray:
    """Solve B @ S + S @ B.T = C for S.

    Requires -B Hurwitz (all eigenvalues of B in the open right half plane)
    so the solution is unique and positive semidefinite for PSD C.  Solved by
    dense Kronecker vectorization, which is exact at the dimensions used
    here; the residual is verified against ``LYAPUNOV_RESIDUAL_TOL``.

    Parameters
    ----------
    b : array_like, square
        Drift factor.  The equation keeps B as given; no symmetrization.
    c : array_like, square, symmetric PSD
        Right-hand side.

    Returns
    -------
    numpy.ndarray
        Symmetric solution S.
    """
    B = as_square(b, "B")
    C = as_square(c, "C")
    if B.shape != C.shape:
        raise DimensionMismatch(f"B {B.shape} and C {C.shape} differ")
    if np.abs(C - C.T).max() > SYMMETRY_TOL * (1.0 + np.abs(C).max()):
        raise ValueError("C must be symmetric")
    C = 0.5 * (C + C.T)
    rep = spectral_report(B)
    if not rep.hurwitz_for_negation:
        raise NotHurwitz(
            "-B is not Hurwitz (min eigenvalue real part of B is "
            f"{rep.min_real_part:.3e}); Lyapunov solution not guaranteed"
        )
    d = B.shape[0]
    eye = np.eye(d)
    # Row-major vec: vec(B S) = (B (x) I) vec(S), vec(S B^T) = (I (x) B) vec(S).
    K = np.kron(B, eye) + np.kron(eye, B)
    sigma = np.linalg.solve(K, C.reshape(-1)).reshape(d, d)
    sigma = 0.5 * (sigma + sigma.T)
    residual = np.linalg.norm(B @ sigma + sigma @ B.T - C)
    if residual > LYAPUNOV_RESIDUAL_TOL * (1.0 + np.linalg.norm(C)):
        raise NonConvergence(
            f"Lyapunov residual {residual:.3e} exceeds tolerance"
        )
    return sigma


def matrix_exp(m, t: float = 1.0) -> np.ndarray:
    """Return exp(t * M) via scaling-and-squaring with a Pade core."""
    arr = as_square(m)
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    return scipy.linalg.expm(t * arr)


def frobenius_relative(a, b) -> float:
    """Frobenius distance of A from B, relative to max(||B||_F, 1e-12)."""
    A = np.asarray(a, dtype=float)
    B = np.asarray(b, dtype=float)
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes {A.shape} and {B.shape} differ")
    return float(np.linalg.norm(A - B) / max(np.linalg.norm(B), 1e-12))


def psd_factor(c, jitter: float = 1e-12) -> np.ndarray:
    """Factor a PSD matrix C as L @ L.T for Gaussian sampling.

    Tries Cholesky first, then Cholesky with a small diagonal jitter, then
    a symmetric eigendecomposition with negative eigenvalues clipped (needed
    for exactly singular covariances such as noise-free coordinates).
    """
    from .errors import CholeskyFailure

    C = as_square(c, "covariance")
    C = 0.5 * (C + C.T)
    if not np.any(C):
        return np.zeros_like(C)
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        pass
    scale = max(np.abs(np.diag(C)).max(), 1.0)
    try:
        return np.linalg.cholesky(C + jitter * scale * np.eye(C.shape[0]))
    except np.linalg.LinAlgError:
        pass
    eigvals, eigvecs = np.linalg.eigh(C)
    if eigvals.min() < -1e-8 * scale:
        raise CholeskyFailure(
            f"matrix is not PSD (min eigenvalue {eigvals.min():.3e})"
        )
    return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))
