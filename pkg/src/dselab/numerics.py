"""Dense linear-algebra and integration kernel shared by the whole lab.

All routines operate on plain numpy arrays. Covariance-like matrices are
symmetrized before factorization so floating-point drift never accumulates.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np


class NumericsError(Exception):
    """Base class for kernel failures."""


class NotPositiveDefinite(NumericsError):
    """Cholesky pivot <= 0: the matrix is not positive definite.

    In a filter step this signals covariance collapse.
    """


class NoConvergence(NumericsError):
    """Eigenvalue iteration failed; input is likely ill-conditioned."""


class NonFiniteState(NumericsError):
    """A state vector or integration result contains NaN or Inf."""


def require_finite(arr: np.ndarray, what: str = "array") -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteState(f"{what} contains non-finite entries")
    return arr


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Return (M + M^T)/2."""
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def cholesky_lower(m: np.ndarray, *, sym_tol: float = 1e-10) -> np.ndarray:
    """Lower-triangular S with S S^T = m for symmetric positive definite m.

    The input is symmetrized first; asymmetry beyond ``sym_tol`` (relative to
    the matrix scale) is a caller bug and raises ValueError.

    Raises
    ------
    NotPositiveDefinite
        if any pivot is <= 0.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("cholesky_lower requires a square matrix")
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > sym_tol * scale:
        raise ValueError("cholesky_lower requires a symmetric matrix")
    try:
        return np.linalg.cholesky(symmetrize(m))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc


def eigen_sqrt(m: np.ndarray) -> np.ndarray:
    """Symmetric square root with negative eigenvalues clamped to zero.

    Recovery path for positive *semi*-definite matrices (singular covariances,
    or covariances that lost definiteness to rounding). Returns F with
    F F^T = clamped(m).
    """
    w, v = np.linalg.eigh(symmetrize(m))
    w = np.clip(w, 0.0, None)
    return v * np.sqrt(w)


def covariance_sqrt(m: np.ndarray, *, allow_semidefinite: bool = False) -> np.ndarray:
    """Factor F with F F^T = m. Cholesky by default, eigen fallback on request."""
    if allow_semidefinite:
        try:
            return cholesky_lower(m)
        except NotPositiveDefinite:
            return eigen_sqrt(m)
    return cholesky_lower(m)


def pseudo_inverse(m: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudoinverse.

    Singular values below 1e-10 times the largest singular value are treated
    as zero. Defined for every rectangular matrix, including empty ones.
    """
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return np.zeros((m.shape[1], m.shape[0]))
    return np.linalg.pinv(m, rcond=1e-10)


def max_eigenvalue_symmetric(m: np.ndarray) -> float:
    """Largest eigenvalue of a (symmetrized) square matrix."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("max_eigenvalue_symmetric requires a square matrix")
    try:
        return float(np.linalg.eigvalsh(symmetrize(m))[-1])
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigh on 4x4 is robust
        raise NoConvergence(str(exc)) from exc


def rk4_step(
    f: Callable[[float, np.ndarray], np.ndarray],
    x: np.ndarray,
    t: float,
    dt: float,
) -> np.ndarray:
    """One classical 4th-order Runge-Kutta step of x' = f(t, x).

    Local error is O(dt^5). Raises NonFiniteState if the result overflows,
    which in a simulation signals model divergence.
    """
    if dt <= 0.0:
        raise ValueError("rk4_step requires dt > 0")
    x = np.asarray(x, dtype=float)
    half = 0.5 * dt
    k1 = np.asarray(f(t, x))
    k2 = np.asarray(f(t + half, x + half * k1))
    k3 = np.asarray(f(t + half, x + half * k2))
    k4 = np.asarray(f(t + dt, x + dt * k3))
    out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NonFiniteState("rk4_step produced a non-finite state")
    return out


def fd_jacobian(
    f: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    step: float = 1e-6,
) -> np.ndarray:
    """Central finite-difference Jacobian of f at x, one column per component."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x), dtype=float)
    jac = np.empty((f0.size, x.size))
    for j in range(x.size):
        dx = np.zeros_like(x)
        dx[j] = step
        jac[:, j] = (np.asarray(f(x + dx)) - np.asarray(f(x - dx))) / (2.0 * step)
    return jac


def is_hurwitz(m: np.ndarray, *, tol: float = 0.0) -> bool:
    """True when every eigenvalue of m has real part < -tol."""
    return bool(np.max(np.linalg.eigvals(np.asarray(m, dtype=float)).real) < -tol)


def spectral_abscissa(m: np.ndarray) -> float:
    """Largest real part over the eigenvalues of m."""
    return float(np.max(np.linalg.eigvals(np.asarray(m, dtype=float)).real))


def rms(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    return float(math.sqrt(np.mean(values * values)))
