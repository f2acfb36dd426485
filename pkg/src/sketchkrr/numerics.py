"""Dense linear algebra and fast transforms.

Everything here works on float64 numpy arrays and carries no KRR semantics.
Factorizations are delegated to LAPACK through scipy/numpy; the Walsh-Hadamard
transform and the power iteration are implemented directly.

Results of matrix products are deterministic for a fixed BLAS thread count,
not across thread counts.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    LengthNotPowerOfTwo,
    NoConvergence,
    NoConvergenceWarning,
    NotPositiveDefinite,
    SingularTriangular,
)

# Largest matrix the dense eigensolver is intended for.
DESK_SCALE_MAX_DIM = 4096


@dataclass(frozen=True)
class EigenResult:
    """Eigenpairs of a symmetric matrix, eigenvalues in descending order."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    return A


def cholesky(A) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == A``.

    No jitter is added; callers that want a retry policy catch
    :class:`NotPositiveDefinite` themselves.
    """
    A = _as_square(A)
    try:
        return scipy.linalg.cholesky(A, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc


def triangular_solve(L, B, *, lower: bool = True, transpose: bool = False) -> np.ndarray:
    """Solve ``op(L) X = B`` where ``op`` is the identity or the transpose.

    Args:
        L: triangular matrix with nonzero diagonal.
        B: right-hand side, vector or matrix.
        lower: whether ``L`` is lower triangular.
        transpose: solve with ``L.T`` instead of ``L``.
    """
    L = _as_square(L)
    B = np.asarray(B, dtype=np.float64)
    if B.shape[0] != L.shape[0]:
        raise DimensionMismatch(f"L is {L.shape}, B has {B.shape[0]} rows")
    if L.shape[0] and np.min(np.abs(np.diag(L))) < 1e-300:
        raise SingularTriangular("triangular factor has a (near) zero diagonal entry")
    return scipy.linalg.solve_triangular(L, B, lower=lower, trans=1 if transpose else 0)


def next_power_of_two(n: int) -> int:
    return 1 if n <= 1 else 1 << (int(n) - 1).bit_length()


def fwht(x) -> np.ndarray:
    """Unnormalized fast Walsh-Hadamard transform along the last axis.

    Computes ``H_m @ x`` for the Sylvester-ordered Hadamard matrix
    ``H_m = [[H, H], [H, -H]]`` in ``O(m log m)``. Leading axes are batch axes,
    so a matrix is transformed row by row.
    """
    x = np.array(x, dtype=np.float64)  # copy, the input is never modified
    m = x.shape[-1] if x.ndim else 0
    if m < 1 or m & (m - 1):
        raise LengthNotPowerOfTwo(f"transform length must be a power of two, got {m}")
    batch = x.shape[:-1]
    h = 1
    while h < m:
        y = x.reshape(*batch, m // (2 * h), 2, h)
        top = y[..., 0, :]
        bottom = y[..., 1, :]
        x = np.stack((top + bottom, top - bottom), axis=-2).reshape(*batch, m)
        h *= 2
    return x


def fft_real(x) -> np.ndarray:
    """Complex DFT of a real vector (full length, no padding)."""
    return np.fft.fft(np.asarray(x, dtype=np.float64), axis=-1)


def ifft_real(X, n: int | None = None) -> np.ndarray:
    """Inverse of :func:`fft_real`, returning the real part."""
    return np.fft.ifft(X, n=n, axis=-1).real


def circular_convolve(a, b) -> np.ndarray:
    """Circular convolution of equal-length real vectors via the FFT."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[-1] != b.shape[-1]:
        raise DimensionMismatch("circular convolution needs equal lengths")
    return ifft_real(fft_real(a) * fft_real(b))


def symmetric_eigen(A) -> EigenResult:
    """Full eigendecomposition of a symmetric matrix, largest eigenvalue first."""
    A = _as_square(A)
    if A.shape[0] > DESK_SCALE_MAX_DIM:
        warnings.warn(
            f"dense eigensolve on a {A.shape[0]}x{A.shape[0]} matrix exceeds the "
            f"intended size ({DESK_SCALE_MAX_DIM})",
            RuntimeWarning,
            stacklevel=2,
        )
    try:
        w, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return EigenResult(eigenvalues=w[::-1].copy(), eigenvectors=V[:, ::-1].copy())


def power_iteration_spectral_norm(
    apply: Callable[[np.ndarray], np.ndarray],
    dim: int,
    tol: float = 1e-4,
    max_iter: int = 500,
    seed: int = 0,
) -> float:
    """Estimate the largest eigenvalue of a symmetric PSD operator.

    Starts from a seeded Gaussian vector and stops when the Rayleigh quotient
    changes by less than ``tol`` relative. The estimate never exceeds the true
    value. A start vector orthogonal to the top eigenspace (probability zero)
    is the failure mode. If ``max_iter`` is reached the best estimate so far is
    returned and a :class:`NoConvergenceWarning` is emitted.
    """
    if dim == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(dim)
    x /= np.linalg.norm(x)
    prev = None
    best = 0.0
    for _ in range(max_iter):
        y = np.asarray(apply(x), dtype=np.float64)
        estimate = float(x @ y)
        best = max(best, estimate)
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        if prev is not None and abs(estimate - prev) <= tol * abs(estimate):
            return best
        prev = estimate
        x = y / norm
    warnings.warn(
        f"power iteration did not converge in {max_iter} iterations",
        NoConvergenceWarning,
        stacklevel=2,
    )
    return best
