"""Random-features preconditioner and its quality test.

The preconditioner is ``(Z Z^T + lambda_p I)^-1``, applied through the
Woodbury identity as ``lambda_p^-1 (x - U^T U x)`` with ``U = L^-1 Z^T`` and
``L L^T = Z^T Z + lambda_p I``. Applying it costs two thin matrix products.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BudgetExhausted, DimensionMismatch, NotPositiveDefinite
from .numerics import cholesky, power_iteration_spectral_norm, symmetric_eigen, triangular_solve

logger = logging.getLogger(__name__)

# Thresholds of the quality test, as multiples of lambda.
EIGEN_CUTOFF = 0.05
TAIL_BOUND = 0.1
RATIO_BOUNDS = (0.9, 1.1)


@dataclass(frozen=True)
class Preconditioner:
    U: np.ndarray
    lambda_p: float

    @property
    def s(self) -> int:
        return self.U.shape[0]

    @property
    def n(self) -> int:
        return self.U.shape[1]

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != self.n:
            raise DimensionMismatch(f"preconditioner is {self.n}-dimensional, got {x.shape[0]}")
        return (x - self.U.T @ (self.U @ x)) / self.lambda_p

    __call__ = apply


def build_preconditioner(Z, lambda_p: float) -> Preconditioner:
    """Factor ``Z^T Z + lambda_p I`` and form ``U`` for Woodbury application.

    A failed factorization is retried once with ``1e-12 * trace / s`` added to
    the diagonal; since ``lambda_p > 0`` only round-off can cause it.
    """
    if not lambda_p > 0:
        raise ValueError("lambda_p must be positive")
    Z = np.asarray(Z, dtype=np.float64)
    n, s = Z.shape
    G = Z.T @ Z
    G[np.diag_indices(s)] += lambda_p
    try:
        L = cholesky(G)
    except NotPositiveDefinite:
        jitter = 1e-12 * np.trace(G) / max(s, 1)
        logger.warning("Cholesky failed, retrying with diagonal jitter %.3g", jitter)
        G[np.diag_indices(s)] += jitter
        L = cholesky(G)
    U = triangular_solve(L, Z.T, lower=True)
    return Preconditioner(U=U, lambda_p=float(lambda_p))


def precond_apply(p: Preconditioner, x) -> np.ndarray:
    return p.apply(x)


@dataclass(frozen=True)
class QualityReport:
    """Outcome of :func:`quality_test`.

    ``cond1_value`` estimates ``||(I - P) K (I - P)||``; ``cond2_low`` and
    ``cond2_high`` bound ``x^T P K P x / x^T P Z Z^T P x`` over range(P).
    """

    passed: bool
    cond1_value: float
    cond2_low: float
    cond2_high: float
    rank_of_P: int
    lam: float
    cond1_threshold: float
    ratio_bounds: tuple = RATIO_BOUNDS
    eigen_cutoff: float = 0.0
    s: int = 0


def _range_basis(Z: np.ndarray, cutoff: float) -> tuple[np.ndarray, np.ndarray]:
    """Left singular vectors of ``Z`` whose squared singular value exceeds ``cutoff``.

    Uses whichever of ``Z^T Z`` and ``Z Z^T`` is smaller; returns the n x k
    basis and the k squared singular values.
    """
    n, s = Z.shape
    if s == 0 or n == 0:
        return np.zeros((n, 0)), np.zeros(0)
    eig = symmetric_eigen(Z.T @ Z if s <= n else Z @ Z.T)
    sq = eig.eigenvalues
    # Singular values below 1e-10 of the largest count as zero.
    keep = (sq > cutoff) & (sq > max(1e-20 * sq[0], 0.0))
    sq = sq[keep]
    if s > n:
        return eig.eigenvectors[:, keep], sq
    return Z @ eig.eigenvectors[:, keep] / np.sqrt(sq), sq


def quality_test(K, Z, lam: float, *, power_tol: float = 1e-4, seed: int = 0) -> QualityReport:
    """Check whether ``Z Z^T + lam I`` is a provably good preconditioner for ``K + lam I``.

    ``P`` projects onto the eigenvectors of ``Z Z^T`` with eigenvalue above
    ``0.05 lam``. The test passes when ``||(I-P) K (I-P)|| <= 0.1 lam`` (by
    power iteration) and every eigenvalue of ``S^-1 B^T K B S^-1`` lies in
    ``[0.9, 1.1]``, with ``B`` an orthonormal basis of range(P) and ``S^2`` the
    matching eigenvalues of ``Z Z^T``. The second check is exact.
    """
    K = np.asarray(K, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64)
    n = K.shape[0]
    if Z.shape[0] != n:
        raise DimensionMismatch(f"K is {n}x{n} but Z has {Z.shape[0]} rows")
    B, sq = _range_basis(Z, EIGEN_CUTOFF * lam)
    k = sq.size

    def tail(x):
        x = x - B @ (B.T @ x)
        y = K @ x
        return y - B @ (B.T @ y)

    cond1 = power_iteration_spectral_norm(tail, n, tol=power_tol, seed=seed)

    if k:
        inv_s = 1.0 / np.sqrt(sq)
        M = (B.T @ K @ B) * inv_s[:, None] * inv_s[None, :]
        ratios = symmetric_eigen((M + M.T) / 2).eigenvalues
        low, high = float(ratios[-1]), float(ratios[0])
    else:
        low = high = 1.0

    passed = (
        cond1 <= TAIL_BOUND * lam
        and RATIO_BOUNDS[0] <= low
        and high <= RATIO_BOUNDS[1]
    )
    return QualityReport(
        passed=bool(passed),
        cond1_value=float(cond1),
        cond2_low=low,
        cond2_high=high,
        rank_of_P=int(k),
        lam=float(lam),
        cond1_threshold=TAIL_BOUND * lam,
        eigen_cutoff=EIGEN_CUTOFF * lam,
        s=Z.shape[1],
    )


def projection_basis(Z, lam: float) -> np.ndarray:
    """Orthonormal basis of the range of ``P`` used by :func:`quality_test`."""
    return _range_basis(np.asarray(Z, dtype=np.float64), EIGEN_CUTOFF * lam)[0]


def default_initial_size(n: int) -> int:
    return max(64, math.ceil(n / 64))


@dataclass
class AdaptiveResult:
    preconditioner: Preconditioner
    Z: np.ndarray
    sketch: object
    history: list = field(default_factory=list)

    @property
    def report(self) -> QualityReport:
        return self.history[-1]

    @property
    def passed(self) -> bool:
        return self.report.passed


def adaptive_build(
    K,
    X,
    make_sketch: Callable[[int, int], object],
    lam: float,
    lambda_p: float | None = None,
    s0: int | None = None,
    s_max: int | None = None,
    seed: int = 0,
    raise_on_failure: bool = True,
) -> AdaptiveResult:
    """Double the sketch size until the quality test passes.

    Args:
        K: the n x n kernel matrix.
        X: training inputs handed to the sketch.
        make_sketch: ``make_sketch(s, seed)`` returns an object with an
            ``apply(X)`` method producing an n x s matrix.
        lam: ridge parameter the test is run against.
        lambda_p: preconditioner shift, defaults to ``lam``.
        s0: first size tried, defaults to ``max(64, ceil(n / 64))``.
        s_max: largest size tried, defaults to ``n``. The last attempt is made
            at exactly ``s_max``.
        seed: master seed; attempt ``a`` uses ``seed + 1000 * a``.
        raise_on_failure: raise :class:`BudgetExhausted` if no attempt passes.
            Otherwise the ``s_max`` attempt is returned with a failing report.
    """
    n = np.asarray(K).shape[0]
    lambda_p = lam if lambda_p is None else lambda_p
    s_max = n if s_max is None else int(s_max)
    s = min(default_initial_size(n) if s0 is None else int(s0), s_max)
    if s < 1:
        raise ValueError("s0 must be at least 1")

    history = []
    attempt = 0
    while True:
        sketch = make_sketch(s, seed + 1000 * attempt)
        Z = sketch.apply(X)
        report = quality_test(K, Z, lam, seed=seed + attempt)
        history.append(report)
        logger.info(
            "s=%d: tail=%.3g (<= %.3g), ratios=[%.3f, %.3f], passed=%s",
            s, report.cond1_value, report.cond1_threshold,
            report.cond2_low, report.cond2_high, report.passed,
        )
        if report.passed or s >= s_max:
            break
        s = min(2 * s, s_max)
        attempt += 1

    if not report.passed and raise_on_failure:
        raise BudgetExhausted(
            f"quality test still failing at s_max={s_max}", report=report, history=history
        )
    return AdaptiveResult(
        preconditioner=build_preconditioner(Z, lambda_p), Z=Z, sketch=sketch, history=history
    )
