"""Kernel ridge regression training, prediction and the PCG engine."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BreakdownDetected, DimensionMismatch, UnknownLabel
from .kernels import Dataset, KernelSpec, gram_matrix
from .numerics import cholesky, triangular_solve
from .precond import AdaptiveResult, adaptive_build, build_preconditioner
from .sketches import ChainSpec, SketchChain

logger = logging.getLogger(__name__)

CLASSIFY = "classify"
REGRESS = "regress"
DEFAULT_TAU = {CLASSIFY: 1e-3, REGRESS: 1e-5}


@dataclass
class RhsResult:
    iterations: int
    residual: float
    converged: bool
    residual_history: list = field(default_factory=list, repr=False)
    matvecs: int = 0


@dataclass
class PcgReport:
    """Per right-hand-side outcome of a (P)CG run plus aggregate cost."""

    per_rhs: list = field(default_factory=list)
    matvecs: int = 0
    wall_time: float = 0.0
    sketch_size: int | None = None
    quality_history: list = field(default_factory=list, repr=False)

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.per_rhs)

    @property
    def iterations(self) -> int:
        return max((r.iterations for r in self.per_rhs), default=0)


def _as_operator(A) -> Callable[[np.ndarray], np.ndarray]:
    if callable(A):
        return A
    A = np.asarray(A, dtype=np.float64)
    return lambda v: A @ v


def pcg_solve(
    apply_A,
    y,
    M=None,
    tau: float = 1e-5,
    max_iter: int = 1000,
    callback: Callable[[np.ndarray], None] | None = None,
) -> tuple[np.ndarray, RhsResult]:
    """Preconditioned conjugate gradients for ``A c = y`` from ``c = 0``.

    Stops once ``||y - A c|| <= tau ||y||`` or after ``max_iter`` iterations.
    The recursively updated residual drives the loop; when it first meets the
    tolerance the true residual is recomputed and, if it does not, replaces the
    recursive one and iteration continues.

    Args:
        apply_A: SPD matrix or callable computing ``A @ v``.
        y: right-hand side vector.
        M: preconditioner (approximate inverse of ``A``); a matrix, a callable
            or ``None`` for plain CG.
        tau: relative residual tolerance.
        max_iter: iteration cap.
        callback: called with the current iterate after every iteration.

    Returns:
        The solution and an :class:`RhsResult`. Non-convergence is reported in
        the result, not raised.

    Raises:
        BreakdownDetected: if ``p^T A p <= 0`` for a search direction ``p``.
    """
    A = _as_operator(apply_A)
    precond = (lambda v: v) if M is None else _as_operator(M)
    y = np.asarray(y, dtype=np.float64)
    c = np.zeros_like(y)
    y_norm = np.linalg.norm(y)
    if y_norm == 0.0:
        return c, RhsResult(iterations=0, residual=0.0, converged=True)

    r = y.copy()
    z = precond(r)
    p = z.copy()
    rz = float(r @ z)
    history = [1.0]
    rel = 1.0
    converged = False
    it = 0
    matvecs = 0
    while it < max_iter:
        Ap = A(p)
        matvecs += 1
        pAp = float(p @ Ap)
        if not pAp > 0.0:
            raise BreakdownDetected(f"p^T A p = {pAp:.3e} at iteration {it + 1}")
        alpha = rz / pAp
        c += alpha * p
        r -= alpha * Ap
        it += 1
        rel = np.linalg.norm(r) / y_norm
        if callback is not None:
            callback(c)
        if rel <= tau:
            r = y - A(c)
            matvecs += 1
            rel = np.linalg.norm(r) / y_norm
            if rel <= tau:
                history.append(rel)
                converged = True
                break
        history.append(rel)
        z = precond(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return c, RhsResult(iterations=it, residual=float(rel), converged=converged,
                        residual_history=history, matvecs=matvecs)


def energy_norm_error(c, c_ref, K, lam: float) -> float:
    """``sqrt((c - c_ref)^T (K + lam I) (c - c_ref))``."""
    e = np.asarray(c, dtype=np.float64) - np.asarray(c_ref, dtype=np.float64)
    K = np.asarray(K, dtype=np.float64)
    return math.sqrt(max(float(e @ (K @ e) + lam * (e @ e)), 0.0))


def rlsc_encode(labels, t: int) -> np.ndarray:
    """One-vs-all targets: +1 in the column of the true class, -1 elsewhere."""
    if t < 2:
        raise ValueError("classification needs at least two classes")
    labels = np.asarray(labels, dtype=np.intp)
    if labels.size and (labels.min() < 0 or labels.max() >= t):
        raise UnknownLabel(f"class indices must lie in [0, {t})")
    Y = -np.ones((labels.shape[0], t))
    Y[np.arange(labels.shape[0]), labels] = 1.0
    return Y


def rlsc_decode(scores, label_map=None) -> np.ndarray:
    """Row-wise argmax (ties go to the lowest column), mapped through ``label_map``."""
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    idx = np.argmax(scores, axis=1)
    if label_map is None:
        return idx
    if len(label_map) != scores.shape[1]:
        raise UnknownLabel(
            f"{scores.shape[1]} score columns but the label map has {len(label_map)} entries"
        )
    return np.asarray(label_map)[idx]


def encode_labels(raw, label_map=None) -> tuple[np.ndarray, list]:
    """Translate raw labels into class indices, building the map if needed."""
    raw = np.asarray(raw)
    if label_map is None:
        label_map = np.unique(raw).tolist()
    lookup = {v: i for i, v in enumerate(label_map)}
    try:
        idx = np.array([lookup[v] for v in raw.tolist()], dtype=np.intp)
    except KeyError as exc:
        raise UnknownLabel(f"label {exc.args[0]!r} is not in the label map") from None
    return idx, list(label_map)


@dataclass
class SolverConfig:
    """Training options.

    ``chain`` set to ``None`` runs unpreconditioned CG. ``lambda_p`` and
    ``tau`` default to ``lam`` and the task's tolerance (1e-3 classification,
    1e-5 regression).
    """

    lam: float
    lambda_p: float | None = None
    tau: float | None = None
    max_iter: int = 1000
    chain: ChainSpec | None = None
    adaptive: bool = False
    s0: int | None = None
    s_max: int | None = None
    seed: int = 0
    task: str = REGRESS

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.lambda_p is not None and not self.lambda_p > 0:
            raise ValueError("lambda_p must be positive")
        if self.tau is not None and not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.task not in (CLASSIFY, REGRESS):
            raise ValueError(f"unknown task {self.task!r}")

    @property
    def effective_tau(self) -> float:
        return DEFAULT_TAU[self.task] if self.tau is None else self.tau

    @property
    def effective_lambda_p(self) -> float:
        return self.lam if self.lambda_p is None else self.lambda_p


@dataclass
class KrrModel:
    """``f(x) = sum_i C[i] k(X[i], x)``, one column of ``C`` per target."""

    kernel: KernelSpec
    X: np.ndarray
    C: np.ndarray
    label_map: list | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def t(self) -> int:
        return self.C.shape[1]

    def predict(self, Xq) -> np.ndarray:
        return predict(self, Xq)

    def predict_labels(self, Xq) -> np.ndarray:
        return rlsc_decode(self.predict(Xq), self.label_map)


def _targets(dataset: Dataset, task: str, label_map=None) -> tuple[np.ndarray, list | None]:
    if task == CLASSIFY:
        idx, label_map = encode_labels(dataset.y, label_map or dataset.label_map)
        return rlsc_encode(idx, max(len(label_map), 2)), label_map
    Y = np.asarray(dataset.y, dtype=np.float64)
    return Y.reshape(Y.shape[0], -1), None


def _solve_columns(apply_A, Y, M, tau, max_iter, report: PcgReport) -> np.ndarray:
    C = np.zeros_like(Y)
    for j in range(Y.shape[1]):
        C[:, j], res = pcg_solve(apply_A, Y[:, j], M, tau=tau, max_iter=max_iter)
        report.matvecs += res.matvecs
        report.per_rhs.append(res)
        if not res.converged:
            logger.warning("column %d did not converge: residual %.3g after %d iterations",
                           j, res.residual, res.iterations)
    return C


def train(dataset: Dataset, kernel: KernelSpec, config: SolverConfig) -> tuple[KrrModel, PcgReport]:
    """Fit KRR by solving ``(K + lam I) C = Y`` with (preconditioned) CG.

    The Gram matrix is formed once. When ``config.chain`` is set, the chain is
    realized on the training inputs (or grown by :func:`adaptive_build`) and
    ``Z Z^T + lambda_p I`` preconditions every right-hand side.
    """
    start = time.perf_counter()
    X = dataset.X
    n, d = X.shape
    Y, label_map = _targets(dataset, config.task)
    K = gram_matrix(kernel, X)
    lam = config.lam
    report = PcgReport()

    M = None
    if config.chain is not None:
        lambda_p = config.effective_lambda_p
        if config.adaptive:
            spec = config.chain
            result: AdaptiveResult = adaptive_build(
                K, X,
                lambda s, seed: spec.scaled_to(s).realize(kernel, d, seed),
                lam, lambda_p,
                s0=config.s0, s_max=config.s_max if config.s_max is not None else n,
                seed=config.seed, raise_on_failure=False,
            )
            M = result.preconditioner
            report.quality_history = result.history
            if not result.passed:
                logger.warning("adaptive sizing hit s_max without passing the quality test")
        else:
            chain: SketchChain = config.chain.realize(kernel, d, config.seed)
            M = build_preconditioner(chain.apply(X), lambda_p)
        report.sketch_size = M.s

    def apply_A(v):
        return K @ v + lam * v

    C = _solve_columns(apply_A, Y, M, config.effective_tau, config.max_iter, report)
    report.wall_time = time.perf_counter() - start
    meta = {
        "lambda": lam,
        "lambda_p": config.effective_lambda_p if M is not None else None,
        "seed": config.seed,
        "task": config.task,
        "tau": config.effective_tau,
        "sketch_size": report.sketch_size,
        "iterations": [r.iterations for r in report.per_rhs],
        "converged": report.converged,
    }
    return KrrModel(kernel=kernel, X=X.copy(), C=C, label_map=label_map, meta=meta), report


def predict(model: KrrModel, Xq) -> np.ndarray:
    """Scores ``K(Xq, X) @ C``, one row per query."""
    Xq = np.atleast_2d(np.asarray(Xq, dtype=np.float64))
    if Xq.shape[1] != model.d:
        raise DimensionMismatch(f"model expects {model.d} features, got {Xq.shape[1]}")
    return gram_matrix(model.kernel, Xq, model.X) @ model.C


@dataclass
class RandomFeaturesModel:
    """Sketch-and-solve model ``f(x) = phi(x)^T W`` over a stored chain."""

    chain: SketchChain
    W: np.ndarray
    label_map: list | None = None

    def predict(self, Xq) -> np.ndarray:
        return self.chain.apply(np.atleast_2d(np.asarray(Xq, dtype=np.float64))) @ self.W

    def predict_labels(self, Xq) -> np.ndarray:
        return rlsc_decode(self.predict(Xq), self.label_map)


def train_random_features_baseline(
    dataset: Dataset,
    kernel: KernelSpec,
    chain: ChainSpec,
    lam: float,
    seed: int = 0,
    task: str = REGRESS,
) -> RandomFeaturesModel:
    """Solve ``(Z^T Z + lam I) W = Z^T Y`` in the sketch space."""
    Y, label_map = _targets(dataset, task)
    sketch = chain.realize(kernel, dataset.d, seed)
    Z = sketch.apply(dataset.X)
    G = Z.T @ Z
    G[np.diag_indices_from(G)] += lam
    L = cholesky(G)
    W = triangular_solve(L, triangular_solve(L, Z.T @ Y), transpose=True)
    return RandomFeaturesModel(chain=sketch, W=W, label_map=label_map)


def error_rate(predicted, actual) -> float:
    predicted = np.asarray(predicted)
    actual = np.asarray(actual)
    return float(np.mean(predicted != actual)) if actual.size else 0.0


def mean_squared_error(scores, targets) -> float:
    scores = np.asarray(scores, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64).reshape(scores.shape)
    return float(np.mean((scores - targets) ** 2))
