"""Kernel definitions, Gram matrices and statistical-dimension helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal

import numpy as np

from .errors import DimensionMismatch, InvalidDelta, NonPositiveLambda

GAUSSIAN = "gaussian"
POLYNOMIAL = "polynomial"


@dataclass(frozen=True)
class KernelSpec:
    """A Gaussian ``exp(-|x-z|^2 / 2 sigma^2)`` or polynomial ``(gamma x.z + c)^q`` kernel.

    Use :meth:`gaussian` or :meth:`polynomial` rather than the raw constructor.
    """

    family: str
    sigma: float = 1.0
    gamma: float = 1.0
    offset: float = 0.0
    degree: int = 1

    def __post_init__(self):
        if self.family not in (GAUSSIAN, POLYNOMIAL):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == GAUSSIAN and not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.family == POLYNOMIAL:
            if int(self.degree) != self.degree or self.degree < 1:
                raise ValueError("degree must be a positive integer")
            if self.offset < 0:
                raise ValueError("offset must be non-negative")
            if self.gamma < 0:
                raise ValueError("gamma must be non-negative")

    @classmethod
    def gaussian(cls, sigma: float) -> "KernelSpec":
        return cls(GAUSSIAN, sigma=float(sigma))

    @classmethod
    def polynomial(cls, gamma: float = 1.0, offset: float = 0.0, degree: int = 2) -> "KernelSpec":
        return cls(POLYNOMIAL, gamma=float(gamma), offset=float(offset), degree=int(degree))

    @property
    def is_gaussian(self) -> bool:
        return self.family == GAUSSIAN

    def to_dict(self) -> dict:
        if self.is_gaussian:
            return {"family": GAUSSIAN, "sigma": self.sigma}
        return {
            "family": POLYNOMIAL,
            "gamma": self.gamma,
            "offset": self.offset,
            "degree": self.degree,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        if d["family"] == GAUSSIAN:
            return cls.gaussian(d["sigma"])
        return cls.polynomial(d["gamma"], d["offset"], d["degree"])


@dataclass
class Dataset:
    """Inputs ``X`` (n x d) and targets ``y``.

    ``y`` holds raw class labels (1-D) for classification, or real targets,
    either 1-D or n x t for several right-hand sides.
    """

    X: np.ndarray
    y: np.ndarray
    label_map: list | None = field(default=None)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        self.y = np.asarray(self.y)
        if self.X.shape[0] < 1:
            raise ValueError("dataset must contain at least one example")
        if self.y.shape[0] != self.X.shape[0]:
            raise DimensionMismatch(f"{self.X.shape[0]} inputs but {self.y.shape[0]} targets")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("inputs contain non-finite values")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def augment(spec: KernelSpec, X) -> np.ndarray:
    """Map inputs to the homogeneous representation of a polynomial kernel.

    ``x -> [sqrt(gamma) x ; sqrt(c)]`` so that ``(gamma x.z + c)^q`` becomes
    ``(x'.z')^q``. The constant column is omitted when ``c == 0``. Gaussian
    kernels get ``X`` back unchanged.
    """
    X = np.asarray(X, dtype=np.float64)
    if spec.is_gaussian:
        return X
    Xa = math.sqrt(spec.gamma) * X
    if spec.offset > 0:
        const = np.full(X.shape[:-1] + (1,), math.sqrt(spec.offset))
        Xa = np.concatenate([Xa, const], axis=-1)
    return Xa


def kernel_eval(spec: KernelSpec, x, z) -> float:
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape:
        raise DimensionMismatch(f"{x.shape} vs {z.shape}")
    if spec.is_gaussian:
        diff = x - z
        return math.exp(-float(diff @ diff) / (2.0 * spec.sigma**2))
    return (spec.gamma * float(x @ z) + spec.offset) ** spec.degree


def gram_matrix(spec: KernelSpec, X, Z=None) -> np.ndarray:
    """Kernel matrix ``K[i, j] = k(X[i], Z[j])``.

    With ``Z`` omitted the result is the symmetric Gram matrix of ``X``,
    assembled from its upper triangle so symmetry is exact.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    symmetric = Z is None
    Z = X if symmetric else np.atleast_2d(np.asarray(Z, dtype=np.float64))
    if X.shape[1] != Z.shape[1]:
        raise DimensionMismatch(f"inputs have {X.shape[1]} and {Z.shape[1]} features")

    if spec.is_gaussian:
        sq = (
            np.einsum("ij,ij->i", X, X)[:, None]
            + np.einsum("ij,ij->i", Z, Z)[None, :]
            - 2.0 * (X @ Z.T)
        )
        np.maximum(sq, 0.0, out=sq)
        if symmetric:
            np.fill_diagonal(sq, 0.0)
        K = np.exp(-sq / (2.0 * spec.sigma**2))
    else:
        Xa, Za = augment(spec, X), augment(spec, Z)
        K = (Xa @ Za.T) ** spec.degree

    if symmetric:
        K = np.triu(K) + np.triu(K, 1).T
    return K


def statistical_dimension(eigenvalues, lam: float) -> float:
    """``sum_i l_i / (l_i + lam)``, i.e. ``Tr((K + lam I)^-1 K)``.

    Takes precomputed eigenvalues of ``K`` so the eigensolve stays visible at
    the call site. Small negative eigenvalues from round-off are clamped to 0.
    """
    if not lam > 0:
        raise NonPositiveLambda(f"lambda must be positive, got {lam}")
    ev = np.clip(np.asarray(eigenvalues, dtype=np.float64), 0.0, None)
    return float(np.sum(ev / (ev + lam)))


def theoretical_sketch_size(q: int, s_lambda: float, delta: float) -> int:
    """Sketch size ``ceil(4 (2 + 3^q) s_lambda^2 / delta)`` for degree-``q`` TensorSketch."""
    if not 0 < delta <= 1:
        raise InvalidDelta(f"delta must lie in (0, 1], got {delta}")
    if s_lambda < 0:
        raise ValueError("s_lambda must be non-negative")
    # Decimal keeps inputs like delta=0.1 from rounding 3960 up to 3961.
    value = 4 * (2 + 3 ** int(q)) * Decimal(repr(float(s_lambda))) ** 2 / Decimal(repr(float(delta)))
    return int(value.to_integral_value(rounding="ROUND_CEILING"))
