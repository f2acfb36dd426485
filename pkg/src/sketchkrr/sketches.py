"""Random feature maps and sketching transforms.

A :class:`SketchChain` composes one feature map (random Fourier features or
TensorSketch) with optional SRHT and Gaussian compression levels. Every stage
acts on the rows of its input, so ``chain.apply(X)`` returns the n x s matrix
``Z`` whose rows are the sketched training points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .kernels import KernelSpec, augment
from .numerics import fwht, next_power_of_two

RFF = "rff"
TENSORSKETCH = "tensorsketch"

# Seed offsets per chain position, so stages draw independent randomness.
_STAGE_SEED_OFFSETS = (0, 1, 2)


def _rows(X, dim: int) -> tuple[np.ndarray, bool]:
    X = np.asarray(X, dtype=np.float64)
    vector = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != dim:
        raise DimensionMismatch(f"expected {dim} features, got {X.shape[1]}")
    return X, vector


def _restore(Z: np.ndarray, vector: bool) -> np.ndarray:
    return Z[0] if vector else Z


@dataclass(frozen=True)
class RffMap:
    """Random Fourier features for the Gaussian kernel.

    ``phi(x)_i = sqrt(2/s) cos(W_i . x + b_i)`` with ``W_i ~ N(0, sigma^-2 I)``
    and ``b_i ~ U[0, 2 pi)``, which makes ``E[phi(x).phi(z)]`` equal the kernel.
    """

    W: np.ndarray
    b: np.ndarray

    @classmethod
    def sample(cls, d: int, s: int, sigma: float, seed: int) -> "RffMap":
        if s < 1:
            raise ValueError("feature count must be positive")
        rng = np.random.default_rng(seed)
        W = rng.standard_normal((s, d)) / sigma
        b = rng.uniform(0.0, 2.0 * math.pi, size=s)
        return cls(W=W, b=b)

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    @property
    def output_dim(self) -> int:
        return self.W.shape[0]

    def apply(self, X) -> np.ndarray:
        X, vector = _rows(X, self.input_dim)
        Z = math.sqrt(2.0 / self.output_dim) * np.cos(X @ self.W.T + self.b)
        return _restore(Z, vector)


def countsketch_apply(h, g, x, s: int) -> np.ndarray:
    """CountSketch: output coordinate ``i`` is ``sum_{j : h[j] = i} g[j] x[j]``.

    ``x`` may be a vector or a matrix whose rows are sketched independently.
    """
    h = np.asarray(h, dtype=np.intp)
    g = np.asarray(g, dtype=np.float64)
    X, vector = _rows(x, h.shape[0])
    out = np.zeros((X.shape[0], s))
    np.add.at(out, (slice(None), h), X * g)
    return _restore(out, vector)


@dataclass(frozen=True)
class TensorSketchMap:
    """TensorSketch of degree ``q``: a CountSketch of the q-fold tensor power.

    ``hashes[j]`` and ``signs[j]`` are the bucket and sign tables of mode ``j``.
    The combined hash of a monomial ``(i_1..i_q)`` is ``sum_j hashes[j][i_j] mod s``
    and its sign is ``prod_j signs[j][i_j]``; the map is evaluated through the
    FFT of the per-mode CountSketches rather than by expanding the monomials.
    """

    hashes: np.ndarray
    signs: np.ndarray
    s: int

    @classmethod
    def sample(cls, d: int, s: int, q: int, seed: int) -> "TensorSketchMap":
        if s < 1 or q < 1:
            raise ValueError("sketch size and degree must be positive")
        rng = np.random.default_rng(seed)
        hashes = rng.integers(0, s, size=(q, d))
        signs = 2.0 * rng.integers(0, 2, size=(q, d)) - 1.0
        return cls(hashes=hashes, signs=signs, s=int(s))

    @property
    def degree(self) -> int:
        return self.hashes.shape[0]

    @property
    def input_dim(self) -> int:
        return self.hashes.shape[1]

    @property
    def output_dim(self) -> int:
        return self.s

    def apply(self, X) -> np.ndarray:
        X, vector = _rows(X, self.input_dim)
        sketches = [
            countsketch_apply(h, g, X, self.s) for h, g in zip(self.hashes, self.signs)
        ]
        if len(sketches) == 1:
            return _restore(sketches[0], vector)
        spectrum = np.fft.fft(sketches[0], axis=1)
        for C in sketches[1:]:
            spectrum *= np.fft.fft(C, axis=1)
        return _restore(np.fft.ifft(spectrum, axis=1).real, vector)


@dataclass(frozen=True)
class SrhtMap:
    """Subsampled randomized Hadamard transform ``(1/sqrt(s)) P H D``.

    Inputs of length ``input_dim`` are zero-padded to ``m``, the next power of
    two. ``rows`` are sampled uniformly with replacement.
    """

    input_dim: int
    signs: np.ndarray
    rows: np.ndarray

    @classmethod
    def sample(cls, input_dim: int, s: int, seed: int) -> "SrhtMap":
        if s < 1:
            raise ValueError("output size must be positive")
        m = next_power_of_two(input_dim)
        rng = np.random.default_rng(seed)
        signs = 2.0 * rng.integers(0, 2, size=m) - 1.0
        rows = rng.integers(0, m, size=s)
        return cls(input_dim=int(input_dim), signs=signs, rows=rows)

    @property
    def m(self) -> int:
        return self.signs.shape[0]

    @property
    def output_dim(self) -> int:
        return self.rows.shape[0]

    def apply(self, X) -> np.ndarray:
        X, vector = _rows(X, self.input_dim)
        padded = np.zeros((X.shape[0], self.m))
        padded[:, : self.input_dim] = X
        mixed = fwht(padded * self.signs)
        return _restore(mixed[:, self.rows] / math.sqrt(self.output_dim), vector)


@dataclass(frozen=True)
class GaussianMap:
    """Dense Gaussian projection; ``matrix`` holds unscaled N(0, 1) draws."""

    matrix: np.ndarray

    @classmethod
    def sample(cls, input_dim: int, s: int, seed: int) -> "GaussianMap":
        if s < 1:
            raise ValueError("output size must be positive")
        rng = np.random.default_rng(seed)
        return cls(matrix=rng.standard_normal((s, input_dim)))

    @property
    def input_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def output_dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, X) -> np.ndarray:
        X, vector = _rows(X, self.input_dim)
        return _restore(X @ self.matrix.T / math.sqrt(self.output_dim), vector)


def rff_apply(rff: RffMap, x) -> np.ndarray:
    return rff.apply(x)


def tensorsketch_apply(ts: TensorSketchMap, x) -> np.ndarray:
    return ts.apply(x)


def srht_apply(srht: SrhtMap, x) -> np.ndarray:
    return srht.apply(x)


def gaussian_apply(gm: GaussianMap, x) -> np.ndarray:
    return gm.apply(x)


@dataclass(frozen=True)
class SketchChain:
    """Feature map followed by zero or more compression stages.

    If ``kernel`` is a polynomial kernel, raw inputs are first mapped through
    :func:`sketchkrr.kernels.augment` so the TensorSketch sees the same
    homogeneous representation the Gram matrix uses.
    """

    stages: tuple
    kernel: KernelSpec | None = None

    def __post_init__(self):
        stages = tuple(self.stages)
        object.__setattr__(self, "stages", stages)
        if not stages:
            raise ValueError("a chain needs at least one stage")
        if not isinstance(stages[0], (RffMap, TensorSketchMap)):
            raise ValueError("the first stage must be a random feature map")
        for prev, stage in zip(stages, stages[1:]):
            if not isinstance(stage, (SrhtMap, GaussianMap)):
                raise ValueError("only SRHT and Gaussian stages may follow the feature map")
            if stage.input_dim != prev.output_dim:
                raise DimensionMismatch(
                    f"stage expects {stage.input_dim} inputs, previous produces {prev.output_dim}"
                )
            if stage.output_dim > prev.output_dim:
                raise ValueError("sketch sizes must be non-increasing along the chain")

    @property
    def output_dim(self) -> int:
        return self.stages[-1].output_dim

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(st.output_dim for st in self.stages)

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 2 and X.shape[0] == 0:
            return np.zeros((0, self.output_dim))
        if self.kernel is not None:
            X = augment(self.kernel, X)
        for stage in self.stages:
            X = stage.apply(X)
        return X


def chain_apply(chain: SketchChain, X) -> np.ndarray:
    return chain.apply(X)


@dataclass(frozen=True)
class ChainSpec:
    """Sizes and feature-map kind of a chain, before any randomness is drawn.

    ``s2 == 0`` skips the SRHT level and ``s3 == 0`` the Gaussian level.
    ``sketch`` defaults to RFF for Gaussian kernels and TensorSketch for
    polynomial ones.
    """

    s1: int
    s2: int = 0
    s3: int = 0
    sketch: str | None = field(default=None)

    def __post_init__(self):
        if self.s1 < 1 or self.s2 < 0 or self.s3 < 0:
            raise ValueError("sketch sizes must be positive (or 0 to skip a level)")
        sizes = [s for s in (self.s1, self.s2, self.s3) if s]
        if sizes != sorted(sizes, reverse=True):
            raise ValueError(f"sketch sizes must satisfy s1 >= s2 >= s3, got {sizes}")
        if self.sketch not in (None, RFF, TENSORSKETCH):
            raise ValueError(f"unknown sketch {self.sketch!r}")

    @property
    def output_dim(self) -> int:
        return self.s3 or self.s2 or self.s1

    def scaled_to(self, s: int) -> "ChainSpec":
        """Same level ratios with the final output size set to ``s``."""
        factor = s / self.output_dim
        levels = [self.s1, self.s2, self.s3]
        scaled = [max(s, round(v * factor)) if v else 0 for v in levels]
        last = max(i for i, v in enumerate(levels) if v)
        scaled[last] = s
        return ChainSpec(*scaled, sketch=self.sketch)

    def realize(self, kernel: KernelSpec, d: int, seed: int) -> SketchChain:
        """Draw all random tables of the chain for ``d``-dimensional inputs."""
        sketch = self.sketch or (RFF if kernel.is_gaussian else TENSORSKETCH)
        off = _STAGE_SEED_OFFSETS
        if sketch == RFF:
            if not kernel.is_gaussian:
                raise ValueError("random Fourier features serve the Gaussian kernel only")
            stages = [RffMap.sample(d, self.s1, kernel.sigma, seed + off[0])]
        else:
            if kernel.is_gaussian:
                raise ValueError("TensorSketch serves the polynomial kernel only")
            d_aug = d + (1 if kernel.offset > 0 else 0)
            stages = [TensorSketchMap.sample(d_aug, self.s1, kernel.degree, seed + off[0])]
        if self.s2:
            stages.append(SrhtMap.sample(stages[-1].output_dim, self.s2, seed + off[1]))
        if self.s3:
            stages.append(GaussianMap.sample(stages[-1].output_dim, self.s3, seed + off[2]))
        return SketchChain(tuple(stages), kernel=None if kernel.is_gaussian else kernel)
