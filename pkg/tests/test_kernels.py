import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sketchkrr.errors import DimensionMismatch, InvalidDelta, NonPositiveLambda
from sketchkrr.kernels import (
    Dataset,
    KernelSpec,
    augment,
    gram_matrix,
    kernel_eval,
    statistical_dimension,
    theoretical_sketch_size,
)


def monomial_features(x, q):
    """All d^q ordered products x[i1] * ... * x[iq]."""
    return np.array([math.prod(x[i] for i in idx)
                     for idx in itertools.product(range(len(x)), repeat=q)])


class TestKernelSpec:
    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            KernelSpec.gaussian(0.0)
        with pytest.raises(ValueError):
            KernelSpec.polynomial(degree=0)
        with pytest.raises(ValueError):
            KernelSpec.polynomial(offset=-1.0)

    def test_dict_round_trip(self):
        for spec in (KernelSpec.gaussian(0.7), KernelSpec.polynomial(0.01, 1.0, 3)):
            assert KernelSpec.from_dict(spec.to_dict()) == spec


class TestKernelEval:
    def test_gaussian_self(self):
        x = np.array([0.3, -1.2, 4.0])
        assert kernel_eval(KernelSpec.gaussian(0.5), x, x) == 1.0

    def test_gaussian_value(self):
        k = kernel_eval(KernelSpec.gaussian(2.0), [0.0, 0.0], [3.0, 4.0])
        assert k == pytest.approx(math.exp(-25.0 / 8.0))

    def test_polynomial_orthogonal(self):
        assert kernel_eval(KernelSpec.polynomial(1.0, 0.0, 3), [1, 0, 0], [0, 1, 0]) == 0.0

    def test_polynomial_offset(self):
        # 0.01 * 100 + 1 = 2
        assert kernel_eval(KernelSpec.polynomial(0.01, 1.0, 3), [10.0], [10.0]) == pytest.approx(8.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            kernel_eval(KernelSpec.gaussian(1.0), [1.0, 2.0], [1.0])


class TestGramMatrix:
    def test_gaussian_unit_diagonal(self):
        X = np.random.default_rng(0).standard_normal((20, 4)) * 100
        K = gram_matrix(KernelSpec.gaussian(1.3), X)
        np.testing.assert_array_equal(np.diag(K), np.ones(20))

    def test_single_point(self):
        spec = KernelSpec.polynomial(0.5, 2.0, 2)
        K = gram_matrix(spec, [[1.0, 2.0]])
        np.testing.assert_allclose(K, [[kernel_eval(spec, [1.0, 2.0], [1.0, 2.0])]])

    @pytest.mark.parametrize("q", [1, 2, 3])
    @pytest.mark.parametrize("offset", [0.0, 0.7])
    def test_polynomial_matches_monomial_expansion(self, q, offset):
        rng = np.random.default_rng(q)
        X = rng.standard_normal((7, 4))
        spec = KernelSpec.polynomial(0.6, offset, q)
        V = np.array([monomial_features(x, q) for x in augment(spec, X)])
        K = gram_matrix(spec, X)
        np.testing.assert_allclose(K, V @ V.T, rtol=1e-9, atol=1e-12)

    def test_matches_pairwise_eval(self):
        rng = np.random.default_rng(1)
        X, Z = rng.standard_normal((6, 3)), rng.standard_normal((4, 3))
        for spec in (KernelSpec.gaussian(0.8), KernelSpec.polynomial(0.3, 1.0, 3)):
            expected = [[kernel_eval(spec, x, z) for z in Z] for x in X]
            np.testing.assert_allclose(gram_matrix(spec, X, Z), expected, rtol=1e-12)

    @given(st.integers(1, 30), st.integers(1, 5), st.integers(0, 2**31))
    @settings(max_examples=30, deadline=None)
    def test_symmetric_and_psd(self, n, d, seed):
        X = np.random.default_rng(seed).standard_normal((n, d))
        for spec in (KernelSpec.gaussian(0.5), KernelSpec.polynomial(0.5, 1.0, 2)):
            K = gram_matrix(spec, X)
            np.testing.assert_array_equal(K, K.T)
            assert np.linalg.eigvalsh(K).min() >= -1e-8 * np.linalg.norm(K, 2)


class TestDataset:
    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Dataset(np.array([[np.nan]]), np.array([1.0]))

    def test_rejects_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            Dataset(np.zeros((3, 2)), np.zeros(2))


class TestStatisticalDimension:
    def test_identity(self):
        assert statistical_dimension(np.ones(10), 1.0) == 5.0

    def test_closed_form(self):
        assert statistical_dimension([4.0, 1.0], 1.0) == pytest.approx(1.3)

    def test_limits(self):
        ev = [3.0, 2.0, 1.0, 0.0, 0.0]
        assert statistical_dimension(ev, 1e12) == pytest.approx(0.0, abs=1e-10)
        assert statistical_dimension(ev, 1e-12) == pytest.approx(3.0, rel=1e-10)

    def test_negative_round_off_clamped(self):
        assert statistical_dimension([1.0, -1e-14], 1.0) == 0.5

    @pytest.mark.parametrize("lam", [0.0, -1.0])
    def test_nonpositive_lambda(self, lam):
        with pytest.raises(NonPositiveLambda):
            statistical_dimension([1.0], lam)

    @given(st.lists(st.floats(0.0, 1e3), min_size=1, max_size=20),
           st.floats(1e-3, 1e3), st.floats(1.01, 10.0))
    def test_monotone_in_lambda(self, ev, lam, factor):
        a = statistical_dimension(ev, lam)
        b = statistical_dimension(ev, lam * factor)
        assert 0.0 <= b <= a <= len(ev)


class TestTheoreticalSketchSize:
    def test_degree_one(self):
        assert theoretical_sketch_size(1, 1.0, 1.0) == 20

    def test_degree_two(self):
        assert theoretical_sketch_size(2, 3.0, 0.1) == 3960

    def test_zero_dimension(self):
        assert theoretical_sketch_size(3, 0.0, 0.5) == 0

    def test_rounds_up(self):
        # 4 * 5 * 0.25 / 0.3 = 16.67
        assert theoretical_sketch_size(1, 0.5, 0.3) == 17

    @pytest.mark.parametrize("delta", [0.0, -0.5, 1.5])
    def test_invalid_delta(self, delta):
        with pytest.raises(InvalidDelta):
            theoretical_sketch_size(2, 1.0, delta)
