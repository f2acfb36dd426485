import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sketchkrr.errors import (
    LengthNotPowerOfTwo,
    NoConvergenceWarning,
    NotPositiveDefinite,
    SingularTriangular,
)
from sketchkrr.numerics import (
    circular_convolve,
    cholesky,
    fft_real,
    fwht,
    ifft_real,
    next_power_of_two,
    power_iteration_spectral_norm,
    symmetric_eigen,
    triangular_solve,
)


def naive_hadamard(m):
    """Sylvester recursion H_2m = [[H, H], [H, -H]], built explicitly."""
    H = np.array([[1.0]])
    while H.shape[0] < m:
        H = np.block([[H, H], [H, -H]])
    return H


def naive_dft(x):
    n = len(x)
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ x


def naive_circular_convolution(a, b):
    n = len(a)
    return np.array([sum(a[j] * b[(i - j) % n] for j in range(n)) for i in range(n)])


class TestCholesky:
    def test_identity(self):
        np.testing.assert_array_equal(cholesky(np.eye(3)), np.eye(3))

    def test_hand_checked_2x2(self):
        L = cholesky([[4.0, 2.0], [2.0, 5.0]])
        np.testing.assert_allclose(L, [[2.0, 0.0], [1.0, 2.0]], atol=1e-15)

    def test_reconstruction_random(self):
        rng = np.random.default_rng(0)
        M = rng.standard_normal((50, 50))
        A = M.T @ M + np.eye(50)
        L = cholesky(A)
        assert np.allclose(L, np.tril(L))
        err = np.linalg.norm(L @ L.T - A) / np.linalg.norm(A)
        assert err <= 1e-10

    def test_indefinite_raises(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky([[1.0, 2.0], [2.0, 1.0]])


class TestTriangularSolve:
    def test_identity(self):
        B = np.arange(6.0).reshape(3, 2)
        np.testing.assert_array_equal(triangular_solve(np.eye(3), B), B)

    def test_forward_substitution(self):
        x = triangular_solve([[2.0, 0.0], [1.0, 2.0]], [2.0, 3.0])
        np.testing.assert_allclose(x, [1.0, 1.0])

    def test_transpose(self):
        L = np.array([[2.0, 0.0], [1.0, 2.0]])
        x = triangular_solve(L, [3.0, 2.0], transpose=True)
        np.testing.assert_allclose(L.T @ x, [3.0, 2.0])

    def test_against_dense_inverse(self):
        rng = np.random.default_rng(1)
        L = np.tril(rng.standard_normal((40, 40))) + 5 * np.eye(40)
        B = rng.standard_normal((40, 3))
        X = triangular_solve(L, B)
        np.testing.assert_allclose(X, np.linalg.inv(L) @ B, rtol=1e-10, atol=1e-12)
        assert np.linalg.norm(L @ X - B) <= 1e-10 * np.linalg.norm(B)

    def test_singular(self):
        with pytest.raises(SingularTriangular):
            triangular_solve([[1.0, 0.0], [1.0, 0.0]], [1.0, 1.0])


class TestFwht:
    def test_h2(self):
        np.testing.assert_array_equal(fwht([3.0, 5.0]), [8.0, -2.0])

    def test_first_column_of_h4(self):
        np.testing.assert_array_equal(fwht([1.0, 0.0, 0.0, 0.0]), [1.0, 1.0, 1.0, 1.0])

    def test_matches_naive_h8(self):
        rng = np.random.default_rng(2)
        x = rng.integers(-9, 10, size=8).astype(float)
        np.testing.assert_array_equal(fwht(x), naive_hadamard(8) @ x)

    @pytest.mark.parametrize("m", [1, 2, 16, 256])
    def test_matches_naive_random(self, m):
        x = np.random.default_rng(m).standard_normal(m)
        np.testing.assert_allclose(fwht(x), naive_hadamard(m) @ x, atol=1e-12)

    def test_rows_transformed_independently(self):
        X = np.random.default_rng(3).standard_normal((5, 32))
        np.testing.assert_allclose(fwht(X), X @ naive_hadamard(32).T, atol=1e-12)

    def test_input_not_modified(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        fwht(x)
        np.testing.assert_array_equal(x, [1.0, 2.0, 3.0, 4.0])

    @pytest.mark.parametrize("m", [0, 3, 6, 12])
    def test_bad_length(self, m):
        with pytest.raises(LengthNotPowerOfTwo):
            fwht(np.ones(m))

    @given(st.integers(0, 9), st.integers(0, 2**31))
    @settings(max_examples=40, deadline=None)
    def test_involution(self, k, seed):
        m = 2**k
        x = np.random.default_rng(seed).standard_normal(m)
        np.testing.assert_allclose(fwht(fwht(x)) / m, x, atol=1e-12)

    def test_next_power_of_two(self):
        assert [next_power_of_two(n) for n in (1, 2, 3, 4, 5, 1000, 1024)] == [
            1, 2, 4, 4, 8, 1024, 1024]


class TestFft:
    def test_impulse_has_flat_spectrum(self):
        np.testing.assert_allclose(fft_real([1.0, 0.0, 0.0, 0.0]), [1, 1, 1, 1])

    def test_small_convolution(self):
        np.testing.assert_allclose(circular_convolve([1.0, 2.0], [3.0, 4.0]), [11.0, 10.0])

    def test_matches_naive_dft(self):
        x = np.random.default_rng(4).standard_normal(16)
        np.testing.assert_allclose(fft_real(x), naive_dft(x), atol=1e-12)

    def test_round_trip(self):
        x = np.random.default_rng(5).standard_normal(37)
        np.testing.assert_allclose(ifft_real(fft_real(x)), x, atol=1e-12)

    def test_convolution_theorem_100_pairs(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            n = int(rng.integers(1, 24))
            a, b = rng.standard_normal(n), rng.standard_normal(n)
            np.testing.assert_allclose(
                circular_convolve(a, b), naive_circular_convolution(a, b), atol=1e-12
            )


class TestSymmetricEigen:
    def test_diagonal(self):
        res = symmetric_eigen(np.diag([1.0, 3.0]))
        np.testing.assert_allclose(res.eigenvalues, [3.0, 1.0])
        np.testing.assert_allclose(np.abs(res.eigenvectors), [[0.0, 1.0], [1.0, 0.0]])

    def test_swap(self):
        res = symmetric_eigen([[0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_allclose(res.eigenvalues, [1.0, -1.0], atol=1e-15)

    def test_reconstruction_and_trace(self):
        rng = np.random.default_rng(7)
        M = rng.standard_normal((30, 30))
        A = (M + M.T) / 2
        res = symmetric_eigen(A)
        V, w = res.eigenvectors, res.eigenvalues
        assert np.all(np.diff(w) <= 0)
        np.testing.assert_allclose(V @ np.diag(w) @ V.T, A, atol=1e-9)
        np.testing.assert_allclose(V.T @ V, np.eye(30), atol=1e-10)
        assert np.max(np.abs(A @ V - V * w)) <= 1e-8 * np.linalg.norm(A, 2)
        assert abs(w.sum() - np.trace(A)) <= 1e-9 * np.abs(w).sum()


class TestPowerIteration:
    def test_scaled_identity(self):
        assert power_iteration_spectral_norm(lambda x: 2.0 * x, 10) == pytest.approx(2.0)

    def test_diagonal(self):
        D = np.array([5.0, 1.0, 0.1])
        est = power_iteration_spectral_norm(lambda x: D * x, 3, tol=1e-4)
        assert est == pytest.approx(5.0, rel=1e-4)

    def test_random_psd_against_eigensolver(self):
        rng = np.random.default_rng(8)
        M = rng.standard_normal((64, 64))
        A = M @ M.T
        top = symmetric_eigen(A).eigenvalues[0]
        est = power_iteration_spectral_norm(lambda x: A @ x, 64, tol=1e-10, max_iter=5000)
        assert est == pytest.approx(top, rel=1e-6)
        assert est <= top * (1 + 1e-12)

    def test_deterministic_given_seed(self):
        A = np.diag(np.linspace(1.0, 2.0, 20))
        a = power_iteration_spectral_norm(lambda x: A @ x, 20, seed=3)
        b = power_iteration_spectral_norm(lambda x: A @ x, 20, seed=3)
        assert a == b

    def test_zero_operator(self):
        assert power_iteration_spectral_norm(lambda x: 0 * x, 5) == 0.0

    def test_cap_warns_and_returns_estimate(self):
        A = np.diag([1.0, 0.999999])
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            est = power_iteration_spectral_norm(lambda x: A @ x, 2, tol=0.0, max_iter=3)
        assert any(issubclass(w.category, NoConvergenceWarning) for w in caught)
        assert 0.99 < est <= 1.0
