import numpy as np
import numpy.testing as npt
import pytest

from errors import ContractViolation
from numerics import SeededRng, derive_seed, matmul, rng_uniform, sym_eig


def triple_loop(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            total = 0.0
            for k in range(a.shape[1]):
                total += a[i, k] * b[k, j]
            out[i, j] = total
    return out


class TestMatmul:
    def test_identity(self):
        a = np.arange(12, dtype=float).reshape(3, 4)
        npt.assert_array_equal(matmul(np.eye(3), a), a)

    def test_hand_arithmetic(self):
        npt.assert_array_equal(matmul(np.array([[1., 2.], [3., 4.]]), np.array([[0.], [1.]])),
                               np.array([[2.], [4.]]))

    def test_matches_triple_loop(self):
        rng = SeededRng(3)
        a, b = rng.uniform(-1, 1, (5, 7)), rng.uniform(-1, 1, (7, 3))
        npt.assert_allclose(matmul(a, b), triple_loop(a, b), rtol=0, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ContractViolation):
            matmul(np.ones((2, 3)), np.ones((2, 3)))

    def test_associative(self):
        rng = SeededRng(11)
        for _ in range(10):
            a, b, c = (rng.uniform(-1, 1, shape) for shape in ((4, 6), (6, 5), (5, 3)))
            left, right = matmul(matmul(a, b), c), matmul(a, matmul(b, c))
            assert np.linalg.norm(left - right) <= 1e-9 * np.linalg.norm(left)

    def test_pure(self):
        rng = SeededRng(5)
        a, b = rng.uniform(-1, 1, (8, 8)), rng.uniform(-1, 1, (8, 8))
        assert matmul(a, b).tobytes() == matmul(a.copy(), b.copy()).tobytes()


class TestSymEig:
    def test_diagonal(self):
        values, vectors = sym_eig(np.diag([3., 1., 2.]))
        npt.assert_allclose(values, [3., 2., 1.])
        npt.assert_allclose(vectors, np.array([[1., 0., 0.], [0., 0., 1.], [0., 1., 0.]]), atol=1e-12)

    def test_classic_two_by_two(self):
        values, _ = sym_eig(np.array([[2., 1.], [1., 2.]]))
        npt.assert_allclose(values, [3., 1.])

    def test_reconstruction_and_orthonormality(self):
        a = SeededRng(7).uniform(-1, 1, (10, 10))
        s = a + a.T
        values, vectors = sym_eig(s)
        npt.assert_allclose(vectors @ np.diag(values) @ vectors.T, s, atol=1e-8)
        npt.assert_allclose(vectors.T @ vectors, np.eye(10), atol=1e-8)
        npt.assert_allclose(s @ vectors, vectors * values, atol=1e-8 * np.linalg.norm(s))
        assert np.all(np.diff(values) <= 0)

    def test_trace_equals_eigenvalue_sum(self):
        a = SeededRng(8).uniform(-1, 1, (6, 6))
        s = a @ a.T
        values, _ = sym_eig(s)
        assert abs(values.sum() - np.trace(s)) <= 1e-8 * abs(np.trace(s))

    def test_sign_convention(self):
        a = SeededRng(9).uniform(-1, 1, (5, 5))
        _, vectors = sym_eig(a + a.T)
        pivots = np.argmax(np.abs(vectors), axis=0)
        assert np.all(vectors[pivots, np.arange(5)] > 0)

    def test_rejects_non_symmetric(self):
        with pytest.raises(ContractViolation):
            sym_eig(np.array([[1., 2.], [0., 1.]]))


class TestRng:
    def test_same_seed_same_stream(self):
        assert rng_uniform(SeededRng(42), 0, 1, 20) == rng_uniform(SeededRng(42), 0, 1, 20)

    def test_law_of_large_numbers(self):
        draws = np.array(rng_uniform(SeededRng(1), 0.0, 1.0, 100_000))
        assert abs(draws.mean() - 0.5) < 0.01
        assert draws.min() >= 0.0 and draws.max() < 1.0

    def test_narrow_range(self):
        hi = 1.0
        lo = hi - 1e-15
        draws = rng_uniform(SeededRng(2), lo, hi, 1000)
        assert all(lo <= v < hi for v in draws)

    def test_rejects_empty_range(self):
        with pytest.raises(ContractViolation):
            rng_uniform(SeededRng(0), 1.0, 1.0, 3)

    def test_derived_seeds(self):
        assert derive_seed(7, 0) == derive_seed(7, 0)
        assert derive_seed(7, 0) != derive_seed(7, 1)
        assert SeededRng(7).spawn(3).seed == derive_seed(7, 3)
