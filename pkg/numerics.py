"""Deterministic dense linear algebra and seeded random numbers."""
from typing import List, Tuple

import numpy as np

from errors import ContractViolation, NumericError

# Row-major float64 array; every module passes matrices around as this.
Matrix = np.ndarray

SYMMETRY_TOLERANCE = 1e-9


def as_matrix(values, what: str = 'matrix') -> Matrix:
    """Coerce values to a 2-D C-contiguous float64 array.

    Args:
        values: Array-like data
        what: Name used in error messages

    Returns:
        The data as a float64 matrix
    """
    matrix = np.ascontiguousarray(values, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix.reshape(1, -1)
    if matrix.ndim != 2:
        raise ContractViolation(f"{what} must be 2-D, got shape {matrix.shape}")
    return matrix


def ensure_finite(matrix: np.ndarray, what: str) -> np.ndarray:
    """Raise NumericError if any entry is NaN or infinite."""
    if not np.all(np.isfinite(matrix)):
        raise NumericError(f"non-finite values in {what}")
    return matrix


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Matrix product with a shape check.

    The product is delegated to numpy, which gives bitwise-identical results
    for identical inputs under a fixed BLAS thread count.

    Args:
        a: Left operand (r x k)
        b: Right operand (k x c)

    Returns:
        The r x c product
    """
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ContractViolation(f"matmul dimension mismatch: {a.shape} x {b.shape}")
    return ensure_finite(a @ b, 'matmul result')


def sym_eig(s: Matrix) -> Tuple[np.ndarray, Matrix]:
    """Eigendecomposition of a symmetric matrix.

    Eigenvalues come back in descending order. Each eigenvector column is
    signed so that its largest-magnitude component is positive.

    Args:
        s: Square symmetric matrix

    Returns:
        Tuple of (eigenvalues, eigenvectors as columns)
    """
    s = as_matrix(s, 'sym_eig input')
    if s.shape[0] != s.shape[1]:
        raise ContractViolation(f"sym_eig needs a square matrix, got {s.shape}")
    asymmetry = np.max(np.abs(s - s.T)) if s.size else 0.0
    if asymmetry > SYMMETRY_TOLERANCE:
        raise ContractViolation(f"sym_eig input is not symmetric (max |s - s^T| = {asymmetry:.3g})")

    # eigh reads the lower triangle only; symmetrize so both halves count.
    values, vectors = np.linalg.eigh(0.5 * (s + s.T))
    order = np.argsort(-values, kind='stable')
    values = values[order]
    vectors = vectors[:, order]

    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    vectors = vectors * signs
    return values, np.ascontiguousarray(vectors)


def derive_seed(base_seed: int, index: int) -> int:
    """Derive an independent 64-bit seed for fold or repeat `index`."""
    sequence = np.random.SeedSequence([int(base_seed) & 0xFFFFFFFFFFFFFFFF, int(index)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


class SeededRng:
    """Reproducible random stream backed by PCG64.

    PCG64 output is specified bit-for-bit, so a seed yields the same stream
    on every platform.
    """

    def __init__(self, seed: int):
        """Initialize the stream.

        Args:
            seed: 64-bit integer seed
        """
        self.seed = int(seed)
        self._generator = np.random.Generator(np.random.PCG64(self.seed))

    @property
    def generator(self) -> np.random.Generator:
        """Underlying numpy generator."""
        return self._generator

    def uniform(self, lo: float, hi: float, size) -> np.ndarray:
        """Draw uniform values on [lo, hi)."""
        if not lo < hi:
            raise ContractViolation(f"uniform range needs lo < hi, got [{lo}, {hi})")
        values = self._generator.uniform(lo, hi, size)
        # lo + (hi - lo) * u can round up to hi for very narrow ranges
        return np.where(values >= hi, np.nextafter(hi, lo), values)

    def permutation(self, n: int) -> np.ndarray:
        """Random permutation of range(n)."""
        return self._generator.permutation(n)

    def normal(self, loc: float, scale: float, size) -> np.ndarray:
        """Draw Gaussian values."""
        return self._generator.normal(loc, scale, size)

    def spawn(self, index: int) -> 'SeededRng':
        """Independent child stream for fold or repeat `index`."""
        return SeededRng(derive_seed(self.seed, index))


def rng_uniform(rng: SeededRng, lo: float, hi: float, count: int) -> List[float]:
    """Draw `count` uniform values on [lo, hi) from `rng`."""
    return rng.uniform(lo, hi, count).tolist()
