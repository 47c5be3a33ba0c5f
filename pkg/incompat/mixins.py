
import numpy as np
import scipy.linalg


class MatrixMixin:
    """
    Read-only helpers shared by the validated matrix types.

    Subclasses expose a square complex `matrix` field and the qubit count `n`.
    """

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def dagger(self) -> np.ndarray:
        return self.matrix.conj().T

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def spectral_norm(self) -> float:
        return float(np.max(np.abs(scipy.linalg.eigvalsh(0.5 * (self.matrix + self.dagger)))))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.dagger)))

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.matrix
        return self.matrix.astype(dtype)
