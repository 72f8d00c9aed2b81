"""Dense complex linear algebra on small matrices.

Conventions used across the package:

* vectorization is row-major, ``vec(M) = M.reshape(-1)``, so that
  ``vec(A X B) = (A kron B^T) vec(X)``;
* a bipartite space ``C^{d_A} (x) C^{d_B}`` is indexed as ``i_A * d_B + i_B``
  (subsystem A is the slow index).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

TOL_HERM = 1e-9
TOL_PSD = 1e-9
TOL_TRACE = 1e-9


class DimensionError(ValueError):
    """Raised when operand shapes do not match what an operation expects."""

    def __init__(self, what: str, expected, actual):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what}: expected {expected}, got {actual}")


class InvalidStateError(ValueError):
    """Raised when a matrix fails the density-matrix checks."""


def as_matrix(M, *, square: bool = False) -> np.ndarray:
    """Return ``M`` as a finite complex 2-D array, validating its shape."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2:
        raise DimensionError("matrix rank", 2, A.ndim)
    if square and A.shape[0] != A.shape[1]:
        raise DimensionError("square matrix shape", (A.shape[0], A.shape[0]), A.shape)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def dagger(M: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(M, -1, -2))


def is_hermitian(M: np.ndarray, tol: float = TOL_HERM) -> bool:
    M = np.asarray(M)
    return M.ndim == 2 and M.shape[0] == M.shape[1] and np.abs(M - dagger(M)).max(initial=0.0) <= tol


def hs_inner(X: np.ndarray, Y: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product ``tr(X^dagger Y)``."""
    return complex(np.vdot(X, Y))


@dataclass(frozen=True)
class Bipartition:
    """Split of a ``d_A * d_B`` dimensional space into subsystems A and B."""

    d_A: int
    d_B: int

    def __post_init__(self):
        if int(self.d_A) < 1 or int(self.d_B) < 1:
            raise ValueError(f"subsystem dimensions must be >= 1, got ({self.d_A}, {self.d_B})")

    @property
    def d(self) -> int:
        return self.d_A * self.d_B

    @classmethod
    def of(cls, d: int, d_A: int) -> "Bipartition":
        """Bipartition of a ``d``-dimensional space with a ``d_A``-dimensional A factor."""
        if d_A < 1 or d % d_A:
            raise DimensionError(f"subsystem A dimension dividing d={d}", "a divisor of d", d_A)
        return cls(d_A, d // d_A)


def partial_trace(M, part: Bipartition, keep: Literal["A", "B"] = "A") -> np.ndarray:
    """Trace out one factor of a bipartite operator.

    Parameters
    ----------
    M : array_like
        Square operator of dimension ``part.d``.
    part : Bipartition
        The factorization of the space.
    keep : {"A", "B"}
        Which subsystem survives; ``keep="A"`` computes ``tr_B(M)``.
    """
    M = as_matrix(M)
    if M.shape != (part.d, part.d):
        raise DimensionError("operator shape for partial trace", (part.d, part.d), M.shape)
    T = M.reshape(part.d_A, part.d_B, part.d_A, part.d_B)
    if keep == "A":
        return np.einsum("ikjk->ij", T)
    if keep == "B":
        return np.einsum("kikj->ij", T)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def kron_all(*ops) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def eigh_hermitian(M, tol: float = TOL_HERM) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, ascending eigenvalues."""
    M = as_matrix(M, square=True)
    if not is_hermitian(M, tol * max(1.0, float(np.abs(M).max(initial=0.0)))):
        raise ValueError("eigh_hermitian requires a Hermitian matrix")
    return np.linalg.eigh((M + dagger(M)) / 2)


def singular_values(M) -> np.ndarray:
    """Singular values in descending order, for square or rectangular ``M``.

    Hermitian input uses the absolute eigenvalues directly. Other input uses
    the square roots of the eigenvalues of the smaller Gram matrix.
    """
    M = as_matrix(M)
    if M.shape[0] == M.shape[1] and is_hermitian(M, 1e-12 * max(1.0, float(np.abs(M).max(initial=0.0)))):
        s = np.abs(np.linalg.eigvalsh((M + dagger(M)) / 2))
    else:
        G = dagger(M) @ M if M.shape[1] <= M.shape[0] else M @ dagger(M)
        s = np.sqrt(np.clip(np.linalg.eigvalsh((G + dagger(G)) / 2), 0.0, None))
    return np.sort(s)[::-1]


def schatten_norm(M, p) -> float:
    """Schatten ``p``-norm for ``p`` in ``{1, 2, inf}`` of a square matrix."""
    M = as_matrix(M, square=True)
    if p == 2:
        return float(np.linalg.norm(M))
    s = singular_values(M)
    if p == 1:
        return float(s.sum())
    if p in (np.inf, "inf"):
        return float(s[0]) if s.size else 0.0
    raise ValueError(f"p must be 1, 2 or inf, got {p!r}")


def vectorize(M) -> np.ndarray:
    """Row-major vectorization of a square matrix."""
    return as_matrix(M, square=True).reshape(-1).copy()


def devectorize(v) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1:
        raise DimensionError("vector rank", 1, v.ndim)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise DimensionError("vector length (a perfect square)", "d**2", v.size)
    return v.reshape(d, d).copy()


def trace_norm_distance(rho, sigma) -> float:
    """``||rho - sigma||_1``."""
    return schatten_norm(np.asarray(rho) - np.asarray(sigma), 1)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated quantum state: Hermitian, PSD and of unit trace.

    The stored matrix is made read-only so instances can be shared freely.
    """

    mat: np.ndarray

    def __post_init__(self):
        M = as_matrix(self.mat, square=True)
        if not is_hermitian(M, TOL_HERM):
            raise InvalidStateError("density matrix is not Hermitian within tolerance")
        tr = np.trace(M)
        if abs(tr - 1) > TOL_TRACE:
            raise InvalidStateError(f"density matrix trace {tr.real:.3e} differs from 1")
        lam_min = np.linalg.eigvalsh((M + dagger(M)) / 2)[0]
        if lam_min < -TOL_PSD:
            raise InvalidStateError(f"density matrix has eigenvalue {lam_min:.3e} < 0")
        M = M.copy()
        M.flags.writeable = False
        object.__setattr__(self, "mat", M)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityMatrix":
        return cls(np.eye(d, dtype=complex) / d)

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def basis_state(cls, d: int, k: int = 0) -> "DensityMatrix":
        e = np.zeros(d, dtype=complex)
        e[k] = 1
        return cls.pure(e)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.mat, self.mat)))

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)

    def __eq__(self, other):
        return isinstance(other, DensityMatrix) and np.array_equal(self.mat, other.mat)

    __hash__ = None


def embed_state(rho, d_new: int) -> np.ndarray:
    """Zero-pad a ``d x d`` operator into the top-left block of ``d_new x d_new``."""
    rho = as_matrix(rho, square=True)
    d = rho.shape[0]
    if d_new < d:
        raise DimensionError("embedding dimension", f">= {d}", d_new)
    out = np.zeros((d_new, d_new), dtype=complex)
    out[:d, :d] = rho
    return out
