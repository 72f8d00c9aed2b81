"""Orthonormal bases of traceless Hermitian matrices."""

from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _freeze(mats) -> tuple:
    out = []
    for M in mats:
        M = np.array(M, dtype=complex)
        M.flags.writeable = False
        out.append(M)
    return tuple(out)


@lru_cache(maxsize=None)
def gell_mann_basis(d: int) -> tuple:
    """The ``d^2 - 1`` generalized Gell-Mann matrices, scaled to unit HS norm.

    Order: symmetric off-diagonal pairs, antisymmetric pairs, then diagonal
    ones. For ``d = 2`` this is ``(X, Y, Z) / sqrt(2)``.
    """
    if d < 2:
        raise ValueError("a traceless basis needs d >= 2")
    sym, anti, diag = [], [], []
    for j in range(d):
        for k in range(j + 1, d):
            S = np.zeros((d, d), dtype=complex)
            S[j, k] = S[k, j] = 1 / np.sqrt(2)
            sym.append(S)
            A = np.zeros((d, d), dtype=complex)
            A[j, k], A[k, j] = -1j / np.sqrt(2), 1j / np.sqrt(2)
            anti.append(A)
    for l in range(1, d):
        D = np.zeros((d, d), dtype=complex)
        D[np.arange(l), np.arange(l)] = 1
        D[l, l] = -l
        diag.append(D / np.sqrt(l * (l + 1)))
    return _freeze(sym + anti + diag)


@lru_cache(maxsize=None)
def pauli_basis(d: int) -> tuple:
    """Non-identity Pauli strings over ``log2(d)`` qubits, scaled to unit HS norm."""
    n = d.bit_length() - 1
    if d < 2 or d != 2**n:
        raise ValueError(f"Pauli basis needs a power-of-two dimension, got {d}")
    mats = []
    for word in product("IXYZ", repeat=n):
        if set(word) == {"I"}:
            continue
        M = np.ones((1, 1), dtype=complex)
        for ch in word:
            M = np.kron(M, PAULI[ch])
        mats.append(M / np.sqrt(d))
    return _freeze(mats)


def default_basis(d: int) -> tuple:
    """Pauli strings for power-of-two ``d``, Gell-Mann matrices otherwise."""
    return pauli_basis(d) if d >= 2 and d & (d - 1) == 0 else gell_mann_basis(d)


def basis_matrix(mats) -> np.ndarray:
    """Columns ``vec(V_i)`` (row-major vectorization)."""
    return np.stack([np.asarray(M).reshape(-1) for M in mats], axis=1)


def check_traceless_orthonormal(mats, tol: float = 1e-10) -> None:
    mats = [np.asarray(M, dtype=complex) for M in mats]
    if not mats:
        raise ValueError("empty basis")
    d = mats[0].shape[0]
    for M in mats:
        if M.shape != (d, d):
            raise ValueError("basis elements must be square and of equal size")
        if np.abs(M - M.conj().T).max() > tol:
            raise ValueError("basis elements must be Hermitian")
        if abs(np.trace(M)) > tol:
            raise ValueError("basis elements must be traceless")
    V = basis_matrix(mats)
    G = V.conj().T @ V
    if np.abs(G - np.eye(len(mats))).max() > tol:
        raise ValueError("basis is not orthonormal in the Hilbert-Schmidt inner product")
