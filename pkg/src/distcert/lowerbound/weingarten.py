"""Haar moments via Weingarten calculus.

Permutations of ``{0, ..., k-1}`` are tuples ``p`` with ``p[i]`` the image
of ``i``. The Weingarten function is obtained as the (pseudo-)inverse of
the Gram matrix ``G[s, t] = d ** cycles(s^-1 t)`` of permutation operators,
which is exact for every ``d`` and needs no character tables.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import permutations

import numpy as np

from ..linalg import Bipartition, as_matrix, dagger, is_hermitian
from ..randomness import haar_unitaries


def n_cycles(p: tuple) -> int:
    seen = [False] * len(p)
    count = 0
    for i in range(len(p)):
        if not seen[i]:
            count += 1
            j = i
            while not seen[j]:
                seen[j] = True
                j = p[j]
    return count


def cycle_lengths(p: tuple) -> list[int]:
    seen = [False] * len(p)
    out = []
    for i in range(len(p)):
        if not seen[i]:
            n, j = 0, i
            while not seen[j]:
                seen[j] = True
                j = p[j]
                n += 1
            out.append(n)
    return out


def compose(p: tuple, q: tuple) -> tuple:
    """``(p o q)(i) = p[q[i]]``."""
    return tuple(p[i] for i in q)


def inverse(p: tuple) -> tuple:
    out = [0] * len(p)
    for i, j in enumerate(p):
        out[j] = i
    return tuple(out)


@lru_cache(maxsize=None)
def _perms(k: int) -> tuple:
    return tuple(permutations(range(k)))


@lru_cache(maxsize=None)
def _wg_matrix(k: int, d: int) -> np.ndarray:
    P = _perms(k)
    G = np.array([[float(d) ** n_cycles(compose(inverse(s), t)) for t in P] for s in P])
    W = np.linalg.pinv(G, rcond=1e-13, hermitian=True) if d < k else np.linalg.inv(G)
    W.flags.writeable = False
    return W


def weingarten(p: tuple, d: int) -> float:
    """Unitary Weingarten function ``Wg(p, d)``; requires ``d >= len(p)``."""
    k = len(p)
    if d < k:
        raise ValueError(f"Wg(., d) for k={k} is only defined for d >= k; got d={d}")
    P = _perms(k)
    return float(_wg_matrix(k, d)[0, P.index(tuple(p))])


def permutation_operator(p: tuple, d: int) -> np.ndarray:
    """Operator on ``(C^d)^{(x) k}`` sending tensor factor ``i`` to slot ``p[i]``."""
    k = len(p)
    D = d**k
    T = np.eye(D).reshape((d,) * k + (D,))
    # output slot p[i] carries input slot i
    T = np.transpose(T, [inverse(p)[j] for j in range(k)] + [k])
    return T.reshape(D, D)


def haar_twirl(X, d: int, k: int) -> np.ndarray:
    """``E_U[U^{(x)k} X U^{dagger (x)k}]`` as the projection onto permutation operators."""
    X = as_matrix(X, square=True)
    if X.shape[0] != d**k:
        raise ValueError(f"operator must act on (C^{d})^{k}")
    P = _perms(k)
    ops = [permutation_operator(p, d) for p in P]
    G = np.array([[np.vdot(a, b) for b in ops] for a in ops]).real
    W = np.linalg.pinv(G, rcond=1e-13, hermitian=True)
    coeffs = W @ np.array([np.vdot(a, X) for a in ops])
    return sum(c * a for c, a in zip(coeffs, ops))


def weingarten_second_order(A1, A2, B1, B2, d: int) -> complex:
    """Closed form of ``E tr(U^{(x)2}(A1 (x) A2) U^{dagger (x)2}(B1 (x) B2))``.

    Uses ``Wg(id) = 1/(d^2-1)`` and ``Wg(swap) = -1/(d(d^2-1))``; needs ``d >= 2``.
    """
    if d < 2:
        raise ValueError("the second-order formula needs d >= 2")
    A1, A2, B1, B2 = (as_matrix(M, square=True) for M in (A1, A2, B1, B2))
    tA12, tB12 = np.trace(A1 @ A2), np.trace(B1 @ B2)
    tA, tB = np.trace(A1) * np.trace(A2), np.trace(B1) * np.trace(B2)
    return complex(
        (tA12 * tB12 + tA * tB) / (d**2 - 1) - (tA12 * tB + tA * tB12) / (d * (d**2 - 1))
    )


def _check_traceless_hermitian(delta: np.ndarray):
    if not is_hermitian(delta, 1e-9):
        raise ValueError("Delta must be Hermitian")
    if abs(np.trace(delta)) > 1e-9:
        raise ValueError("Delta must be traceless")


def compression_moment_exact(delta, part: Bipartition) -> float:
    """``E_U ||Phi_U(Delta)||_2^2 = tr(Delta^2)(d_A^2 d_B - d_B)/(d^2 - 1)``."""
    delta = as_matrix(delta, square=True)
    if delta.shape[0] != part.d:
        raise ValueError("Delta dimension does not match the bipartition")
    _check_traceless_hermitian(delta)
    d = part.d
    if d == 1:
        return 0.0
    t2 = float(np.real(np.vdot(delta, delta)))
    return t2 * (part.d_A**2 * part.d_B - part.d_B) / (d**2 - 1)


def compression_moment_exact_weingarten(delta, part: Bipartition, k: int = 2) -> float:
    """``E_U ||Phi_U(Delta)||_2^{2k/2}`` for ``k`` in ``{2, 4}`` via the full Weingarten sum.

    ``k=2`` gives the second moment, ``k=4`` gives ``E ||Phi_U(Delta)||_2^4``.
    The observable is ``gamma_A (x) 1_B`` with ``gamma`` the product of
    transpositions ``(01)(23)...``.
    """
    if k not in (2, 4):
        raise ValueError("k must be 2 or 4")
    delta = as_matrix(delta, square=True)
    _check_traceless_hermitian(delta)
    d = part.d
    lam = np.linalg.eigvalsh((delta + dagger(delta)) / 2)
    power_traces = {r: float(np.sum(lam**r)) for r in range(1, k + 1)}
    gamma = tuple(i ^ 1 for i in range(k))
    P = _perms(k)
    W = _wg_matrix(k, d)
    a = np.array([np.prod([power_traces[c] for c in cycle_lengths(s)]) for s in P])
    b = np.array(
        [float(part.d_A) ** n_cycles(compose(gamma, t)) * float(part.d_B) ** n_cycles(t) for t in P]
    )
    return float(a @ W @ b)


def compress_batch(Us: np.ndarray, X: np.ndarray, part: Bipartition) -> np.ndarray:
    """``tr_B(U X U^dagger)`` for a stack of unitaries."""
    Y = Us @ X @ dagger(Us)
    Y = Y.reshape(-1, part.d_A, part.d_B, part.d_A, part.d_B)
    return np.einsum("nikjk->nij", Y)


def compressed_hs_sq(delta, part: Bipartition, trials: int, src, chunk: int = 10_000) -> np.ndarray:
    """Samples of ``||Phi_U(Delta)||_2^2`` for ``trials`` Haar draws."""
    delta = as_matrix(delta, square=True)
    out = []
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        Us = haar_unitaries(part.d, n, src)
        Y = compress_batch(Us, delta, part)
        out.append(np.einsum("nij,nij->n", Y, Y.conj()).real)
        done += n
    return np.concatenate(out) if out else np.zeros(0)


def paley_zygmund_bound(delta, part: Bipartition) -> float:
    """Exact Paley-Zygmund lower bound on ``Pr[X >= (d_A/4d) tr(Delta^2)]``, ``X = ||Phi_U(Delta)||_2^2``."""
    m2 = compression_moment_exact(delta, part)
    m4 = compression_moment_exact_weingarten(delta, part, k=4)
    t2 = float(np.real(np.vdot(delta, delta)))
    theta = part.d_A / (4 * part.d) * t2 / m2
    return (1 - theta) ** 2 * m2**2 / m4


def fourth_moment_probe(delta, part: Bipartition, trials: int, src) -> dict:
    """Monte-Carlo fourth moment of ``||Phi_U(Delta)||_2`` and derived ratios.

    Returns the empirical mean of ``||Phi_U(Delta)||_2^4``, its ratio to
    ``(d_A/d)^2 ||Delta||_2^4``, the same ratio from the exact Weingarten
    sum, and the empirical frequency of ``||Phi_U(Delta)||_2 >= sqrt(d_A/d)||Delta||_2 / 2``.
    """
    delta = as_matrix(delta, square=True)
    _check_traceless_hermitian(delta)
    x = compressed_hs_sq(delta, part, trials, src)
    t2 = float(np.real(np.vdot(delta, delta)))
    scale = (part.d_A / part.d) ** 2 * t2**2
    m4 = float(np.mean(x**2))
    exact4 = compression_moment_exact_weingarten(delta, part, k=4)
    return {
        "trials": trials,
        "mean_fourth": m4,
        "sem_fourth": float(np.std(x**2, ddof=1) / np.sqrt(trials)) if trials > 1 else float("nan"),
        "ratio": m4 / scale,
        "exact_fourth": exact4,
        "exact_ratio": exact4 / scale,
        "event_frequency": float(np.mean(x >= part.d_A / (4 * part.d) * t2)),
    }
