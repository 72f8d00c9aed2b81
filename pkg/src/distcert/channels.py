"""Quantum channels in Kraus, Liouville and Choi form.

With row-major vectorization (see :mod:`distcert.linalg`):

* the Liouville matrix is ``M = sum_k A_k kron conj(A_k)`` and satisfies
  ``vec(Phi(X)) = M @ vec(X)``;
* the Choi matrix is ``J = sum_ij |i><j| kron Phi(|i><j|)`` with the input
  register first, so ``tr_out(J) = 1_{d_in}`` and ``tr(J) = d_in``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .linalg import (
    Bipartition,
    DimensionError,
    as_matrix,
    dagger,
    partial_trace,
    singular_values,
)
from .randomness import haar_unitary

TP_TOL = 1e-9
CHOI_EIG_CUTOFF = 1e-10


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """``Phi(X) = sum_k A_k X A_k^dagger`` with ``d_out x d_in`` Kraus operators."""

    d_in: int
    d_out: int
    kraus: tuple

    def __post_init__(self):
        ops = tuple(_readonly(as_matrix(A)) for A in self.kraus)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        for A in ops:
            if A.shape != (self.d_out, self.d_in):
                raise DimensionError("Kraus operator shape", (self.d_out, self.d_in), A.shape)
        S = sum(dagger(A) @ A for A in ops)
        dev = np.abs(S - np.eye(self.d_in)).max()
        if dev > TP_TOL:
            raise ValueError(f"Kraus operators are not trace preserving (deviation {dev:.2e})")
        object.__setattr__(self, "kraus", ops)

    def apply(self, X) -> np.ndarray:
        X = as_matrix(X)
        if X.shape != (self.d_in, self.d_in):
            raise DimensionError("channel input shape", (self.d_in, self.d_in), X.shape)
        A = np.stack(self.kraus)
        return np.einsum("kai,ij,kbj->ab", A, X, A.conj())


@dataclass(frozen=True, eq=False)
class LiouvilleMatrix:
    mat: np.ndarray
    d_in: int
    d_out: int

    def __post_init__(self):
        M = _readonly(as_matrix(self.mat))
        if M.shape != (self.d_out**2, self.d_in**2):
            raise DimensionError("Liouville matrix shape", (self.d_out**2, self.d_in**2), M.shape)
        object.__setattr__(self, "mat", M)

    def apply(self, X) -> np.ndarray:
        return (self.mat @ as_matrix(X).reshape(-1)).reshape(self.d_out, self.d_out)


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    mat: np.ndarray
    d_in: int
    d_out: int

    def __post_init__(self):
        n = self.d_in * self.d_out
        J = _readonly(as_matrix(self.mat))
        if J.shape != (n, n):
            raise DimensionError("Choi matrix shape", (n, n), J.shape)
        lam_min = np.linalg.eigvalsh((J + dagger(J)) / 2)[0]
        if lam_min < -1e-9:
            raise ValueError(f"Choi matrix is not PSD (min eigenvalue {lam_min:.2e})")
        red = partial_trace(J, Bipartition(self.d_in, self.d_out), keep="A")
        if np.abs(red - np.eye(self.d_in)).max() > TP_TOL:
            raise ValueError("Choi matrix does not reduce to the identity on the input")
        object.__setattr__(self, "mat", J)

    def apply(self, X) -> np.ndarray:
        J = self.mat.reshape(self.d_in, self.d_out, self.d_in, self.d_out)
        return np.einsum("iajb,ij->ab", J, as_matrix(X))


def kraus_to_liouville(ch: KrausChannel) -> LiouvilleMatrix:
    A = np.stack(ch.kraus)
    M = np.einsum("kai,kbj->abij", A, A.conj()).reshape(ch.d_out**2, ch.d_in**2)
    return LiouvilleMatrix(M, ch.d_in, ch.d_out)


def liouville_to_choi(L: LiouvilleMatrix) -> ChoiMatrix:
    n = L.d_in * L.d_out
    J = L.mat.reshape(L.d_out, L.d_out, L.d_in, L.d_in).transpose(2, 0, 3, 1).reshape(n, n)
    return ChoiMatrix(J, L.d_in, L.d_out)


def choi_to_liouville(J: ChoiMatrix) -> LiouvilleMatrix:
    M = J.mat.reshape(J.d_in, J.d_out, J.d_in, J.d_out).transpose(1, 3, 0, 2)
    return LiouvilleMatrix(M.reshape(J.d_out**2, J.d_in**2), J.d_in, J.d_out)


def choi_to_kraus(J: ChoiMatrix) -> KrausChannel:
    """Kraus operators from the spectral decomposition of ``J``.

    Eigenvalues below ``1e-10`` are dropped.
    """
    lam, V = np.linalg.eigh((J.mat + dagger(J.mat)) / 2)
    keep = lam > CHOI_EIG_CUTOFF
    ops = [
        np.sqrt(l) * V[:, k].reshape(J.d_in, J.d_out).T
        for k, l in zip(np.flatnonzero(keep), lam[keep])
    ]
    return KrausChannel(J.d_in, J.d_out, tuple(ops))


@dataclass(frozen=True, eq=False)
class ChannelBundle:
    """A channel held in all three representations."""

    kraus: KrausChannel
    liouville: LiouvilleMatrix
    choi: ChoiMatrix
    label: str = field(default="", compare=False)

    @classmethod
    def from_kraus(cls, kraus_ops: Sequence, label: str = "") -> "ChannelBundle":
        ops = [as_matrix(A) for A in kraus_ops]
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        d_out, d_in = ops[0].shape
        k = KrausChannel(d_in, d_out, tuple(ops))
        L = kraus_to_liouville(k)
        return cls(k, L, liouville_to_choi(L), label)

    @classmethod
    def from_choi(cls, J, d_in: int, d_out: int, label: str = "") -> "ChannelBundle":
        C = ChoiMatrix(J, d_in, d_out)
        return cls(choi_to_kraus(C), choi_to_liouville(C), C, label)

    @property
    def d_in(self) -> int:
        return self.kraus.d_in

    @property
    def d_out(self) -> int:
        return self.kraus.d_out

    def apply(self, X) -> np.ndarray:
        return self.kraus.apply(X)

    def __call__(self, X) -> np.ndarray:
        return self.apply(X)

    @cached_property
    def norm_2(self) -> float:
        """Frobenius norm of the Liouville matrix."""
        return float(np.linalg.norm(self.liouville.mat))

    @cached_property
    def norm_inf(self) -> float:
        """Operator norm of the Liouville matrix."""
        return float(singular_values(self.liouville.mat)[0])

    def adjoint_kraus(self) -> list[np.ndarray]:
        """Kraus operators of the Heisenberg-picture map ``Y -> sum A^dagger Y A``."""
        return [dagger(A) for A in self.kraus.kraus]

    def apply_adjoint(self, Y) -> np.ndarray:
        A = np.stack(self.kraus.kraus)
        return np.einsum("kai,ab,kbj->ij", A.conj(), as_matrix(Y), A)


# --- constructors -----------------------------------------------------------


def _check_unitary(U: np.ndarray, tol: float = 1e-10):
    dev = np.abs(dagger(U) @ U - np.eye(U.shape[0])).max()
    if dev > tol:
        raise ValueError(f"matrix is not unitary (deviation {dev:.2e})")


def compression_channel(U, part: Bipartition) -> ChannelBundle:
    """``Phi_U(rho) = tr_B(U rho U^dagger)`` for a unitary on ``C^{d_A} (x) C^{d_B}``."""
    U = as_matrix(U, square=True)
    if U.shape[0] != part.d:
        raise DimensionError("unitary dimension for bipartition", part.d, U.shape[0])
    _check_unitary(U)
    T = U.reshape(part.d_A, part.d_B, part.d)
    return ChannelBundle.from_kraus([T[:, k, :] for k in range(part.d_B)], label="compression")


def compression_apply(U, rho, part: Bipartition) -> np.ndarray:
    """Fast path for ``Phi_U(rho)`` without building a bundle."""
    return partial_trace(U @ rho @ dagger(U), part, keep="A")


def identity_channel(d: int) -> ChannelBundle:
    return ChannelBundle.from_kraus([np.eye(d)], label="identity")


def unitary_channel(U) -> ChannelBundle:
    U = as_matrix(U, square=True)
    _check_unitary(U)
    return ChannelBundle.from_kraus([U], label="unitary")


def depolarizing_channel(d: int, d_out: int | None = None) -> ChannelBundle:
    """Completely depolarizing channel ``rho -> tr(rho) 1/d_out``."""
    d_out = d if d_out is None else d_out
    ops = []
    for a in range(d_out):
        for i in range(d):
            A = np.zeros((d_out, d))
            A[a, i] = 1 / np.sqrt(d_out)
            ops.append(A)
    return ChannelBundle.from_kraus(ops, label="depolarizing")


def replacement_channel(d: int, d_out: int) -> ChannelBundle:
    """``rho -> tr(rho) |0><0|`` on a ``d_out``-dimensional output."""
    ops = []
    for i in range(d):
        A = np.zeros((d_out, d))
        A[0, i] = 1
        ops.append(A)
    return ChannelBundle.from_kraus(ops, label="replacement")


def mixture(channels: Sequence[ChannelBundle], weights) -> ChannelBundle:
    """Convex combination ``sum_i w_i Phi_i``."""
    w = np.asarray(weights, dtype=float)
    if len(channels) != w.size or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise ValueError("weights must be a probability vector matching the channel list")
    ops = [np.sqrt(wi) * A for wi, ch in zip(w, channels) if wi > 0 for A in ch.kraus.kraus]
    return ChannelBundle.from_kraus(ops, label="mixture")


def random_mixedness_preserving(d: int, d_q: int, src, max_terms: int = 3) -> ChannelBundle:
    """Random member of the mixture family of compression channels.

    Draws between 1 and ``max_terms`` Haar compression channels with
    Dirichlet weights. When ``d_q == d`` some terms are plain unitary
    conjugations instead.
    """
    if d % d_q:
        raise DimensionError(f"output dimension dividing d={d}", "a divisor of d", d_q)
    rng = src.rng
    n_terms = int(rng.integers(1, max_terms + 1))
    w = rng.dirichlet(np.ones(n_terms))
    part = Bipartition.of(d, d_q)
    terms = []
    for _ in range(n_terms):
        U = haar_unitary(d, rng)
        if d_q == d and rng.random() < 0.5:
            terms.append(unitary_channel(U))
        else:
            terms.append(compression_channel(U, part))
    return terms[0] if n_terms == 1 else mixture(terms, w)


# --- checks -----------------------------------------------------------------


def is_mixedness_preserving(ch: ChannelBundle, tol: float = 1e-9) -> bool:
    out = ch.apply(np.eye(ch.d_in) / ch.d_in)
    return float(np.linalg.norm(out - np.eye(ch.d_out) / ch.d_out)) <= tol


@dataclass(frozen=True)
class NormReport:
    norm_2: float
    bound_2: float
    norm_inf: float
    bound_inf: float
    pass_2: bool
    pass_inf: bool
    mixedness_preserving: bool

    @property
    def passed(self) -> bool:
        return self.pass_2 and self.pass_inf


def norm_bound_check(ch: ChannelBundle, slack: float = 1e-9) -> NormReport:
    """Compare ``||M||_2`` with ``sqrt(d d_q)`` and ``||M||_inf`` with ``sqrt(d/d_q)``.

    The bounds are only guaranteed for mixedness-preserving channels; for
    other channels the report is advisory and ``mixedness_preserving`` is
    ``False``.
    """
    d, d_q = ch.d_in, ch.d_out
    b2, binf = np.sqrt(d * d_q), np.sqrt(d / d_q)
    return NormReport(
        norm_2=ch.norm_2,
        bound_2=float(b2),
        norm_inf=ch.norm_inf,
        bound_inf=float(binf),
        pass_2=ch.norm_2 <= b2 + slack,
        pass_inf=ch.norm_inf <= binf + slack,
        mixedness_preserving=is_mixedness_preserving(ch),
    )


def kadison_schwarz_probe(ch: ChannelBundle, Y) -> float:
    """Smallest eigenvalue of ``Phi*(Y^dagger Y) - Phi*(Y)^dagger Phi*(Y)``.

    ``Phi*`` is the adjoint of ``ch``, a unital completely positive map, so
    the result is non-negative up to rounding.
    """
    Y = as_matrix(Y)
    PY = ch.apply_adjoint(Y)
    G = ch.apply_adjoint(dagger(Y) @ Y) - dagger(PY) @ PY
    return float(np.linalg.eigvalsh((G + dagger(G)) / 2)[0])


# --- serialization ----------------------------------------------------------


def channel_to_json(ch: ChannelBundle) -> dict:
    return {
        "d_in": ch.d_in,
        "d_out": ch.d_out,
        "label": ch.label,
        "kraus": [[[[z.real, z.imag] for z in row] for row in A] for A in ch.kraus.kraus],
    }


def channel_from_json(obj: dict) -> ChannelBundle:
    ops = [np.array([[complex(re, im) for re, im in row] for row in A]) for A in obj["kraus"]]
    ch = ChannelBundle.from_kraus(ops, label=obj.get("label", ""))
    if (ch.d_in, ch.d_out) != (obj["d_in"], obj["d_out"]):
        raise DimensionError("serialized channel dims", (obj["d_in"], obj["d_out"]), (ch.d_in, ch.d_out))
    return ch
