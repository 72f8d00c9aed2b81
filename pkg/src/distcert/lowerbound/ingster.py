"""Ingster-Suslina expansion, the ``Z`` quadratic form and the ``T`` operator."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..channels import ChannelBundle, is_mixedness_preserving
from ..linalg import dagger, kron_all
from ..randomness import rademacher_vector
from .bases import basis_matrix, gell_mann_basis
from .chi2 import pseudo_inverse, quantum_chi2
from .instance import MAX_ENUM_ELL, HardInstance, all_sign_vectors, perturbation_batch, perturbed_state


class EnumerationTooLarge(ValueError):
    """Exhaustive enumeration is infeasible; use the sampled variant instead."""


def _apply_batch(ch: ChannelBundle, X: np.ndarray) -> np.ndarray:
    A = np.stack(ch.kraus.kraus)
    return np.einsum("kai,nij,kbj->nab", A, X, A.conj())


def _z_matrix(ch: ChannelBundle, dbar_rows: np.ndarray, dbar_cols: np.ndarray) -> np.ndarray:
    """``Z[z, z'] = tr(Phi(1/d)^+ Phi(Dbar_z) Phi(Dbar_z'))`` for two batches."""
    S_inv = pseudo_inverse(ch.apply(np.eye(ch.d_in) / ch.d_in))
    A = S_inv @ _apply_batch(ch, dbar_rows)
    B = _apply_batch(ch, dbar_cols)
    return _trace_gram(A, B)


def _trace_gram(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``G[z, w] = Re tr(A_z B_w)`` for two stacks of square matrices."""
    n = A.shape[-1]
    return (A.reshape(len(A), n * n) @ np.swapaxes(B, 1, 2).reshape(len(B), n * n).T).real


def ingster_suslina_check(inst: HardInstance, channels: Sequence[ChannelBundle]) -> dict:
    """Both sides of the Ingster-Suslina identity by exhaustive enumeration.

    Returns ``lhs`` (the chi-squared divergence of the averaged product
    output from the product reference, computed on the joint state),
    ``rhs_exact = E_{z,z'} prod_i (1 + Z_i) - 1`` and
    ``rhs_mgf_bound = E_{z,z'} exp(sum_i Z_i) - 1``.
    """
    if inst.ell > MAX_ENUM_ELL:
        raise EnumerationTooLarge(
            f"ell={inst.ell} > {MAX_ENUM_ELL}: 4^ell sign pairs; use ingster_suslina_sampled"
        )
    if not channels:
        raise ValueError("need at least one channel")
    for ch in channels:
        if ch.d_in != inst.d:
            raise ValueError("channel input dimension must equal the instance dimension")
        if not is_mixedness_preserving(ch):
            raise ValueError("Ingster-Suslina check requires mixedness-preserving channels")
    Z = all_sign_vectors(inst.ell)
    dbar, _ = perturbation_batch(inst, Z)
    rho = np.eye(inst.d) / inst.d + dbar

    outs = [_apply_batch(ch, rho) for ch in channels]
    mix = sum(kron_all(*(o[k] for o in outs)) for k in range(len(Z))) / len(Z)
    ref = kron_all(*(ch.apply(np.eye(inst.d) / inst.d) for ch in channels))
    lhs = quantum_chi2(mix, ref)

    prod = np.ones((len(Z), len(Z)))
    expo = np.zeros((len(Z), len(Z)))
    for ch in channels:
        Zi = _z_matrix(ch, dbar, dbar)
        prod *= 1 + Zi
        expo += Zi
    rhs = float(prod.mean()) - 1
    mgf = float(np.exp(expo).mean()) - 1
    return {"lhs": lhs, "rhs_exact": rhs, "rhs_mgf_bound": mgf, "abs_diff": abs(lhs - rhs)}


def ingster_suslina_sampled(
    inst: HardInstance, channels: Sequence[ChannelBundle], pairs: int, src
) -> dict:
    """Monte-Carlo estimate of ``E prod(1 + Z_i) - 1`` over random sign pairs."""
    Zs = rademacher_vector(inst.ell, src, size=pairs)
    Zp = rademacher_vector(inst.ell, src, size=pairs)
    a, _ = perturbation_batch(inst, Zs)
    b, _ = perturbation_batch(inst, Zp)
    prod = np.ones(pairs)
    for ch in channels:
        S_inv = pseudo_inverse(ch.apply(np.eye(ch.d_in) / ch.d_in))
        A, B = _apply_batch(ch, a), _apply_batch(ch, b)
        prod *= 1 + np.einsum("ab,nbc,nca->n", S_inv, A, B).real
    return {
        "rhs_estimate": float(prod.mean() - 1),
        "sem": float(prod.std(ddof=1) / np.sqrt(pairs)),
        "pairs": pairs,
    }


def z_quadratic_identity(inst: HardInstance, ch: ChannelBundle, z, z_prime) -> dict:
    """``Z_Phi(z, z')`` by direct trace and by the Liouville quadratic form."""
    if not is_mixedness_preserving(ch):
        raise ValueError("the quadratic form identity assumes a mixedness-preserving channel")
    s, sp = perturbed_state(inst, z), perturbed_state(inst, z_prime)
    S_inv = pseudo_inverse(ch.apply(np.eye(inst.d) / inst.d))
    direct = np.trace(S_inv @ ch.apply(s.delta_bar) @ ch.apply(sp.delta_bar))
    M = ch.liouville.mat
    V = inst.V
    G = dagger(V) @ dagger(M) @ M @ V
    pref = ch.d_out * inst.c**2 * inst.eps**2 * s.N * sp.N / (inst.d * inst.ell)
    quad = pref * (s.z.astype(float) @ G @ sp.z.astype(float))
    return {
        "direct": float(direct.real),
        "quadratic": float(quad.real),
        "imag_residual": float(max(abs(direct.imag), abs(quad.imag))),
        "abs_diff": float(abs(direct - quad)),
    }


@dataclass(frozen=True, eq=False)
class TOperator:
    mat: np.ndarray
    d: int
    d_q: int

    def is_psd(self, tol: float = 1e-9) -> bool:
        return bool(np.linalg.eigvalsh((self.mat + dagger(self.mat)) / 2)[0] >= -tol)

    def identity_eigen_residual(self) -> float:
        """``|| T vec(1) - (d/d_q) vec(1) ||``; zero for mixedness-preserving channels."""
        v = np.eye(self.d).reshape(-1)
        return float(np.linalg.norm(self.mat @ v - self.d / self.d_q * v))


def t_operator(channels: Sequence[ChannelBundle]) -> TOperator:
    """``T = (1/m) sum_i M_i^dagger M_i`` on ``C^{d^2}``."""
    if not channels:
        raise ValueError("need at least one channel")
    d, d_q = channels[0].d_in, channels[0].d_out
    T = sum(dagger(ch.liouville.mat) @ ch.liouville.mat for ch in channels) / len(channels)
    return TOperator(T, d, d_q)


def sandwich_norms(T: TOperator, V: np.ndarray) -> tuple[float, float]:
    """``(||V^dagger T V||_2, ||V^dagger T V||_inf)`` for an isometry ``V``."""
    S = dagger(V) @ T.mat @ V
    S = (S + dagger(S)) / 2
    ev = np.linalg.eigvalsh(S)
    return float(np.linalg.norm(S)), float(np.abs(ev).max())


def adversarial_bound(d: int, d_q: int, ell: int) -> float:
    """``sqrt(ell) d d_q / (d^2 - ell - 1)``; infinite when ``ell = d^2 - 1``."""
    gap = d * d - ell - 1
    return float("inf") if gap <= 0 else float(np.sqrt(ell) * d * d_q / gap)


@dataclass(frozen=True, eq=False)
class AdversarialBasis:
    basis: tuple
    eigenvalues: np.ndarray
    norm_2: float
    norm_inf: float
    bound: float

    @property
    def V(self) -> np.ndarray:
        return basis_matrix(self.basis)


def _canonical_eigvecs(lam: np.ndarray, W: np.ndarray, tie_tol: float = 1e-9):
    """Sign-fix columns and order ties lexicographically by coordinates."""
    W = W.copy()
    for k in range(W.shape[1]):
        j = np.argmax(np.abs(W[:, k]))
        if W[j, k] < 0:
            W[:, k] *= -1
    order = []
    start = 0
    n = len(lam)
    while start < n:
        stop = start + 1
        while stop < n and lam[stop] - lam[start] <= tie_tol:
            stop += 1
        block = list(range(start, stop))
        if len(block) > 1:
            keys = np.round(W[:, block], 12)
            block = [block[i] for i in sorted(range(len(block)), key=lambda i: tuple(-keys[:, i]))]
        order.extend(block)
        start = stop
    return lam[order], W[:, order]


def adversarial_basis(channels: Sequence[ChannelBundle], ell: int) -> AdversarialBasis:
    """Traceless orthonormal ``V_1..V_ell`` spanning the bottom of ``T``'s spectrum.

    ``T`` is expressed in the Gell-Mann basis of traceless Hermitian
    matrices, where it is real symmetric for Hermiticity-preserving channels.
    Its ``ell`` lowest eigenvectors map back to Hermitian traceless matrices.
    """
    for ch in channels:
        if not is_mixedness_preserving(ch):
            raise ValueError("adversarial basis requires mixedness-preserving channels")
    T = t_operator(channels)
    d, d_q = T.d, T.d_q
    if not 1 <= ell <= d * d - 1:
        raise ValueError(f"ell must lie in [1, {d * d - 1}]")
    G = gell_mann_basis(d)
    Q = basis_matrix(G)
    Tr = dagger(Q) @ T.mat @ Q
    Tr = ((Tr + dagger(Tr)) / 2).real
    lam, W = _canonical_eigvecs(*np.linalg.eigh(Tr))
    W = W[:, :ell]
    mats = tuple(np.tensordot(W[:, k], np.stack(G), axes=1) for k in range(ell))
    n2, ninf = sandwich_norms(T, basis_matrix(mats))
    return AdversarialBasis(mats, lam[:ell], n2, ninf, adversarial_bound(d, d_q, ell))


def lower_bound_scale(d: int, d_q: int, eps: float, ell: int, sandwich_norm: float) -> float:
    """``d ell / (d_q eps^2 ||V^dagger T V||_2)``, the node-count scale below which chi2 stays small."""
    return float("inf") if sandwich_norm == 0 else d * ell / (d_q * eps**2 * sandwich_norm)


def centralized_chi2_bound(
    d: int,
    ell: int,
    eps: float,
    c: float,
    n: int,
    *,
    mode: str = "exact",
    pairs: int = 100_000,
    src=None,
    theorem_mode: bool = False,
) -> dict:
    """Centralized ``n``-copy chi-squared of the hard instance and its closed-form bound.

    ``mode="exact"`` builds ``E_z rho_z^{(x)n}`` on ``d^n`` dimensions (needs
    ``d^n <= 4096`` and ``ell <= 12``) and also evaluates the enumerated
    ``E (1 + Z)^n - 1`` with ``Z = d tr(Dbar_z Dbar_z')``.
    ``mode="sampled"`` estimates the latter from random sign pairs.
    The bound is ``exp(n^2 c^4 eps^4 / (2 ell)) - 1 + 4 e^{-d}``.
    """
    from .instance import build_hard_instance

    inst = build_hard_instance(d, ell, eps, c, theorem_mode=theorem_mode)
    bound = float(np.exp(n**2 * c**4 * eps**4 / (2 * ell)) - 1 + 4 * np.exp(-d))
    if mode == "exact":
        if d**n > 4096:
            raise EnumerationTooLarge(f"d^n = {d**n} > 4096; use mode='sampled'")
        if ell > MAX_ENUM_ELL:
            raise EnumerationTooLarge(f"ell={ell} > {MAX_ENUM_ELL}; use mode='sampled'")
        Z = all_sign_vectors(ell)
        dbar, _ = perturbation_batch(inst, Z)
        rho = np.eye(d) / d + dbar
        D = d**n
        mix = np.zeros((D, D), dtype=complex)
        for r in rho:
            mix += kron_all(*([r] * n))
        mix /= len(Z)
        exact = quantum_chi2(mix, np.eye(D) / D)
        Zm = d * _trace_gram(dbar, dbar)
        series = float(np.mean((1 + Zm) ** n) - 1)
        return {"value": exact, "series": series, "bound": bound, "margin": bound - exact, "mode": mode}
    if mode == "sampled":
        if src is None:
            raise ValueError("sampled mode needs a SeededStream")
        a, _ = perturbation_batch(inst, rademacher_vector(ell, src, size=pairs))
        b, _ = perturbation_batch(inst, rademacher_vector(ell, src, size=pairs))
        vals = (1 + d * np.einsum("nab,nba->n", a, b).real) ** n
        est = float(vals.mean() - 1)
        return {
            "value": est,
            "sem": float(vals.std(ddof=1) / np.sqrt(pairs)),
            "bound": bound,
            "margin": bound - est,
            "mode": mode,
        }
    raise ValueError(f"unknown mode {mode!r}")


def mgf_bound_probe(A, lam: float, *, src=None, samples: int = 100_000, max_enum: int = 16) -> dict:
    """Evaluate ``E exp(lam z^T A z')`` and the constant ``C`` it implies.

    Averages over ``z'`` analytically (a product of cosh terms), then
    enumerates ``z`` exactly for ``ell <= max_enum`` and samples it
    otherwise. ``fitted_C = log(mgf) / (lam^2 ||A||_F^2)`` is the smallest
    constant for which ``mgf <= exp(C lam^2 ||A||_F^2)`` holds at this point.
    """
    A = np.asarray(A, dtype=float)
    ell = A.shape[0]
    op = float(np.linalg.norm(A, 2))
    if lam > 1 / (2 * op):
        raise ValueError(f"lam={lam} exceeds 1/(2||A||_inf) = {1 / (2 * op)}")
    if ell <= max_enum:
        Z = all_sign_vectors(ell).astype(float)
        exact = True
    else:
        if src is None:
            raise ValueError("sampling mode needs a SeededStream")
        Z = rademacher_vector(ell, src, size=samples).astype(float)
        exact = False
    logs = np.sum(np.log(np.cosh(lam * (Z @ A))), axis=1)
    mgf = float(np.mean(np.exp(logs)))
    fro2 = float(np.sum(A**2))
    fitted = float(np.log(mgf) / (lam**2 * fro2)) if lam != 0 and fro2 > 0 else 0.0
    return {"mgf": mgf, "fitted_C": fitted, "lam": lam, "lam_max": 1 / (2 * op), "exact": exact}
