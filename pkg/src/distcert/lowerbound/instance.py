"""The sign-vector perturbation family around the maximally mixed state.

For signs ``z`` in ``{-1,+1}^ell`` and an orthonormal traceless basis
``V_1..V_ell``::

    Delta_z     = (c eps / sqrt(d)) (1/sqrt(ell)) sum_i z_i V_i
    N_z         = min(1, 1 / (d ||Delta_z||_inf))
    rho_z       = 1/d + N_z Delta_z
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from ..linalg import DensityMatrix
from .bases import basis_matrix, check_traceless_orthonormal, default_basis, gell_mann_basis, pauli_basis

DEFAULT_C = 0.1
DEFAULT_EPS_MAX = 0.3
MAX_ENUM_ELL = 12


@dataclass(frozen=True, eq=False)
class HardInstance:
    d: int
    ell: int
    eps: float
    c: float
    basis: tuple
    theorem_mode: bool = True

    @property
    def V(self) -> np.ndarray:
        """``d^2 x ell`` isometry with columns ``vec(V_i)``."""
        return basis_matrix(self.basis)

    @property
    def scale(self) -> float:
        return self.c * self.eps / np.sqrt(self.d * self.ell)

    @property
    def basis_stack(self) -> np.ndarray:
        return np.stack(self.basis)


@dataclass(frozen=True, eq=False)
class PerturbedState:
    z: np.ndarray
    delta: np.ndarray
    delta_bar: np.ndarray
    N: float
    rho: DensityMatrix


def build_hard_instance(
    d: int,
    ell: int,
    eps: float,
    c: float = DEFAULT_C,
    basis_choice: str | Sequence = "default",
    *,
    theorem_mode: bool = True,
    eps_max: float = DEFAULT_EPS_MAX,
) -> HardInstance:
    """Validate parameters and fix the basis ``V_1..V_ell``.

    ``basis_choice`` is ``"default"``, ``"pauli"``, ``"gell-mann"`` (the first
    ``ell`` members of the family are used) or an explicit list of ``ell``
    traceless Hermitian matrices. ``theorem_mode`` enforces
    ``d^2/2 <= ell <= d^2 - 1``; otherwise ``1 <= ell <= d^2 - 1``.
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    lo = d * d / 2 if theorem_mode else 1
    if not lo <= ell <= d * d - 1:
        raise ValueError(f"ell={ell} outside [{int(np.ceil(lo))}, {d * d - 1}] for d={d}")
    if not 0 <= eps <= eps_max:
        raise ValueError(f"eps={eps} must lie in [0, {eps_max}]")
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    if isinstance(basis_choice, str):
        family = {"default": default_basis, "pauli": pauli_basis, "gell-mann": gell_mann_basis}
        if basis_choice not in family:
            raise ValueError(f"unknown basis choice {basis_choice!r}")
        mats = family[basis_choice](d)[:ell]
    else:
        mats = tuple(np.array(M, dtype=complex) for M in basis_choice)
        if len(mats) != ell:
            raise ValueError(f"supplied basis has {len(mats)} elements, expected ell={ell}")
        if mats[0].shape != (d, d):
            raise ValueError(f"basis elements must be {d}x{d}")
        check_traceless_orthonormal(mats)
    return HardInstance(d, ell, float(eps), float(c), tuple(mats), theorem_mode)


def all_sign_vectors(ell: int) -> np.ndarray:
    """All of ``{-1,+1}^ell`` as rows, in lexicographic order with ``-1 < +1``."""
    return np.array(list(product((-1, 1), repeat=ell)), dtype=np.int8).reshape(-1, ell)


def perturbation_batch(inst: HardInstance, Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(Delta_bar_z, N_z)`` for each row ``z`` of ``Z``."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[1] != inst.ell:
        raise ValueError(f"sign vectors must have length {inst.ell}")
    delta = inst.scale * np.tensordot(Z, inst.basis_stack, axes=1)
    norm_inf = np.abs(np.linalg.eigvalsh(delta)).max(axis=1)
    with np.errstate(divide="ignore"):
        N = np.where(inst.d * norm_inf > 1, 1 / (inst.d * norm_inf), 1.0)
    return delta * N[:, None, None], N


def perturbed_state(inst: HardInstance, z) -> PerturbedState:
    z = np.asarray(z)
    if z.shape != (inst.ell,) or not np.all(np.abs(z) == 1):
        raise ValueError(f"z must be a +-1 vector of length {inst.ell}")
    delta = inst.scale * np.tensordot(z.astype(float), inst.basis_stack, axes=1)
    norm_inf = float(np.abs(np.linalg.eigvalsh(delta)).max())
    N = 1.0 if inst.d * norm_inf <= 1 else 1 / (inst.d * norm_inf)
    rho = DensityMatrix(np.eye(inst.d) / inst.d + N * delta)
    return PerturbedState(z.astype(np.int8), delta, N * delta, N, rho)


def farness_fraction(inst: HardInstance, samples: int, src) -> float:
    """Fraction of random ``z`` with ``||rho_z - 1/d||_1 >= eps``."""
    from ..randomness import rademacher_vector

    Z = rademacher_vector(inst.ell, src, size=samples)
    dbar, _ = perturbation_batch(inst, Z)
    tn = np.abs(np.linalg.eigvalsh(dbar)).sum(axis=1)
    return float(np.mean(tn >= inst.eps))
