"""Weyl operators, Bell sampling and the distributed Bell-sampling protocol.

A label ``x = (a, b)`` with ``a, b`` in ``{0,1}^n`` names the Weyl operator
``W_x = i^{a.b} (X^{a_1} Z^{b_1}) (x) ... (x) (X^{a_n} Z^{b_n})`` and the Bell
state ``|psi_x> = (W_x (x) 1)|EPR_n>``. Labels are packed into integers as
``(a << n) | b`` with ``a_1`` and ``b_1`` the most significant bits, so the
XOR of labels is the XOR of integers.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Sequence

import numpy as np

from .linalg import as_matrix, kron_all
from .protocol import BudgetViolation, NodeMessage, ProtocolConfig, budget_enforcer

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
MAX_WEYL_QUBITS = 6


@dataclass(frozen=True)
class WeylLabel:
    n: int
    a: tuple
    b: tuple

    def __post_init__(self):
        a, b = tuple(int(v) for v in self.a), tuple(int(v) for v in self.b)
        if len(a) != self.n or len(b) != self.n:
            raise ValueError(f"a and b must both have length n={self.n}")
        if set(a + b) - {0, 1}:
            raise ValueError("a and b must be bit strings")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_int(cls, n: int, x: int) -> "WeylLabel":
        if not 0 <= x < 4**n:
            raise ValueError(f"label {x} out of range for n={n}")
        bits = [(x >> (2 * n - 1 - k)) & 1 for k in range(2 * n)]
        return cls(n, tuple(bits[:n]), tuple(bits[n:]))

    def to_int(self) -> int:
        x = 0
        for bit in self.a + self.b:
            x = (x << 1) | bit
        return x

    def __xor__(self, other: "WeylLabel") -> "WeylLabel":
        if other.n != self.n:
            raise ValueError("labels have different lengths")
        return WeylLabel.from_int(self.n, self.to_int() ^ other.to_int())

    @property
    def sign(self) -> int:
        """``(-1)^{a.b}``."""
        return -1 if sum(x * y for x, y in zip(self.a, self.b)) % 2 else 1

    def bits(self) -> str:
        return "".join(map(str, self.a + self.b))

    def hex(self) -> str:
        width = max(1, -(-2 * self.n // 4))
        return f"{self.to_int():0{width}x}"


@dataclass(frozen=True)
class BellOutcome:
    label: WeylLabel
    probability: float


def weyl_operator(x: WeylLabel) -> np.ndarray:
    if x.n > MAX_WEYL_QUBITS:
        raise ValueError(f"dense Weyl operators are limited to n <= {MAX_WEYL_QUBITS}")
    factors = [
        np.linalg.matrix_power(X, ai) @ np.linalg.matrix_power(Z, bi) for ai, bi in zip(x.a, x.b)
    ]
    ab = sum(ai * bi for ai, bi in zip(x.a, x.b))
    return (1j**ab) * kron_all(*factors)


@lru_cache(maxsize=None)
def _weyl_stack(n: int) -> np.ndarray:
    W = np.stack([weyl_operator(WeylLabel.from_int(n, x)) for x in range(4**n)])
    W.flags.writeable = False
    return W


@lru_cache(maxsize=None)
def _signs(n: int) -> np.ndarray:
    s = np.array([WeylLabel.from_int(n, x).sign for x in range(4**n)])
    s.flags.writeable = False
    return s


def bell_basis(n: int) -> np.ndarray:
    """Columns ``|psi_x>`` ordered by integer label, on ``C^{2^n} (x) C^{2^n}``."""
    W = _weyl_stack(n)
    return (W.reshape(4**n, -1) / 2 ** (n / 2)).T


def _qubits(rho: np.ndarray) -> int:
    d = rho.shape[0]
    n = d.bit_length() - 1
    if d < 2 or 2**n != d:
        raise ValueError(f"dimension {d} is not a power of two")
    return n


def _pair_probabilities(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``<psi_x| A (x) B |psi_x>`` for all labels ``x``."""
    n = _qubits(A)
    W = _weyl_stack(n)
    # vec(W)^dagger (A (x) B) vec(W) = tr(W^dagger A W B^T)
    vals = np.einsum("xji,jk,xkl,il->x", W.conj(), A, W, B, optimize=True)
    return vals.real / 2**n


def bell_probabilities(rho) -> np.ndarray:
    """``p_rho(x) = <psi_x| rho (x) rho |psi_x>`` indexed by integer label."""
    rho = as_matrix(np.asarray(rho), square=True)
    n = _qubits(rho)
    if n > 4:
        raise ValueError("the dense 4^n distribution is limited to n <= 4")
    return _pair_probabilities(rho, rho)


def bell_distribution(rho) -> list[BellOutcome]:
    p = bell_probabilities(rho)
    n = _qubits(np.asarray(rho))
    return [BellOutcome(WeylLabel.from_int(n, x), float(px)) for x, px in enumerate(p)]


def bell_protocol_config(n: int) -> ProtocolConfig:
    """The two-node model: ``2n`` classical bits, no qubits, private coins, ``n`` EPR pairs."""
    return ProtocolConfig(m=2, d=2**n, n_c=2 * n, n_q=0, R="private", E=n)


def _check_bell_budget(cfg: ProtocolConfig, n: int):
    if cfg.n_c < 2 * n or cfg.n_q != 0 or cfg.E < n:
        raise BudgetViolation(
            f"distributed Bell sampling needs n_c >= {2 * n}, n_q = 0, E >= {n}; "
            f"got n_c={cfg.n_c}, n_q={cfg.n_q}, E={cfg.E}"
        )


def conditional_second_outcome(rho, z1: int) -> np.ndarray:
    """``Pr(z2 | z1) = <psi_z2| W_z1 rho W_z1^dagger (x) rho |psi_z2>`` for all ``z2``."""
    rho = as_matrix(np.asarray(rho), square=True)
    W = _weyl_stack(_qubits(rho))[z1]
    return _pair_probabilities(W @ rho @ W.conj().T, rho)


@dataclass(frozen=True)
class BellRound:
    z1: int
    z2: int
    output: WeylLabel
    messages: tuple


def distributed_bell_round(rho, src, cfg: ProtocolConfig | None = None) -> BellRound:
    """One run of the two-node protocol.

    Node 1 Bell-measures its copy with its half of the shared EPR pairs,
    which yields a uniform outcome ``z1`` and leaves ``W_z1 rho W_z1^dagger``
    on node 2's EPR half. Node 2 Bell-measures that with its own copy. Each
    node sends its ``2n``-bit outcome; the referee outputs ``z1 xor z2``.
    """
    rho = as_matrix(np.asarray(rho), square=True)
    n = _qubits(rho)
    cfg = bell_protocol_config(n) if cfg is None else cfg
    _check_bell_budget(cfg, n)
    rng = src.rng
    z1 = int(rng.integers(0, 4**n))
    q = np.clip(conditional_second_outcome(rho, z1), 0, None)
    z2 = int(rng.choice(4**n, p=q / q.sum()))
    msgs = tuple(
        budget_enforcer(NodeMessage(classical=WeylLabel.from_int(n, z).bits()), cfg) for z in (z1, z2)
    )
    return BellRound(z1, z2, WeylLabel.from_int(n, z1 ^ z2), msgs)


def distributed_bell_sampling(rho, src, cfg: ProtocolConfig | None = None) -> WeylLabel:
    return distributed_bell_round(rho, src, cfg).output


def distributed_output_law(rho) -> np.ndarray:
    """Exact law of the referee's output, from the two-stage sampling densities."""
    rho = as_matrix(np.asarray(rho), square=True)
    n = _qubits(rho)
    K = 4**n
    law = np.zeros(K)
    idx = np.arange(K)
    for z1 in range(K):
        law[z1 ^ idx] += conditional_second_outcome(rho, z1) / K
    return law


def exact_state_joint(rho) -> np.ndarray:
    """Joint law ``P[z1, z2]`` from the full state on registers ``A1, B1, B2, A2``.

    ``rho_A1 (x) |EPR_n><EPR_n|_{B1 B2} (x) rho_A2``; node 1 measures
    ``(A1, B1)`` and node 2 measures ``(A2, B2)`` in the Bell basis.
    Limited to ``n <= 2``.
    """
    rho = as_matrix(np.asarray(rho), square=True)
    n = _qubits(rho)
    if n > 2:
        raise ValueError("the exact-state simulation is limited to n <= 2")
    D = 2**n
    epr = np.eye(D).reshape(-1) / np.sqrt(D)
    sigma = kron_all(rho, np.outer(epr, epr), rho).reshape((D,) * 8)
    Psi = _weyl_stack(n) / np.sqrt(D)  # Psi[x, i, j] = <i j | psi_x> on (A, B)
    # axes of sigma: a1 b1 b2 a2 | a1' b1' b2' a2'
    return np.einsum(
        "xac,ydb,acbdegfh,xeg,yhf->xy", Psi.conj(), Psi.conj(), sigma, Psi, Psi, optimize=True
    ).real


def exact_state_output_law(rho) -> np.ndarray:
    P = exact_state_joint(rho)
    K = P.shape[0]
    law = np.zeros(K)
    for z1 in range(K):
        law[z1 ^ np.arange(K)] += P[z1]
    return law


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def purity_from_bell(samples: Sequence[WeylLabel]) -> float:
    """Empirical mean of ``(-1)^{a.b}``, an unbiased estimate of ``tr(rho^2)``."""
    if len(samples) == 0:
        raise ValueError("need at least one Bell sample")
    return float(np.mean([s.sign for s in samples]))


def purity_identity(rho) -> tuple[float, float]:
    """``(sum_x p(x) (-1)^{a.b}, tr(rho^2))``."""
    rho = as_matrix(np.asarray(rho), square=True)
    n = _qubits(rho)
    return float(bell_probabilities(rho) @ _signs(n)), float(np.real(np.vdot(rho, rho)))


class PurityVerdict(str, Enum):
    PURE = "Pure"
    MAXIMALLY_MIXED = "MaximallyMixed"


def purity_threshold(n: int) -> float:
    return (1 + 2.0**-n) / 2


def purity_test(rho, samples: int, src) -> tuple[PurityVerdict, float]:
    """Decide pure vs maximally mixed from ``samples`` distributed Bell samples.

    Each sample uses one fresh pair of nodes; streams are split per pair.
    """
    rho = as_matrix(np.asarray(rho), square=True)
    n = _qubits(rho)
    labels = [distributed_bell_sampling(rho, src.child("pair", k)) for k in range(samples)]
    est = purity_from_bell(labels)
    verdict = PurityVerdict.PURE if est >= purity_threshold(n) else PurityVerdict.MAXIMALLY_MIXED
    return verdict, est


def dump_samples(samples: Sequence[WeylLabel]) -> str:
    """One hex-encoded label per line."""
    return "".join(s.hex() + "\n" for s in samples)


def load_samples(text: str, n: int) -> list[WeylLabel]:
    return [WeylLabel.from_int(n, int(line, 16)) for line in text.split()]


__all__ = [
    "BellOutcome",
    "BellRound",
    "PurityVerdict",
    "WeylLabel",
    "bell_basis",
    "bell_distribution",
    "bell_probabilities",
    "bell_protocol_config",
    "conditional_second_outcome",
    "distributed_bell_round",
    "distributed_bell_sampling",
    "distributed_output_law",
    "dump_samples",
    "exact_state_joint",
    "exact_state_output_law",
    "load_samples",
    "purity_from_bell",
    "purity_identity",
    "purity_test",
    "total_variation",
    "weyl_operator",
]
