"""Communication model shared by the certification and Bell-sampling protocols."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Literal

from .linalg import DensityMatrix


class BudgetViolation(RuntimeError):
    """A node message exceeded the configured classical or quantum budget."""


@dataclass(frozen=True)
class ProtocolConfig:
    """Model parameters ``(n_c, n_q, R, E)`` plus the problem instance.

    ``n_c`` classical bits and ``n_q`` qubits per message, ``R`` the coin
    model, ``E`` shared Bell pairs per neighbouring node pair.
    """

    m: int
    d: int
    n_c: int = 0
    n_q: int = 1
    R: Literal["public", "private"] = "public"
    E: int = 0
    eps: float = 1.0
    delta: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.n_c < 0 or self.n_q < 0 or self.E < 0:
            raise ValueError("n_c, n_q and E must be non-negative")
        if self.R not in ("public", "private"):
            raise ValueError(f"R must be 'public' or 'private', got {self.R!r}")
        if not 0 < self.eps <= 1:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")
        if not 0 < self.delta <= 1:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def d_q(self) -> int:
        return 2**self.n_q

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class NodeMessage:
    """A quantum-classical message: a bit string and an optional state."""

    classical: str = ""
    quantum: DensityMatrix | None = None

    def __post_init__(self):
        if set(self.classical) - {"0", "1"}:
            raise ValueError("classical part must be a bit string")


def budget_enforcer(msg: NodeMessage, cfg: ProtocolConfig) -> NodeMessage:
    """Return ``msg`` unchanged if it fits the budget, else raise :class:`BudgetViolation`."""
    if len(msg.classical) > cfg.n_c:
        raise BudgetViolation(f"{len(msg.classical)} classical bits exceed n_c={cfg.n_c}")
    if msg.quantum is not None:
        if cfg.n_q == 0:
            raise BudgetViolation("quantum message sent with n_q=0")
        if msg.quantum.dim > cfg.d_q:
            raise BudgetViolation(f"quantum message of dimension {msg.quantum.dim} exceeds d_q={cfg.d_q}")
    return msg
