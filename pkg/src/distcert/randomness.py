"""Seeded random sources.

Every random draw in the package goes through a :class:`SeededStream`.
A stream is identified by a master seed and a tuple of ids; child streams
are derived with :class:`numpy.random.SeedSequence` spawn keys, so equal
``(master_seed, stream_id)`` pairs reproduce identical draws and distinct
ids give independent generators.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

Ensemble = Literal["haar", "local-circuit"]


def _id_to_int(x) -> int:
    if isinstance(x, (bool, np.bool_)):
        raise TypeError("stream ids must be ints or strings")
    if isinstance(x, (int, np.integer)):
        if x < 0:
            raise ValueError(f"stream ids must be non-negative, got {x}")
        return int(x)
    if isinstance(x, str):
        # Stable across processes, unlike hash().
        return int.from_bytes(hashlib.blake2b(x.encode(), digest_size=8).digest(), "little")
    raise TypeError(f"stream ids must be ints or strings, got {type(x).__name__}")


@dataclass(frozen=True)
class SeededStream:
    """A reproducible random stream ``(master_seed, stream_id)``.

    The generator is created lazily and then advances with every draw, so a
    stream object should be driven by one caller at a time. Use
    :meth:`child` to hand independent streams to parallel workers.
    """

    master_seed: int
    stream_id: tuple = ()
    _gen: list = field(default_factory=list, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        ids = self.stream_id if isinstance(self.stream_id, tuple) else (self.stream_id,)
        object.__setattr__(self, "stream_id", tuple(ids))
        for x in self.stream_id:
            _id_to_int(x)

    def child(self, *ids) -> "SeededStream":
        """Independent sub-stream, e.g. ``src.child("batch", r)``."""
        return SeededStream(self.master_seed, self.stream_id + ids)

    @property
    def rng(self) -> np.random.Generator:
        if not self._gen:
            ss = np.random.SeedSequence(
                int(self.master_seed), spawn_key=tuple(_id_to_int(x) for x in self.stream_id)
            )
            self._gen.append(np.random.Generator(np.random.PCG64(ss)))
        return self._gen[0]


def _rng(src) -> np.random.Generator:
    if isinstance(src, SeededStream):
        return src.rng
    if isinstance(src, np.random.Generator):
        return src
    raise TypeError("expected a SeededStream or numpy Generator")


def ginibre(d: int, src, cols: int | None = None, size: int | None = None) -> np.ndarray:
    """Complex Ginibre matrix with i.i.d. standard complex normal entries."""
    rng = _rng(src)
    shape = (d, d if cols is None else cols) if size is None else (size, d, d if cols is None else cols)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _haar_from_ginibre(G: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(G)
    diag = np.diagonal(R, axis1=-2, axis2=-1)
    phases = diag / np.abs(diag)
    return Q * phases[..., None, :]


def _local_circuit(d: int, rng: np.random.Generator, depth: int | None) -> np.ndarray:
    n = d.bit_length() - 1
    if d != 2**n:
        raise ValueError("the local-circuit ensemble needs a power-of-two dimension")
    if n <= 1:
        return _haar_from_ginibre(ginibre(d, rng))
    depth = 4 * n if depth is None else depth
    U = np.eye(d, dtype=complex)
    for layer in range(depth):
        start = layer % 2
        for q in range(start, n - 1, 2):
            g = _haar_from_ginibre(ginibre(4, rng))
            full = np.kron(np.kron(np.eye(2**q), g), np.eye(2 ** (n - q - 2)))
            U = full @ U
    return U


def haar_unitary(d: int, src, *, ensemble: Ensemble = "haar", depth: int | None = None) -> np.ndarray:
    """Draw a random ``d x d`` unitary.

    ``ensemble="haar"`` samples the Haar measure exactly. ``ensemble="local-circuit"``
    returns a brickwork circuit of Haar two-qubit gates, an approximate
    unitary design that only exists for power-of-two ``d``.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    rng = _rng(src)
    if ensemble == "haar":
        return _haar_from_ginibre(ginibre(d, rng))
    if ensemble == "local-circuit":
        return _local_circuit(d, rng, depth)
    raise ValueError(f"unknown ensemble {ensemble!r}")


def haar_unitaries(d: int, n: int, src) -> np.ndarray:
    """``n`` independent Haar unitaries stacked into an ``(n, d, d)`` array."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return _haar_from_ginibre(ginibre(d, _rng(src), size=n))


def rademacher_vector(ell: int, src, size: int | None = None) -> np.ndarray:
    """Uniform signs in ``{-1, +1}^ell`` as an int8 array."""
    rng = _rng(src)
    shape = (ell,) if size is None else (size, ell)
    return (2 * rng.integers(0, 2, size=shape, dtype=np.int8) - 1).astype(np.int8)


def random_density(d: int, src, rank: int | None = None) -> np.ndarray:
    """Random state ``G G^dagger / tr(G G^dagger)`` with ``G`` a ``d x rank`` Ginibre matrix."""
    G = ginibre(d, src, cols=d if rank is None else rank)
    rho = G @ G.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def random_pure_state(d: int, src) -> np.ndarray:
    """Haar-random unit vector in ``C^d``."""
    g = ginibre(d, src, cols=1)[:, 0]
    return g / np.linalg.norm(g)


def random_hermitian(d: int, src, traceless: bool = False) -> np.ndarray:
    G = ginibre(d, src)
    H = (G + G.conj().T) / 2
    if traceless:
        H = H - np.trace(H) / d * np.eye(d)
    return H
