"""Weak Schur sampling by simulated RSK.

Measuring the Young-diagram label of ``rho^{(x)N}`` yields a shape ``lambda``
whose law coincides with the RSK shape of an i.i.d. word drawn from the
spectrum of ``rho``. The class sum of transpositions acts on the
``lambda`` isotypic block as the content sum ``kappa(lambda)``, so
``kappa(lambda) / C(N, 2)`` is the all-pairs SWAP-test estimate of
``tr(rho^2)``.
"""

from __future__ import annotations

import numpy as np


def rsk_shape(word, q: int | None = None) -> tuple[int, ...]:
    """Shape of the RSK insertion tableau of ``word`` (letters ``0..q-1``).

    Rows are stored as letter counts, so each insertion costs ``O(q^2)``.
    """
    word = np.asarray(word, dtype=np.int64)
    if word.size == 0:
        return ()
    q = int(word.max()) + 1 if q is None else q
    if q == 1:
        return (int(word.size),)
    if q == 2:
        return _greene_binary(word)
    rows: list[list[int]] = []
    for x in word.tolist():
        r = 0
        while True:
            if r == len(rows):
                rows.append([0] * q)
            row = rows[r]
            y = x + 1
            while y < q and row[y] == 0:
                y += 1
            row[x] += 1
            if y == q:
                break
            row[y] -= 1
            x = y
            r += 1
    return tuple(sum(row) for row in rows)


def _greene_binary(word: np.ndarray) -> tuple[int, ...]:
    # For two letters the first row is the longest weakly increasing
    # subsequence: max over cut points of (#0 before + #1 after).
    zeros_before = np.concatenate([[0], np.cumsum(word == 0)])
    ones_after = np.concatenate([np.cumsum((word == 1)[::-1])[::-1], [0]])
    l1 = int((zeros_before + ones_after).max())
    l2 = word.size - l1
    return (l1, l2) if l2 else (l1,)


def content_sum(shape) -> int:
    """``sum over boxes (column - row)`` with 0-indexed rows and columns."""
    return int(sum(l * (l - 1) // 2 - i * l for i, l in enumerate(shape)))


def sample_shape(spectrum, n: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Weak-Schur-sampling outcome for ``n`` copies of a state with this spectrum."""
    p = np.clip(np.asarray(spectrum, dtype=float), 0, None)
    p = p / p.sum()
    word = rng.choice(p.size, size=n, p=p)
    return rsk_shape(word, p.size)


def purity_estimate(shape) -> float:
    """Unbiased estimate of ``tr(rho^2)`` from a weak-Schur-sampling shape."""
    n = sum(shape)
    if n < 2:
        raise ValueError("need at least two copies to estimate the purity")
    return content_sum(shape) / (n * (n - 1) / 2)
