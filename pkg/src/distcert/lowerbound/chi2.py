"""Quantum chi-squared divergence ``tr(sigma^+ rho^2) - 1``."""

from __future__ import annotations

import numpy as np

from ..linalg import as_matrix, dagger, schatten_norm

SUPPORT_EIG_CUTOFF = 1e-10
SUPPORT_OVERLAP_TOL = 1e-8


def _mat(x) -> np.ndarray:
    return as_matrix(np.asarray(x), square=True)


def support_contained(rho, sigma) -> bool:
    """True when every eigenvector of ``rho`` above the cutoff lies in ``supp(sigma)``."""
    rho, sigma = _mat(rho), _mat(sigma)
    lr, Vr = np.linalg.eigh((rho + dagger(rho)) / 2)
    ls, Vs = np.linalg.eigh((sigma + dagger(sigma)) / 2)
    S = Vs[:, ls > SUPPORT_EIG_CUTOFF]
    R = Vr[:, lr > SUPPORT_EIG_CUTOFF]
    if R.shape[1] == 0:
        return True
    overlap = np.sum(np.abs(dagger(S) @ R) ** 2, axis=0)
    return bool(np.all(overlap >= 1 - SUPPORT_OVERLAP_TOL))


def pseudo_inverse(sigma) -> np.ndarray:
    """Inverse on the eigenvalues above ``1e-10``, zero elsewhere."""
    sigma = _mat(sigma)
    lam, V = np.linalg.eigh((sigma + dagger(sigma)) / 2)
    inv = np.where(lam > SUPPORT_EIG_CUTOFF, 1 / np.where(lam > SUPPORT_EIG_CUTOFF, lam, 1), 0.0)
    return (V * inv) @ dagger(V)


def quantum_chi2(rho, sigma) -> float:
    """``D_chi2(rho || sigma)``; ``inf`` when the support condition fails."""
    rho, sigma = _mat(rho), _mat(sigma)
    if rho.shape != sigma.shape:
        raise ValueError(f"state dimensions differ: {rho.shape} vs {sigma.shape}")
    if not support_contained(rho, sigma):
        return float("inf")
    return float(np.real(np.trace(pseudo_inverse(sigma) @ rho @ rho))) - 1.0


def chi2_trace_margins(rho, sigma) -> dict:
    """Margins of ``chi2 - ||rho-sigma||_1`` and ``chi2 - ||rho-sigma||_1^2``.

    Only the squared form is a theorem; the unsquared form fails for close
    pairs, since the divergence is quadratic in the difference.
    """
    chi = quantum_chi2(rho, sigma)
    t = schatten_norm(_mat(rho) - _mat(sigma), 1)
    return {"chi2": chi, "trace_norm": t, "margin_linear": chi - t, "margin_squared": chi - t * t}
