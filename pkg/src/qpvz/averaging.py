"""Quantum averaging and the integral map for a discrete unperturbed spectrum.

For ``H0 = sum_j E_j P_j`` the time average of ``exp(-iH0 t) G exp(iH0 t)``
keeps exactly the blocks ``P_j G P_j``, and the integral map divides the
off-block entries by the level gaps. Both are evaluated in that closed form;
entries that vanish structurally are written as exact zeros.
"""
from __future__ import annotations

import numpy as np

from .core import Basis, ad, max_abs


def _same_level(basis: Basis) -> np.ndarray:
    lab = basis.labels
    return lab[:, None] == lab[None, :]


def _check_dim(G, basis):
    G = np.asarray(G)
    if G.shape != (basis.dim, basis.dim):
        raise ValueError(f"dimension mismatch: operator {G.shape}, basis dim {basis.dim}")
    return G


def average(G: np.ndarray, basis: Basis) -> np.ndarray:
    """Block-diagonal part of ``G`` with respect to the levels of ``basis``."""
    G = _check_dim(G, basis)
    return np.where(_same_level(basis), G, 0).astype(complex)


def s_map(G: np.ndarray, basis: Basis, hbar: float = 1.0) -> np.ndarray:
    """Solve ``ad(S, H0) = average(G) - G`` with ``average(S) = 0``.

    Entry ``(j,a; k,b)`` is ``(hbar/i) G[(j,a),(k,b)] / (E_j - E_k)`` for
    ``j != k`` and zero inside the diagonal blocks.
    """
    G = _check_dim(G, basis)
    if not hbar > 0:
        raise ValueError("hbar must be positive")
    e = basis.diagonal()
    gaps = e[:, None] - e[None, :]
    same = _same_level(basis)
    out = np.zeros(G.shape, dtype=complex)
    off = ~same
    out[off] = (hbar / 1j) * G[off] / gaps[off]
    return out


def check_homological(G: np.ndarray, basis: Basis, hbar: float = 1.0):
    """Residuals of the two homological identities for ``G``.

    Returns
    -------
    (float, float)
        ``max|ad(S(G), H0) + G - avg(G)|`` and ``max|ad(H0, avg(G))|``.
    """
    G = _check_dim(G, basis)
    H0 = basis.h0()
    G_bar = average(G, basis)
    r_integral = max_abs(ad(s_map(G, basis, hbar), H0, hbar) + G - G_bar)
    r_commute = max_abs(ad(H0, G_bar, hbar))
    return r_integral, r_commute
