"""Independent checks: textbook second-order blocks, dense diagonalization,
eigenvector pairing and log-log order fits.

Nothing in this module uses the averaging machinery.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Basis, OperatorSeries, series_eval


def rs_block_order2(h: OperatorSeries, basis: Basis, j: int, epsilon: float) -> np.ndarray:
    """Second-order secular matrix of level ``j`` as a literal double sum.

    ``E_j 1 + eps <a|H1|b> + eps^2 (<a|H2|b>/2 + sum_{k != j, c} <a|H1|k,c><k,c|H1|b> / (E_j - E_k))``
    """
    if h.dim != basis.dim:
        raise ValueError(f"dimension mismatch: series dim {h.dim}, basis dim {basis.dim}")
    H1, H2 = h[1], h[2]
    rows = basis.positions[j]
    d = len(rows)
    Ej = basis.energies[j]
    second = np.zeros((d, d), dtype=complex)
    for a, ia in enumerate(rows):
        for b, ib in enumerate(rows):
            total = 0.5 * H2[ia, ib]
            for k, cols in enumerate(basis.positions):
                if k == j:
                    continue
                gap = Ej - basis.energies[k]
                for ic in cols:
                    total += H1[ia, ic] * H1[ic, ib] / gap
            second[a, b] = total
    first = H1[np.ix_(rows, rows)]
    return Ej * np.eye(d) + epsilon * first + epsilon ** 2 * second


def exact_eigen(h: OperatorSeries, epsilon: float, refine: bool = True):
    """Full spectrum of ``H(eps)`` by dense Hermitian diagonalization.

    With ``refine`` each eigenvalue is replaced by the Rayleigh quotient of
    its eigenvector. The solver's absolute error scales with the largest
    eigenvalue of the truncated matrix; the quotient's error scales with the
    eigenvalue itself, which matters when errors of ``1e-15`` are measured
    on low states of a large truncation.
    """
    H = series_eval(h, epsilon)
    H = 0.5 * (H + H.conj().T)
    vals, vecs = np.linalg.eigh(H)
    if refine:
        vals = np.real(np.einsum("ij,ij->j", vecs.conj(), H @ vecs))
        order = np.argsort(vals, kind="stable")
        vals, vecs = vals[order], vecs[:, order]
    return vals, vecs


@dataclass(frozen=True)
class Pairing:
    """Assignment of approximate states to exact ones.

    ``exact_index[i]`` is the exact state paired with approximate state
    ``i``; ``overlaps[i]`` is ``|<exact|approx>|``; ``subspace_overlaps[i]``
    is the norm of the projection of approximate state ``i`` onto the
    (possibly degenerate) exact eigenspace it was paired into.
    ``conflicts`` lists ``(exact, [approx, ...])`` whenever several
    approximate states have the same best exact match.
    """

    exact_index: np.ndarray
    overlaps: np.ndarray
    subspace_overlaps: np.ndarray
    conflicts: tuple

    @property
    def ambiguous(self) -> bool:
        return bool(self.conflicts)


def _clusters(vals, tol):
    groups, start = [], 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or vals[i] - vals[i - 1] > tol:
            groups.append(list(range(start, i)))
            start = i
    return groups


def match_states(exact, approx, cluster_tol: float = 1e-8) -> Pairing:
    """Greedy maximum-overlap pairing of approximate to exact eigenvectors.

    ``exact`` is ``(values, vectors)``; ``approx`` is an
    :class:`~qpvz.pvz.EigenReport` or an array of column vectors.
    """
    vals, V = exact
    A = approx.vectors if hasattr(approx, "vectors") else np.asarray(approx)
    if V.shape[0] != A.shape[0]:
        raise ValueError(f"dimension mismatch: {V.shape[0]} vs {A.shape[0]}")
    O = np.abs(V.conj().T @ A)
    best = np.argmax(O, axis=0)
    claims = {}
    for i, e in enumerate(best):
        claims.setdefault(int(e), []).append(i)
    conflicts = tuple((e, c) for e, c in sorted(claims.items()) if len(c) > 1)

    n_exact, n_approx = O.shape
    exact_index = np.full(n_approx, -1)
    free_e = np.ones(n_exact, bool)
    free_a = np.ones(n_approx, bool)
    # ties broken by lowest flat index so the result is deterministic
    for flat in np.argsort(-O, axis=None, kind="stable"):
        e, i = divmod(int(flat), n_approx)
        if free_e[e] and free_a[i]:
            exact_index[i] = e
            free_e[e] = free_a[i] = False
            if not free_a.any():
                break
    overlaps = O[exact_index, np.arange(n_approx)]

    scale = max(1.0, float(np.max(np.abs(vals))))
    cluster_of = {}
    for g in _clusters(vals, cluster_tol * scale):
        for e in g:
            cluster_of[e] = g
    sub = np.array([
        np.linalg.norm(V[:, cluster_of[int(e)]].conj().T @ A[:, i])
        for i, e in enumerate(exact_index)
    ])
    return Pairing(exact_index, overlaps, sub, conflicts)


@dataclass(frozen=True)
class Comparison:
    """Exact eigenvalues paired with the states of an eigen report."""

    exact_eigenvalues: np.ndarray
    errors: np.ndarray
    pairing: Pairing


def compare_exact(h: OperatorSeries, report) -> Comparison:
    vals, vecs = exact_eigen(h, report.epsilon)
    pairing = match_states((vals, vecs), report)
    paired = vals[pairing.exact_index]
    return Comparison(paired, np.abs(paired - report.eigenvalues), pairing)


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares line through ``(log eps, log norm)``.

    Points with a zero norm are excluded and counted in ``n_exact``.
    """

    epsilons: tuple
    norms: tuple
    slope: float
    intercept: float
    n_exact: int = 0


class SlopeFitError(ValueError):
    pass


def fit_slope(epsilons, norms) -> SlopeFit:
    eps = np.asarray(epsilons, dtype=float)
    nrm = np.asarray(norms, dtype=float)
    if eps.shape != nrm.shape:
        raise SlopeFitError("epsilons and norms differ in length")
    if np.any(nrm < 0) or np.any(eps <= 0):
        raise SlopeFitError("epsilons must be positive and norms non-negative")
    keep = nrm > 0
    n_exact = int((~keep).sum())
    eps_k, nrm_k = eps[keep], nrm[keep]
    if eps_k.size < 3:
        raise SlopeFitError(f"need >= 3 positive norms, got {eps_k.size}")
    if np.unique(eps_k).size != eps_k.size:
        raise SlopeFitError("epsilons must be distinct")
    slope, intercept = np.polyfit(np.log(eps_k), np.log(nrm_k), 1)
    return SlopeFit(tuple(eps.tolist()), tuple(nrm.tolist()), float(slope), float(intercept), n_exact)


def default_grid(lo: float = 1e-3, hi: float = 1e-1, points: int = 11) -> np.ndarray:
    """Log-uniform grid from ``hi`` down to ``lo``."""
    return np.logspace(np.log10(hi), np.log10(lo), points)
