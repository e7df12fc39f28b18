"""Order-by-order normal form of a perturbed Hamiltonian by quantum averaging.

Given ``H(eps) = sum_p eps**p/p! H_p`` the generator coefficients ``W_p`` are
chosen so that ``K(eps) = Phi(eps)^-1 H(eps) Phi(eps)`` commutes with ``H0``
order by order. Per order::

    F_1 = H_1
    F_p = H_p + sum_{l=0}^{p-2} C(p-1, l) (ad(W_{l+1}, K_{p-l-1}) + T_{p-l-1} H_{l+1})
    W_p = S(F_p),   K_p = average(F_p)

with the superoperators ``T_{p+1} = sum_l C(p, l) ad(W_{l+1}) o T_{p-l}`` and
``Phi_{p+1} = -(i/hbar) sum_l C(p, l) Phi_{p-l} W_{l+1}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import comb, factorial

import numpy as np

from .averaging import average, s_map
from .core import Basis, OperatorSeries, ad, check_hermitian, hermiticity_defect, max_abs, series_eval

INVARIANT_RTOL = 1e-10


class ExpansionError(RuntimeError):
    """An internal invariant failed after the recursion; indicates a bug."""


@dataclass(frozen=True)
class Expansion:
    """All per-order artifacts of one normal-form computation.

    ``f_terms`` and ``w_terms`` hold orders ``1..N``; ``k_terms`` and
    ``phi_terms`` hold orders ``0..N``. ``t_cache`` memoizes ``T_q(H_m)``
    keyed by ``(q, m)``.
    """

    order: int
    basis: Basis
    h_series: OperatorSeries
    f_terms: tuple
    w_terms: tuple
    k_terms: tuple
    phi_terms: tuple
    t_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def hbar(self) -> float:
        return self.h_series.hbar

    def F(self, p: int) -> np.ndarray:
        return self.f_terms[p - 1]

    def W(self, p: int) -> np.ndarray:
        return self.w_terms[p - 1]

    def K(self, p: int) -> np.ndarray:
        return self.k_terms[p]

    def Phi(self, p: int) -> np.ndarray:
        return self.phi_terms[p]


def _apply_T(q, m, h, w_terms, cache, hbar):
    key = (q, m)
    if key in cache:
        return cache[key]
    if q == 0:
        out = h[m]
    else:
        p = q - 1
        out = np.zeros_like(h[0])
        for l in range(p + 1):
            out = out + comb(p, l) * ad(w_terms[l], _apply_T(p - l, m, h, w_terms, cache, hbar), hbar)
    cache[key] = out
    return out


def apply_T(q: int, m: int, exp: Expansion) -> np.ndarray:
    """``T_q(H_m)``, memoized in ``exp.t_cache``."""
    if q < 0 or m < 0:
        raise ValueError("q and m must be non-negative")
    if q > len(exp.w_terms):
        raise ValueError(f"T_{q} needs W_1..W_{q}, only {len(exp.w_terms)} available")
    return _apply_T(q, m, exp.h_series, exp.w_terms, exp.t_cache, exp.hbar)


def _phi_terms(w_terms, order, dim, hbar):
    phis = [np.eye(dim, dtype=complex)]
    for p in range(order):
        acc = np.zeros((dim, dim), dtype=complex)
        for l in range(p + 1):
            acc = acc + comb(p, l) * (phis[p - l] @ w_terms[l])
        phis.append((-1j / hbar) * acc)
    return phis


def expand(h: OperatorSeries, basis: Basis, order: int, validate: bool = True) -> Expansion:
    """Build ``F_p, W_p, K_p, Phi_p`` for ``p <= order``.

    Raises
    ------
    HermiticityError
        If any ``H_p`` is not Hermitian.
    ValueError
        On dimension mismatch or if ``H_0`` is not the basis diagonal.
    ExpansionError
        If the constructed terms violate their invariants.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    if h.dim != basis.dim:
        raise ValueError(f"dimension mismatch: series dim {h.dim}, basis dim {basis.dim}")
    for p, Hp in enumerate(h.coefficients):
        check_hermitian(Hp, name=f"H_{p}")
    H0 = h[0]
    if max_abs(H0 - basis.h0()) > basis.degeneracy_tolerance + 1e-12 * (1 + max_abs(H0)):
        raise ValueError("H_0 must be diagonal with the basis energies")

    hbar = h.hbar
    cache = {}
    f_terms, w_terms, k_terms = [], [], [H0]
    for p in range(1, order + 1):
        F = h[p].copy()
        for l in range(p - 1):
            F = F + comb(p - 1, l) * (
                ad(w_terms[l], k_terms[p - l - 1], hbar)
                + _apply_T(p - l - 1, l + 1, h, w_terms, cache, hbar)
            )
        f_terms.append(F)
        w_terms.append(s_map(F, basis, hbar))
        k_terms.append(average(F, basis))
    phis = _phi_terms(w_terms, order, basis.dim, hbar)

    exp = Expansion(order, basis, h, tuple(f_terms), tuple(w_terms), tuple(k_terms), tuple(phis), cache)
    if validate:
        _validate(exp)
    return exp


def _validate(exp: Expansion):
    H0 = exp.k_terms[0]
    for p in range(1, exp.order + 1):
        K, W, F = exp.K(p), exp.W(p), exp.F(p)
        scale = 1.0 + max(max_abs(F), max_abs(H0))
        tol = INVARIANT_RTOL * scale
        for name, A in (("F", F), ("W", W), ("K", K)):
            if hermiticity_defect(A) > tol * (1 + max_abs(A)):
                raise ExpansionError(f"{name}_{p} lost Hermiticity")
        if max_abs(H0 @ K - K @ H0) > tol * (1 + max_abs(K)):
            raise ExpansionError(f"K_{p} does not commute with H_0")
        if max_abs(average(W, exp.basis)) != 0.0:
            raise ExpansionError(f"W_{p} has a nonzero average")


def k_truncated(exp: Expansion, epsilon: float) -> np.ndarray:
    """Normal form ``sum_{p<=N} eps**p/p! K_p``."""
    return series_eval(OperatorSeries(exp.k_terms, exp.hbar), epsilon)


def phi_truncated(exp: Expansion, epsilon: float) -> np.ndarray:
    """Truncated transformation ``sum_{p<=N} eps**p/p! Phi_p``."""
    return series_eval(OperatorSeries(exp.phi_terms, exp.hbar), epsilon)


@dataclass(frozen=True)
class LevelResult:
    """Perturbed states grown out of one unperturbed level.

    ``mixing`` has the block eigenvectors as columns; ``vectors`` holds the
    normalized full-space eigenvectors as columns. ``coefficients`` is set
    only for non-degenerate levels: ``coefficients[p]`` multiplies ``eps**p``.
    """

    level: int
    energy0: float
    eigenvalues: np.ndarray
    mixing: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    coefficients: np.ndarray | None = None


@dataclass(frozen=True)
class EigenReport:
    epsilon: float
    order: int
    levels: tuple
    exact: object = None

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.concatenate([lv.eigenvalues for lv in self.levels])

    @property
    def vectors(self) -> np.ndarray:
        return np.hstack([lv.vectors for lv in self.levels])

    @property
    def residuals(self) -> np.ndarray:
        return np.concatenate([lv.residuals for lv in self.levels])

    @property
    def state_labels(self) -> list:
        return [(lv.level, a) for lv in self.levels for a in range(lv.eigenvalues.size)]


def polynomial_coefficients(exp: Expansion, j: int) -> np.ndarray:
    """Power-series coefficients of the eigenvalue of non-degenerate level ``j``."""
    pos = exp.basis.positions[j]
    if len(pos) != 1:
        raise ValueError(f"level {j} is degenerate; no scalar eigenvalue polynomial")
    i = pos[0]
    return np.array([exp.K(p)[i, i].real / factorial(p) for p in range(exp.order + 1)])


def eigen_report(exp: Expansion, epsilon: float, exact: bool = False) -> EigenReport:
    """Eigenvalues and eigenvectors of the truncated normal form at ``epsilon``.

    Each level block of ``K^N(eps)`` is diagonalized; eigenvectors are pulled
    back to the original frame with ``Phi^N(eps)`` and normalized. With
    ``exact=True`` the report also carries a dense-diagonalization comparison.
    """
    basis = exp.basis
    K = k_truncated(exp, epsilon)
    Phi = phi_truncated(exp, epsilon)
    H = series_eval(exp.h_series, epsilon)
    levels = []
    for j, pos in enumerate(basis.positions):
        blk = basis.block(K, j)
        if len(pos) == 1:
            vals, c = np.array([blk[0, 0].real]), np.ones((1, 1), dtype=complex)
        else:
            vals, c = np.linalg.eigh(0.5 * (blk + blk.conj().T))
        mixed = np.zeros((basis.dim, len(pos)), dtype=complex)
        mixed[list(pos), :] = c
        V = Phi @ mixed
        V = V / np.linalg.norm(V, axis=0)
        res = np.linalg.norm(H @ V - V * vals, axis=0)
        coeffs = polynomial_coefficients(exp, j) if len(pos) == 1 else None
        levels.append(LevelResult(j, float(basis.energies[j]), vals, c, V, res, coeffs))
    report = EigenReport(float(epsilon), exp.order, tuple(levels))
    if exact:
        from .oracle import compare_exact

        report = replace(report, exact=compare_exact(exp.h_series, report))
    return report


def residual_norms(exp: Expansion, epsilon: float) -> list:
    """``||H(eps) v - E v||_2`` per reported state, in report order."""
    return eigen_report(exp, epsilon).residuals.tolist()
