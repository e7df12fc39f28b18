"""Model systems in truncated number bases, random test models and model files.

Two-mode states ``(n1, n2)`` are ordered by total quanta, then by ``n1``
ascending. Polynomial perturbations are built from ladder matrices on a
padded space and cropped, so every stored matrix element equals its
infinite-dimensional value.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Basis, BasisError, OperatorSeries, check_hermitian, make_basis
from .rng import CounterRNG


@dataclass(frozen=True)
class Model:
    name: str
    basis: Basis
    h_series: OperatorSeries
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def hbar(self) -> float:
        return self.h_series.hbar


def ladder(n_max: int):
    """Annihilation and creation matrices on number states ``0..n_max``.

    ``<n-1|a|n> = sqrt(n)``. Note ``[a, a^dagger]`` is the identity except
    at ``(n_max, n_max)`` where truncation leaves ``-n_max``.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    a = np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1).astype(complex)
    return a, a.conj().T


def _position_power(n_max: int, power: int) -> np.ndarray:
    """Exact ``<m|x**power|n>`` for ``m, n <= n_max`` with ``x = (a + a^dagger)/sqrt(2)``."""
    pad = n_max + power
    a, ad_ = ladder(pad)
    x = (a + ad_) / math.sqrt(2.0)
    return np.linalg.matrix_power(x, power)[: n_max + 1, : n_max + 1]


def anharmonic(n_max: int = 60) -> Model:
    """Oscillator ``H0 = (p^2 + x^2)/2`` with ``H1 = x^4/4``, hbar = 1."""
    if n_max < 12:
        raise ValueError("anharmonic model needs n_max >= 12")
    basis = Basis.from_levels([(n + 0.5, 1) for n in range(n_max + 1)])
    H1 = _position_power(n_max, 4) / 4.0
    return Model("anharmonic", basis, OperatorSeries((basis.h0(), H1)), {"n_max": n_max})


def two_mode_states(cutoff: int) -> list:
    return [(n1, k - n1) for k in range(cutoff + 1) for n1 in range(k + 1)]


def henon_heiles(cutoff: int = 14, alpha: float = 0.1, beta: float = 0.1) -> Model:
    """Two equal-frequency oscillators with ``H1 = alpha x1^2 x2 + beta x2^3``.

    States with ``n1 + n2 <= cutoff`` are kept; level ``k`` has energy
    ``k + 1`` and degeneracy ``k + 1``.
    """
    if cutoff < 8:
        raise ValueError("henon_heiles model needs cutoff >= 8")
    states = two_mode_states(cutoff)
    n1 = np.array([s[0] for s in states])
    n2 = np.array([s[1] for s in states])
    x1 = _position_power(cutoff, 1)
    x1sq = _position_power(cutoff, 2)
    x2cube = _position_power(cutoff, 3)
    # product-state matrix elements factorize over the modes
    delta = (n1[:, None] == n1[None, :]).astype(float)
    H1 = alpha * x1sq[np.ix_(n1, n1)] * x1[np.ix_(n2, n2)]
    H1 = H1 + beta * delta * x2cube[np.ix_(n2, n2)]
    basis = Basis.from_levels([(k + 1.0, k + 1) for k in range(cutoff + 1)])
    params = {"cutoff": cutoff, "alpha": float(alpha), "beta": float(beta)}
    return Model("henon-heiles", basis, OperatorSeries((basis.h0(), H1)), params)


def x1_parity(cutoff: int) -> np.ndarray:
    """Diagonal operator of ``x1 -> -x1``: ``(-1)**n1`` on the two-mode basis."""
    return np.diag([(-1.0) ** n1 for n1, _ in two_mode_states(cutoff)]).astype(complex)


def random_model(seed: int, dim: int, levels: int, trial: int = 0,
                 h2: bool = True, degenerate: bool = True) -> Model:
    """Seeded random Hermitian model.

    Level energies are sorted distinct integers; the ``dim`` states are split
    at random into ``levels`` non-empty groups (all groups of size one when
    ``degenerate`` is false, which requires ``dim == levels``).
    """
    if not dim >= levels >= 1:
        raise ValueError("need dim >= levels >= 1")
    rng = CounterRNG(seed, f"trial-{trial}")
    energies = rng.choice(3 * levels, levels).astype(float)
    if degenerate:
        cuts = np.sort(rng.choice(dim - 1, levels - 1) + 1)
        degs = np.diff(np.concatenate(([0], cuts, [dim])))
    else:
        if dim != levels:
            raise ValueError("a non-degenerate model needs dim == levels")
        degs = np.ones(levels, dtype=int)
    basis = Basis.from_levels(list(zip(energies, degs.tolist())))
    coeffs = [basis.h0(), rng.hermitian(dim)]
    if h2:
        coeffs.append(rng.hermitian(dim))
    params = {"seed": int(seed), "trial": int(trial), "levels": int(levels)}
    return Model(f"random-{seed}-{trial}", basis, OperatorSeries(tuple(coeffs)), params)


class ModelFileError(ValueError):
    """Invalid model file; the message names the offending field and index."""


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelFileError(f"{where}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ModelFileError(f"{where}: non-finite value {value!r}")
    return float(value)


def _matrix(rows, dim, where):
    if not isinstance(rows, list) or len(rows) != dim:
        raise ModelFileError(f"{where}: expected {dim} rows")
    out = np.empty((dim, dim), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise ModelFileError(f"{where}[{i}]: expected {dim} entries")
        for k, entry in enumerate(row):
            if not isinstance(entry, list) or len(entry) != 2:
                raise ModelFileError(f"{where}[{i}][{k}]: expected a [re, im] pair")
            out[i, k] = complex(_number(entry[0], f"{where}[{i}][{k}]"),
                                _number(entry[1], f"{where}[{i}][{k}]"))
    return out


def model_from_dict(data: dict) -> Model:
    if not isinstance(data, dict):
        raise ModelFileError("top level must be an object")
    name = data.get("name", "model")
    if not isinstance(name, str):
        raise ModelFileError("name: expected a string")
    hbar = _number(data.get("hbar", 1.0), "hbar")
    if hbar <= 0:
        raise ModelFileError("hbar: must be positive")
    diag = data.get("h0_diagonal")
    if not isinstance(diag, list) or not diag:
        raise ModelFileError("h0_diagonal: expected a non-empty list")
    diag = [_number(v, f"h0_diagonal[{i}]") for i, v in enumerate(diag)]
    dim = len(diag)
    tol = data.get("degeneracy_tolerance")
    tol = None if tol is None else _number(tol, "degeneracy_tolerance")
    try:
        basis = make_basis(diag, tol)
    except BasisError as err:
        raise ModelFileError(f"h0_diagonal: {err}") from err

    perts = data.get("perturbations", {})
    if not isinstance(perts, dict):
        raise ModelFileError("perturbations: expected an object keyed by order")
    by_order = {}
    for key, rows in perts.items():
        try:
            p = int(key)
        except ValueError:
            raise ModelFileError(f"perturbations[{key!r}]: order must be an integer") from None
        if p < 1:
            raise ModelFileError(f"perturbations[{key!r}]: order must be >= 1")
        M = _matrix(rows, dim, f"perturbations[{p}]")
        try:
            check_hermitian(M, name=f"perturbations[{p}]")
        except ValueError as err:
            raise ModelFileError(str(err)) from err
        by_order[p] = M
    top = max(by_order, default=0)
    coeffs = [basis.h0()] + [by_order.get(p, np.zeros((dim, dim), complex)) for p in range(1, top + 1)]
    return Model(name, basis, OperatorSeries(tuple(coeffs), hbar), {"degeneracy_tolerance": basis.degeneracy_tolerance})


def load_model(path) -> Model:
    """Read a JSON model file."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ModelFileError(f"parse error: {err}") from err
    return model_from_dict(data)


def model_to_dict(model: Model) -> dict:
    def pairs(M):
        return [[[float(z.real), float(z.imag)] for z in row] for row in M]

    return {
        "name": model.name,
        "hbar": model.hbar,
        "h0_diagonal": model.basis.diagonal().tolist(),
        "degeneracy_tolerance": model.basis.degeneracy_tolerance,
        "perturbations": {str(p): pairs(model.h_series[p]) for p in range(1, model.h_series.order + 1)},
    }


def save_model(model: Model, path):
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")
