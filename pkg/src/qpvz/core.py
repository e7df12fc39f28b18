"""Bases, operator series and the elementary commutator algebra.

Operators are plain dense complex ``numpy`` arrays laid out in the matrix
ordering of a :class:`Basis`. Nothing here mutates its inputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Sequence

import numpy as np

HERMITIAN_RTOL = 1e-10


class BasisError(ValueError):
    """Raised for diagonals that cannot be grouped into clean levels."""


class HermiticityError(ValueError):
    """Raised when an operator that must be self-adjoint is not."""

    def __init__(self, message, entry=None):
        super().__init__(message)
        self.entry = entry


@dataclass(frozen=True)
class Basis:
    """Labeled discrete spectrum of an unperturbed Hamiltonian.

    Parameters
    ----------
    energies : array of float
        Level energies, strictly increasing.
    positions : tuple of tuple of int
        ``positions[j][alpha]`` is the matrix index of state ``|j, alpha>``.
    degeneracy_tolerance : float
        Tolerance used when the levels were grouped from a raw diagonal.
    """

    energies: np.ndarray
    positions: tuple
    degeneracy_tolerance: float = 0.0
    labels: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        energies = np.asarray(self.energies, dtype=float)
        if energies.ndim != 1 or energies.size == 0:
            raise BasisError("energies must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(energies)):
            raise BasisError("energies must be finite")
        if np.any(np.diff(energies) <= self.degeneracy_tolerance):
            raise BasisError(
                "level energies must be strictly increasing with gaps above "
                f"the degeneracy tolerance {self.degeneracy_tolerance:g}"
            )
        positions = tuple(tuple(int(i) for i in p) for p in self.positions)
        if len(positions) != energies.size or any(len(p) == 0 for p in positions):
            raise BasisError("every level needs at least one position")
        flat = sorted(i for p in positions for i in p)
        if flat != list(range(len(flat))):
            raise BasisError("positions must be a bijection onto 0..dim-1")
        labels = np.empty(len(flat), dtype=int)
        for j, p in enumerate(positions):
            labels[list(p)] = j
        energies.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_levels(cls, levels, degeneracy_tolerance=0.0):
        """Contiguous basis from ``[(energy, degeneracy), ...]``."""
        energies, positions, start = [], [], 0
        for energy, d in levels:
            if int(d) < 1:
                raise BasisError("degeneracies must be positive")
            energies.append(energy)
            positions.append(tuple(range(start, start + int(d))))
            start += int(d)
        return cls(np.array(energies, dtype=float), tuple(positions), degeneracy_tolerance)

    @property
    def dim(self) -> int:
        return self.labels.size

    @property
    def n_levels(self) -> int:
        return self.energies.size

    @property
    def degeneracies(self) -> tuple:
        return tuple(len(p) for p in self.positions)

    @property
    def levels(self) -> list:
        return list(zip(self.energies.tolist(), self.degeneracies))

    def index(self, j: int, alpha: int = 0) -> int:
        return self.positions[j][alpha]

    def level_of(self, i: int) -> tuple:
        """Inverse of :meth:`index`: matrix index to ``(j, alpha)``."""
        j = int(self.labels[i])
        return j, self.positions[j].index(i)

    def diagonal(self) -> np.ndarray:
        """Unperturbed energies in matrix order."""
        return self.energies[self.labels]

    def h0(self) -> np.ndarray:
        return np.diag(self.diagonal()).astype(complex)

    def block(self, A: np.ndarray, j: int) -> np.ndarray:
        idx = list(self.positions[j])
        return A[np.ix_(idx, idx)]


def default_tolerance(diagonal) -> float:
    scale = float(np.max(np.abs(diagonal))) if len(diagonal) else 0.0
    return 1e-9 * max(1.0, scale)


def make_basis(diagonal: Sequence[float], tolerance: float | None = None) -> Basis:
    """Group a raw diagonal into degenerate levels.

    Sorted neighbours closer than ``tolerance`` are merged transitively; each
    group becomes one level at the group mean. A group whose total spread
    exceeds the tolerance is rejected as ill-conditioned.
    """
    diag = np.asarray(diagonal, dtype=float)
    if diag.ndim != 1 or diag.size == 0:
        raise BasisError("diagonal must be a non-empty 1-d sequence")
    bad = np.flatnonzero(~np.isfinite(diag))
    if bad.size:
        raise BasisError(f"non-finite energy at index {int(bad[0])}")
    if tolerance is None:
        tolerance = default_tolerance(diag)
    if not tolerance >= 0:
        raise BasisError("tolerance must be >= 0")

    order = np.argsort(diag, kind="stable")
    groups = [[int(order[0])]]
    for prev, cur in zip(order[:-1], order[1:]):
        if diag[cur] - diag[prev] <= tolerance:
            groups[-1].append(int(cur))
        else:
            groups.append([int(cur)])

    energies = []
    for g in groups:
        values = diag[g]
        if values.max() - values.min() > tolerance:
            raise BasisError(
                f"ill-conditioned degeneracy group at indices {g}: spread "
                f"{values.max() - values.min():.3g} exceeds tolerance {tolerance:.3g}"
            )
        energies.append(values.mean())
    return Basis(np.array(energies), tuple(tuple(g) for g in groups), float(tolerance))


def hermiticity_defect(A: np.ndarray) -> float:
    return float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0


def max_abs(A: np.ndarray) -> float:
    return float(np.max(np.abs(A))) if A.size else 0.0


def check_hermitian(A: np.ndarray, name: str = "operator", rtol: float = HERMITIAN_RTOL):
    """Raise :class:`HermiticityError` naming the worst offending entry."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {A.shape}")
    defect = np.abs(A - A.conj().T)
    if defect.size and defect.max() > rtol * (1.0 + max_abs(A)):
        i, k = np.unravel_index(int(np.argmax(defect)), defect.shape)
        i, k = (int(i), int(k)) if i < k else (int(k), int(i))
        raise HermiticityError(
            f"{name} is not Hermitian: entry ({i},{k}) differs from the "
            f"conjugate of ({k},{i}) by {defect.max():.3g}",
            entry=(i, k),
        )


def _check_pair(A, B):
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``AB - BA``."""
    A, B = np.asarray(A), np.asarray(B)
    _check_pair(A, B)
    return A @ B - B @ A


def ad(F: np.ndarray, G: np.ndarray, hbar: float = 1.0) -> np.ndarray:
    """Adjoint action ``(i/hbar) [F, G]``; Hermitian for Hermitian F, G."""
    if not hbar > 0:
        raise ValueError("hbar must be positive")
    return (1j / hbar) * commutator(F, G)


@dataclass(frozen=True)
class OperatorSeries:
    """Coefficients ``A_p`` of ``sum_p eps**p / p! * A_p``."""

    coefficients: tuple
    hbar: float = 1.0

    def __post_init__(self):
        coeffs = tuple(np.array(c, dtype=complex) for c in self.coefficients)
        if not coeffs:
            raise ValueError("an operator series needs at least one coefficient")
        shape = coeffs[0].shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise ValueError(f"coefficients must be square matrices, got {shape}")
        for p, c in enumerate(coeffs):
            if c.shape != shape:
                raise ValueError(f"coefficient {p} has shape {c.shape}, expected {shape}")
            c.setflags(write=False)
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def dim(self) -> int:
        return self.coefficients[0].shape[0]

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def __getitem__(self, p: int) -> np.ndarray:
        """Coefficient ``A_p``; zero beyond the stored order."""
        if p < len(self.coefficients):
            return self.coefficients[p]
        return np.zeros_like(self.coefficients[0])

    def __call__(self, epsilon: float) -> np.ndarray:
        return series_eval(self, epsilon)


def series_eval(S: OperatorSeries, epsilon: float) -> np.ndarray:
    """``sum_p eps**p / p! * A_p`` with exact factorial weights."""
    out = S.coefficients[0].copy()
    for p, A in enumerate(S.coefficients[1:], start=1):
        out = out + (epsilon ** p / factorial(p)) * A
    return out
