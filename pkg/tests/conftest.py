import math

import numpy as np
import pytest

from qpvz import anharmonic, henon_heiles

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def anharmonic_coefficients(j):
    """Eigenvalue coefficients of the x^4/4 oscillator through eps^2."""
    return (
        j + 0.5,
        3 / 8 * (j * j + j) + 3 / 16,
        -(17 / 64 * j ** 3 + 51 / 128 * j ** 2 + 59 / 128 * j + 21 / 128),
    )


def henon_heiles_levels(alpha, beta):
    """Closed-form second-order Henon-Heiles eigenvalues keyed by label."""
    a, b = alpha, beta
    root = math.sqrt(2025 * b ** 4 - 446 * b ** 2 * a ** 2 - 16 * a ** 3 * b + 41 * a ** 4) / 4
    base = 3 - 101 * b ** 2 / 8 - 15 * b * a / 4 - 17 * a ** 2 / 8
    return {
        "(0,1)": 1 - 11 * b ** 2 / 8 - 5 * a ** 2 / 24 - 3 * b * a / 4,
        "(1,1)": 2 - 11 * b ** 2 / 8 - 11 * a ** 2 / 8 - 9 * b * a / 4,
        "(1,2)": 2 - 71 * b ** 2 / 8 - 13 * a ** 2 / 24 - 9 * b * a / 4,
        "(2,1)": 3 - 71 * b ** 2 / 8 - 19 * a ** 2 / 8 - 27 * b * a / 4,
        "(2,+)": base + root,
        "(2,-)": base - root,
    }


def random_hermitian(rng, dim):
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return A + A.conj().T


@pytest.fixture(scope="session")
def anh():
    return anharmonic(60)


@pytest.fixture(scope="session")
def hh():
    return henon_heiles(14, 0.1, 0.1)
