import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpvz import Basis, ad, average, check_homological, ladder, s_map
from qpvz.models import random_model

from conftest import random_hermitian


def basis_16():
    return Basis.from_levels([(0.0, 5), (1.3, 4), (2.9, 7)])


def test_average_of_diagonal_is_identity_map():
    b = Basis.from_levels([(0.0, 2), (1.0, 1)])
    G = np.diag([1.0, 2.0, 3.0]).astype(complex)
    assert np.array_equal(average(G, b), G)


def test_average_anharmonic_diagonal(anh):
    # brute force <j|x^4|j>/4 from the ladder matrices on a larger space
    a, adag = ladder(80)
    x = (a + adag) / math.sqrt(2)
    x4 = np.linalg.matrix_power(x, 4)
    avg = average(anh.h_series[1], anh.basis)
    for j in range(20):
        assert avg[j, j].real == pytest.approx(x4[j, j].real / 4, abs=1e-12)
        assert avg[j, j].real == pytest.approx(3 / 8 * (j * j + j) + 3 / 16, abs=1e-12)
    assert avg[0, 0].real == pytest.approx(3 / 16, abs=1e-15)
    assert np.count_nonzero(avg - np.diag(np.diag(avg))) == 0


def test_average_henon_heiles_vanishes(hh):
    assert np.array_equal(average(hh.h_series[1], hh.basis), np.zeros((hh.dim, hh.dim)))


def test_s_map_zero_on_block_diagonal():
    b = basis_16()
    rng = np.random.default_rng(3)
    G = average(random_hermitian(rng, 16), b)
    assert np.array_equal(s_map(G, b), np.zeros((16, 16)))
    assert np.array_equal(s_map(b.h0(), b), np.zeros((16, 16)))


def test_s_map_anharmonic_element(anh):
    W1 = s_map(anh.h_series[1], anh.basis)
    # <4|x^4/4|0> = sqrt(24)/16, gap E_4 - E_0 = 4
    assert W1[4, 0] == pytest.approx(math.sqrt(24) / (64 * 1j), abs=1e-15)
    assert W1[4, 0].imag == pytest.approx(-0.0765466, abs=1e-7)


def test_s_map_matches_ladder_form_of_generator(anh):
    # W_1 = (1/64i)((a^+)^4 - a^4 + 8 a^+ H0 a^+ - 8 a H0 a) on interior states
    a, adag = ladder(anh.basis.dim - 1)
    H0 = anh.basis.h0()
    W_ladder = (np.linalg.matrix_power(adag, 4) - np.linalg.matrix_power(a, 4)
                + 8 * adag @ H0 @ adag - 8 * a @ H0 @ a) / 64j
    W1 = s_map(anh.h_series[1], anh.basis)
    n = 50
    assert np.allclose(W1[:n, :n], W_ladder[:n, :n], atol=1e-12, rtol=0)


def test_dimension_mismatch():
    b = basis_16()
    with pytest.raises(ValueError):
        average(np.eye(3), b)
    with pytest.raises(ValueError):
        s_map(np.eye(3), b)


def test_homological_diagonal_exact():
    b = basis_16()
    G = np.diag(np.arange(16.0)).astype(complex)
    assert check_homological(G, b) == (0.0, 0.0)


def test_homological_random_and_anharmonic(anh):
    b = basis_16()
    G = random_hermitian(np.random.default_rng(4), 16)
    for G_, b_ in ((G, b), (anh.h_series[1], anh.basis)):
        r1, r2 = check_homological(G_, b_)
        scale = 1 + np.abs(G_).max()
        assert r1 < 1e-10 * scale and r2 < 1e-10 * scale


def test_homological_with_hbar():
    b = basis_16()
    G = random_hermitian(np.random.default_rng(5), 16)
    r1, r2 = check_homological(G, b, hbar=0.37)
    assert r1 < 1e-10 * (1 + np.abs(G).max())


seeds = st.integers(0, 2 ** 32 - 1)


@st.composite
def models(draw):
    seed = draw(seeds)
    levels = draw(st.integers(2, 6))
    dim = draw(st.integers(levels, 14))
    return random_model(seed, dim, levels), np.random.default_rng(seed)


@settings(max_examples=60, deadline=None)
@given(models(), st.floats(0.1, 5.0))
def test_averaging_properties(model_rng, hbar):
    model, rng = model_rng
    b = model.basis
    G, B = random_hermitian(rng, b.dim), random_hermitian(rng, b.dim)
    scale = 1 + np.abs(G).max() + np.abs(B).max()
    G_bar, S = average(G, b), s_map(G, b, hbar)
    # idempotence and annihilation are structural
    assert np.array_equal(average(G_bar, b), G_bar)
    assert np.array_equal(average(S, b), np.zeros_like(S))
    assert np.array_equal(s_map(G_bar, b, hbar), np.zeros_like(S))
    # homological identities
    assert np.abs(ad(S, b.h0(), hbar) - (G_bar - G)).max() <= 1e-10 * scale
    assert np.abs(b.h0() @ G_bar - G_bar @ b.h0()).max() <= 1e-10 * scale
    # Hermiticity and linearity
    assert np.abs(G_bar - G_bar.conj().T).max() == 0
    assert np.abs(S - S.conj().T).max() <= 1e-12 * scale
    assert np.allclose(average(2 * G + B, b), 2 * G_bar + average(B, b), atol=1e-12 * scale)
    assert np.allclose(s_map(2 * G + B, b, hbar), 2 * S + s_map(B, b, hbar), atol=1e-12 * scale)
    # averaged cross term vanishes
    cross = average(ad(s_map(G, b, hbar), average(B, b), hbar), b)
    assert np.abs(cross).max() <= 1e-10 * scale ** 2
