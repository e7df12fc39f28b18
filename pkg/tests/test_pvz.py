import math

import numpy as np
import pytest

from qpvz import (Basis, HermiticityError, OperatorSeries, ad, apply_T, average, eigen_report, expand,
                  k_truncated, phi_truncated, residual_norms, series_eval)
from qpvz import pvz
from qpvz.invariants import closed_form_second_order, gauge_checks, run_suite
from qpvz.models import random_model, two_mode_states

from conftest import anharmonic_coefficients, henon_heiles_levels, random_hermitian


def zero_model(dim=6):
    basis = Basis.from_levels([(0.0, 2), (1.0, 1), (2.5, 3)])
    return basis, OperatorSeries((basis.h0(), np.zeros((dim, dim)), np.zeros((dim, dim))))


def test_zero_perturbation():
    basis, h = zero_model()
    exp = expand(h, basis, 3)
    assert all(np.array_equal(F, np.zeros((6, 6))) for F in exp.f_terms)
    assert all(np.array_equal(W, np.zeros((6, 6))) for W in exp.w_terms)
    assert np.array_equal(k_truncated(exp, 0.7), basis.h0())
    assert np.array_equal(phi_truncated(exp, 0.7), np.eye(6))
    assert residual_norms(exp, 0.7) == [0.0] * 6


def test_expansion_invariants_random():
    m = random_model(7, 12, 4)
    exp = expand(m.h_series, m.basis, 4)
    assert np.array_equal(exp.K(0), m.basis.h0())
    assert np.array_equal(exp.Phi(0), np.eye(12))
    for p in range(1, 5):
        assert np.array_equal(average(exp.W(p), m.basis), np.zeros((12, 12)))
        assert np.array_equal(exp.K(p), average(exp.F(p), m.basis))
    assert np.array_equal(exp.F(1), m.h_series[1])


def test_anharmonic_order2_terms(anh):
    exp = expand(anh.h_series, anh.basis, 2)
    for j in range(40):
        _, c1, c2 = anharmonic_coefficients(j)
        assert exp.K(1)[j, j].real == pytest.approx(c1, abs=1e-12)
        assert 0.5 * exp.K(2)[j, j].real == pytest.approx(c2, abs=1e-9)
    assert np.count_nonzero(exp.K(2) - np.diag(np.diag(exp.K(2)))) == 0


def test_anharmonic_k2_relation(anh):
    # K_2 = average(ad(W_1, H_1)) when H_2 = 0 and K_1 is diagonal
    exp = expand(anh.h_series, anh.basis, 2)
    K2 = average(ad(exp.W(1), anh.h_series[1]), anh.basis)
    assert 0.5 * K2[0, 0].real == pytest.approx(-21 / 128, abs=1e-14)
    assert np.allclose(K2, exp.K(2), atol=1e-10)


def _two_mode_ladders(cutoff):
    pad = cutoff + 4
    a = np.diag(np.sqrt(np.arange(1, pad + 1.0)), 1)
    eye = np.eye(pad + 1)
    a1, a2 = np.kron(a, eye), np.kron(eye, a)
    sel = [n1 * (pad + 1) + n2 for n1, n2 in two_mode_states(cutoff)]
    return a1, a2, sel


def test_henon_heiles_k2_operator(hh):
    alpha = beta = 0.1
    exp = expand(hh.h_series, hh.basis, 2)
    assert np.array_equal(exp.K(1), np.zeros((hh.dim, hh.dim)))
    a1, a2, sel = _two_mode_ladders(14)
    N1, N2 = a1.T @ a1, a2.T @ a2
    X = a1 @ a1 @ a2.T @ a2.T + a2 @ a2 @ a1.T @ a1.T
    one = np.eye(N1.shape[0])
    K2 = (-(4 * N1 @ N2 / 3 + 5 / 12 * one + 5 * N1 @ N1 / 6 + X + 2 * N2 / 3 + 3 * N1 / 2) * alpha ** 2
          - (15 * N2 / 2 + 11 / 4 * one + 15 * N2 @ N2 / 2) * beta ** 2
          - (1.5 * one + 6 * N1 @ N2 - X / 2 + 3 * N2 + 3 * N1) * alpha * beta)
    K2 = K2[np.ix_(sel, sel)]
    interior = [i for i, (n1, n2) in enumerate(two_mode_states(14)) if n1 + n2 <= 8]
    ours = exp.K(2)[np.ix_(interior, interior)]
    assert np.allclose(ours, K2[np.ix_(interior, interior)], atol=1e-12, rtol=0)
    assert exp.K(2)[0, 0].real == pytest.approx(2 * (-11 / 8 * 0.01 - 5 / 24 * 0.01 - 3 / 4 * 0.01), abs=1e-14)


def test_apply_T():
    m = random_model(11, 8, 3)
    exp = expand(m.h_series, m.basis, 3)
    H1 = m.h_series[1]
    assert np.array_equal(apply_T(0, 1, exp), H1)
    assert np.allclose(apply_T(1, 1, exp), ad(exp.W(1), H1), atol=1e-13)
    unrolled = ad(exp.W(1), ad(exp.W(1), H1)) + ad(exp.W(2), H1)
    assert np.allclose(apply_T(2, 1, exp), unrolled, atol=1e-12)
    assert (2, 1) in exp.t_cache
    with pytest.raises(ValueError):
        apply_T(4, 1, exp)


def test_k_truncated_examples(anh, hh):
    exp = expand(anh.h_series, anh.basis, 2)
    assert np.array_equal(k_truncated(exp, 0.0), anh.basis.h0())
    assert k_truncated(exp, 1.0)[0, 0].real == pytest.approx(0.5 + 3 / 16 - 21 / 128, abs=1e-12)
    assert 0.5 + 3 / 16 - 21 / 128 == 0.5234375
    exp = expand(hh.h_series, hh.basis, 2)
    assert k_truncated(exp, 1.0)[0, 0].real == pytest.approx(1 - (11 / 8 + 5 / 24 + 3 / 4) * 0.01, abs=1e-12)


def test_phi_truncated_low_orders():
    m = random_model(5, 9, 4)
    hbar = 0.7
    h = OperatorSeries(m.h_series.coefficients, hbar)
    eps = 0.13
    exp1 = expand(h, m.basis, 1)
    exp2 = expand(h, m.basis, 2)
    W1, W2 = exp2.W(1), exp2.W(2)
    assert np.array_equal(phi_truncated(exp1, 0.0), np.eye(9))
    assert np.allclose(phi_truncated(exp1, eps), np.eye(9) - eps * (1j / hbar) * W1, atol=1e-14)
    iW1 = (1j / hbar) * W1
    expected = np.eye(9) - eps * iW1 + eps ** 2 / 2 * (iW1 @ iW1 - (1j / hbar) * W2)
    assert np.allclose(phi_truncated(exp2, eps), expected, atol=1e-13)


def test_eigen_report_nondegenerate(anh):
    exp = expand(anh.h_series, anh.basis, 2)
    rep = eigen_report(exp, 0.01)
    K = k_truncated(exp, 0.01)
    for lv in rep.levels:
        assert np.array_equal(lv.mixing, np.ones((1, 1)))
        assert lv.eigenvalues[0] == K[lv.level, lv.level].real
    assert rep.levels[0].eigenvalues[0] == pytest.approx(0.5 + 3 / 16 * 0.01 - 21 / 128 * 1e-4, abs=1e-15)
    assert rep.levels[0].eigenvalues[0] == pytest.approx(0.50185859375, abs=1e-15)
    assert np.allclose(np.linalg.norm(rep.vectors, axis=0), 1.0, atol=1e-10)


def test_eigen_report_henon_heiles_degenerate_block(hh):
    exp = expand(hh.h_series, hh.basis, 2)
    rep = eigen_report(exp, 1.0)
    ref = henon_heiles_levels(0.1, 0.1)
    level2 = sorted([ref["(2,1)"], ref["(2,+)"], ref["(2,-)"]])
    assert np.allclose(rep.levels[2].eigenvalues, level2, atol=1e-12, rtol=0)
    for lv in rep.levels:
        c = lv.mixing
        assert np.allclose(c.conj().T @ c, np.eye(c.shape[0]), atol=1e-10)
        assert np.all(np.diff(lv.eigenvalues) >= 0)


def test_residuals(anh):
    exp = expand(anh.h_series, anh.basis, 2)
    assert np.all(eigen_report(exp, 0.0).residuals == 0)
    r1 = np.array(residual_norms(exp, 1e-2))[:3]
    r2 = np.array(residual_norms(exp, 2e-2))[:3]
    assert np.all((r2 / r1 > 7.0) & (r2 / r1 < 9.0))


def test_expand_rejects_bad_input():
    basis = Basis.from_levels([(0.0, 1), (1.0, 1)])
    bad = np.array([[0, 1], [0, 0]], dtype=complex)
    with pytest.raises(HermiticityError):
        expand(OperatorSeries((basis.h0(), bad)), basis, 1)
    with pytest.raises(ValueError):
        expand(OperatorSeries((np.eye(3),)), basis, 1)
    with pytest.raises(ValueError):
        expand(OperatorSeries((np.diag([0.0, 2.0]),)), basis, 1)


def test_invariant_failure_is_distinct(monkeypatch):
    m = random_model(3, 6, 3)
    monkeypatch.setattr(pvz, "average", lambda G, basis: G)
    with pytest.raises(pvz.ExpansionError):
        expand(m.h_series, m.basis, 1)


def test_closed_form_intermediate_sum():
    for trial in range(10):
        m = random_model(99, 7, 7, trial, degenerate=False)
        exp = expand(m.h_series, m.basis, 2)
        ours = 0.5 * np.diag(exp.K(2)).real
        ref = closed_form_second_order(m.h_series, m.basis)
        assert np.allclose(ours, ref, atol=1e-12 * (1 + np.abs(ref).max()), rtol=0)


def test_gauge_invariance():
    m = random_model(8, 10, 6)
    checks = {c.name: c for c in gauge_checks(m, seed=1)}
    assert all(c.passed for c in checks.values())
    assert checks["gauge_invariance_nondegenerate"].residual <= 1e-10


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_structural_suite(order):
    for trial in range(5):
        m = random_model(13, 12, 5, trial)
        failed = [c for c in run_suite(m, order) if not c.passed]
        assert not failed
