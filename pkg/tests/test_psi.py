import numpy as np
import pytest

from onebit_mimo.psi import PsiEvaluator, get_evaluator

# E_g[Phi(-g sqrt(10)) Phi(g sqrt(10))], mpmath adaptive quadrature, 40 digits.
PSI_1_1_10 = 0.068388825912936393541
# E_g[Phi(-g sqrt(0.5))^2 Phi(g sqrt(0.5))], same oracle.
PSI_2_1_05 = 0.097956638007651817543


def test_empty_product_is_one():
    for snr in (0.0, 1.0, 50.0):
        assert abs(PsiEvaluator(snr).psi(0, 0) - 1.0) < 1e-14


def test_half_by_symmetry():
    for snr in (0.01, 1.0, 100.0):
        ev = PsiEvaluator(snr)
        assert abs(ev.psi(1, 0) - 0.5) < 1e-14
        assert abs(ev.psi(0, 1) - 0.5) < 1e-14


def test_zero_snr_powers_of_two():
    ev = PsiEvaluator(0.0)
    for a, b in [(1, 1), (3, 2), (10, 0), (7, 13)]:
        assert abs(ev.psi(a, b) - 0.5 ** (a + b)) < 1e-13


def test_against_adaptive_quadrature_oracle():
    assert abs(PsiEvaluator(10.0).psi(1, 1) - PSI_1_1_10) < 1e-12
    assert abs(PsiEvaluator(0.5).psi(2, 1) - PSI_2_1_05) < 1e-12


def test_symmetry_in_arguments():
    ev = PsiEvaluator(2.0)
    for a, b in [(0, 5), (2, 3), (7, 1)]:
        assert abs(ev.psi(a, b) - ev.psi(b, a)) < 1e-14


def test_recursion_identity_sample():
    # psi(l+1, P-l) + psi(l, P-l+1) = psi(l, P-l)
    for snr in (0.1, 1.0, 10.0):
        ev = PsiEvaluator(snr)
        for P in (1, 5, 17):
            for l in range(P + 1):
                lhs = ev.psi(l + 1, P - l) + ev.psi(l, P - l + 1)
                assert abs(lhs - ev.psi(l, P - l)) < 1e-13


def test_bounds_and_finiteness():
    ev = PsiEvaluator(1e6)
    for a, b in [(0, 1000), (500, 500), (1000, 0)]:
        lp = ev.log_psi(a, b)
        assert np.isfinite(lp) or lp == -np.inf
        p = ev.psi(a, b)
        assert 0.0 <= p <= 1.0 + 1e-12


def test_negative_arguments_rejected():
    ev = PsiEvaluator(1.0)
    with pytest.raises(ValueError):
        ev.psi(-1, 0)
    with pytest.raises(ValueError):
        PsiEvaluator(-1.0)


def test_evaluator_cache_reuses_instances():
    assert get_evaluator(3.25) is get_evaluator(3.25)
