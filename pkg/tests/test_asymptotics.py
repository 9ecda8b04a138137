from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from qlinv.asymptotics import (AmplitudeSample, PhaseModel, l1_printed_form, lj_closed_forms, lj_terms,
                               moment_checks, moment_coefficients, moment_partial_sums, oscillatory_quadrature,
                               phase_F, series_check_sympy, stationary_expand)


def test_moment_leading_coefficients():
    assert moment_coefficients(3) == [Fraction(1), Fraction(-1, 2), Fraction(7, 8), Fraction(-9, 16)]
    assert moment_coefficients(12) == series_check_sympy(12)


def test_moment_report():
    rep = moment_checks(200)
    assert rep.ok and len(rep.coefficients) == 201
    assert moment_partial_sums(2) == [Fraction(1), Fraction(1, 2), Fraction(7, 8)]
    conds = list(rep.condition_numbers.values())
    assert all(b > a for a, b in zip(conds, conds[1:]))


def test_phase_validation():
    with pytest.raises(ValueError):
        PhaseModel([0, 1, 1j])
    with pytest.raises(ValueError):
        PhaseModel([0, 0, 0])


def test_gaussian_expansions_are_exact():
    lam = 9.0
    val, _ = stationary_expand(PhaseModel([0, 0, 1j]), AmplitudeSample([1.0]), lam, 1)
    assert val == pytest.approx(np.sqrt(np.pi / lam), rel=1e-14)
    # int e^{-lam t^2}(1 + t^2) = sqrt(pi/lam) (1 + 1/(2 lam))
    val, terms = stationary_expand(PhaseModel([0, 0, 1j]), AmplitudeSample([1.0, 0, 1.0]), lam, 2)
    assert terms[1] == pytest.approx(0.5)
    assert val == pytest.approx(np.sqrt(np.pi / lam) * (1 + 0.5 / lam), rel=1e-14)


def test_quadrature_against_gaussian():
    ph = PhaseModel([0, 0, 1j], interval=(-6.0, 6.0))
    U = AmplitudeSample([1.0, 0, 1.0], func=lambda t: 1 + t**2)
    assert oscillatory_quadrature(ph, U, 4.0) == pytest.approx(np.sqrt(np.pi / 4) * (1 + 1 / 8), rel=1e-10)


def test_triple_phase_second_derivative():
    for x1, eps in ((0.0, 1.0), (1.0, 0.5), (0.7, 1.3)):
        F2, _ = phase_F(eps, x1)
        s = x1**2 + eps**2
        assert complex(F2.fpp) == pytest.approx(4j * eps / s, rel=1e-14)
        assert F2.im_nonnegative()


def test_closed_forms_match_generic_operator():
    x1, eps = 0.8, 0.6
    F2, _ = phase_F(eps, x1)
    U0, U2, U4 = 1.1, -0.4, 2.3
    U = AmplitudeSample([U0, 0.0, U2 / 2, 0.0, U4 / 24])
    L = lj_terms(F2, U, 3)
    C = lj_closed_forms(eps, x1, U0, U2, U4)
    for a, b in zip(L, C):
        assert complex(a) == pytest.approx(b, rel=1e-12)
    # the displayed L1 carries one sixth of the U0 coefficient
    printed = l1_printed_form(eps, x1, U0, U2)
    s = x1**2 + eps**2
    assert complex(L[1]) - printed == pytest.approx(5 * (3 * x1**2 - eps**2) / (64 * eps * s) * U0, rel=1e-12)


def test_symbolic_generic_l1():
    x1, eps, u0, u2 = sp.symbols("x1 epsilon u0 u2", positive=True)
    s = x1**2 + eps**2
    c2 = 2 * sp.I * eps / s
    c4 = 4 * sp.I * sp.im(sp.expand_complex(-sp.Rational(1, 8) / (x1 - sp.I * eps) ** 3))
    L = lj_terms(PhaseModel([0, 0, c2, 0, c4]), AmplitudeSample([u0, 0, u2 / 2]), 2)
    expect = lj_closed_forms(eps, x1, u0, u2, 0)[1]
    assert sp.simplify(L[1] - expect) == 0


def test_order_guard():
    with pytest.raises(ValueError):
        lj_terms(PhaseModel([0, 0, 1j]), AmplitudeSample([1.0]), 2)
    with pytest.raises(ValueError):
        stationary_expand(PhaseModel([0, 0, 1j]), AmplitudeSample([1.0] * 9), 5.0, 4)
