from fractions import Fraction

import pytest
from flint import acb, arb

from ekl._num import lemniscate_constant, workprec
from ekl.cyclo import cyclotomic_field
from ekl.errors import CoprimalityViolation, InconsistentCharacter, NotCritical
from ekl.field import principal_ideal, unit_ideal
from ekl.hecke import (
    InfinityType,
    alternate_reps,
    denominators_supported_on,
    is_critical,
    lemniscatic_legendre_residual,
    lemniscatic_periods,
    make_character,
    normalized_L,
    recognize_algebraic,
    regularizer,
    total_L,
)

from conftest import field_config


@pytest.fixture(scope="module")
def hurwitz(qi):
    return make_character(qi, unit_ideal(qi.field), InfinityType((0,), (4,)), label="hurwitz")


@pytest.fixture(scope="module")
def hurwitz_L(hurwitz):
    return total_L(hurwitz)


def ideal(cfg, g):
    return principal_ideal(cfg.field, cfg.field.elt(g))


def test_character_value_on_principal_ideal(hurwitz, qi):
    # chi((lambda)) = lambda^-4 on Z[i] with trivial conductor
    v = hurwitz(ideal(qi, [2, 1]))
    E = cyclotomic_field(4)
    assert v == (E.gaussian(2, 1) ** 4).inverse()


def test_wrong_weight_is_inconsistent(qi):
    with pytest.raises(InconsistentCharacter) as ei:
        make_character(qi, unit_ideal(qi.field), InfinityType((0,), (2,)))
    assert "principal_ideal" in ei.value.details


def test_noncritical_refused(qi):
    chi = make_character(qi, unit_ideal(qi.field), InfinityType((4,), (0,)))
    with pytest.raises(NotCritical):
        total_L(chi)


def test_total_L_is_varpi4_over_60(hurwitz_L):
    with workprec(160):
        assert abs(hurwitz_L.value - lemniscate_constant() ** 4 / 60) < arb(2) ** -120


def test_alternate_representatives_agree(hurwitz, hurwitz_L, qi):
    L2 = total_L(hurwitz, alternate_reps(hurwitz, qi.field.elt([2, 1])))
    with workprec(160):
        assert abs(L2.value - hurwitz_L.value) < arb(2) ** -120


def test_period_legendre_relation():
    assert lemniscatic_legendre_residual(128) < 2.0**-110
    per = lemniscatic_periods(128)
    assert per.duality_residual(128) < 2.0**-110


def test_core_and_regularized_values(hurwitz, hurwitz_L, qi):
    per = lemniscatic_periods(128)
    core = normalized_L(hurwitz, per, raw=hurwitz_L, recognize=10**6)
    assert core.recognition.found and core.recognition.candidate == (Fraction(1, 10), 0)
    n = normalized_L(hurwitz, per, ideal(qi, [2, 1]), raw=hurwitz_L, recognize=10**6)
    assert n.recognition.candidate == (Fraction(-66, 625), Fraction(-12, 625))
    # chained: exact core times exact regularizer
    reg, _ = regularizer(hurwitz, ideal(qi, [2, 1]), None)
    assert reg * Fraction(1, 10) == cyclotomic_field(4).gaussian(Fraction(-66, 625), Fraction(-12, 625))


@pytest.mark.parametrize("alpha,core,value", [
    (8, Fraction(12, 5), (Fraction(-4725504, 1953125), Fraction(16128, 1953125))),
    (12, Fraction(24192, 65), (Fraction(-454195703808, 1220703125), Fraction(76640256, 1220703125))),
])
def test_higher_weight_recognition(qi, alpha, core, value):
    chi = make_character(qi, unit_ideal(qi.field), InfinityType((0,), (alpha,)))
    per = lemniscatic_periods(160)
    L = total_L(chi)
    c = normalized_L(chi, per, raw=L, recognize=10**8)
    assert c.recognition.candidate == (core, 0)
    n = normalized_L(chi, per, ideal(qi, [2, 1]), ideal(qi, [1, 2]), raw=L, recognize=10**13)
    assert n.recognition.candidate == value
    assert n.recognition.residual < 2.0**-64
    assert denominators_supported_on(n.recognition, [2, 5])


def test_regularizer_needs_coprime_c(qi):
    hur = make_character(qi, unit_ideal(qi.field), InfinityType((0,), (4,)))
    with pytest.raises(CoprimalityViolation):
        regularizer(hur, ideal(qi, [2, 1]), ideal(qi, [2, 1]))


def test_raw_L_invariant_under_lattice_scaling(hurwitz, hurwitz_L):
    # the L-value does not see the period normalisation; the core scales by Omega^-alpha
    per = lemniscatic_periods(128)
    with workprec(160):
        c = acb(2, 1)
    a = normalized_L(hurwitz, per, raw=hurwitz_L).normalized
    b = normalized_L(hurwitz, per.scaled(c, 128), raw=hurwitz_L).normalized
    with workprec(160):
        assert abs(b * c**4 - a) < arb(2) ** -110


def test_zeta8_fiber_criticality():
    cfg = field_config("Q(zeta8)")
    assert is_critical(InfinityType((0, 0), (3, 3)), cfg.cm).critical
    bad = is_critical(InfinityType((0, 0), (3, 4)), cfg.cm)
    assert bad.status == "invalid" and "fiber" in bad.reason
    assert is_critical(InfinityType((1, 1), (0, 0)), cfg.cm).status == "hecke_type_only"


def test_zeta5_weight_condition():
    cfg = field_config("Q(zeta5)")
    assert is_critical(InfinityType((0, 0), (2, 3)), cfg.cm).status == "invalid"
    assert is_critical(InfinityType((1, 0), (3, 2)), cfg.cm).critical


@pytest.mark.parametrize("x,bound,want", [("0.1", 100, Fraction(1, 10)), ("-2.4", 10, Fraction(-12, 5))])
def test_recognize_rationals(x, bound, want):
    with workprec(160):
        rec = recognize_algebraic(acb(arb(x)), bound, "rational", 128)
    assert rec.found and rec.candidate == (want, 0)


def test_recognize_rejects_transcendental():
    with workprec(160):
        rec = recognize_algebraic(acb(arb.pi()), 10**6, "rational", 128)
    assert not rec.found
