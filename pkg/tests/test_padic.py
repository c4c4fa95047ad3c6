import random
from fractions import Fraction

import pytest
from flint import arb

from ekl._num import workprec
from ekl.cyclo import cyclotomic_field
from ekl.errors import NotOrdinary
from ekl.field import PrimeData, principal_ideal, unit_ideal
from ekl.hecke import InfinityType, lemniscatic_periods, make_character, total_L
from ekl.padic import (
    char_pattern,
    check_ordinary,
    decompose_conductor,
    euler_factors,
    extract_chi_fin,
    interpolated_value,
    inverse_partial_fourier,
    local_factor,
    measure_consistency_check,
    partial_fourier,
    rho_constant,
    rho_delta,
    rho_pairing,
)


@pytest.fixture(scope="module")
def ps5(qi):
    return check_ordinary(qi, 5, 1)


@pytest.fixture(scope="module")
def hurwitz(qi):
    return make_character(qi, unit_ideal(qi.field), InfinityType((0,), (4,)))


@pytest.fixture(scope="module")
def twisted(qi):
    # conductor (2+i), alpha = 5, finite part psi(3) = i on (Z[i]/(2+i))^x = (Z/5)^x
    F = qi.field
    f = principal_ideal(F, F.elt([2, 1]), "(2+i)")
    E = cyclotomic_field(4)
    dlog = {1: 0, 3: 1, 4: 2, 2: 3}

    def psi(g):
        r = f.reduce(g)
        k = next(a for a in range(1, 5) if f.reduce(F.scalar(a)) == r)
        return E.i() ** dlog[k]

    return make_character(qi, f, InfinityType((0,), (5,)), finite=psi, E=E)


def random_rho(ps, seed):
    rng = random.Random(seed)
    E = ps.E
    return {k: E(Fraction(rng.randint(-9, 9), rng.randint(1, 9))) + E.zeta(rng.randrange(ps.q)) for k in ps.domain()}


@pytest.mark.parametrize("seed", range(3))
def test_fourier_inversion_and_parseval(ps5, seed):
    rho = random_rho(ps5, seed)
    PR = partial_fourier(rho, ps5)
    back = inverse_partial_fourier(PR, ps5)
    assert all(back[k] == rho[k] for k in rho)
    E = ps5.E
    lhs = sum((x * x.conj() for x in PR.values()), E.zero())
    rhs = sum((x * x.conj() for x in rho.values()), E.zero()) * Fraction(1, ps5.q**ps5.d)
    assert lhs == rhs


def test_fourier_of_constant_is_pattern(ps5):
    PR = partial_fourier(rho_constant(ps5), ps5)
    for (s, S), v in PR.items():
        assert v == (ps5.E.one() if all(x == 0 for x in S) else ps5.E.zero())


def test_char_pattern_values(ps5):
    assert char_pattern(ps5, (0,)) == Fraction(4, 5)
    assert char_pattern(ps5, (1,)) == Fraction(-1, 5)


def test_nonordinary_primes(qi):
    F = qi.field
    with pytest.raises(NotOrdinary, match="own conjugate"):
        check_ordinary(qi, 3, 1, [PrimeData(3, principal_ideal(F, F.scalar(3)), F.scalar(3), 2, True)])
    g = F.elt([1, 1])
    with pytest.raises(NotOrdinary, match="ramified"):
        check_ordinary(qi, 2, 1, [PrimeData(2, principal_ideal(F, g), g, 1, True)] * 2)


def test_hurwitz_local_factor_and_euler_factors(hurwitz, ps5):
    lf = local_factor(hurwitz, ps5)
    assert lf.value == ps5.E.one() or lf.value == 1
    e1, e2 = euler_factors(hurwitz, ps5)
    E4 = cyclotomic_field(4)
    assert e1 == E4.gaussian(Fraction(12, 5), Fraction(-24, 5))
    assert e2 == E4.gaussian(Fraction(632, 625), Fraction(-24, 625))


def test_interpolated_value_is_exact_product(hurwitz, ps5):
    iv = interpolated_value(hurwitz, lemniscatic_periods(128), ps5, recognize=10**9)
    assert iv.exact_factor == cyclotomic_field(4).gaussian(Fraction(7008, 3125), Fraction(-15456, 3125))
    # the numerically recognized value is the exact factor times the core 1/10
    assert iv.recognition.candidate == (Fraction(3504, 15625), Fraction(-7728, 15625))


def test_twisted_local_factor_independent_of_decomposition(twisted, ps5):
    cf = extract_chi_fin(twisted, ps5)
    decs = decompose_conductor(twisted, ps5)
    assert len(decs) == 4
    vals = [local_factor(twisted, ps5, d, cf).value for d in decs]
    assert all(v == vals[0] for v in vals)
    assert not vals[0].is_zero()


def test_decompositions_at_level_two(hurwitz, qi):
    F = qi.field
    ch3 = hurwitz.imprimitive(principal_ideal(F, F.scalar(3), "(3)"))
    ps = check_ordinary(qi, 5, 2)
    a = decompose_conductor(ch3, ps, ((2,), (0,)))
    b = decompose_conductor(ch3, ps, ((1,), (1,)))
    assert a[0].c == F.elt([4, -3])
    assert b[0].c == F.scalar(-5)
    # c = 1 mod (3) pins the unit, so each exponent choice has one decomposition
    for decs in (a, b):
        vals = [local_factor(ch3, ps, d).value for d in decs]
        assert all(v == vals[0] for v in vals)


def test_euler_strip_identity(hurwitz, ps5):
    big = hurwitz.imprimitive(ps5.sigmabar_primes[0].ideal)
    _, e2 = euler_factors(hurwitz, ps5)
    L1, L2 = total_L(hurwitz), total_L(big)
    with workprec(160):
        assert abs(e2.to_acb(128) * L1.value - L2.value) < arb(2) ** -90


@pytest.mark.parametrize("which", ["constant", "pairing", "delta"])
def test_measure_consistency(qi, ps5, which):
    rho = {"constant": rho_constant(ps5), "pairing": rho_pairing(ps5, (1,)), "delta": rho_delta(ps5)}[which]
    rep = measure_consistency_check(qi, ps5, rho, qi.field.elt([Fraction(1, 3), 0]))
    assert rep.residual + rep.error < 2.0**-80
