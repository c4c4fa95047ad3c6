import itertools
from fractions import Fraction

import pytest
from flint import acb, arb
from hypothesis import given, settings, strategies as st

from ekl._num import to_acb, workprec
from ekl.ekseries import EKQuery, RationalPoint, ek_k
from ekl.errors import RankDeficient
from ekl.lattice import (
    ComplexLattice,
    HermitianForm,
    ShellCache,
    covolume,
    dual_lattice,
    dual_residual,
    enumerate_shells,
    same_lattice_residual,
)

from conftest import standard_lattice

H1 = HermitianForm.standard(1)


@pytest.mark.parametrize("R,count", [(1.1, 5), (1.5, 9), (2.1, 13), (2.3, 21), (5.05, 81)])
def test_gaussian_integer_counts(R, count):
    lat = standard_lattice("Q(i)")
    assert len(enumerate_shells(lat, H1, (acb(0),), R).points) == count


@settings(max_examples=20, deadline=None)
@given(st.fractions(min_value=-2, max_value=2, max_denominator=7), st.fractions(min_value=-2, max_value=2, max_denominator=7), st.floats(min_value=0.5, max_value=4.0))
def test_enumeration_matches_brute_force(a, b, R):
    lat = standard_lattice("Q(sqrt-3)")
    z = lat.point([a, b])
    got = set(enumerate_shells(lat, H1, z, R).points)
    zc = complex(z[0].mid())
    g = [complex(v[0].mid()) for v in lat.gens]
    want = set()
    for m, n in itertools.product(range(-8, 9), repeat=2):
        r = abs(zc + m * g[0] + n * g[1])
        if abs(r - R) < 1e-9:
            return  # boundary case is decided at higher precision than this oracle
        if r <= R:
            want.add((m, n))
    assert got == want


@pytest.mark.parametrize("name,vol", [("Q(i)", (1, 1)), ("Q(sqrt-3)", (3, 2))])
def test_covolumes(name, vol):
    with workprec(160):
        assert abs(covolume(standard_lattice(name), H1) - arb(vol[0]).sqrt() / vol[1]) < arb(2) ** -110


@pytest.mark.parametrize("name", ["Q(i)", "Q(sqrt-3)", "Q(zeta5)"])
def test_dual_pairing_and_biduality(name):
    lat = standard_lattice(name)
    H = HermitianForm.standard(lat.d)
    dual = dual_lattice(lat, H)
    assert dual_residual(lat, dual, H) < 2.0**-110
    assert same_lattice_residual(dual_lattice(dual, H), lat, H) < 2.0**-100
    with workprec(160):
        assert abs(covolume(lat, H) * covolume(dual, H) - 1) < arb(2) ** -110


def test_rank_deficient_generators():
    with pytest.raises(RankDeficient):
        ComplexLattice([(acb(1),), (acb(2),)], 128).check_rank()
    with pytest.raises(RankDeficient):
        ComplexLattice([(acb(1),)], 128)


def test_shell_cache_roundtrip(tmp_path):
    lat = standard_lattice("Q(i)")
    c1 = ShellCache(str(tmp_path))
    z = (to_acb(Fraction(1, 3)),)
    a = enumerate_shells(lat, H1, z, 3.0, cache=c1).points
    b = enumerate_shells(lat, H1, z, 3.0, cache=ShellCache(str(tmp_path))).points
    assert a == b and len(a) > 20


@pytest.mark.parametrize("c", [(2, 1), (0, 3), (Fraction(1, 2), -1)])
def test_k_scaling_law(c):
    # K^mu(z, w, s; cL) = conj(c)^mu |c|^(-2s) K^mu(z, w, s; L) with z, w in scaled coordinates
    lat = standard_lattice("Q(i)")
    cc = acb(arb(Fraction(c[0]).numerator) / Fraction(c[0]).denominator, arb(Fraction(c[1]).numerator) / Fraction(c[1]).denominator)
    lc = lat.scaled(cc)
    z = RationalPoint((Fraction(1, 3), Fraction(1, 5)))
    w = RationalPoint((Fraction(2, 7), Fraction(0)))
    with workprec(160):
        s = acb(3) / 2 + acb(0, 1) / 3
        for mu in (0, 1, 3):
            a = ek_k(EKQuery((mu,), H1, z, w, s, lc, 128)).value
            b = ek_k(EKQuery((mu,), H1, z, w, s, lat, 128)).value
            scale = cc.conjugate() ** mu * (cc * cc.conjugate()) ** (-s)
            assert abs(a - scale * b) < arb(2) ** -100 * max(1, abs(complex(a.mid())))
