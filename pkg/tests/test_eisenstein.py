import random
from fractions import Fraction

import pytest
from flint import acb, arb

from ekl._num import lemniscate_constant, workprec
from ekl.eisenstein import EisQuery, OrbitSet, e_series, e_series_direct, verify_distribution
from ekl.ekseries import EKQuery, ek_k
from ekl.field import embed_ideal, principal_ideal, trivial_unit_group, unit_ideal
from ekl.field import UnitGroupSpec
from ekl.lattice import HermitianForm

from conftest import field_config, standard_lattice

H1 = HermitianForm.standard(1)


def orbit(cfg, reps, gamma, ideal=None):
    F = cfg.field
    ideal = ideal or unit_ideal(F)
    return OrbitSet.from_reps(F, ideal, [F.elt(r) for r in reps], gamma)


def minus_one_group(cfg):
    F = cfg.field
    return UnitGroupSpec((F.scalar(-1),), 2, cfg.units.torsion_order // 2, None, "+-1").validate(F)


@pytest.mark.parametrize("k", range(10))
def test_d1_reduction_to_k(k):
    rng = random.Random(100 + k)
    cfg = field_config("Q(i)" if k % 2 else "Q(sqrt-3)")
    lat = standard_lattice(cfg.field.name)
    gamma = trivial_unit_group(cfg.field)
    N = rng.choice([2, 3, 5, 7])
    t = [Fraction(rng.randrange(1, N), N), Fraction(rng.randrange(N), N)]
    beta, alpha = rng.randint(0, 2), rng.randint(1, 4)
    with workprec(160):
        s = acb(12 - alpha) + acb(0, rng.randint(-3, 3)) / 4
    O = orbit(cfg, [t], gamma)
    q = EisQuery((beta,), (alpha,), O, s, lat, gamma, 128)
    direct = e_series_direct(q)
    kval = ek_k(EKQuery((beta + alpha,), H1, O.points[0], (acb(0),), s + alpha, lat, 128))
    with workprec(160):
        assert abs(direct.value - kval.value) < arb(2) ** -100 * max(1, abs(complex(kval.value.mid())))
        assert abs(e_series(q).value - kval.value) < arb(2) ** -100 * max(1, abs(complex(kval.value.mid())))


def test_change_of_group_index_is_exact(qi):
    lat = standard_lattice("Q(i)")
    full, pm, triv = qi.units, minus_one_group(qi), trivial_unit_group(qi.field)
    # one Gamma-stable set, regrouped into orbits of each subgroup
    pts = orbit(qi, [[Fraction(1, 3), 0], [0, 0]], full).points
    vals = {}
    for name, g in (("full", full), ("pm", pm), ("triv", triv)):
        O = OrbitSet.from_reps(qi.field, unit_ideal(qi.field), pts, g)
        assert len(O.points) == 5
        vals[name] = e_series(EisQuery((0,), (4,), O, acb(0), lat, g, 128)).value
    with workprec(160):
        for name, idx in (("pm", 2), ("triv", 4)):
            ratio = vals[name] / vals["full"]
            assert abs(ratio - idx) < arb(2) ** -110


def test_hurwitz_value_on_period_lattice(qi):
    F = qi.field
    with workprec(160):
        w = lemniscate_constant()
    lat = embed_ideal(F, unit_ideal(F), qi.cm, (acb(w),))
    triv = trivial_unit_group(F)
    v = e_series(EisQuery((0,), (4,), orbit(qi, [[0, 0]], triv), acb(0), lat, triv, 128)).value
    with workprec(160):
        assert abs(v - acb(1) / 15) < arb(2) ** -110


def test_torsion_forces_zero(qi):
    lat = standard_lattice("Q(i)")
    v = e_series(EisQuery((0,), (2,), orbit(qi, [[0, 0]], qi.units), acb(0), lat, qi.units, 128))
    assert v.value == 0 or abs(complex(v.value.mid())) == 0


@pytest.mark.parametrize("c", [[2, 0], [1, 1], [2, 1]])
def test_distribution_relation(qi, c):
    F = qi.field
    rep = verify_distribution(F, qi.cm, principal_ideal(F, F.elt(c)), principal_ideal(F, F.scalar(3)), unit_ideal(F), (0,), (4,), trivial_unit_group(F), 0, 128)
    assert rep.residual + rep.error < 2.0**-90


def test_orbit_must_be_taken_modulo_the_lattice(qi):
    from ekl.errors import NotContained

    lat = standard_lattice("Q(i)")
    F = qi.field
    other = principal_ideal(F, F.scalar(2))
    triv = trivial_unit_group(F)
    with pytest.raises(NotContained):
        EisQuery((0,), (4,), orbit(qi, [[0, 0]], triv, other), acb(0), lat, triv, 128)


def test_d2_continuation_matches_cone_sum():
    # beta - alpha = (-2, -2) is invariant under the free unit; torsion needs |beta| + |alpha| even
    cfg = field_config("Q(zeta5)", 64)
    F = cfg.field
    lat = embed_ideal(F, unit_ideal(F), cfg.cm)
    O = OrbitSet.from_reps(F, unit_ideal(F), [F.zero()], cfg.units)
    q = EisQuery((0, 1), (2, 3), O, acb(8), lat, cfg.units, 64)
    a, b = e_series(q).value, e_series_direct(q).value
    with workprec(96):
        assert abs(a - b) < arb(2) ** -48
        assert abs(a) > arb(1) / 2
