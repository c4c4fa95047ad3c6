"""Finite combinatorics at an ordinary prime p.

Coordinates. Primes above p are assumed to have residue degree one, so
O/P^m = Z/p^m for each prime P above p. With Sigma_p = (P_1..P_d) and
Sigma-bar_p = (Q_1..Q_d):

  lam in O/p^m          -> (t, s) = ((lam mod P_i^m)_i, (lam mod Q_i^m)_i)
  y in p^-m O / O       -> (s, S) = coordinates of p^m y, Q-part first
  <t, S>                = zeta_{p^m}^{sum t_i S_i}

The partial Fourier transform is (P rho)(s, S) = p^{-dm} sum_t <t,S>^{-1} rho(t, s).
All tables hold exact elements of a cyclotomic field.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import cached_property

from flint import acb, arb

from ._num import GUARD_BITS, radius, workprec
from .cyclo import CycloElement, CycloField, common_field, cyclotomic_field
from .eisenstein import EisQuery, OrbitSet, e_series
from .ekseries import EKQuery, EKValue, RationalPoint, _Dual, ek_k
from .errors import BadFactorization, InvariantViolation, LevelTooSmall, NoDecompositionFound, NotOrdinary, OracleMismatch
from .field import (
    FieldConfig,
    FieldElement,
    FractionalIdeal,
    PrimeData,
    coprime,
    coset_reps,
    embed_ideal,
    ideal_mul,
    principal_ideal,
    trivial_unit_group,
    unit_ideal,
)
from .hecke import HeckeCharacter, PeriodData, _split_integral, coprime_element, ideal_generator, period_factor, recognize_algebraic, total_L
from .lattice import HermitianForm, pairing

# ----------------------------------------------------------------------------
# ordinarity and coordinates


@dataclass(eq=False)
class PStructure:
    config: FieldConfig
    p: int
    m: int
    sigma_primes: tuple  # PrimeData in Sigma_p
    sigmabar_primes: tuple  # conjugates, in matching order

    @property
    def q(self) -> int:
        return self.p**self.m

    @property
    def d(self) -> int:
        return len(self.sigma_primes)

    @cached_property
    def E(self) -> CycloField:
        return cyclotomic_field(self.q)

    @cached_property
    def _powers(self) -> list:
        """P^m for P_1..P_d then Q_1..Q_d."""
        return [pd.ideal**self.m for pd in self.sigma_primes + self.sigmabar_primes]

    @cached_property
    def _int_tables(self) -> list:
        field = self.config.field
        out = []
        for I in self._powers:
            tab = {}
            for k in range(self.q):
                tab[I.reduce(field.scalar(k))] = k
            if len(tab) != self.q:
                raise BadFactorization("prime above p does not have residue degree one")
            out.append(tab)
        return out

    def _residue(self, x: FieldElement, idx: int) -> int:
        """x mod (prime power idx) for x integral at that prime."""
        field = self.config.field
        I = self._powers[idx]
        P = (self.sigma_primes + self.sigmabar_primes)[idx].ideal
        y, den = _split_integral(x, None)
        if den == 1:
            return self._int_tables[idx][I.reduce(y)]
        v = 0
        while den % self.p**(v + 1) == 0:
            v += 1
        # a in den * P^-v, a a unit at P; then a x is integral and x = (a x) / a
        J = principal_ideal(field, field.scalar(den)) * (P ** (-v) if v else unit_ideal(field))
        a = _element_not_in(J, P)
        ax = a * x
        if not ax.is_integral():
            raise InvariantViolation("element is not integral at the prime", element=x)
        num = self._int_tables[idx][I.reduce(ax)]
        da = self._int_tables[idx][I.reduce(a)]
        return num * pow(da, -1, self.q) % self.q

    def coords(self, x: FieldElement) -> tuple:
        """(t, s) of an element integral at every prime above p."""
        r = [self._residue(x, i) for i in range(2 * self.d)]
        return tuple(r[: self.d]), tuple(r[self.d:])

    def torsion_coords(self, y: FieldElement) -> tuple:
        """(s, S) of a point y of p^-m O / O."""
        t, s = self.coords(y * self.q)
        return s, t

    @cached_property
    def _crt(self) -> dict:
        field = self.config.field
        O = unit_ideal(field)
        pm = principal_ideal(field, field.scalar(self.q))
        out = {}
        for x in coset_reps(field, pm, O):
            out[self.coords(x)] = x
        if len(out) != self.q ** (2 * self.d):
            raise BadFactorization("O/p^m is not the product of the prime-power quotients")
        return out

    def element_of(self, t, s) -> FieldElement:
        return self._crt[(tuple(v % self.q for v in t), tuple(v % self.q for v in s))]

    def torsion_point(self, s, S) -> FieldElement:
        return self.element_of(S, s) / self.q

    def pair(self, t, S) -> CycloElement:
        return self.E.root_of_unity(sum(a * b for a, b in zip(t, S)), self.q)

    def domain(self):
        rng = range(self.q)
        for t in itertools.product(rng, repeat=self.d):
            for s in itertools.product(rng, repeat=self.d):
                yield t, s

    def is_unit(self, coords) -> bool:
        return all(c % self.p for c in coords)


def _element_not_in(J: FractionalIdeal, P: FractionalIdeal, bound: int = 6) -> FieldElement:
    field = J.field
    basis = J.basis_elements()
    for B in range(1, bound + 1):
        for digits in itertools.product(range(-B, B + 1), repeat=field.degree):
            if max(abs(v) for v in digits) != B:
                continue
            x = field.zero()
            for c, b in zip(digits, basis):
                if c:
                    x = x + b * c
            if x.is_integral() and not P.contains(x):
                return x
    raise InvariantViolation("no local unit found in the ideal")


def check_ordinary(config: FieldConfig, p: int, m: int = 1, factorization=None) -> PStructure:
    """Validate the supplied factorization of (p) and the ordinarity condition.

    ``factorization`` lists PrimeData (repeat an entry for a squared prime);
    by default the primes stored in the config are used.
    """
    field = config.field
    if m < 1:
        raise ValueError("level m must be positive")
    facs = list(factorization) if factorization is not None else [pd for pd in config.primes if pd.p == p]
    if not facs:
        raise BadFactorization(f"no prime data above {p}")
    prod = unit_ideal(field)
    for pd in facs:
        if not pd.ideal.is_integral():
            raise BadFactorization("prime ideal is not integral", prime=pd.ideal.label)
        if pd.ideal.norm() != p**pd.residue_degree:
            raise BadFactorization("norm does not match the residue degree", prime=pd.ideal.label, norm=pd.ideal.norm())
        prod = ideal_mul(prod, pd.ideal)
    if prod != principal_ideal(field, field.scalar(p)):
        raise BadFactorization("primes do not multiply to (p)", p=p)
    labels = [pd.ideal.label for pd in facs]
    distinct = []
    for pd in facs:
        if any(pd.ideal == e.ideal for e in distinct):
            raise NotOrdinary("p is ramified", p=p, prime=pd.ideal.label)
        distinct.append(pd)
    sig = [pd for pd in facs if pd.in_sigma]
    sigb = [pd for pd in facs if not pd.in_sigma]
    conj_of = []
    for pd in sig:
        cj = _conj_ideal(pd.ideal)
        if cj == pd.ideal:
            raise NotOrdinary("a prime in Sigma_p is its own conjugate", p=p, prime=pd.ideal.label)
        match = [e for e in sigb if e.ideal == cj]
        if len(match) != 1:
            raise NotOrdinary("conjugate of a Sigma_p prime is not in Sigma-bar_p", p=p, prime=pd.ideal.label)
        conj_of.append(match[0])
    if len(conj_of) != len(sigb):
        raise NotOrdinary("Sigma_p and Sigma-bar_p are not conjugate", primes=labels)
    if sum(pd.residue_degree for pd in sig) != field.d:
        raise NotOrdinary("Sigma_p does not match Sigma embedding by embedding", p=p)
    if any(pd.residue_degree != 1 for pd in sig):
        raise InvariantViolation("only primes of residue degree one are supported")
    ps = PStructure(config, p, m, tuple(sig), tuple(conj_of))
    # pairing matrix (t_i S_j) mod p^m is the identity: perfect
    mat = [[1 if i == j else 0 for j in range(ps.d)] for i in range(ps.d)]
    if _det_mod(mat, ps.q) % p == 0:
        raise InvariantViolation("pairing is degenerate")
    ps._crt  # noqa: B018 - builds and checks the coordinate tables
    return ps


def _conj_ideal(I: FractionalIdeal) -> FractionalIdeal:
    field = I.field
    from .field import ideal_from_generators

    return ideal_from_generators(field, [b.conj() for b in I.basis_elements()], f"conj{I.label}")


def _det_mod(mat, q):
    n = len(mat)
    if n == 0:
        return 1
    from flint import fmpz_mat

    return int(fmpz_mat(mat).det()) % q


# ----------------------------------------------------------------------------
# partial Fourier transform


def partial_fourier(rho: dict, ps: PStructure) -> dict:
    """(P rho)(s, S) = p^{-dm} sum_t <t,S>^{-1} rho(t, s); rho keyed by (t, s)."""
    keys = list(ps.domain())
    missing = [k for k in keys if k not in rho]
    if missing:
        raise InvariantViolation("rho must be tabulated on all of O/p^m", missing=missing[0])
    F = _table_field(rho, ps)
    scale = Fraction(1, ps.q**ps.d)
    ts = [t for t, _ in keys[:: ps.q**ps.d]]
    out = {}
    for s in itertools.product(range(ps.q), repeat=ps.d):
        for S in itertools.product(range(ps.q), repeat=ps.d):
            acc = F.zero()
            for t in ts:
                v = rho[(t, s)]
                if not (isinstance(v, CycloElement) and v.is_zero()) and v != 0:
                    acc = acc + F(v) * ps.pair(t, S).conj()
            out[(s, S)] = acc * scale
    return out


def inverse_partial_fourier(table: dict, ps: PStructure) -> dict:
    """rho(t, s) = sum_S <t,S> (P rho)(s, S)."""
    F = _table_field(table, ps)
    out = {}
    rng = list(itertools.product(range(ps.q), repeat=ps.d))
    for t in rng:
        for s in rng:
            acc = F.zero()
            for S in rng:
                acc = acc + F(table[(s, S)]) * ps.pair(t, S)
            out[(t, s)] = acc
    return out


def _table_field(tab: dict, ps: PStructure) -> CycloField:
    F = ps.E
    for v in tab.values():
        if isinstance(v, CycloElement):
            F = common_field(F, v.F)
    return F


def char_pattern(ps: PStructure, S) -> Fraction:
    """Weights 1 - 1/Np (S = 0), -1/Np (S of exact order p), else 0, per coordinate."""
    w = Fraction(1)
    for c in S:
        c %= ps.q
        if c == 0:
            w *= 1 - Fraction(1, ps.p)
        elif c % (ps.q // ps.p) == 0:
            w *= -Fraction(1, ps.p)
        else:
            return Fraction(0)
    return w


# ----------------------------------------------------------------------------
# chi_fin, conductor decomposition, local factor


def _valuation(f: FractionalIdeal, P: FractionalIdeal, cap: int = 64) -> int:
    v = 0
    J = P
    while J.contains_ideal(f) and v < cap:
        v += 1
        J = J * P
    return v


def conductor_exponents(chi: HeckeCharacter, ps: PStructure) -> tuple:
    a = tuple(_valuation(chi.conductor, pd.ideal) for pd in ps.sigma_primes)
    b = tuple(_valuation(chi.conductor, pd.ideal) for pd in ps.sigmabar_primes)
    return a, b


def prime_to_p_conductor(chi: HeckeCharacter, ps: PStructure) -> FractionalIdeal:
    a, b = conductor_exponents(chi, ps)
    f = chi.conductor
    for pd, e in zip(ps.sigma_primes + ps.sigmabar_primes, a + b):
        if e:
            f = f * (pd.ideal ** (-e))
    return f


@dataclass(eq=False)
class ChiFin:
    ps: PStructure
    table: dict  # (t, s) units -> value
    E: CycloField

    def __call__(self, t, s) -> CycloElement:
        return self.table[(tuple(v % self.ps.q for v in t), tuple(v % self.ps.q for v in s))]

    def F(self) -> dict:
        """F(t, s) = chi_fin(t^-1, s) on units, 0 elsewhere."""
        q = self.ps.q
        out = {}
        for t, s in self.ps.domain():
            if self.ps.is_unit(t) and self.ps.is_unit(s):
                tinv = tuple(pow(v, -1, q) for v in t)
                out[(t, s)] = self(tinv, s)
            else:
                out[(t, s)] = self.E.zero()
        return out

    def is_trivial_on(self, part: str) -> bool:
        one = self.E.one()
        for (t, s), v in self.table.items():
            probe_t = part == "p" and all(c == 1 for c in s)
            probe_s = part == "pbar" and all(c == 1 for c in t)
            if (probe_t or probe_s) and v != one:
                return False
        return True


def _congruent_one(x: FieldElement, f: FractionalIdeal) -> bool:
    """x = 1 mod^x f."""
    if f == unit_ideal(f.field):
        return True
    if not coprime_element(x, f):
        return False
    num, den = _split_integral(x, None)
    return f.contains(num - num.field.scalar(den))


def extract_chi_fin(chi: HeckeCharacter, ps: PStructure, seed: int = 0, checks: int = 10) -> ChiFin:
    """The locally constant character with chi((lam)) = chi_fin(lam) * infinity part,
    for lam = 1 mod^x (prime-to-p conductor) and coprime to p."""
    field = chi.config.field
    a, b = conductor_exponents(chi, ps)
    if max(a + b, default=0) > ps.m:
        raise LevelTooSmall("conductor exponent at p exceeds the level", exponents=(a, b), level=ps.m)
    f0 = prime_to_p_conductor(chi, ps)
    E = common_field(chi.E, ps.E)
    pm = principal_ideal(field, field.scalar(ps.q))
    mod = pm * f0
    table = {}
    for x in coset_reps(field, mod, unit_ideal(field)):
        if x.is_zero() or not _congruent_one(x, f0):
            continue
        t, s = ps.coords(x)
        if not (ps.is_unit(t) and ps.is_unit(s)) or (t, s) in table:
            continue
        table[(t, s)] = E(chi.of_element(x)) / E(chi.infinity_part(x))
    expected = (ps.q - ps.q // ps.p) ** (2 * ps.d)
    if len(table) != expected:
        raise InvariantViolation("could not reach every unit class mod p^m", found=len(table), expected=expected)
    cf = ChiFin(ps, table, E)
    rng = random.Random(seed)
    done = tries = 0
    basis = f0.basis_elements()
    while done < checks and tries < 100 * checks:
        tries += 1
        lam = field.one()
        for bb in basis:
            lam = lam + bb * rng.randint(-6, 6)
        if lam.is_zero() or not coprime_element(lam, chi.conductor) or not coprime_element(lam, pm):
            continue
        t, s = ps.coords(lam)
        lhs = E(chi.of_element(lam))
        rhs = cf(t, s) * E(chi.infinity_part(lam))
        if lhs != rhs:
            raise LevelTooSmall("chi_fin is not constant on residue classes mod p^m", element=str(lam))
        done += 1
    return cf


@dataclass(frozen=True)
class Decomposition:
    c: FieldElement
    b: FieldElement  # generator of the class representative b
    a_exp: tuple
    b_exp: tuple


def decompose_conductor(chi: HeckeCharacter, ps: PStructure, exponents=None, limit: int = 64) -> list:
    """All (c, b) with (c) b = prod P^a prod Q^b, b a class rep and c = 1 mod^x f0,
    f0 the prime-to-p conductor; units are searched through the torsion and
    powers of a fundamental unit up to ``limit``."""
    field = chi.config.field
    a, bexp = exponents if exponents is not None else conductor_exponents(chi, ps)
    I = unit_ideal(field)
    for pd, e in zip(ps.sigma_primes + ps.sigmabar_primes, tuple(a) + tuple(bexp)):
        if e:
            I = I * pd.ideal**e
    g = ideal_generator(I) if I != unit_ideal(field) else field.one()
    f0 = prime_to_p_conductor(chi, ps)
    units = chi.config.units.torsion_elements()
    free = chi.config.units.free_generators()
    if free:
        eps = free[0]
        pw = [field.one()]
        for _ in range(limit):
            pw.append(pw[-1] * eps)
        units = [u * e for e in pw + [x.inverse() for x in pw[1:]] for u in units]
    out = []
    for r in chi.reps.generators:
        for u in units:
            c = u * g / r
            if _congruent_one(c, f0):
                out.append(Decomposition(c, r, tuple(a), tuple(bexp)))
    if not out:
        raise NoDecompositionFound("no c = 1 mod f found", search_units=len(units), reps=len(chi.reps.generators))
    return out


@dataclass
class LocalFactorResult:
    value: CycloElement
    decomposition: Decomposition
    fourier_value: CycloElement
    pattern_weight: Fraction


def local_factor(chi: HeckeCharacter, ps: PStructure, decomposition: Decomposition | None = None, chi_fin: ChiFin | None = None) -> LocalFactorResult:
    """Local = N(c)^alpha (P~F)(c^-1) / (Nbar(c)^beta chi(b)).

    (P~F)(c^-1) is (PF)(s, S) at S = polar part of c^-1 at Sigma_p and
    s = unit part of c^-1 at Sigma-bar_p, divided by the pattern weight of
    the coordinates where c is a unit (exponent zero).
    """
    field = chi.config.field
    cf = chi_fin or extract_chi_fin(chi, ps)
    dec = decomposition or decompose_conductor(chi, ps)[0]
    E = cf.E
    c = dec.c
    cinv = c.inverse()
    # S: polar part at each P_i; s: unit part at each Q_i
    S = tuple(ps._residue(cinv * ps.q, i) for i in range(ps.d))
    s_parts = []
    for i, pd in enumerate(ps.sigmabar_primes):
        e = dec.b_exp[i]
        gen = pd.generator if pd.generator is not None else ideal_generator(pd.ideal)
        s_parts.append(ps._residue(cinv * gen**e, ps.d + i))
    s = tuple(s_parts)
    if not ps.is_unit(s):
        raise InvariantViolation("unit part of c^-1 is not a unit at Sigma-bar_p")
    PF = partial_fourier(cf.F(), ps)
    val = PF[(s, S)]
    weight = Fraction(1)
    for i, e in enumerate(dec.a_exp):
        if e == 0:
            weight *= char_pattern(ps, (S[i],))
    if weight == 0:
        raise OracleMismatch("pattern weight vanishes at the evaluation point", S=S)
    # the unramified directions must follow the character pattern exactly
    _check_pattern(PF, cf, ps, dec.a_exp)
    core = val / weight
    num = E.one()
    den = E.one()
    for beta, alpha, k in zip(chi.infinity.beta, chi.infinity.alpha, chi.config.cm.sigma):
        v = E(chi.conj_map(c, k))
        num = num * v**alpha
        den = den * v.conj() ** beta
    local = num * core / (den * E(chi.of_element(dec.b)))
    return LocalFactorResult(local, dec, val, weight)


def _check_pattern(PF: dict, cf: ChiFin, ps: PStructure, a_exp: tuple):
    """Where a_i = 0, (PF)(s, S) must equal chi_fin(1, s) * pattern(S_i) in that coordinate."""
    if any(a_exp) or ps.d != 1:
        return
    for (s, S), v in PF.items():
        if not ps.is_unit(s):
            continue
        expect = cf((1,) * ps.d, s) * char_pattern(ps, S) if cf.is_trivial_on("p") else None
        if expect is not None and v != expect:
            raise OracleMismatch("partial Fourier table does not follow the unramified pattern", s=s, S=S)


def local_factor_all(chi: HeckeCharacter, ps: PStructure) -> list:
    cf = extract_chi_fin(chi, ps)
    return [local_factor(chi, ps, dec, cf) for dec in decompose_conductor(chi, ps)]


# ----------------------------------------------------------------------------
# Euler factors and the interpolation right-hand side


def euler_factors(chi: HeckeCharacter, ps: PStructure) -> tuple:
    """(prod_P (1 - chi(P^-1)/NP), prod_Q (1 - chi(Q))), with chi = 0 on primes dividing f."""
    E = chi.E
    first = E.one()
    for pd in ps.sigma_primes:
        if not coprime(pd.ideal, chi.conductor):
            continue
        g = pd.generator if pd.generator is not None else ideal_generator(pd.ideal)
        first = first * (1 - chi.of_element(g).inverse() / pd.ideal.norm())
    second = E.one()
    for pd in ps.sigmabar_primes:
        if not coprime(pd.ideal, chi.conductor):
            continue
        g = pd.generator if pd.generator is not None else ideal_generator(pd.ideal)
        second = second * (1 - chi.of_element(g))
    return first, second


@dataclass
class InterpolatedValue:
    value: acb
    error: float
    exact_factor: CycloElement
    local: LocalFactorResult
    euler: tuple
    index: int
    core: acb
    recognition: object = None


def interpolated_value(chi: HeckeCharacter, periods: PeriodData, ps: PStructure, index: int = 1, raw: EKValue | None = None, recognize: int | None = None) -> InterpolatedValue:
    """(alpha-1)!(2 pi i)^beta / (Omega^alpha OmegaDual^beta) Local [O^x:Gamma] Euler L_f(chi, 0)."""
    P = chi.config.field.precision
    loc = local_factor(chi, ps)
    e1, e2 = euler_factors(chi, ps)
    exact = loc.value * e1 * e2 * index
    if raw is None:
        raw = total_L(chi)
    with workprec(P + GUARD_BITS):
        core = period_factor(chi.infinity, periods) * raw.value
        val = core * exact.to_acb(P)
        rec = recognize_algebraic(val, recognize, "gaussian_rational", P) if recognize else None
        return InterpolatedValue(val, radius(val), exact, loc, (e1, e2), index, core, rec)


# ----------------------------------------------------------------------------
# measure consistency


@dataclass
class MeasureReport:
    side_a: acb
    side_b: acb
    residual: float
    error: float
    oracle: dict = dc_field(default_factory=dict)


def pairing_twist(ps: PStructure, lat_p, H: HermitianForm, basis_p: list, t) -> RationalPoint:
    """w_t in dual coordinates with exp(2 pi i <mu, w_t>) = <t, S(mu)>^{-1} on p-part points mu."""
    # the dual basis satisfies <g_j, l_k> = -delta_jk
    cs = []
    for mu in basis_p:
        S = ps.torsion_coords(mu)[1]
        cs.append(Fraction(sum(a * b for a, b in zip(t, S)), ps.q))
    return RationalPoint(tuple(cs))


def measure_consistency_check(chi_or_config, ps: PStructure, rho: dict, x: FieldElement, beta=(0,), alpha=(4,), precision: int = 128) -> MeasureReport:
    """sum_{(s,S)} (P rho)(s,S) E(x+s+S; O) against
    p^{-dm} sum_{t,s} rho(t,s) K^{beta+alpha}(x+s, w_t, |alpha|; P^-m O).

    Only d = 1 with Gamma = {1}. Before comparing, the twist w_t is checked
    exhaustively against the pairing on P^-m O / O, and the inversion law of
    the transform is checked on rho.
    """
    config = chi_or_config.config if isinstance(chi_or_config, HeckeCharacter) else chi_or_config
    field, cm = config.field, config.cm
    if ps.d != 1:
        raise NotImplementedError("measure check implemented for d = 1")
    O = unit_ideal(field)
    gamma = trivial_unit_group(field)
    H = HermitianForm.standard(1)
    Pm = ps.sigma_primes[0].ideal ** (-ps.m)
    oracle = {}
    with workprec(precision + GUARD_BITS):
        lat = embed_ideal(field, O, cm)
        lat_p = embed_ideal(field, Pm, cm)
        PR = partial_fourier(rho, ps)
        # oracle 1: inversion law P P rho(s, S) = p^{-dm} rho(-S, s)
        rho2 = {(t, s): PR[(s, t)] for (t, s) in ps.domain()}
        PP = partial_fourier(rho2, ps)
        for (s, S), v in PP.items():
            if v != _table_field(rho, ps)(rho[(tuple(-c % ps.q for c in S), s)]) * Fraction(1, ps.q**ps.d):
                raise OracleMismatch("partial Fourier inversion law fails", point=(s, S))
        oracle["inversion"] = "ok"
        # oracle 2: w_t represents the pairing character on P^-m O / O
        basis_p = Pm.basis_elements()
        reps_p = coset_reps(field, O, Pm)
        dual = _Dual.of(lat_p, H)
        worst = 0.0
        twists = {}
        for t in itertools.product(range(ps.q), repeat=ps.d):
            w = pairing_twist(ps, lat_p, H, basis_p, t)
            twists[t] = w
            wvec = tuple(sum((dual.gens[j][i] * arb(w.coords[j].numerator) / w.coords[j].denominator for j in range(len(w.coords))), acb(0)) for i in range(lat_p.d))
            for mu in reps_p:
                mvec = tuple(field.embed(mu, k) for k in cm.sigma)
                ph = (acb(0, 2) * arb.pi() * pairing(H, mvec, wvec)).exp()
                S = ps.torsion_coords(mu)[1]
                ex = ps.pair(t, S).conj().to_acb(precision)
                worst = max(worst, float(abs(ph - ex).upper()))
        if worst > 2.0 ** (-(precision - 16)):
            raise OracleMismatch("twist does not represent the pairing character", residual=worst)
        oracle["twist_residual"] = worst
        mu = tuple(b + a for b, a in zip(beta, alpha))
        # side A
        A = acb(0)
        for (s, S), v in sorted(PR.items()):
            if v.is_zero():
                continue
            y = x + ps.torsion_point(s, S)
            Oy = OrbitSet.from_reps(field, O, [y], gamma)
            ev = e_series(EisQuery(beta, alpha, Oy, 0, lat, gamma, precision))
            A += v.to_acb(precision) * ev.value
        # side B
        B = acb(0)
        for (t, s), v in sorted(rho.items()):
            v = _table_field(rho, ps)(v)
            if v.is_zero():
                continue
            z = x + ps.torsion_point(s, (0,) * ps.d)
            zc = RationalPoint(tuple(lat_p.provenance.ideal.coords(z)))
            kq = EKQuery(mu, H, zc, twists[t], sum(alpha), lat_p, precision)
            B += v.to_acb(precision) * ek_k(kq).value
        B = B / ps.q**ps.d
        diff = A - B
        return MeasureReport(A, B, float(abs(diff.mid())), radius(diff), oracle)


def rho_constant(ps: PStructure, value=1) -> dict:
    return {k: ps.E(value) for k in ps.domain()}


def rho_delta(ps: PStructure, at=None) -> dict:
    at = at or ((0,) * ps.d, (0,) * ps.d)
    return {k: ps.E(1 if k == at else 0) for k in ps.domain()}


def rho_pairing(ps: PStructure, S0) -> dict:
    return {(t, s): ps.pair(t, S0) for (t, s) in ps.domain()}
