"""Infinity types, algebraic Hecke characters and their critical L-values.

Characters are stored exactly: values on class representatives live in a
cyclotomic field E = Q(zeta_N) and the infinity part is evaluated through
the conjugates of a field element, also inside E. Complex numbers only
appear when an L-value is assembled from E-series.

Convention: on principal ideals (lam) with lam = 1 mod^x f,

    chi((lam)) = prod_{sigma in Sigma} conj(sigma(lam))^beta_sigma * sigma(lam)^-alpha_sigma,

which matches the summand xbar^beta x^-alpha of the E-series.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import cached_property

from flint import acb, arb

from ._num import GUARD_BITS, lemniscate_constant, radius, to_acb, with_error, workprec
from .cyclo import CycloElement, CycloField, cyclotomic_field, cyclotomic_index
from .eisenstein import EisQuery, OrbitSet, e_series
from .ekseries import EKValue
from .errors import CoprimalityViolation, InconsistentCharacter, InvariantViolation, NotCritical
from .field import (
    ClassRepSet,
    CMTypeSpec,
    FieldConfig,
    FieldElement,
    FractionalIdeal,
    NumberFieldSpec,
    UnitGroupSpec,
    _is_torsion,
    coprime,
    coset_reps,
    embed_ideal,
    principal_ideal,
    principal_ray_class_reps,
    unit_ideal,
)
from .lattice import DEFAULT_POINT_CAP

# ----------------------------------------------------------------------------
# infinity types


@dataclass(frozen=True)
class InfinityType:
    """beta on Sigma-bar and alpha on Sigma, both indexed by the order of Sigma."""

    beta: tuple
    alpha: tuple

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(int(b) for b in self.beta))
        object.__setattr__(self, "alpha", tuple(int(a) for a in self.alpha))
        if len(self.beta) != len(self.alpha):
            raise ValueError("beta and alpha must have the same length")

    @property
    def mu(self) -> tuple:
        return tuple(b - a for b, a in zip(self.beta, self.alpha))

    def __str__(self):
        return f"beta={list(self.beta)} alpha={list(self.alpha)}"


@dataclass(frozen=True)
class Criticality:
    status: str  # "critical", "hecke_type_only" or "invalid"
    weight: int | None
    failing_fiber: tuple | None = None
    reason: str = ""

    @property
    def critical(self) -> bool:
        return self.status == "critical"


def is_critical(infinity: InfinityType, cm: CMTypeSpec) -> Criticality:
    d = len(cm.sigma)
    if len(infinity.beta) != d:
        raise ValueError("infinity type must have one entry per embedding in Sigma")
    pos = {k: i for i, k in enumerate(cm.sigma)}
    w = None
    for fib in cm.sigma_fibers():
        idx = [pos[k] for k in fib]
        bs = {infinity.beta[i] for i in idx}
        als = {infinity.alpha[i] for i in idx}
        if len(bs) > 1 or len(als) > 1:
            return Criticality("invalid", None, fib, "not constant on a fiber over the CM subfield")
        wf = bs.pop() - als.pop()
        if w is None:
            w = wf
        elif wf != w:
            return Criticality("invalid", None, fib, "beta - alpha is not the same on every fiber")
    if all(b >= 0 for b in infinity.beta) and all(a >= 1 for a in infinity.alpha):
        return Criticality("critical", w)
    return Criticality("hecke_type_only", w, None, "needs beta >= 0 and alpha >= 1")


# ----------------------------------------------------------------------------
# exact conjugates in a cyclotomic field


class ConjugateMap:
    """sigma_k : L -> E for a field L = Q(zeta_n) given by a basis in zeta."""

    def __init__(self, field: NumberFieldSpec, E: CycloField):
        if field.polynomial is None:
            raise InvariantViolation("exact character arithmetic needs a field given by a cyclotomic polynomial")
        n = cyclotomic_index([int(c) for c in field.polynomial]) if all(Fraction(c).denominator == 1 for c in field.polynomial) else None
        if n is None:
            raise InvariantViolation("defining polynomial is not cyclotomic", polynomial=field.polynomial)
        if E.N % n:
            raise InvariantViolation(f"coefficient field {E!r} does not contain zeta_{n}")
        self.field, self.E, self.n = field, E, n
        # sigma_k(zeta) = zeta_n^{a_k}; read a_k off the numerical roots
        self.exps = []
        for k in range(field.degree):
            root = field.embeddings[k][1] if field.basis_poly is None or _is_power_basis(field) else None
            if root is None:
                root = _root_from_basis(field, k)
            ang = math.atan2(float(root.imag.mid()), float(root.real.mid())) / (2 * math.pi) * n
            self.exps.append(round(ang) % n)
        if len(set(self.exps)) != field.degree:
            raise InvariantViolation("could not identify the embeddings as Galois conjugates")
        self._basis = [[Fraction(c) for c in b] for b in field.basis_poly] if field.basis_poly else None

    def __call__(self, x: FieldElement, k: int) -> CycloElement:
        z = self.E.root_of_unity(self.exps[k], self.n)
        acc = self.E.zero()
        if self._basis is None:
            zp = self.E.one()
            for c in x.c:
                if c:
                    acc = acc + zp * c
                zp = zp * z
            return acc
        for c, b in zip(x.c, self._basis):
            if not c:
                continue
            term = self.E.zero()
            zp = self.E.one()
            for coef in b:
                if coef:
                    term = term + zp * coef
                zp = zp * z
            acc = acc + term * c
        return acc


def _is_power_basis(field: NumberFieldSpec) -> bool:
    bp = field.basis_poly
    n = field.degree
    return bp is not None and all(tuple(Fraction(c) for c in bp[j]) == tuple(Fraction(int(i == j)) for i in range(n)) for j in range(n))


def _root_from_basis(field: NumberFieldSpec, k: int) -> acb:
    # only power bases are produced by the presets; other bases need the root directly
    raise InvariantViolation("non-power integral bases are not supported for exact characters")


def default_coefficient_field(field: NumberFieldSpec) -> CycloField:
    n = cyclotomic_index([int(c) for c in field.polynomial]) if field.polynomial else None
    if n is None:
        raise InvariantViolation("no default coefficient field for a non-cyclotomic field")
    return cyclotomic_field(n if n % 2 == 0 else 2 * n)


# ----------------------------------------------------------------------------
# congruence unit groups


def congruence_units(config: FieldConfig, f: FractionalIdeal) -> UnitGroupSpec:
    """O_f^x = units congruent to 1 modulo f."""
    field = config.field
    one = field.one()
    O = unit_ideal(field)
    if f == O:
        return config.units
    tors = config.units.torsion_elements()

    def good(u):
        return f.contains(u - one)

    t_f = [t for t in tors if good(t)]
    # T_f is cyclic: take an element of maximal order
    tgen = max(t_f, key=lambda t: _is_torsion(t))
    gens = [tgen]
    free = config.units.free_generators()
    if len(free) > 1:
        raise NotImplementedError("congruence subgroups implemented for unit rank <= 1")
    if free:
        eps = free[0]
        k, cur = 1, eps
        while True:
            hit = next((t for t in tors if good(t * cur)), None)
            if hit is not None:
                gens.append(hit * cur)
                break
            k += 1
            cur = cur * eps
            if k > 10_000:
                raise InvariantViolation("no congruence power of the fundamental unit found")
    order = len(t_f)
    return UnitGroupSpec(tuple(gens), order, 0, f, f"O_f^x ({f.label})").validate(field)


def ideal_generator(I: FractionalIdeal, bound: int = 12) -> FieldElement:
    """A generator of a principal ideal, by a short search in the HNF basis."""
    field = I.field
    N = I.norm()
    basis = I.basis_elements()
    for B in range(1, bound + 1):
        for digits in itertools.product(range(-B, B + 1), repeat=field.degree):
            if max(abs(v) for v in digits) != B:
                continue
            x = field.zero()
            for c, b in zip(digits, basis):
                if c:
                    x = x + b * c
            if abs(field.norm(x)) == N and principal_ideal(field, x) == I:
                return x
    raise InvariantViolation("no generator found; the ideal may not be principal", ideal=I.label)


# ----------------------------------------------------------------------------
# characters


@dataclass(eq=False)
class HeckeCharacter:
    config: FieldConfig
    conductor: FractionalIdeal
    reps: ClassRepSet
    values: tuple
    infinity: InfinityType
    E: CycloField
    label: str = "chi"
    finite_part: object = None  # optional callable used to build values; kept for provenance

    @cached_property
    def conj_map(self) -> ConjugateMap:
        return ConjugateMap(self.config.field, self.E)

    @cached_property
    def unit_group(self) -> UnitGroupSpec:
        return congruence_units(self.config, self.conductor)

    @cached_property
    def _residues(self) -> dict:
        """canonical residue mod f -> (rep index, unit u) with residue = u * rep."""
        field = self.config.field
        f = self.conductor
        gens = [g for g in self.config.units.generators if g != field.one()]
        out = {}
        for j, r in enumerate(self.reps.generators):
            start = f.reduce(r)
            if start in out:
                continue
            out[start] = (j, field.one())
            frontier = [(start, field.one())]
            while frontier:
                nxt = []
                for x, u in frontier:
                    for g in gens:
                        y = f.reduce(g * x)
                        if y not in out:
                            out[y] = (j, u * g)
                            nxt.append((y, u * g))
                frontier = nxt
        return out

    def infinity_part(self, lam: FieldElement) -> CycloElement:
        cmap = self.conj_map
        acc = self.E.one()
        for b, a, k in zip(self.infinity.beta, self.infinity.alpha, self.config.cm.sigma):
            v = cmap(lam, k)
            if b:
                acc = acc * v.conj() ** b
            if a:
                acc = acc * v ** (-a)
        return acc

    def of_element(self, g: FieldElement) -> CycloElement:
        """chi((g)); 0 when (g) is not coprime to the conductor."""
        field = self.config.field
        if g.is_zero():
            return self.E.zero()
        if not coprime_element(g, self.conductor):
            return self.E.zero()
        # scale a non-integral g by an integer coprime to f: chi((m)) is computable
        num, den = _split_integral(g, self.conductor)
        if den != 1:
            return self.of_element(num) / self.of_element(field.scalar(den))
        key = self.conductor.reduce(g)
        if key not in self._residues:
            raise InvariantViolation("residue class not reached by the class representatives", element=g)
        j, u = self._residues[key]
        lam = g / (u * self.reps.generators[j])
        return self.values[j] * self.infinity_part(lam)

    def __call__(self, ideal) -> CycloElement:
        if isinstance(ideal, FieldElement):
            return self.of_element(ideal)
        return self.of_element(ideal_generator(ideal))

    def value_acb(self, x: CycloElement, prec: int | None = None) -> acb:
        """The fixed complex embedding of E: zeta_N -> exp(2 pi i / N)."""
        return x.to_acb(prec or self.config.field.precision)

    def imprimitive(self, modulus: FractionalIdeal, label: str | None = None) -> "HeckeCharacter":
        """The same character viewed modulo a multiple of the conductor."""
        if not self.conductor.contains_ideal(modulus):
            raise InvariantViolation("new modulus must be divisible by the conductor")
        field = self.config.field
        reps = principal_ray_class_reps(field, modulus, self.config.units)
        vals = tuple(self.of_element(g) for g in reps.generators)
        return HeckeCharacter(self.config, modulus, reps, vals, self.infinity, self.E, label or f"{self.label} mod {modulus.label}")

    def describe(self) -> dict:
        return {
            "label": self.label,
            "conductor": self.conductor.label or str(self.conductor.hnf_basis),
            "infinity": str(self.infinity),
            "coefficient_field": repr(self.E),
            "class_values": {str(g): repr(v) for g, v in zip(self.reps.generators, self.values)},
        }


def coprime_element(g: FieldElement, f: FractionalIdeal) -> bool:
    field = g.field
    num, den = _split_integral(g, None)
    if not coprime(principal_ideal(field, num), f):
        return False
    return coprime(principal_ideal(field, field.scalar(den)), f) if den != 1 else True


def _split_integral(g: FieldElement, f) -> tuple:
    den = 1
    for c in g.c:
        den = den * c.denominator // math.gcd(den, c.denominator)
    return g * den, den


def make_character(config: FieldConfig, conductor: FractionalIdeal, infinity: InfinityType, values=None, finite=None,
                   E: CycloField | None = None, label: str = "chi", seed: int = 0, checks: int = 10) -> HeckeCharacter:
    """Build and validate a character.

    ``values`` lists chi(b) on the class representatives (exact, in E). If
    omitted they are set to infinity_part(r) * finite(r) for each generator r,
    where ``finite`` (default 1) is a function on field elements with values
    in E.
    """
    field = config.field
    E = E or default_coefficient_field(field)
    if not conductor.is_integral():
        raise InvariantViolation("conductor must be integral")
    if len(infinity.beta) != field.d:
        raise ValueError("infinity type has the wrong length")
    reps = principal_ray_class_reps(field, conductor, config.units)
    proto = HeckeCharacter(config, conductor, reps, (), infinity, E, label, finite)
    if values is None:
        vals = []
        for r in reps.generators:
            v = proto.infinity_part(r)
            if finite is not None:
                v = v * E(finite(r))
            vals.append(v)
        values = tuple(vals)
    else:
        values = tuple(E(v) for v in values)
        if len(values) != len(reps.reps):
            raise InvariantViolation("one value per class representative is required", expected=len(reps.reps), got=len(values))
    chi = HeckeCharacter(config, conductor, reps, values, infinity, E, label, finite)
    _validate_character(chi, seed, checks)
    return chi


def _validate_character(chi: HeckeCharacter, seed: int, checks: int):
    field = chi.config.field
    one = chi.E.one()
    # generator independence: every unit = 1 mod f acts trivially
    for u in chi.unit_group.generators:
        if chi.infinity_part(u) != one:
            raise InconsistentCharacter("infinity type is not trivial on units congruent to 1", principal_ideal=f"({u})", value=repr(chi.infinity_part(u)))
    # random principal ideals (lam) with lam = 1 mod^x f
    rng = random.Random(seed)
    basis = chi.conductor.basis_elements()
    done = 0
    tries = 0
    while done < checks and tries < 50 * checks:
        tries += 1
        lam = field.one()
        for b in basis:
            lam = lam + b * rng.randint(-4, 4)
        if lam.is_zero() or not coprime_element(lam, chi.conductor):
            continue
        lhs = chi.of_element(lam)
        rhs = chi.infinity_part(lam)
        if lhs != rhs:
            raise InconsistentCharacter("chi((lam)) differs from the infinity type on lam = 1 mod f", principal_ideal=f"({lam})", chi=repr(lhs), expected=repr(rhs))
        done += 1
    # multiplicativity on products of representatives
    gens = chi.reps.generators
    for i, a in enumerate(gens):
        for j in range(i, len(gens)):
            b = gens[j]
            if chi.of_element(a * b) != chi.values[i] * chi.values[j]:
                raise InconsistentCharacter("not multiplicative on representative products", principal_ideal=f"({a * b})")


def character_from_config(config: FieldConfig, data: dict) -> HeckeCharacter:
    """Character document: conductor generator or HNF, infinity type, optional values."""
    from .field import ideal_from_basis

    field = config.field
    if "conductor_generator" in data:
        f = principal_ideal(field, field.elt(data["conductor_generator"]), "f")
    elif "conductor_hnf" in data:
        f = ideal_from_basis(field, data["conductor_hnf"], "f")
    else:
        f = unit_ideal(field)
    inf = InfinityType(data.get("beta", [0] * field.d), data.get("alpha", [0] * field.d))
    E = cyclotomic_field(int(data["coefficient_field"])) if "coefficient_field" in data else None
    vals = None
    if "values" in data:
        E = E or default_coefficient_field(field)
        vals = [sum((E.zeta(k) * Fraction(c) for k, c in enumerate(v)), E.zero()) for v in data["values"]]
    return make_character(config, f, inf, vals, None, E, data.get("label", "chi"), int(data.get("seed", 0)))


# ----------------------------------------------------------------------------
# L-values at s = 0


def _require_critical(chi: HeckeCharacter):
    cr = is_critical(chi.infinity, chi.config.cm)
    if not cr.critical:
        raise NotCritical("s = 0 is not critical for this infinity type", status=cr.status, infinity=str(chi.infinity))


def partial_L(chi: HeckeCharacter, b, scale=None, cap: int = DEFAULT_POINT_CAP, max_nodes: int = 64) -> EKValue:
    """chi(b) E^{beta,alpha}(Gamma 1, 0; f b^-1, O_f^x) for a principal rep b.

    ``b`` is a generator (field element) of the class representative.
    With ``scale`` the lattice is scale * f b^-1 (period lattice).
    """
    _require_critical(chi)
    field = chi.config.field
    P = field.precision
    g = b if isinstance(b, FieldElement) else ideal_generator(b)
    bid = principal_ideal(field, g)
    if not coprime_element(g, chi.conductor):
        raise CoprimalityViolation("class representative must be coprime to the conductor", rep=str(g))
    cb = chi.of_element(g)
    gamma = chi.unit_group
    ideal = chi.conductor * bid.inverse()
    lat = embed_ideal(field, ideal, chi.config.cm, scale)
    O = OrbitSet.from_reps(field, ideal, [field.one()], gamma)
    with workprec(P + GUARD_BITS):
        ev = e_series(EisQuery(chi.infinity.beta, chi.infinity.alpha, O, 0, lat, gamma, P), cap, max_nodes)
        val = chi.value_acb(cb) * ev.value
        diag = {"rep": str(g), "chi(b)": repr(cb), "gamma_order": gamma.order(), "orbit_points": len(O.points), "method": ev.method}
        return EKValue(val, radius(val), method="partial-L", diagnostics=diag)


def total_L(chi: HeckeCharacter, reps=None, scale=None, cap: int = DEFAULT_POINT_CAP, max_nodes: int = 64) -> EKValue:
    """Sum of partial values; ``reps`` may be any list of generators, one per class."""
    gens = list(reps) if reps is not None else list(chi.reps.generators)
    if reps is not None:
        _check_rep_set(chi, gens)
    acc = acb(0)
    parts = []
    P = chi.config.field.precision
    with workprec(P + GUARD_BITS):
        for g in gens:
            v = partial_L(chi, g, scale, cap, max_nodes)
            acc += v.value
            parts.append(v.diagnostics)
        return EKValue(acc, radius(acc), method="total-L", diagnostics={"classes": len(gens), "parts": parts})


def _check_rep_set(chi: HeckeCharacter, gens):
    if len(gens) != len(chi.reps.reps):
        raise InvariantViolation("alternate representatives must cover each class once", expected=len(chi.reps.reps), got=len(gens))
    seen = set()
    for g in gens:
        if not coprime_element(g, chi.conductor):
            raise CoprimalityViolation("representative not coprime to the conductor", rep=str(g))
        num, den = _split_integral(g, None)
        j, _u = chi._residues[chi.conductor.reduce(num)]
        if den != 1:
            jd, _ = chi._residues[chi.conductor.reduce(chi.config.field.scalar(den))]
            j = (j, jd)
        seen.add(j)
    if len(seen) != len(gens):
        raise InvariantViolation("alternate representatives repeat a class")


def alternate_reps(chi: HeckeCharacter, multiplier: FieldElement) -> list:
    """Representatives r * m for a fixed m = 1 mod^x f (same classes, other ideals)."""
    if not chi.conductor.contains(multiplier - chi.config.field.one()):
        raise InvariantViolation("multiplier must be congruent to 1 modulo the conductor")
    return [g * multiplier for g in chi.reps.generators]


# ----------------------------------------------------------------------------
# periods


@dataclass(eq=False)
class PeriodData:
    Omega: tuple
    OmegaDual: tuple
    pairing: tuple
    provenance: str = ""

    def duality_residual(self, prec: int = 128) -> float:
        """max |OmegaDual - 2 pi i pairing / conj(Omega)|."""
        with workprec(prec + GUARD_BITS):
            tpi = acb(0, 2) * arb.pi()
            worst = 0.0
            for om, od, pr in zip(self.Omega, self.OmegaDual, self.pairing):
                r = abs(to_acb(od) - tpi * to_acb(pr) / to_acb(om).conjugate())
                worst = max(worst, float(r.upper()))
            return worst

    def check(self, prec: int = 128) -> "PeriodData":
        r = self.duality_residual(prec)
        if not r < 2.0 ** (-(prec - 16)):
            raise InvariantViolation("period duality relation fails", residual=r)
        return self

    def scaled(self, c, prec: int = 128) -> "PeriodData":
        """Periods of the lattice c * Lambda: Omega scales by c, the dual by 1/conj(c)."""
        with workprec(prec + GUARD_BITS):
            c = to_acb(c)
            return PeriodData(tuple(to_acb(o) * c for o in self.Omega), tuple(to_acb(o) / c.conjugate() for o in self.OmegaDual), self.pairing, self.provenance + f" scaled by {c.mid()}")


def lemniscatic_periods(prec: int = 128) -> PeriodData:
    """y^2 = 4x^3 - 4x: Omega = varpi, OmegaDual = eta_1 = pi / varpi, pairing -i/2."""
    with workprec(prec + GUARD_BITS):
        w = lemniscate_constant()
        om = acb(w)
        od = acb(arb.pi() / w)
        pr = acb(0, arb(-1) / 2)
    return PeriodData((om,), (od,), (pr,), "lemniscatic curve y^2=4x^3-4x, period lattice varpi Z[i]; quasi-period from the Legendre relation").check(prec)


def lemniscatic_legendre_residual(prec: int = 128) -> float:
    """|eta_1 - pi/varpi| with eta_1 = pi^2 E_2(i) / (3 varpi) from the q-expansion of E_2."""
    with workprec(prec + GUARD_BITS):
        q = (-2 * arb.pi()).exp()
        acc = arb(0)
        qn = arb(1)
        n = 1
        # sigma_1(n) q^n < n^2 e^{-2 pi n}
        while True:
            qn *= q
            sig = sum(dd for dd in range(1, n + 1) if n % dd == 0)
            acc += sig * qn
            if n > 5 and 2 * math.pi * n > (prec + 40) * math.log(2) + 2 * math.log(n + 1):
                break
            n += 1
        tail = arb(0, 2.0 ** -(prec + 20))
        E2 = 1 - 24 * (acc + tail)
        w = lemniscate_constant()
        eta = arb.pi() ** 2 * E2 / (3 * w)
        return float(abs(eta - arb.pi() / w).upper())


# ----------------------------------------------------------------------------
# normalization


@dataclass
class Recognition:
    found: bool
    candidate: tuple | None  # (re, im) Fractions
    residual: float
    denom_bound: int
    note: str = ""

    def as_string(self) -> str:
        if not self.found:
            return "none"
        re, im = self.candidate
        if im == 0:
            return str(re)
        return f"{re}{'+' if im >= 0 else '-'}{abs(im)}*i"


@dataclass
class NormalizedLValue:
    raw: EKValue
    core: acb
    normalized: acb
    regularizer: CycloElement
    regularizer_descriptor: str
    error: float
    recognition: Recognition | None = None
    diagnostics: dict = dc_field(default_factory=dict)


def period_factor(infinity: InfinityType, periods: PeriodData) -> acb:
    """(alpha - 1)! (2 pi i)^|beta| / (Omega^alpha OmegaDual^beta)."""
    acc = acb(1)
    for a in infinity.alpha:
        acc *= math.factorial(a - 1)
    nb = sum(infinity.beta)
    acc *= (acb(0, 2) * arb.pi()) ** nb
    for a, om in zip(infinity.alpha, periods.Omega):
        acc /= to_acb(om) ** a
    for b, od in zip(infinity.beta, periods.OmegaDual):
        acc /= to_acb(od) ** b
    return acc


def regularizer(chi: HeckeCharacter, c: FractionalIdeal, cprime: FractionalIdeal | None = None) -> tuple:
    """(chi(c) Nc - 1) and optionally (1 - chi(c')), exactly in E."""
    if not c.is_integral() or not coprime(c, chi.conductor):
        raise CoprimalityViolation("c must be integral and coprime to the conductor", c=c.label)
    Nc = c.norm()
    R = chi(c) * Nc - 1
    desc = f"(chi(c)N(c)-1) with c={c.label or c.hnf_basis}, N(c)={Nc}"
    if cprime is not None:
        if not cprime.is_integral() or not coprime(cprime, c) or not coprime(cprime, chi.conductor):
            raise CoprimalityViolation("c' must be integral and coprime to c and the conductor", cprime=cprime.label)
        R = R * (1 - chi(cprime))
        desc += f" * (1-chi(c')) with c'={cprime.label or cprime.hnf_basis}"
    return R, desc


def normalized_L(chi: HeckeCharacter, periods: PeriodData, c: FractionalIdeal | None = None, cprime: FractionalIdeal | None = None,
                 raw: EKValue | None = None, recognize: int | None = None, cap: int = DEFAULT_POINT_CAP) -> NormalizedLValue:
    """Normalized critical value; ``recognize`` is a denominator bound for recognition."""
    _require_critical(chi)
    P = chi.config.field.precision
    if c is not None:
        R, desc = regularizer(chi, c, cprime)
    else:
        if cprime is not None:
            raise ValueError("c' needs c")
        R, desc = chi.E.one(), "none"
    periods.check(P)
    if raw is None:
        raw = total_L(chi, cap=cap)
    with workprec(P + GUARD_BITS):
        fac = period_factor(chi.infinity, periods)
        core = fac * raw.value
        val = core * chi.value_acb(R)
        err = radius(val)
        diag = {}
        # a real value field forces a real core when |beta| = 0
        if sum(chi.infinity.beta) == 0 and all(abs(to_acb(o).imag.mid()) == 0 for o in periods.Omega) and all(v.conj() == v for v in chi.values):
            im = float(abs(core.imag).upper())
            diag["imag_check"] = im
            if im > max(radius(core), 2.0 ** -(P - 16)):
                raise InvariantViolation("normalized value has a spurious imaginary part", imag=im)
        rec = recognize_algebraic(val, recognize, "gaussian_rational", P) if recognize else None
        return NormalizedLValue(raw, core, val, R, desc, err, rec, diag)


# ----------------------------------------------------------------------------
# recognition


def _exact_fraction(x: arb) -> Fraction:
    m, e = x.mid().man_exp()
    m, e = int(m), int(e)
    return Fraction(m * 2**e) if e >= 0 else Fraction(m, 2 ** (-e))


def recognize_algebraic(x, denom_bound: int, field: str = "rational", precision: int = 128) -> Recognition:
    """Continued-fraction reconstruction of Re and Im separately.

    A candidate is accepted when |x - candidate| < 2^{-P/2} and both
    denominators are at most ``denom_bound``.
    """
    if field not in ("rational", "gaussian_rational"):
        raise ValueError("field must be 'rational' or 'gaussian_rational'")
    tol = 2.0 ** (-(precision // 2))
    with workprec(precision + GUARD_BITS):
        z = to_acb(x) if not isinstance(x, acb) else x
        if not (z.real.is_finite() and z.imag.is_finite()):
            return Recognition(False, None, math.inf, denom_bound, "value is not finite")
        re = _exact_fraction(z.real).limit_denominator(denom_bound)
        im = _exact_fraction(z.imag).limit_denominator(denom_bound) if field == "gaussian_rational" else Fraction(0)
        from flint import fmpq

        cand = acb(arb(fmpq(re.numerator, re.denominator)), arb(fmpq(im.numerator, im.denominator)))
        res = float(abs(z - cand).upper())
    if res < tol:
        return Recognition(True, (re, im), res, denom_bound)
    return Recognition(False, None, res, denom_bound, "no candidate within tolerance")


def denominators_supported_on(rec: Recognition, primes) -> bool:
    """True when every prime factor of the candidate's denominators is in ``primes``."""
    if not rec.found:
        return False
    for q in rec.candidate:
        den = q.denominator
        for p in primes:
            while den % p == 0:
                den //= p
        if den != 1:
            return False
    return True
