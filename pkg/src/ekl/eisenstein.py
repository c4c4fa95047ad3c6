"""Unit-averaged Eisenstein series E^{beta,alpha}(O, s; Lambda, Gamma).

E = sum' over Gamma \\ (Lambda + O) of xbar^beta / (x^alpha N(x)^s) with
N(x) = prod_sigma |x_sigma|^2.

For finite Gamma the quotient sum is evaluated as (1/|Gamma|) times the sum
over all of Lambda + O; that equals the quotient sum when the summand is
Gamma-invariant and is exactly 0 otherwise (character orthogonality).

For d = 2 with Gamma = torsion x <eps>, the Mellin transform in each
coordinate and unfolding over <eps> give

  Gamma(alpha_1+s) Gamma(alpha_2+s) E
      = (2/|T|) int_0^L e^{x(alpha_1-alpha_2)} Gamma(a+2s)
                sum_{t in O} K^{beta+alpha}(H_x, t, 0, a+2s; Lambda) dx

where a = |alpha|, H_x = diag(e^x, e^-x) and L = 2 log|sigma_1(eps)|. The
integrand is L-periodic and analytic for |Im x| < pi/2, so the trapezoidal
rule converges like exp(-pi^2 N / L).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from flint import acb, arb

from ._num import GUARD_BITS, radius, to_acb, with_error, workprec
from .ekseries import EKQuery, EKValue, ek_k, ek_k_direct
from .errors import BudgetExceeded, InvariantViolation, NotContained, OutsideConvergence, QuadratureNotConverged
from .field import (
    FieldElement,
    FractionalIdeal,
    NumberFieldSpec,
    UnitGroupSpec,
    coprime,
    coset_reps,
    embed_ideal,
    unit_ideal,
    unit_orbits,
)
from .lattice import DEFAULT_POINT_CAP, ComplexLattice, HermitianForm, IdealProvenance, shell_data


@dataclass(eq=False)
class OrbitSet:
    """A Gamma-stable finite subset O of (Q tensor Lambda) / Lambda, stored as orbits."""

    ideal: FractionalIdeal
    orbits: tuple  # tuple of tuples of canonical residues

    @classmethod
    def from_reps(cls, field: NumberFieldSpec, ideal: FractionalIdeal, reps, gamma: UnitGroupSpec) -> "OrbitSet":
        """Close ``reps`` under gamma modulo ``ideal``."""
        canon = [ideal.reduce(field.elt(r) if not isinstance(r, FieldElement) else r) for r in reps]
        gens = [g for g in gamma.generators if g != field.one()]
        pts, seen = [], set()
        frontier = list(canon)
        for p in canon:
            if p not in seen:
                seen.add(p)
                pts.append(p)
        while frontier:
            nxt = []
            for x in frontier:
                for g in gens:
                    y = ideal.reduce(g * x)
                    if y not in seen:
                        seen.add(y)
                        pts.append(y)
                        nxt.append(y)
            frontier = nxt
        orbits = unit_orbits(field, pts, gamma, ideal)
        return cls(ideal, tuple(tuple(o) for o in orbits))

    @property
    def points(self) -> list:
        return [p for o in self.orbits for p in o]

    def reps(self) -> list:
        return [(o[0], len(o)) for o in self.orbits]

    def check_stable(self, gamma: UnitGroupSpec) -> "OrbitSet":
        unit_orbits(self.ideal.field, self.points, gamma, self.ideal)
        return self


@dataclass(eq=False)
class EisQuery:
    beta: tuple
    alpha: tuple
    O: OrbitSet
    s: object
    lattice: ComplexLattice
    gamma: UnitGroupSpec
    precision: int = 128

    def __post_init__(self):
        self.beta = tuple(int(b) for b in self.beta)
        self.alpha = tuple(int(a) for a in self.alpha)
        if any(v < 0 for v in self.beta + self.alpha):
            raise ValueError("beta and alpha must be nonnegative")
        d = self.lattice.d
        if len(self.beta) != d or len(self.alpha) != d:
            raise ValueError("beta and alpha must have one entry per embedding in Sigma")
        prov = self.lattice.provenance
        if not isinstance(prov, IdealProvenance):
            raise TypeError("E-series need an ideal-derived lattice")
        if prov.ideal != self.O.ideal:
            raise NotContained("orbit set is taken modulo a different lattice")

    @property
    def field(self) -> NumberFieldSpec:
        return self.lattice.provenance.field

    @property
    def mu(self) -> tuple:
        return tuple(b + a for b, a in zip(self.beta, self.alpha))


def lattice_for(field: NumberFieldSpec, ideal: FractionalIdeal, cm, scale=None) -> ComplexLattice:
    return embed_ideal(field, ideal, cm, scale)


# ----------------------------------------------------------------------------
# invariance bookkeeping


def _unit_factor(q: EisQuery, u: FieldElement) -> acb:
    """ubar^beta u^-alpha under the CM embeddings (summand(u x) = factor * summand(x))."""
    prov = q.lattice.provenance
    acc = acb(1)
    for b, a, k in zip(q.beta, q.alpha, prov.cm.sigma):
        v = prov.field.embed(u, k)
        acc *= v.conjugate() ** b / v ** a
    return acc


def _is_one(x: acb, P: int) -> bool:
    return float(abs(x - 1).upper()) < 2.0 ** (-(P // 2))


def _torsion_trivial(q: EisQuery) -> bool:
    with workprec(q.precision + GUARD_BITS):
        return all(_is_one(_unit_factor(q, t), q.precision) for t in q.gamma.torsion_elements())


def _free_unit(q: EisQuery) -> FieldElement:
    free = q.gamma.free_generators()
    if len(free) != 1:
        raise InvariantViolation("d = 2 needs exactly one free unit generator", count=len(free))
    return free[0]


def _log_shift(q: EisQuery, eps: FieldElement) -> arb:
    """L = log|sigma_1 eps| - log|sigma_2 eps| (> 0 after inverting eps if needed)."""
    prov = q.lattice.provenance
    e1 = abs(prov.field.embed(eps, prov.cm.sigma[0]))
    e2 = abs(prov.field.embed(eps, prov.cm.sigma[1]))
    return e1.log() - e2.log()


def _zero_value(method: str, note: str) -> EKValue:
    return EKValue(acb(0), 0.0, method=method, diagnostics={"note": note})


# ----------------------------------------------------------------------------
# direct summation


def e_series_direct(q: EisQuery, margin: float = 0.5, cap: int = DEFAULT_POINT_CAP, target: float | None = None, allow_partial: bool = False) -> EKValue:
    d = q.lattice.d
    P = q.precision
    with workprec(P + GUARD_BITS):
        s = to_acb(q.s)
        sigma = float(s.real.mid())
        e = [b - a for b, a in zip(q.beta, q.alpha)]
        if d == 1:
            if sigma <= sum(e) / 2 + 1 + margin:
                raise OutsideConvergence("Re(s) too small for direct summation", s=q.s)
            if not _torsion_trivial(q):
                return _zero_value("direct", "summand is not Gamma-invariant; the average vanishes")
            if not q.gamma.is_finite:
                raise InvariantViolation("d = 1 unit groups are finite")
            acc = acb(0)
            err = 0.0
            for t in q.O.points:
                kq = EKQuery(q.mu, HermitianForm.standard(1), t, (acb(0),), s + q.alpha[0], q.lattice, P)
                v = ek_k_direct(kq, margin=0.0, cap=cap, target=target, allow_partial=allow_partial)
                acc += v.value
            n = len(q.gamma.torsion_elements())
            val = acc / n
            return EKValue(val, radius(val), method="direct", diagnostics={"orbit_points": len(q.O.points), "gamma_order": n})
        if d == 2:
            return _cone_sum(q, s, sigma, e, margin, cap, target, allow_partial)
        raise NotImplementedError("direct E-series implemented for d <= 2")


def _cone_sum(q, s, sigma, e, margin, cap, target, allow_partial):
    """Sum over a fundamental cone of <eps> in log-ratio coordinates, d = 2."""
    P = q.precision
    sig2 = sigma - (e[0] + e[1]) / 4
    if sig2 <= 1 + margin:
        raise OutsideConvergence("Re(s) too small for direct summation", s=q.s, bound=1 + (e[0] + e[1]) / 4 + margin)
    if not _torsion_trivial(q):
        return _zero_value("direct", "summand is not invariant under torsion; the average vanishes")
    eps = _free_unit(q)
    L = _log_shift(q, eps)
    if L < 0:
        eps = eps ** -1
        L = -L
    if not _is_one(_unit_factor(q, eps), P):
        raise InvariantViolation("summand is not invariant under the free unit")
    Lf = float(L.mid())
    lat = q.lattice
    geo = lat.geometry(HermitianForm.standard(2))
    a2 = math.exp(Lf) + math.exp(-Lf)
    D = geo.D
    cov = geo.covol_float
    npts = len(q.O.points)
    ntors = len(q.gamma.torsion_elements())
    growth = max(1.0, math.exp(Lf * (e[0] - e[1]) / 2))
    C = growth * npts / ntors

    def log_tail(Y):
        # Abel summation with A(y) <= (pi^2/2)(sqrt(a2) y^(1/4) + D)^4 / covol
        terms = []
        for k in range(5):
            if sig2 - k / 4 <= 0:
                return math.inf
            coef = math.comb(4, k) * (a2 ** (k / 2)) * D ** (4 - k) if (4 - k) or D else math.comb(4, k) * a2 ** (k / 2)
            if coef == 0:
                continue
            terms.append(math.log(coef) + math.log(sig2 / (sig2 - k / 4)) + (k / 4 - sig2) * math.log(Y))
        m = max(terms)
        return math.log(C * math.pi ** 2 / 2 / cov) + m + math.log(sum(math.exp(t - m) for t in terms))

    if target is None:
        target = 2.0 ** (-(P + 4))
    lt = math.log(target)
    lo, hi = 1.0, 2.0
    while log_tail(hi) > lt:
        hi *= 2
        if hi > 1e300:
            break
    for _ in range(200):
        if hi / lo < 1 + 1e-9:
            break
        mid = math.sqrt(lo * hi)
        if log_tail(mid) > lt:
            lo = mid
        else:
            hi = mid
    Y = hi
    # respect the point budget: R^2 = a2 sqrt(Y)
    from .lattice import count_bound

    def count(Yv):
        return sum(count_bound(lat, HermitianForm.standard(2), math.sqrt(a2 * math.sqrt(Yv))) for _ in range(npts))

    met = True
    budget = 0.8 * cap
    if count(Y) > budget:
        if not allow_partial:
            raise BudgetExceeded("direct cone sum needs too many points", points=int(count(Y)), cap=cap)
        met = False
        lo2, hi2 = 1.0, Y
        for _ in range(200):
            mid = math.sqrt(lo2 * hi2)
            if count(mid) > budget:
                hi2 = mid
            else:
                lo2 = mid
            if hi2 / lo2 < 1 + 1e-6:
                break
        Y = lo2
    tail = math.exp(log_tail(Y))
    R = math.sqrt(a2 * math.sqrt(Y)) * (1 + 1e-12)
    prov = lat.provenance
    field = prov.field
    basis = prov.ideal.basis_elements()
    with workprec(P + GUARD_BITS):
        Yb = arb(Y)
        acc = acb(0)
        used = 0
        H = HermitianForm.standard(2)
        for t in q.O.points:
            tv = lat.embed_element(t)
            sd = shell_data(lat, H, tv, R, cap)
            for n, x, nrm in zip(sd.coords, sd.xs, sd.norms):
                a1 = x[0].real * x[0].real + x[0].imag * x[0].imag
                b1 = x[1].real * x[1].real + x[1].imag * x[1].imag
                if a1.is_zero() and b1.is_zero():
                    continue
                if (a1 == 0) or (b1 == 0):
                    continue
                N = a1 * b1
                if N > Yb:
                    continue
                if not N < Yb:
                    # boundary at Y: float midpoint decides consistently with the tail bound
                    if float(N.mid()) > Y:
                        continue
                u = a1.log() - b1.log()  # = 2 (log|x1| - log|x2|)
                if not _in_cone(u, 2 * L, lambda: _exact_x(field, t, basis, n), field, eps):
                    continue
                term = acb(1)
                for xi, b, a in zip(x, q.beta, q.alpha):
                    if b:
                        term *= xi.conjugate() ** b
                    if a:
                        term /= xi ** a
                term *= (-s * N.log()).exp()
                acc += term
                used += 1
        val = with_error(acc / ntors, tail)
        return EKValue(val, radius(val), method="direct-cone", diagnostics={"norm_bound": Y, "terms": used, "tail": tail, "target_met": met})


def _exact_x(field, t, basis, n):
    x = t
    for c, b in zip(n, basis):
        if c:
            x = x + b * c
    return x


def _in_cone(u: arb, twoL: arb, exact, field, eps) -> bool:
    """0 <= u < 2L with exact tie-breaking on the cone walls."""
    if u > 0 and u < twoL:
        return True
    if u < 0 or u > twoL:
        return False
    x = exact()
    r = x * x.conj()
    if (u.contains(0)) and _is_rational(r):
        return True  # on the wall u = 0, which belongs to the cone
    if u.contains(twoL):
        rr = r / (eps * eps.conj())
        if _is_rational(rr):
            return False
    # not on a wall: the ball was merely too wide; decide by refinement
    return float(u.mid()) >= 0 and float(u.mid()) < float(twoL.mid())


def _is_rational(x: FieldElement) -> bool:
    return all(c == 0 for c in x.c[1:])


# ----------------------------------------------------------------------------
# continuation


def e_series(q: EisQuery, cap: int = DEFAULT_POINT_CAP, max_nodes: int = 64) -> EKValue:
    d = q.lattice.d
    P = q.precision
    with workprec(P + GUARD_BITS):
        s = to_acb(q.s)
        if not _torsion_trivial(q):
            return _zero_value("continued", "summand is not invariant under torsion; the average vanishes")
        if d == 1:
            return _e_series_d1(q, s, cap)
        if d == 2:
            return _e_series_d2(q, s, cap, max_nodes)
        raise NotImplementedError("continuation implemented for d <= 2")


def _e_series_d1(q, s, cap):
    if not q.gamma.is_finite:
        raise InvariantViolation("d = 1 unit groups are finite")
    acc = acb(0)
    info = []
    for t in q.O.points:
        kq = EKQuery(q.mu, HermitianForm.standard(1), t, (acb(0),), s + q.alpha[0], q.lattice, q.precision)
        v = ek_k(kq, cap)
        acc += v.value
        info.append(v.diagnostics.get("split"))
    n = len(q.gamma.torsion_elements())
    val = acc / n
    return EKValue(val, radius(val), method="K-reduction", diagnostics={"orbit_points": len(q.O.points), "gamma_order": n})


def _e_series_d2(q, s, cap, max_nodes):
    P = q.precision
    eps = _free_unit(q)
    L = _log_shift(q, eps)
    if L < 0:
        eps = eps ** -1
        L = -L
    if not _is_one(_unit_factor(q, eps), P):
        raise InvariantViolation("summand is not invariant under the free unit")
    a = sum(q.alpha)
    sK = s * 2 + a
    da = q.alpha[0] - q.alpha[1]
    ntors = len(q.gamma.torsion_elements())
    gK = sK.gamma() if not _nonpos_int(sK) else None
    if gK is None:
        raise InvariantViolation("Gamma(a + 2s) has a pole; use the completed function directly", s=q.s)
    den = acb(1)
    for al in q.alpha:
        den *= (s + al).rgamma()
    # integral errors are amplified by this factor on the way to E
    amp = float((abs(gK * den) * L * 2 / ntors).upper())
    extra = max(0, math.ceil(math.log2(amp))) if amp > 0 else 0
    Pin = P + extra + 2
    tol = 2.0 ** (-(P - 16)) / max(amp, 1e-300)
    cache = {}

    def node(k, N):
        # x_k = k L / N; reuse values on nested grids
        key = Fraction(k, N)
        if key in cache:
            return cache[key]
        x = L * k / N
        H = HermitianForm((x.exp(), (-x).exp()))
        acc = acb(0)
        for t in q.O.points:
            kq = EKQuery(q.mu, H, t, (acb(0), acb(0)), sK, q.lattice, Pin)
            acc += ek_k(kq, cap).value
        v = acc * (x * da).exp()
        cache[key] = v
        return v

    def level(N):
        acc = acb(0)
        for k in range(N):
            acc += node(k, N)
        return acc * L / N

    N = 4
    prev = level(N)
    history = []
    while True:
        N *= 2
        if N > max_nodes:
            raise QuadratureNotConverged("trapezoidal rule did not stabilise", nodes=N // 2, last_difference=history[-1] if history else None)
        cur = level(N)
        diff = float(abs(cur - prev).upper())
        history.append(diff)
        if diff < tol:
            break
        prev = cur
    integral = with_error(cur, diff)
    val = integral * gK * 2 / ntors * den
    return EKValue(val, radius(val), method="trapezoid", diagnostics={"nodes": N, "differences": history, "shift": float(L.mid()), "torsion": ntors})


def _nonpos_int(x: acb) -> bool:
    if not (x.imag.is_zero() and x.real.is_exact()):
        return False
    v = float(x.real.mid())
    return v <= 0 and v == math.floor(v)


# ----------------------------------------------------------------------------
# distribution relation


@dataclass
class DistributionReport:
    lhs: EKValue
    rhs: EKValue
    residual: float
    error: float
    weighted_variant: EKValue | None
    terms: int
    diagnostics: dict = dc_field(default_factory=dict)


def verify_distribution(field: NumberFieldSpec, cm, c: FractionalIdeal, f: FractionalIdeal, b: FractionalIdeal, beta, alpha, gamma: UnitGroupSpec, s=0, precision: int = 128, scale=None, cap: int = DEFAULT_POINT_CAP) -> DistributionReport:
    """sum_t E(Gamma (t+1), s; f b^-1) versus E(Gamma 1, s; f b^-1 c^-1).

    t runs over f b^-1 c^-1 / f b^-1.
    """
    if not c.is_integral():
        raise NotContained("c must be integral")
    if not coprime(c, f):
        from .errors import CoprimalityViolation

        raise CoprimalityViolation("c must be coprime to f", c=c.label, f=f.label)
    one = field.one()
    big = f * b.inverse()
    small = big * c.inverse()
    with workprec(precision + GUARD_BITS):
        lat_big = embed_ideal(field, big, cm, scale)
        lat_small = embed_ideal(field, small, cm, scale)
        ts = coset_reps(field, big, small)
        lhs_acc = acb(0)
        for t in ts:
            O = OrbitSet.from_reps(field, big, [t + one], gamma)
            v = e_series(EisQuery(beta, alpha, O, s, lat_big, gamma, precision), cap)
            lhs_acc += v.value
        O1 = OrbitSet.from_reps(field, small, [one], gamma)
        rhs = e_series(EisQuery(beta, alpha, O1, s, lat_small, gamma, precision), cap)
        lhs = EKValue(lhs_acc, radius(lhs_acc), method="distribution-lhs")
        Ob = OrbitSet.from_reps(field, big, [one], gamma)
        Eb = e_series(EisQuery(beta, alpha, Ob, s, lat_big, gamma, precision), cap)
        Nc = c.norm()
        wv = Eb.value * arb(Nc.numerator) / Nc.denominator - rhs.value
        diff = lhs.value - rhs.value
        return DistributionReport(lhs, rhs, float(abs(diff.mid())), radius(diff), EKValue(wv, radius(wv), method="weighted"), len(ts))
