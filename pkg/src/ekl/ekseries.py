"""Theta functions and Eisenstein-Kronecker series K^mu with continuation.

Conventions: <a, b> = Im H(a, b); theta and K sum over lambda in the lattice
with the summand evaluated at x = z + lambda and twisted by
exp(2 pi i <lambda, w>).

Continuation. Splitting the Mellin integral at t0 and applying the theta
functional equation on (0, t0] gives, with G(s, X) = X^(-s) Gamma(s, X),

  Gamma(s) K(s) / pi^s
    =   t0^s sum'_{x in z+Lambda} xbar^mu e(<lambda, w>) G(s, pi t0 |x|^2)
      + e(<w, z>) / vol * t0^(-s') sum'_{y in w+Lambda*} ybar^mu e(<l, z>) G(s', pi |y|^2 / t0)
      + delta_w t0^(s-d) / (vol (s - d)) - delta_z e(-<z, w>) t0^s / s

with s' = d + |mu| - s. The deltas are only active for mu = 0. t0 is chosen
to balance the work between the two sides; the result does not depend on it.
where e(x) = exp(2 pi i x) and the deltas are only active for mu = 0.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Sequence

import flint
from flint import acb, arb, arb_mat

from ._num import GUARD_BITS, radius, to_acb, to_arb, with_error, workprec
from .errors import BudgetExceeded, OutsideConvergence, PoleRequested
from .lattice import (
    DEFAULT_POINT_CAP,
    ComplexLattice,
    HermitianForm,
    count_bound,
    covolume,
    dual_lattice,
    h_inner,
    log_power_tail,
    pairing,
    power_radius,
    shell_data,
    truncation_radius,
)


class MembershipWarning(UserWarning):
    """Lattice membership was decided by a floating distance threshold."""


@dataclass(frozen=True)
class RationalPoint:
    """Point given by rational coordinates in a lattice basis (exact membership)."""

    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(Fraction(c) for c in self.coords))

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.coords)


@dataclass
class EKQuery:
    mu: tuple
    H: HermitianForm
    z: object
    w: object
    s: object
    lattice: ComplexLattice
    precision: int = 128

    def __post_init__(self):
        self.mu = tuple(int(m) for m in self.mu)
        if any(m < 0 for m in self.mu):
            raise ValueError("mu must be nonnegative")
        if len(self.mu) != self.lattice.d:
            raise ValueError("mu has the wrong length")


@dataclass
class EKValue:
    value: acb
    error_bound: float
    pole_at_0: acb | None = None
    pole_at_d: acb | None = None
    method: str = "continued"
    diagnostics: dict = dc_field(default_factory=dict)

    def __complex__(self):
        return complex(self.value.mid())

    def __post_init__(self):
        if self.error_bound < 0:
            raise ValueError("error bound must be nonnegative")


# ----------------------------------------------------------------------------
# helpers


class _Dual:
    """Lazily computed dual lattice, cached on the lattice object."""

    @staticmethod
    def of(lat: ComplexLattice, H: HermitianForm) -> ComplexLattice:
        key = "dual:" + H.fingerprint()
        cache = lat._geom
        if key not in cache:
            cache[key] = dual_lattice(lat, H)
        return cache[key]


def _coords_arb(lat: ComplexLattice, v) -> list:
    n = lat.rank
    M = arb_mat([[(g[i].real if k % 2 == 0 else g[i].imag) for i in range(lat.d) for k in (0, 1)] for g in lat.gens])
    rhs = arb_mat(1, n, [(v[i].real if k % 2 == 0 else v[i].imag) for i in range(lat.d) for k in (0, 1)])
    sol = M.transpose().solve(rhs.transpose())
    return [sol[j, 0] for j in range(n)]


def resolve_point(lat: ComplexLattice, H: HermitianForm, v, precision: int):
    """(vector, exact-coords-or-None, member flag, lattice coords if member)."""
    if isinstance(v, RationalPoint):
        vec = lat.point(v.coords)
        if v.is_integral():
            return vec, v.coords, True, tuple(int(c) for c in v.coords)
        return vec, v.coords, False, None
    if hasattr(v, "field") and hasattr(v, "c"):
        coords = lat.exact_coords(v)
        if coords is None:
            raise TypeError("field element given for a lattice without ideal provenance")
        vec = lat.embed_element(v)
        integral = all(c.denominator == 1 for c in coords)
        return vec, coords, integral, (tuple(int(c) for c in coords) if integral else None)
    if isinstance(v, (int, float, complex, acb, arb, Fraction)):
        v = (v,)
    vec = tuple(to_acb(c) for c in v)
    if len(vec) != lat.d:
        raise ValueError("vector has wrong length")
    if all(c.real.is_zero() and c.imag.is_zero() for c in vec):
        return vec, tuple(Fraction(0) for _ in range(lat.rank)), True, (0,) * lat.rank
    y = _coords_arb(lat, vec)
    n = [int(round(float(c.mid()))) for c in y]
    diff = [a - b for a, b in zip(vec, lat.point(n))]
    dist2 = sum((H.r[i] * (diff[i].real * diff[i].real + diff[i].imag * diff[i].imag) for i in range(lat.d)), arb(0))
    thr = 2.0 ** (-(precision / 2))
    if float(dist2.upper()) ** 0.5 < thr:
        warnings.warn(f"lattice membership decided numerically (distance < 2^-{precision / 2:g})", MembershipWarning, stacklevel=3)
        return vec, None, True, tuple(n)
    return vec, None, False, None


def _conj_pow(x, mu):
    acc = acb(1)
    for xi, m in zip(x, mu):
        if m:
            acc *= xi.conjugate() ** m
    return acc


class _Phase:
    """exp(2 pi i sum_j n_j c_j) with per-generator power tables."""

    def __init__(self, lat: ComplexLattice, H: HermitianForm, w):
        self.trivial = all(c.real.is_zero() and c.imag.is_zero() for c in w)
        if not self.trivial:
            self.c = [pairing(H, g, w) for g in lat.gens]
            self.base = [acb(2 * c).exp_pi_i() for c in self.c]
            self.tables = [dict() for _ in lat.gens]

    def __call__(self, n):
        if self.trivial:
            return None
        acc = acb(1)
        for j, nj in enumerate(n):
            if nj:
                t = self.tables[j]
                v = t.get(nj)
                if v is None:
                    # direct evaluation keeps the ball tight
                    v = acb(2 * nj * self.c[j]).exp_pi_i()
                    t[nj] = v
                acc *= v
        return acc


def _hfactor(H: HermitianForm, mu) -> float:
    """Bound for |xbar^mu| / |x|_H^|mu|."""
    f = 1.0
    for r, m in zip(H.floats(), mu):
        f *= r ** (-m / 2)
    return f * (1 + 1e-12)


def _pi_s_rgamma(s: acb) -> acb:
    return acb.pi() ** s * s.rgamma()


# ----------------------------------------------------------------------------
# theta


def theta(mu, H: HermitianForm, z, w, t, lat: ComplexLattice, P: int = 128, cap: int = DEFAULT_POINT_CAP) -> EKValue:
    """sum_lambda (zbar + lambdabar)^mu exp(-pi t |z+lambda|^2) e(<lambda, w>)."""
    mu = tuple(int(m) for m in mu)
    with workprec(P + GUARD_BITS):
        tt = to_arb(t)
        if not tt > 0:
            raise ValueError("t must be positive")
        zv, *_ = resolve_point(lat, H, z, P)
        wv = _dual_vector(lat, H, w, P)
        target = 2.0 ** (-(P + 4))
        hf = _hfactor(H, mu)
        m = sum(mu)
        R = truncation_radius(lat, H, None, float(tt.mid()) * (1 - 1e-12), m, target, hf)
        sd = shell_data(lat, H, zv, R, cap)
        ph = _Phase(lat, H, wv)
        acc = acb(0)
        pit = arb.pi() * tt
        phases = None
        if not ph.trivial and sd.coords:
            # all exponents sum_j n_j c_j in one product
            ex = arb_mat([list(n) for n in sd.coords]) * arb_mat([[2 * c] for c in ph.c])
            phases = [acb(ex[k, 0]).exp_pi_i() for k in range(len(sd.coords))]
        for k, (x, a) in enumerate(zip(sd.xs, sd.norms)):
            term = (-(pit * a)).exp()
            if m:
                term = _conj_pow(x, mu) * term
            if phases is not None:
                term *= phases[k]
            acc += term
        val = with_error(acc, target)
        return EKValue(val, radius(val), method="theta", diagnostics={"radius": R, "points": len(sd.coords)})


def _dual_vector(lat, H, w, P):
    if isinstance(w, RationalPoint):
        return _Dual.of(lat, H).point(w.coords)
    if isinstance(w, (int, float, complex, acb, arb, Fraction)):
        w = (w,)
    return tuple(to_acb(c) for c in w)


def theta_fe_residual(mu, H, z, w, t, lat, P: int = 128):
    """|theta_t(z,w,L) - t^{-d-|mu|} vol^{-1} e(<w,z>) theta_{1/t}(w,z,L*)| and its error."""
    d = lat.d
    m = sum(mu)
    with workprec(P + GUARD_BITS):
        tt = to_arb(t)
        dual = _Dual.of(lat, H)
        zv, *_ = resolve_point(lat, H, z, P)
        wv = _dual_vector(lat, H, w, P)
        # exact points keep lattice membership exact; the dual of the dual basis is the negated basis
        zc = z if isinstance(z, RationalPoint) else zv
        wc = w if isinstance(w, RationalPoint) else wv
        zt = RationalPoint(tuple(-c for c in z.coords)) if isinstance(z, RationalPoint) else zv
        lhs = theta(mu, H, zc, wc, tt, lat, P)
        rhs_t = theta(mu, H, wc, zt, 1 / tt, dual, P)
        vol = covolume(lat, H)
        phase = acb(2 * pairing(H, wv, zv)).exp_pi_i()
        rhs = tt ** (-(d + m)) / vol * phase * rhs_t.value
        diff = lhs.value - rhs
        res = float(abs(diff.mid()))
        return res, radius(diff) + res * 0, lhs, rhs


# ----------------------------------------------------------------------------
# K: direct summation


def ek_k_direct(q: EKQuery, margin: float = 0.5, cap: int = DEFAULT_POINT_CAP, target: float | None = None, allow_partial: bool = False) -> EKValue:
    """Truncated lattice sum with a certified power-law tail.

    With ``allow_partial`` the radius is capped by the point budget and the
    returned error bound reflects whatever tail remains.
    """
    lat, H, mu = q.lattice, q.H, q.mu
    d, m = lat.d, sum(mu)
    P = q.precision
    with workprec(P + GUARD_BITS):
        s = to_acb(q.s)
        sigma = float(s.real.mid())
        if sigma <= d + m / 2 + margin:
            raise OutsideConvergence("Re(s) too small for direct summation", s=q.s, bound=d + m / 2 + margin)
        zv, _ex, zmem, zn = resolve_point(lat, H, q.z, P)
        wv = _dual_vector(lat, H, q.w, P)
        if target is None:
            target = 2.0 ** (-(P + 4))
        hf = _hfactor(H, mu)
        R = power_radius(lat, H, sigma, m, target, hf)
        if not math.isfinite(R) or count_bound(lat, H, R) > cap:
            if not allow_partial:
                raise BudgetExceeded("direct sum needs more points than the budget", s=q.s, cap=cap)
            lo, hi = 0.0, 1.0
            budget = 0.8 * cap
            while count_bound(lat, H, hi) <= budget:
                lo, hi = hi, hi * 2
            for _ in range(60):
                mid_ = (lo + hi) / 2
                lo, hi = (mid_, hi) if count_bound(lat, H, mid_) <= budget else (lo, mid_)
            R = lo
        sd = shell_data(lat, H, zv, R, cap)
        ph = _Phase(lat, H, wv)
        excl = tuple(-c for c in zn) if zmem else None
        acc = acb(0)
        for n, x, a in zip(sd.coords, sd.xs, sd.norms):
            if excl is not None and n == excl:
                continue
            term = (-s * a.log()).exp()
            if m:
                term *= _conj_pow(x, mu)
            p = ph(n)
            if p is not None:
                term *= p
            acc += term
        tail = math.exp(log_power_tail(lat, H, sigma, m, R, math.log(hf)))
        val = with_error(acc, tail)
        return EKValue(val, radius(val), method="direct", diagnostics={"radius": R, "points": len(sd.coords), "tail": tail})


# ----------------------------------------------------------------------------
# K: continuation


def _gamma_side(lat, H, center, twist, sp: acb, mu, excl, target, cap, t0: float = 1.0, scale: arb | None = None, R: float | None = None):
    """sum' xbar^mu e(<lambda, twist>) scale * G(sp, pi t0 |x|^2) with certified tail.

    Termwise |G(s, X)| <= G(sigma, X) <= 2 e^{-X} / X once X >= max(1, 2(sigma - 1)),
    so each omitted term is at most 2 (scale / t0) ... e^{-pi t0 |x|^2} |x|^m.
    """
    m = sum(mu)
    sigma = float(sp.real.mid())
    hf = _hfactor(H, mu)
    sc = float(abs(scale).upper()) * (1 + 1e-12) if scale is not None else 1.0
    if R is None:
        R = _side_radius(lat, H, sigma, m, target, float(to_arb(t0).lower()), sc * hf)
    sd = shell_data(lat, H, center, R, cap)
    ph = _Phase(lat, H, twist)
    pit = arb.pi() * (t0 if isinstance(t0, arb) else to_arb(t0))
    gfun = _g_function(sp)
    acc = acb(0)
    for n, x, a in zip(sd.coords, sd.xs, sd.norms):
        if excl is not None and n == excl:
            continue
        g = gfun(pit * a)
        if m:
            g *= _conj_pow(x, mu)
        p = ph(n)
        if p is not None:
            g *= p
        acc += g
    if scale is not None:
        acc *= scale
    return with_error(acc, target), len(sd.coords), R


def _g_function(sp: acb):
    """X -> X^-s Gamma(s, X); closed form for positive integer s."""
    if sp.imag.is_zero() and sp.real.is_exact():
        v = float(sp.real.mid())
        if v >= 1 and v == int(v) and v <= 64:
            n = int(v)
            fact = arb(math.factorial(n - 1))
            inv_fact = [arb(1) / math.factorial(k) for k in range(n)]

            def g(X: arb):
                # (n-1)! e^-X sum_{k<n} X^(k-n) / k!
                acc = inv_fact[n - 1]
                for k in range(n - 2, -1, -1):
                    acc = acc * X + inv_fact[k]
                return acb(fact * (-X).exp() * acc / X ** n)

            return g

    def g_adaptive(X: arb):
        # flint propagates the radius of X badly and can lose most bits for
        # complex order; evaluate at the exact midpoint, retry wider, then add
        # rad(X) * sup|g'| with g' = -(s/X) g - e^-X / X
        P = flint.ctx.prec
        want = arb(2) ** (-(P - 8))
        Xm = acb(X.mid())
        v = Xm.gamma_upper(sp, regularized=2)
        for extra in (P, 2 * P, 4 * P):
            if v.is_finite() and abs(v).is_finite() and v.rad() <= want * abs(v).lower():
                break
            with workprec(P + extra):
                v = Xm.gamma_upper(sp, regularized=2)
        r = X.rad()
        if r > 0:
            lo = X.lower()
            slope = (abs(sp) * abs(v).upper() / lo + (-lo).exp() / lo) * 2
            v = with_error(v, float((r * slope).upper()))
        return v

    return g_adaptive


def _g_cost(sp: acb) -> float:
    v = float(sp.real.mid())
    if sp.imag.is_zero() and sp.real.is_exact() and v >= 1 and v == int(v) and v <= 64:
        return 1.0
    if not sp.imag.is_zero():
        return 8.0
    return 25.0 if v < 0 else 3.0


def _side_radius(lat, H, sigma, m, target, t0, pref):
    R = truncation_radius(lat, H, None, t0, m, target, 2 * pref)
    return max(R, math.sqrt(max(1.0, 2 * (sigma - 1)) / (math.pi * t0)) + 1e-9)


def _choose_split(lat, dual, H, s: acb, sp: acb, m: int, target: float) -> float:
    """Split point t0 minimising the estimated number of incomplete-gamma calls."""
    d = lat.d
    base = covolume(lat, H).mid()
    base = float(base) ** (-1 / d)
    sigma, sigma2 = float(s.real.mid()), float(sp.real.mid())
    hf = 1.0
    # measured relative costs of the incomplete gamma evaluations
    w1, w2 = _g_cost(s), _g_cost(sp)
    best, best_t = math.inf, 1.0
    for k in range(-6, 7):
        t0 = base * 2.0 ** (k / 2)
        try:
            R1 = _side_radius(lat, H, sigma, m, target, t0, hf * t0 ** sigma)
            R2 = _side_radius(dual, H, sigma2, m, target, 1 / t0, hf * t0 ** (-sigma2))
        except (OverflowError, ValueError):
            continue
        cost = w1 * count_bound(lat, H, R1) + w2 * count_bound(dual, H, R2)
        if cost < best:
            best, best_t = cost, t0
    return best_t


def completed_k(q: EKQuery, cap: int = DEFAULT_POINT_CAP, extra_bits: int = 0, target: float | None = None, t0: float | None = None):
    """Pieces of Gamma(s) K / pi^s: (regular part, pole coefficient at d, at 0, info).

    Completed = regular + C_d/(s-d) + C_0/s.  With the Mellin integral split
    at t0 the polar pieces carry t0^(s-d) and t0^s, which are folded into the
    regular part so that C_d and C_0 are the true residues.
    """
    lat, H, mu = q.lattice, q.H, q.mu
    d, m = lat.d, sum(mu)
    P = q.precision + extra_bits
    s = to_acb(q.s)
    dual = _Dual.of(lat, H)
    zv, _zx, zmem, zn = resolve_point(lat, H, q.z, P)
    if isinstance(q.w, RationalPoint):
        wv, _wx, wmem, wn = resolve_point(dual, H, q.w, P)
    else:
        wv, _wx, wmem, wn = resolve_point(dual, H, _dual_vector(lat, H, q.w, P), P)
    if target is None:
        target = 2.0 ** (-(P + 6))
    vol = covolume(lat, H)
    sp = acb(d + m) - s
    if t0 is None:
        t0 = _choose_split(lat, dual, H, s, sp, m, target)
    t0a = to_arb(Fraction(t0))
    S1, n1, R1 = _gamma_side(lat, H, zv, wv, s, mu, tuple(-c for c in zn) if zmem else None, target / 2, cap, t0a, t0a ** s)
    e_wz = acb(2 * pairing(H, wv, zv)).exp_pi_i()
    S2, n2, R2 = _gamma_side(dual, H, wv, zv, sp, mu, tuple(-c for c in wn) if wmem else None, target / 2 * float(vol.mid()) * (1 - 1e-9), cap, 1 / t0a, t0a ** (-sp))
    regular = S1 + e_wz / vol * S2
    c_d = acb(1) / vol if (m == 0 and wmem) else None
    c_0 = -acb(2 * pairing(H, zv, wv)).exp_pi_i().conjugate() if (m == 0 and zmem) else None
    # t0^(s-d)/(s-d) = 1/(s-d) + (t0^(s-d) - 1)/(s-d); the second piece is entire
    if c_d is not None:
        regular += c_d * _expm1_over(to_acb(t0a.log()), s - d)
    if c_0 is not None:
        regular += c_0 * _expm1_over(to_acb(t0a.log()), s)
    info = {"points_lattice": n1, "points_dual": n2, "radius_lattice": R1, "radius_dual": R2, "split": t0}
    return regular, c_d, c_0, info


def _expm1_over(L: acb, u: acb) -> acb:
    """(exp(L u) - 1) / u, entire in u."""
    if u.real.is_zero() and u.imag.is_zero():
        return L
    r = abs(L * u)
    if r < 0.25:
        # series keeps the ball tight near u = 0
        acc, term, k = acb(0), L, 1
        while True:
            acc += term
            term = term * L * u / (k + 1)
            k += 1
            if abs(term).upper() < arb(2) ** (-(flint.ctx.prec + 8)):
                break
        return with_error(acc, float(abs(term).upper()) * 2)
    return ((L * u).exp() - 1) / u


def _is_exact(s: acb, value: int) -> bool:
    return s.real.is_exact() and s.imag.is_exact() and s.imag.is_zero() and s.real == value


def _scale_log2(s: acb) -> float:
    """log2 |pi^s / Gamma(s)| (-inf at the poles of Gamma)."""
    with workprec(64):
        v = abs(_pi_s_rgamma(s))
        if v.is_zero():
            return -math.inf
        u = v.upper()
        return float(u.log().upper()) / math.log(2)


def ek_k(q: EKQuery, cap: int = DEFAULT_POINT_CAP, t0: float | None = None) -> EKValue:
    """K^mu(H, z, w, s, Lambda) for any s, via the completed function."""
    lat = q.lattice
    d = lat.d
    P = q.precision
    lg = _scale_log2(to_acb(q.s))
    extra = max(0, int(math.ceil(lg))) if math.isfinite(lg) else 0
    # absolute target on the completed function matching 2^-(P+6) on K
    target = 2.0 ** (-(P + 6) - (lg if math.isfinite(lg) else -(P + 6) + 20))
    target = min(target, 2.0 ** 200)
    with workprec(P + GUARD_BITS + extra):
        s = to_acb(q.s)
        regular, c_d, c_0, info = completed_k(q, cap, extra, target, t0)
        pole0 = c_0
        poled = c_d
        if c_0 is not None and _is_exact(s, 0):
            # pi^s/Gamma(s) * C_0/s -> C_0, everything else is killed by 1/Gamma(0) = 0
            val = c_0
            return EKValue(val, radius(val), pole0, poled, "continued", info | {"note": "K(0) finite; completed function has a pole"})
        if c_d is not None and _is_exact(s, d):
            u = _pi_s_rgamma(s)
            reg = regular + (c_0 / s if c_0 is not None else acb(0))
            du = u * (arb.pi().log() - s.digamma())
            res = u * c_d
            fin = u * reg + du * c_d
            raise PoleRequested(
                "K has a simple pole at s = d",
                residue=EKValue(res, radius(res), method="residue"),
                finite_part=EKValue(fin, radius(fin), pole0, poled, "continued", info),
                completed_residue=EKValue(c_d, radius(c_d), method="residue"),
                s=d,
            )
        comp = regular
        if c_d is not None:
            comp = comp + c_d / (s - d)
        if c_0 is not None:
            comp = comp + c_0 / s
        val = _pi_s_rgamma(s) * comp
        info["completed"] = comp
        return EKValue(val, radius(val), pole0, poled, "continued", info)


def completed_value(q: EKQuery, cap: int = DEFAULT_POINT_CAP) -> EKValue:
    """Gamma(s) K(s) / pi^s (poles at 0 and d included symbolically)."""
    P = q.precision
    with workprec(P + GUARD_BITS):
        s = to_acb(q.s)
        regular, c_d, c_0, info = completed_k(q, cap)
        comp = regular
        if c_d is not None:
            comp = comp + c_d / (s - q.lattice.d)
        if c_0 is not None:
            comp = comp + c_0 / s
        return EKValue(comp, radius(comp), c_0, c_d, "completed", info)


def k_fe_residual(q: EKQuery, cap: int = DEFAULT_POINT_CAP):
    """Residual of Lambda(s; z, w, L) = e(<w,z>)/vol * Lambda(d+|mu|-s; w, z, L*).

    Returns (|difference|, combined certified error, lhs, rhs).
    """
    lat, H = q.lattice, q.H
    d, m = lat.d, sum(q.mu)
    P = q.precision
    with workprec(P + GUARD_BITS):
        s = to_acb(q.s)
        dual = _Dual.of(lat, H)
        lhs = completed_value(q, cap)
        zv, *_ = resolve_point(lat, H, q.z, P)
        wv = _dual_vector(lat, H, q.w, P)
        zq = q.z
        wq = q.w
        # the dual problem sees z as a twist and w as the centre
        wq_dual = wq if isinstance(wq, RationalPoint) else wv
        # the dual of the dual basis is the negated original basis
        zq_dual = RationalPoint(tuple(-c for c in zq.coords)) if isinstance(zq, RationalPoint) else zv
        q2 = EKQuery(q.mu, H, wq_dual, zq_dual, acb(d + m) - s, dual, P)
        rhs_c = completed_value(q2, cap)
        vol = covolume(lat, H)
        phase = acb(2 * pairing(H, wv, zv)).exp_pi_i()
        rhs = phase / vol * rhs_c.value
        diff = lhs.value - rhs
        return float(abs(diff.mid())), radius(diff), lhs.value, rhs


def residue_extrapolated(q: EKQuery, h0: Fraction = Fraction(1, 8), steps: int = 8, cap: int = DEFAULT_POINT_CAP):
    """Residue of the completed function at s = d from values off the pole.

    Evaluates (s - d) Gamma(s) K(s) / pi^s at s = d + h0 / 2^k and applies
    Richardson extrapolation in h. Returns (estimate, last correction).
    """
    d = q.lattice.d
    P = q.precision
    with workprec(P + GUARD_BITS):
        rows = []
        for k in range(steps):
            h = Fraction(h0) / 2**k
            qk = EKQuery(q.mu, q.H, q.z, q.w, to_acb(d) + to_acb(h), q.lattice, P)
            rows.append(completed_value(qk, cap).value * to_acb(h))
        # Neville table; each column removes one more power of h
        T = [rows]
        for j in range(1, steps):
            prev = T[-1]
            f = 2**j
            T.append([(f * prev[i + 1] - prev[i]) / (f - 1) for i in range(len(prev) - 1)])
        est = T[-1][0]
        corr = float(abs((T[-1][0] - T[-2][-1]).mid()))
        return est, corr
