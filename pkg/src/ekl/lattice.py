"""Complex lattices in C^d with a diagonal Hermitian form.

Geometry (Gram matrices, dual, covolume) is done in arb; point enumeration
runs in floating point with an inflated radius and is then filtered in arb.

Tail bounds. Put D = max |p|_H over the centred fundamental parallelepiped
(half the longest corner diagonal). The translates x + P of the lattice
points tile space, so for any radial weight f that is decreasing on
[R - 2D, oo)

    sum_{|x| > R} f(|x|) <= (S_{2d} / vol_H) * int_{R-2D}^oo f(u) (u + D)^(2d-1) du

with S_{2d} = 2 pi^d / Gamma(d) the area of the unit sphere in R^{2d}.
Expanding (u + D)^(2d-1) binomially reduces the Gaussian case to upper
incomplete gamma values and the power case to elementary integrals.
"""
from __future__ import annotations

import hashlib
import math
import os
import threading
from collections import OrderedDict
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from flint import acb, acb_mat, arb, arb_mat, fmpq

from ._num import GUARD_BITS, to_acb, to_arb, workprec
from .errors import BudgetExceeded, IllConditioned, RankDeficient

DEFAULT_POINT_CAP = 600_000
CACHE_FORMAT_VERSION = 1
CACHE_MAGIC = "EKLSHELL"
R_GRID = 8  # radii are rounded up to multiples of 1/R_GRID for caching


@dataclass(frozen=True, eq=False)
class HermitianForm:
    """H(z, w) = sum_i r_i z_i conj(w_i)."""

    r: tuple

    def __post_init__(self):
        rr = tuple(to_arb(v) for v in self.r)
        object.__setattr__(self, "r", rr)
        for v in rr:
            if not v > 0:
                raise ValueError("Hermitian form weights must be positive")

    @classmethod
    def standard(cls, d: int) -> "HermitianForm":
        return cls(tuple(arb(1) for _ in range(d)))

    @property
    def d(self) -> int:
        return len(self.r)

    def fingerprint(self) -> str:
        return ",".join(v.mid().str(40, radius=False) for v in self.r)

    def floats(self) -> list[float]:
        return [float(v.mid()) for v in self.r]


@dataclass(eq=False)
class IdealProvenance:
    field: object
    ideal: object
    cm: object
    scale: tuple


class ComplexLattice:
    """Rank-2d lattice spanned by ``gens`` (2d vectors in C^d)."""

    def __init__(self, gens, prec: int, provenance=None):
        self.gens = tuple(tuple(to_acb(c) for c in g) for g in gens)
        self.prec = int(prec)
        self.provenance = provenance
        self._geom: dict = {}
        if len(self.gens) != 2 * len(self.gens[0]):
            raise RankDeficient("need exactly 2d generators", count=len(self.gens))

    @property
    def d(self) -> int:
        return len(self.gens[0])

    @property
    def rank(self) -> int:
        return len(self.gens)

    def point(self, coords: Sequence) -> tuple:
        """sum_j coords[j] * g_j for integer or rational coordinates."""
        out = [acb(0)] * self.d
        for q, g in zip(coords, self.gens):
            if q == 0:
                continue
            qa = to_arb(Fraction(q)) if not isinstance(q, (arb, acb)) else q
            out = [o + qa * gi for o, gi in zip(out, g)]
        return tuple(out)

    def scaled(self, c) -> "ComplexLattice":
        c = to_acb(c)
        return ComplexLattice(tuple(tuple(c * x for x in g) for g in self.gens), self.prec, ("scaled", self, c))

    def fingerprint(self) -> str:
        fp = self._geom.get("_fingerprint")
        if fp is None:
            fp = self._fingerprint()
            self._geom["_fingerprint"] = fp
        return fp

    def _fingerprint(self) -> str:
        h = hashlib.sha256()
        for g in self.gens:
            for x in g:
                h.update(x.real.mid().str(45, radius=False).encode())
                h.update(x.imag.mid().str(45, radius=False).encode())
        return h.hexdigest()[:20]

    def geometry(self, H: HermitianForm) -> "LatticeGeometry":
        key = H.fingerprint()
        g = self._geom.get(key)
        if g is None:
            g = LatticeGeometry(self, H)
            self._geom[key] = g
        return g

    def check_rank(self) -> "ComplexLattice":
        G = self.geometry(HermitianForm.standard(self.d))
        if not G.gram_det > 0:
            raise RankDeficient("generators are R-linearly dependent")
        return self

    def exact_coords(self, x):
        """Rational coordinates of a field element when ideal-derived."""
        prov = self.provenance
        if isinstance(prov, IdealProvenance):
            return tuple(prov.ideal.coords(x))
        return None

    def embed_element(self, x) -> tuple:
        """Image of a field element in C^Sigma under the provenance scaling."""
        prov = self.provenance
        if not isinstance(prov, IdealProvenance):
            raise TypeError("lattice is not ideal-derived")
        with workprec(self.prec + GUARD_BITS):
            return tuple(prov.field.embed(x, k) * prov.scale[i] for i, k in enumerate(prov.cm.sigma))


def _real_coords(v, sqrt_r) -> list[float]:
    out = []
    for x, s in zip(v, sqrt_r):
        out.append(s * float(x.real.mid()))
        out.append(s * float(x.imag.mid()))
    return out


def h_inner(H: HermitianForm, a, b) -> acb:
    acc = acb(0)
    for r, x, y in zip(H.r, a, b):
        acc += r * x * y.conjugate()
    return acc


def h_norm2(H: HermitianForm, a) -> arb:
    acc = arb(0)
    for r, x in zip(H.r, a):
        acc += r * (x.real * x.real + x.imag * x.imag)
    return acc


def pairing(H: HermitianForm, a, b) -> arb:
    """<a, b> = Im H(a, b)."""
    return h_inner(H, a, b).imag


class LatticeGeometry:
    """Derived data for (lattice, H), computed once at the lattice precision."""

    def __init__(self, lat: ComplexLattice, H: HermitianForm):
        self.lat = lat
        self.H = H
        n = lat.rank
        with workprec(lat.prec + GUARD_BITS):
            gram = [[h_inner(H, lat.gens[j], lat.gens[k]) for k in range(n)] for j in range(n)]
            self.gram_arb = arb_mat([[gram[j][k].real for k in range(n)] for j in range(n)])
            self.pair_arb = arb_mat([[gram[j][k].imag for k in range(n)] for j in range(n)])
            self.gram_det = self.gram_arb.det()
            self._covol = self.gram_det.sqrt() if self.gram_det > 0 else None
        sqrt_r = [math.sqrt(v) for v in H.floats()]
        self.sqrt_r = sqrt_r
        self.B = np.array([_real_coords(g, sqrt_r) for g in lat.gens], dtype=float)
        self.gram = self.B @ self.B.T
        self.cond = float(np.linalg.cond(self.gram)) if self._covol is not None else math.inf
        self.Binv = np.linalg.inv(self.B) if self._covol is not None else None
        # half-diameter of the centred cell: max over corners of |sum eps_j g_j / 2|
        best = 0.0
        for signs in range(1 << (n - 1)):
            eps = np.array([1.0] + [(1.0 if (signs >> j) & 1 else -1.0) for j in range(n - 1)])
            best = max(best, float(np.linalg.norm(eps @ self.B)) / 2)
        self.D = best * (1 + 1e-12) + 1e-15
        self.covol_float = float(self._covol.mid()) if self._covol is not None else 0.0

    def check(self):
        if self._covol is None:
            raise RankDeficient("lattice is not of full rank")
        budget = 2.0 ** (self.lat.prec / 2)
        if self.cond > budget:
            raise IllConditioned("Gram matrix condition number exceeds precision budget", cond=self.cond, budget=budget)
        return self

    @property
    def covol(self) -> arb:
        self.check()
        return self._covol

    def center_coords(self, z) -> np.ndarray:
        """Real coordinates of z in the basis B (float)."""
        return np.array(_real_coords(z, self.sqrt_r)) @ self.Binv


# ----------------------------------------------------------------------------
# duals and covolumes


def covolume(lat: ComplexLattice, H: HermitianForm) -> arb:
    return lat.geometry(H).covol


def dual_lattice(lat: ComplexLattice, H: HermitianForm) -> ComplexLattice:
    """Dual with respect to <a, b> = Im H(a, b): Im H(l_k, g_j) = delta_kj."""
    geo = lat.geometry(H).check()
    n = lat.rank
    with workprec(lat.prec + GUARD_BITS):
        A = geo.pair_arb
        try:
            C = A.inv()
        except ZeroDivisionError as exc:
            raise IllConditioned("pairing matrix is singular") from exc
        gens = []
        for k in range(n):
            v = [acb(0)] * lat.d
            for m in range(n):
                c = C[k, m]
                v = [a + c * b for a, b in zip(v, lat.gens[m])]
            gens.append(tuple(v))
    out = ComplexLattice(gens, lat.prec, ("dual", lat, H.fingerprint()))
    return out


def dual_residual(lat: ComplexLattice, dual: ComplexLattice, H: HermitianForm) -> float:
    """max |Im H(l_k, g_j) - delta_kj| (upper bound)."""
    worst = 0.0
    with workprec(lat.prec + GUARD_BITS):
        for k, l in enumerate(dual.gens):
            for j, g in enumerate(lat.gens):
                v = pairing(H, l, g) - (1 if j == k else 0)
                worst = max(worst, float(abs(v).upper()))
    return worst


def same_lattice_residual(a: ComplexLattice, b: ComplexLattice, H: HermitianForm) -> float:
    """Distance of b's generators from integer combinations of a's, and back."""
    worst = 0.0
    for x, y in ((a, b), (b, a)):
        geo = x.geometry(H)
        with workprec(x.prec + GUARD_BITS):
            for g in y.gens:
                c = geo.center_coords(g)
                n = np.rint(c).astype(int)
                diff = [gi - pi for gi, pi in zip(g, x.point([int(v) for v in n]))]
                worst = max(worst, float(abs(h_norm2(H, diff)).upper()) ** 0.5)
    return worst


# ----------------------------------------------------------------------------
# enumeration


@dataclass
class ShellEnumeration:
    center: tuple
    radius: float
    points: list
    certified_complete: bool


class _RWLock:
    """Many readers or one writer."""

    def __init__(self):
        self._cond = threading.Condition(threading.Lock())
        self._readers = 0
        self._writer = False

    def acquire_read(self):
        with self._cond:
            while self._writer:
                self._cond.wait()
            self._readers += 1

    def release_read(self):
        with self._cond:
            self._readers -= 1
            if not self._readers:
                self._cond.notify_all()

    def acquire_write(self):
        with self._cond:
            while self._writer or self._readers:
                self._cond.wait()
            self._writer = True

    def release_write(self):
        with self._cond:
            self._writer = False
            self._cond.notify_all()


class ShellCache:
    """Enumeration cache keyed by (lattice, H, centre, radius grid).

    On-disk format, one file per key, ``<sha256-prefix>.npz`` holding
    ``magic`` (the string EKLSHELL), ``version`` (int), ``key`` (the full key
    string) and ``coords`` (int64 array, one row of lattice coordinates per
    point). Files with another magic or version are ignored.
    """

    def __init__(self, directory: str | None = None, max_entries: int = 256):
        self.directory = directory
        self.max_entries = max_entries
        self._mem: OrderedDict = OrderedDict()
        self._lock = _RWLock()
        self.hits = 0
        self.misses = 0

    def _path(self, key: str) -> str | None:
        if not self.directory:
            return None
        return os.path.join(self.directory, hashlib.sha256(key.encode()).hexdigest()[:32] + ".npz")

    def get(self, key: str):
        self._lock.acquire_read()
        try:
            val = self._mem.get(key)
        finally:
            self._lock.release_read()
        if val is not None:
            self.hits += 1
            return val
        path = self._path(key)
        if path and os.path.exists(path):
            try:
                with np.load(path, allow_pickle=False) as data:
                    if str(data["magic"]) == CACHE_MAGIC and int(data["version"]) == CACHE_FORMAT_VERSION and str(data["key"]) == key:
                        val = data["coords"].astype(np.int64)
            except (OSError, KeyError, ValueError):
                val = None
            if val is not None:
                self._store_mem(key, val)
                self.hits += 1
                return val
        self.misses += 1
        return None

    def _store_mem(self, key, val):
        self._lock.acquire_write()
        try:
            self._mem[key] = val
            self._mem.move_to_end(key)
            while len(self._mem) > self.max_entries:
                self._mem.popitem(last=False)
        finally:
            self._lock.release_write()

    def put(self, key: str, coords: np.ndarray):
        self._store_mem(key, coords)
        path = self._path(key)
        if path:
            os.makedirs(self.directory, exist_ok=True)
            tmp = path + f".{os.getpid()}.{threading.get_ident()}.tmp"
            with open(tmp, "wb") as fh:
                np.savez(fh, magic=np.array(CACHE_MAGIC), version=np.array(CACHE_FORMAT_VERSION), key=np.array(key), coords=coords)
            os.replace(tmp, path)


_default_cache = ShellCache(os.environ.get("EKL_CACHE_DIR") or None)


def default_cache() -> ShellCache:
    return _default_cache


def set_cache_dir(directory: str | None):
    global _default_cache
    _default_cache = ShellCache(directory)


def _center_fingerprint(z) -> str:
    return ";".join(x.real.mid().str(45, radius=False) + "," + x.imag.mid().str(45, radius=False) for x in z)


def _fincke_pohst(G: np.ndarray, y: np.ndarray, R2: float) -> list:
    """Integer n with (n + y) G (n + y)^T <= R2 (float, caller inflates R2)."""
    k = G.shape[0]
    Q = G.astype(float).copy()
    for i in range(k):
        for j in range(i + 1, k):
            Q[j, i] = Q[i, j]
            Q[i, j] = Q[i, j] / Q[i, i]
        for l in range(i + 1, k):
            for m in range(l, k):
                Q[l, m] -= Q[l, i] * Q[i, m]
    qd = [Q[i, i] for i in range(k)]
    qo = [[Q[i, j] for j in range(k)] for i in range(k)]
    yl = [float(v) for v in y]
    xs = [0.0] * k
    ns = [0] * k
    out = []

    def rec(i, T):
        u = 0.0
        row = qo[i]
        for j in range(i + 1, k):
            u -= row[j] * xs[j]
        r = math.sqrt(max(T, 0.0) / qd[i])
        lo = math.ceil(u - r - yl[i] - 1e-9)
        hi = math.floor(u + r - yl[i] + 1e-9)
        for n in range(lo, hi + 1):
            x = n + yl[i]
            rem = T - qd[i] * (x - u) ** 2
            if rem < -1e-9 * (1 + R2):
                continue
            xs[i] = x
            ns[i] = n
            if i == 0:
                out.append(tuple(ns))
            else:
                rec(i - 1, rem)

    rec(k - 1, R2)
    return out


def count_bound(lat: ComplexLattice, H: HermitianForm, R: float) -> float:
    geo = lat.geometry(H)
    d = lat.d
    return (math.pi ** d / math.factorial(d)) * (R + geo.D) ** (2 * d) / geo.covol_float


def _enumerate_coords(lat, H, z, R, cap, cache):
    geo = lat.geometry(H).check()
    Rg = math.ceil(R * R_GRID) / R_GRID
    key = f"v{CACHE_FORMAT_VERSION}|{lat.fingerprint()}|{H.fingerprint()}|{_center_fingerprint(z)}|{Rg!r}"
    cache = cache if cache is not None else _default_cache
    got = cache.get(key)
    if got is not None:
        return got
    nb = count_bound(lat, H, Rg)
    if nb > cap:
        raise BudgetExceeded("point count above the configured cap", count_bound=int(nb), cap=cap, radius=Rg)
    y = geo.center_coords(z)
    R2 = (Rg * (1 + 1e-9) + 1e-9) ** 2
    pts = _fincke_pohst(geo.gram, y, R2)
    pts.sort()
    arr = np.array(pts, dtype=np.int64).reshape(len(pts), lat.rank)
    cache.put(key, arr)
    return arr


class ShellData:
    """Points n, vectors x = z + sum n_j g_j and |x|_H^2, in canonical order."""

    __slots__ = ("coords", "xs", "norms", "radius")

    def __init__(self, coords, xs, norms, radius):
        self.coords = coords
        self.xs = xs
        self.norms = norms
        self.radius = radius


_shell_memo: OrderedDict = OrderedDict()
_memo_lock = threading.Lock()


def shell_data(lat: ComplexLattice, H: HermitianForm, z, R: float, cap: int = DEFAULT_POINT_CAP, cache=None) -> ShellData:
    """Vectors with |x|_H <= R (mid-point test), computed at the ambient precision."""
    import flint

    prec = flint.ctx.prec
    Rg = math.ceil(R * R_GRID) / R_GRID
    mkey = (lat.fingerprint(), H.fingerprint(), _center_fingerprint(z), Rg, prec)
    with _memo_lock:
        hit = _shell_memo.get(mkey)
        if hit is not None:
            _shell_memo.move_to_end(mkey)
    if hit is None:
        arr = _enumerate_coords(lat, H, z, Rg, cap, cache)
        coords, xs, norms = [], [], []
        d = lat.d
        R2 = arb(Rg) ** 2
        rows = arr.tolist()
        if rows:
            # one matrix product builds every z + sum n_j g_j
            M = acb_mat(rows) * acb_mat([list(g) for g in lat.gens])
            r = H.r
            unit = all(v == 1 for v in r)
            R2m = R2.mid()
            for k, row in enumerate(rows):
                if d == 1:
                    x0 = M[k, 0] + z[0]
                    x = (x0,)
                    a = x0.real * x0.real + x0.imag * x0.imag
                    if not unit:
                        a = r[0] * a
                else:
                    x = tuple(M[k, i] + z[i] for i in range(d))
                    a = arb(0)
                    for i in range(d):
                        xr, xi = x[i].real, x[i].imag
                        a += (xr * xr + xi * xi) if unit else r[i] * (xr * xr + xi * xi)
                if a.mid() <= R2m:
                    coords.append(tuple(row))
                    xs.append(x)
                    norms.append(a)
        hit = ShellData(coords, xs, norms, Rg)
        with _memo_lock:
            _shell_memo[mkey] = hit
            while len(_shell_memo) > 48:
                _shell_memo.popitem(last=False)
    if Rg == hit.radius and R >= Rg:
        return hit
    # restrict to the requested radius
    R2 = arb(R) ** 2
    keep = [i for i, a in enumerate(hit.norms) if a.mid() <= R2.mid()]
    return ShellData([hit.coords[i] for i in keep], [hit.xs[i] for i in keep], [hit.norms[i] for i in keep], R)


def enumerate_shells(lat: ComplexLattice, H: HermitianForm, z, R: float, cap: int = DEFAULT_POINT_CAP, cache=None) -> ShellEnumeration:
    """All lattice vectors lambda (integer coordinates) with |z + lambda|_H <= R."""
    if R < 0:
        raise ValueError("radius must be nonnegative")
    z = tuple(to_acb(c) for c in z)
    with workprec(lat.prec + GUARD_BITS):
        sd = shell_data(lat, H, z, R, cap, cache)
    return ShellEnumeration(z, R, list(sd.coords), True)


# ----------------------------------------------------------------------------
# tail bounds


def _log_upper_gamma(a: float, X: float) -> float:
    """log of an upper bound for Gamma(a, X), X > 0."""
    if a <= 1:
        return (a - 1) * math.log(X) - X
    if X >= 2 * (a - 1):
        return math.log(2.0) + (a - 1) * math.log(X) - X
    return math.lgamma(a)


def _logsumexp(vals):
    vals = [v for v in vals if v != -math.inf]
    if not vals:
        return -math.inf
    m = max(vals)
    return m + math.log(sum(math.exp(v - m) for v in vals))


def _log_sphere_over_vol(geo: LatticeGeometry, d: int) -> float:
    return math.log(2 * math.pi ** d / math.gamma(d)) - math.log(geo.covol_float)


def log_gaussian_tail(lat: ComplexLattice, H: HermitianForm, t: float, mu_degree: int, R: float, log_prefactor: float = 0.0) -> float:
    """log of a bound for sum_{|x|_H > R} |x|_H^m exp(-pi t |x|_H^2).

    Minimum of a cell-comparison bound and the split bound
    R^m exp(-pi t (1-c) R^2) * Theta(t c), valid once the first factor is
    decreasing in |x|.
    """
    geo = lat.geometry(H)
    m = mu_degree
    best = _log_cell_tail(geo, lat.d, t, m, R)
    for c in _SPLITS:
        if R * R * 2 * math.pi * t * (1 - c) < m or R <= 0:
            continue
        v = (m * math.log(R) if m else 0.0) - math.pi * t * (1 - c) * R * R + math.log(theta_majorant(lat, H, t * c))
        best = min(best, v)
    return best + log_prefactor


_THETA_GRID = 8  # majorants are taken at a rounded down to 2^(k/8)
_theta_memo: dict = {}


def theta_majorant(lat: ComplexLattice, H: HermitianForm, a: float) -> float:
    """Upper bound for sum_{lambda} exp(-pi a |lambda|_H^2).

    By Poisson summation every shifted sum sum_x exp(-pi a |z + lambda|^2) is
    bounded by this unshifted one, since the Fourier side has positive terms.
    """
    k = math.floor(math.log2(a) * _THETA_GRID)
    ag = 2.0 ** (k / _THETA_GRID)
    key = (lat.fingerprint(), H.fingerprint(), k)
    hit = _theta_memo.get(key)
    if hit is not None:
        return hit
    geo = lat.geometry(H)
    if ag < geo.covol_float ** (-1 / lat.d):
        # small a: use Theta_L(a) = Theta_L*(1/a) / (a^d vol)
        other = dual_lattice(lat, H)
        val = _theta_enum(other, H, 1 / ag) / (ag ** lat.d * geo.covol_float) * (1 + 1e-9)
    else:
        val = _theta_enum(lat, H, ag)
    _theta_memo[key] = val
    return val


def _theta_enum(lat, H, a):
    geo = lat.geometry(H)
    R = _search_radius(lambda r: _log_cell_tail(geo, lat.d, a, 0, r), math.log(1e-6), 2 * geo.D + 1e-9)
    C = np.asarray(_fincke_pohst(geo.gram, np.zeros(lat.rank), R * R), dtype=float).reshape(-1, lat.rank)
    V = C @ geo.B
    total = float(np.exp(-math.pi * a * (V * V).sum(axis=1) * (1 - 1e-12)).sum())
    return total * (1 + 1e-9) + 1e-6


def _log_cell_tail(geo, d, t, m, R):
    D = geo.D
    A = R - 2 * D
    if A <= 0 or A * A < m / (2 * math.pi * t):
        return math.inf
    c = math.pi * t
    terms = []
    for k in range(2 * d):
        e = 2 * d - 1 - k
        if e and D == 0:
            continue
        lc = math.log(math.comb(2 * d - 1, k)) + (e * math.log(D) if e else 0.0)
        a = (m + k + 1) / 2
        terms.append(lc + math.log(0.5) - a * math.log(c) + _log_upper_gamma(a, c * A * A))
    return _log_sphere_over_vol(geo, d) + _logsumexp(terms)


_SPLITS = (0.05, 0.1, 0.2, 0.35, 0.5)


def gaussian_tail_bound(lat, H, t, mu_degree, R, prefactor: float = 1.0) -> float:
    v = log_gaussian_tail(lat, H, t, mu_degree, R, math.log(prefactor))
    return math.exp(v) if v < 700 else math.inf


def _search_radius(logf, log_target: float, R0: float) -> float:
    R = max(R0, 1e-9)
    if logf(R) <= log_target:
        return R
    step = max(1.0, R)
    hi = R + step
    while logf(hi) > log_target:
        step *= 2
        hi = R + step
        if hi > 1e8:
            return math.inf
    lo = R
    for _ in range(60):
        mid_ = (lo + hi) / 2
        if logf(mid_) <= log_target:
            hi = mid_
        else:
            lo = mid_
        if hi - lo < 1e-6 * hi:
            break
    return hi


def truncation_radius(lat: ComplexLattice, H: HermitianForm, z, t: float, mu_degree: int, target: float, prefactor: float = 1.0) -> float:
    """Radius R with (bound on) sum_{|z+l|_H > R} |z+l|^m e^{-pi t |z+l|^2} < target.

    The bound is uniform in the centre z.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    geo = lat.geometry(H)
    lt = math.log(target)
    R0 = math.sqrt(mu_degree / (2 * math.pi * t)) + 1e-9
    lp = math.log(prefactor)
    return _search_radius(lambda R: log_gaussian_tail(lat, H, t, mu_degree, R, lp), lt, R0)


def log_power_tail(lat: ComplexLattice, H: HermitianForm, sigma: float, mu_degree: int, R: float, log_prefactor: float = 0.0) -> float:
    """log of a bound for sum_{|x|_H > R} |x|_H^(m - 2 sigma); needs 2 sigma > m + 2d."""
    geo = lat.geometry(H)
    d = lat.d
    D = geo.D
    A = R - 2 * D
    m = mu_degree
    if A <= 0 or 2 * sigma <= m + 2 * d:
        return math.inf
    terms = []
    for k in range(2 * d):
        e = 2 * d - 1 - k
        if e and D == 0:
            continue
        ex = k + m - 2 * sigma + 1
        terms.append(math.log(math.comb(2 * d - 1, k)) + (e * math.log(D) if e else 0.0) + ex * math.log(A) - math.log(-ex))
    return _log_sphere_over_vol(geo, d) + _logsumexp(terms) + log_prefactor


def power_radius(lat, H, sigma: float, mu_degree: int, target: float, prefactor: float = 1.0) -> float:
    geo = lat.geometry(H)
    lp = math.log(prefactor)
    return _search_radius(lambda R: log_power_tail(lat, H, sigma, mu_degree, R, lp), math.log(target), 2 * geo.D + 1e-6)
