"""Totally imaginary number fields given by integral basis data.

Elements are exact rational coordinate vectors over the integral basis.
Ideals are Z-lattices in Hermite normal form. Only the complex embeddings
are floating (arb/acb balls at a declared working precision).
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
import os
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

from flint import acb, arb, fmpq, fmpq_mat, fmpq_poly, fmpz_mat

from ._num import GUARD_BITS, to_acb, to_arb, workprec
from .errors import (
    InvariantViolation,
    MalformedConfig,
    NotContained,
    NotStable,
    RankDeficient,
)

try:  # pragma: no cover - depends on interpreter version
    import tomllib as _toml
except ModuleNotFoundError:  # pragma: no cover
    import tomli as _toml


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, fmpq):
        return Fraction(int(x.p), int(x.q))
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        raise TypeError("floats are not exact field coordinates")
    return Fraction(x)


def _lcm_den(values: Iterable[Fraction]) -> int:
    den = 1
    for v in values:
        den = den * v.denominator // math.gcd(den, v.denominator)
    return den


def _to_fmpq_mat(rows: Sequence[Sequence[Fraction]]) -> fmpq_mat:
    n, m = len(rows), len(rows[0])
    return fmpq_mat(n, m, [fmpq(v.numerator, v.denominator) for r in rows for v in r])


def _from_fmpq_mat(M: fmpq_mat) -> list[list[Fraction]]:
    return [[_frac(M[i, j]) for j in range(M.ncols())] for i in range(M.nrows())]


# ----------------------------------------------------------------------------
# field elements


class FieldElement:
    """Exact element of a number field in integral-basis coordinates."""

    __slots__ = ("field", "c")

    def __init__(self, field: "NumberFieldSpec", coords):
        self.field = field
        c = tuple(_frac(x) for x in coords)
        if len(c) != field.degree:
            raise ValueError("coordinate vector has wrong length")
        self.c = c

    def _coerce(self, other) -> "FieldElement":
        if isinstance(other, FieldElement):
            return other
        if isinstance(other, (int, Fraction)):
            return self.field.scalar(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.field, [a + b for a, b in zip(self.c, o.c)])

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.field, [-a for a in self.c])

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.field, self.field.mul_coords(self.c, o.c))

    __rmul__ = __mul__

    def inverse(self) -> "FieldElement":
        return self.field.inverse(self)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = self.field.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.field.scalar(other)
        return isinstance(other, FieldElement) and other.field is self.field and other.c == self.c

    def __hash__(self):
        return hash(self.c)

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.c)

    def is_integral(self) -> bool:
        return all(v.denominator == 1 for v in self.c)

    def norm(self) -> Fraction:
        return self.field.norm(self)

    def trace(self) -> Fraction:
        return self.field.trace(self)

    def conj(self) -> "FieldElement":
        return self.field.conj(self)

    def embed(self, k: int) -> acb:
        return self.field.embed(self, k)

    def __repr__(self):
        terms = []
        for v, lab in zip(self.c, self.field.basis_labels):
            if v == 0:
                continue
            terms.append(f"{v}" if lab == "1" else f"{v}*{lab}")
        return "(" + (" + ".join(terms) if terms else "0") + ")"


# ----------------------------------------------------------------------------
# the field


@dataclass(eq=False)
class NumberFieldSpec:
    """Totally imaginary field of degree 2d.

    ``mult_table[i][j]`` holds the coordinates of e_i*e_j; ``embeddings[k][j]``
    is sigma_k(e_j). Basis element 0 must be 1.
    """

    name: str
    degree: int
    basis_labels: tuple
    mult_table: tuple
    embeddings: tuple
    conjugation_pairing: tuple
    discriminant: int
    precision: int
    polynomial: tuple | None = None
    basis_poly: tuple | None = None

    def __post_init__(self):
        self._T = [[list(self.mult_table[i][j]) for j in range(self.degree)] for i in range(self.degree)]

    # -- element constructors
    def elt(self, coords) -> FieldElement:
        return FieldElement(self, coords)

    def scalar(self, q) -> FieldElement:
        c = [Fraction(0)] * self.degree
        c[0] = _frac(q)
        return FieldElement(self, c)

    def one(self) -> FieldElement:
        return self.scalar(1)

    def zero(self) -> FieldElement:
        return self.scalar(0)

    def basis_element(self, j: int) -> FieldElement:
        c = [0] * self.degree
        c[j] = 1
        return FieldElement(self, c)

    # -- exact arithmetic
    def mul_coords(self, a, b) -> list:
        n = self.degree
        out = [Fraction(0)] * n
        T = self._T
        for i in range(n):
            ai = a[i]
            if ai == 0:
                continue
            Ti = T[i]
            for j in range(n):
                bj = b[j]
                if bj == 0:
                    continue
                p = ai * bj
                for k, t in enumerate(Ti[j]):
                    if t:
                        out[k] += p * t
        return out

    def mult_matrix(self, a: FieldElement) -> list[list[Fraction]]:
        """Row i holds the coordinates of e_i * a."""
        return [self.mul_coords(self.basis_element(i).c, a.c) for i in range(self.degree)]

    def norm(self, a: FieldElement) -> Fraction:
        return _frac(_to_fmpq_mat(self.mult_matrix(a)).det())

    def trace(self, a: FieldElement) -> Fraction:
        M = self.mult_matrix(a)
        return sum((M[i][i] for i in range(self.degree)), Fraction(0))

    def inverse(self, a: FieldElement) -> FieldElement:
        if a.is_zero():
            raise ZeroDivisionError("inverse of zero field element")
        M = _to_fmpq_mat(self.mult_matrix(a))
        # x*a = 1  <=>  x^T M = e_0
        rhs = fmpq_mat(self.degree, 1, [1] + [0] * (self.degree - 1))
        sol = M.transpose().solve(rhs)
        return FieldElement(self, [_frac(sol[i, 0]) for i in range(self.degree)])

    @cached_property
    def conj_matrix(self) -> tuple:
        """Integer matrix of complex conjugation on the integral basis."""
        n = self.degree
        with workprec(self.precision + GUARD_BITS):
            V = [[self.embeddings[k][j] for j in range(n)] for k in range(n)]
            rows = []
            for j in range(n):
                target = [self.embeddings[self.conjugation_pairing[k]][j] for k in range(n)]
                y = _solve_complex(V, target)
                rows.append(tuple(int(round(float(v.real.mid()))) for v in y))
        C = tuple(rows)
        # exact checks: ring homomorphism and involution
        for i in range(n):
            for j in range(n):
                lhs = self._apply_int_matrix(C, self.mul_coords(self.basis_element(i).c, self.basis_element(j).c))
                rhs = self.mul_coords(C[i], C[j])
                if list(lhs) != list(rhs):
                    raise InvariantViolation("complex conjugation is not a ring map on the basis", pair=(i, j))
        for j in range(n):
            if list(self._apply_int_matrix(C, C[j])) != list(self.basis_element(j).c):
                raise InvariantViolation("complex conjugation is not an involution")
        return C

    @staticmethod
    def _apply_int_matrix(C, coords):
        n = len(coords)
        out = [Fraction(0)] * n
        for i, v in enumerate(coords):
            if v:
                for k in range(n):
                    out[k] += v * C[i][k]
        return out

    def conj(self, a: FieldElement) -> FieldElement:
        return FieldElement(self, self._apply_int_matrix(self.conj_matrix, a.c))

    def embed(self, a: FieldElement, k: int) -> acb:
        row = self.embeddings[k]
        acc = acb(0)
        for v, e in zip(a.c, row):
            if v:
                acc += e * arb(fmpq(v.numerator, v.denominator))
        return acc

    @property
    def d(self) -> int:
        return self.degree // 2

    def trace_form_discriminant(self) -> int:
        n = self.degree
        rows = [[self.trace(self.elt(self.mul_coords(self.basis_element(i).c, self.basis_element(j).c))) for j in range(n)] for i in range(n)]
        return int(_frac(_to_fmpq_mat(rows).det()))

    def fingerprint(self) -> str:
        payload = {
            "name": self.name,
            "mult": [[[int(x) for x in self.mult_table[i][j]] for j in range(self.degree)] for i in range(self.degree)],
            "conj": list(self.conjugation_pairing),
            "disc": self.discriminant,
            "poly": [str(c) for c in self.polynomial] if self.polynomial else None,
            "emb": [[self.embeddings[k][j].mid().str(30, radius=False) for j in range(self.degree)] for k in range(self.degree)],
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]

    def at_precision(self, bits: int) -> "NumberFieldSpec":
        """Same field with embeddings refined to ``bits`` (needs a polynomial)."""
        if bits <= self.precision:
            return self
        if self.polynomial is None:
            raise InvariantViolation("embeddings were given as decimals; cannot refine beyond declared precision", declared=self.precision, requested=bits)
        return field_from_polynomial(self.name, self.polynomial, self.basis_poly, bits, self.discriminant, self.basis_labels)

    def validate(self) -> "NumberFieldSpec":
        n = self.degree
        if n < 2 or n % 2:
            raise InvariantViolation("degree must be even and >= 2", degree=n)
        # exact ring axioms on the table
        one = [Fraction(1)] + [Fraction(0)] * (n - 1)
        for j in range(n):
            if self.mul_coords(one, self.basis_element(j).c) != list(self.basis_element(j).c):
                raise InvariantViolation("basis element 0 is not the identity", index=j)
        for i in range(n):
            for j in range(n):
                if list(self.mult_table[i][j]) != list(self.mult_table[j][i]):
                    raise InvariantViolation("multiplication table is not commutative", pair=(i, j))
        for i, j, k in itertools.product(range(n), repeat=3):
            ei, ej, ek = (self.basis_element(x).c for x in (i, j, k))
            if self.mul_coords(self.mul_coords(ei, ej), ek) != self.mul_coords(ei, self.mul_coords(ej, ek)):
                raise InvariantViolation("multiplication table is not associative", triple=(i, j, k))
        # conjugation pairing
        c = self.conjugation_pairing
        if sorted(c) != list(range(n)) or any(c[c[k]] != k or c[k] == k for k in range(n)):
            raise InvariantViolation("conjugation pairing must be a fixed-point-free involution", pairing=c)
        tol = 2.0 ** (-(self.precision - 8))
        with workprec(self.precision + GUARD_BITS):
            for k in range(n):
                # pairing really is complex conjugation
                for j in range(n):
                    r = abs(complex(self.embeddings[c[k]][j].mid()) - complex(self.embeddings[k][j].mid()).conjugate())
                    rr = _abs_upper(self.embeddings[c[k]][j] - self.embeddings[k][j].conjugate())
                    if rr > tol * max(1.0, abs(complex(self.embeddings[k][j].mid()))):
                        raise InvariantViolation("conjugation pairing inconsistent with embeddings", embedding=k, basis=j, residual=r)
                for i in range(n):
                    for j in range(i, n):
                        lhs = self.embeddings[k][i] * self.embeddings[k][j]
                        rhs = self.embed(self.elt(self.mult_table[i][j]), k)
                        res = _abs_upper(lhs - rhs)
                        if res > tol * max(1.0, _abs_upper(lhs)):
                            raise InvariantViolation("embedding is not multiplicative", embedding=k, pair=(i, j), residual=res)
            disc = self.trace_form_discriminant()
            if disc != self.discriminant:
                raise InvariantViolation("declared discriminant differs from the trace form", declared=self.discriminant, computed=disc)
            V = [[self.embeddings[k][j] for j in range(n)] for k in range(n)]
            det2 = _det_complex(V) ** 2
            res = _abs_upper(det2 - acb(self.discriminant))
            if res > tol * max(1.0, abs(self.discriminant)):
                raise InvariantViolation("embedding discriminant mismatch", residual=res)
        self.conj_matrix  # noqa: B018 - runs exact checks
        return self


def _abs_upper(x: acb) -> float:
    return float(abs(x).upper())


def _det_complex(V) -> acb:
    """Determinant by Gaussian elimination in acb (small matrices only)."""
    n = len(V)
    M = [list(r) for r in V]
    det = acb(1)
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(complex(M[r][col].mid())))
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            det = -det
        p = M[col][col]
        det *= p
        for r in range(col + 1, n):
            f = M[r][col] / p
            for cc in range(col, n):
                M[r][cc] -= f * M[col][cc]
    return det


def _solve_complex(V, b):
    n = len(V)
    M = [list(V[i]) + [b[i]] for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(complex(M[r][col].mid())))
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        for r in range(n):
            if r != col:
                f = M[r][col] / p
                for cc in range(col, n + 1):
                    M[r][cc] -= f * M[col][cc]
    return [M[i][n] / M[i][i] for i in range(n)]


def field_from_polynomial(name, polynomial, basis_poly=None, precision=128, discriminant=None, basis_labels=None) -> NumberFieldSpec:
    """Build a field from a monic defining polynomial (coefficients low to high).

    ``basis_poly[j]`` gives e_j as a polynomial in the root (low to high);
    default is the power basis. Embeddings are the complex roots sorted by
    argument in [0, 2*pi), refined to ``precision`` bits.
    """
    poly = tuple(_frac(c) for c in polynomial)
    n = len(poly) - 1
    if poly[-1] != 1:
        raise MalformedConfig("defining polynomial must be monic")
    if basis_poly is None:
        basis_poly = tuple(tuple(Fraction(int(i == j)) for i in range(n)) for j in range(n))
    basis_poly = tuple(tuple(_frac(c) for c in b) for b in basis_poly)
    m = fmpq_poly([fmpq(c.numerator, c.denominator) for c in poly])
    bps = [fmpq_poly([fmpq(c.numerator, c.denominator) for c in b]) for b in basis_poly]
    B = [[(_frac(b.coeffs()[i]) if i < len(b.coeffs()) else Fraction(0)) for i in range(n)] for b in bps]
    Binv = _to_fmpq_mat(B).inv()
    table = []
    for i in range(n):
        row = []
        for j in range(n):
            prod = (bps[i] * bps[j]) % m
            cf = [_frac(x) for x in prod.coeffs()] + [Fraction(0)] * n
            vec = _to_fmpq_mat([cf[:n]]) * Binv
            coords = [_frac(vec[0, k]) for k in range(n)]
            if any(c.denominator != 1 for c in coords):
                raise InvariantViolation("basis is not closed under multiplication over Z", pair=(i, j))
            row.append(tuple(int(c) for c in coords))
        table.append(tuple(row))
    with workprec(precision + GUARD_BITS):
        roots = [r for r, _mult in m.complex_roots()]

        def angle(r):
            a = math.atan2(float(r.imag.mid()), float(r.real.mid()))
            return (a % (2 * math.pi), abs(complex(r.mid())))

        roots.sort(key=angle)
        emb = tuple(tuple(_eval_poly(b, r) for b in bps) for r in roots)
        pairing = []
        for k, r in enumerate(roots):
            rc = r.conjugate()
            dists = [abs(complex((rr - rc).mid())) for rr in roots]
            pairing.append(min(range(n), key=lambda i: dists[i]))
    labels = tuple(basis_labels) if basis_labels else tuple("1" if j == 0 else f"e{j}" for j in range(n))
    spec = NumberFieldSpec(name, n, labels, tuple(table), emb, tuple(pairing), 0, precision, poly, basis_poly)
    spec.discriminant = spec.trace_form_discriminant() if discriminant is None else int(discriminant)
    return spec


def _eval_poly(p: fmpq_poly, x: acb) -> acb:
    acc = acb(0)
    for c in reversed([fmpq(int(v.p), int(v.q)) for v in p.coeffs()]):
        acc = acc * x + arb(c)
    return acc


# ----------------------------------------------------------------------------
# CM types


@dataclass(frozen=True)
class CMTypeSpec:
    """A CM type as a set of embedding indices.

    ``fibers``, if given, is the partition of all embeddings into fibers of
    restriction to a CM subfield K; Sigma must then be a union of fibers.
    """

    sigma: tuple
    fibers: tuple | None = None

    def sigma_bar(self, field: NumberFieldSpec) -> tuple:
        return tuple(field.conjugation_pairing[k] for k in self.sigma)

    def validate(self, field: NumberFieldSpec) -> "CMTypeSpec":
        n = field.degree
        s = set(self.sigma)
        sb = set(self.sigma_bar(field))
        if len(self.sigma) != n // 2 or len(s) != n // 2:
            raise InvariantViolation("CM type must contain d distinct embeddings", sigma=self.sigma)
        if s & sb or (s | sb) != set(range(n)):
            raise InvariantViolation("Sigma and its conjugate must partition the embeddings", sigma=self.sigma)
        if self.fibers is not None:
            flat = sorted(i for f in self.fibers for i in f)
            if flat != list(range(n)):
                raise InvariantViolation("fibers must partition the embeddings", fibers=self.fibers)
            for f in self.fibers:
                inter = s & set(f)
                if inter and inter != set(f):
                    raise InvariantViolation("Sigma is not a union of fibers (not lifted)", fiber=f)
        return self

    def sigma_fibers(self) -> tuple:
        """Fibers meeting Sigma, each restricted to Sigma (singletons if not lifted)."""
        if self.fibers is None:
            return tuple((k,) for k in self.sigma)
        s = set(self.sigma)
        return tuple(tuple(k for k in self.sigma if k in f) for f in self.fibers if s & set(f))

    def permuted(self, order: Sequence[int]) -> "CMTypeSpec":
        return CMTypeSpec(tuple(self.sigma[i] for i in order), self.fibers)


def fibers_from_subfield(field: NumberFieldSpec, generator: FieldElement) -> tuple:
    """Group embeddings by the value of a generator of the subfield K."""
    vals = [complex(field.embed(generator, k).mid()) for k in range(field.degree)]
    groups: list[list[int]] = []
    for k, v in enumerate(vals):
        for g in groups:
            if abs(vals[g[0]] - v) < 1e-20 * max(1.0, abs(v)) + 1e-25:
                g.append(k)
                break
        else:
            groups.append([k])
    return tuple(tuple(g) for g in groups)


# ----------------------------------------------------------------------------
# ideals


def _hnf_of_rows(rows: Sequence[Sequence[Fraction]], n: int):
    den = _lcm_den(v for r in rows for v in r)
    M = fmpz_mat(len(rows), n, [int(v * den) for r in rows for v in r])
    H = M.hnf()
    out = []
    for i in range(H.nrows()):
        row = tuple(int(H[i, j]) for j in range(n))
        if any(row):
            out.append(row)
    if len(out) != n:
        raise RankDeficient("generators do not span a full-rank lattice", rank=len(out))
    # canonical: reduce the common content with den
    g = den
    for r in out:
        for v in r:
            g = math.gcd(g, v)
    if g > 1:
        den //= g
        out = [tuple(v // g for v in r) for r in out]
    return den, tuple(out)


@dataclass(frozen=True)
class FractionalIdeal:
    """Z-lattice (1/den) * rowspan(hnf) in integral-basis coordinates."""

    den: int
    hnf: tuple
    label: str = dc_field(default="", compare=False)
    field: NumberFieldSpec | None = dc_field(default=None, compare=False, hash=False, repr=False)

    @property
    def hnf_basis(self) -> list[list[Fraction]]:
        return [[Fraction(v, self.den) for v in r] for r in self.hnf]

    def basis_elements(self) -> list[FieldElement]:
        return [self.field.elt(r) for r in self.hnf_basis]

    @cached_property
    def _basis_inv(self) -> fmpq_mat:
        return _to_fmpq_mat(self.hnf_basis).inv()

    def coords(self, x: FieldElement) -> list[Fraction]:
        """Coordinates of x with respect to the HNF basis."""
        v = _to_fmpq_mat([list(x.c)]) * self._basis_inv
        return [_frac(v[0, j]) for j in range(len(x.c))]

    def contains(self, x: FieldElement) -> bool:
        return all(c.denominator == 1 for c in self.coords(x))

    def contains_ideal(self, other: "FractionalIdeal") -> bool:
        return all(self.contains(b) for b in other.basis_elements())

    def norm(self) -> Fraction:
        det = 1
        for i, r in enumerate(self.hnf):
            det *= r[i]
        return Fraction(abs(det), self.den ** len(self.hnf))

    def is_integral(self) -> bool:
        return self.den == 1

    def reduce(self, x: FieldElement) -> FieldElement:
        """Canonical representative of x modulo this lattice."""
        y = self.coords(x)
        frac = [c - (c.numerator // c.denominator) for c in y]
        B = self.hnf_basis
        n = len(y)
        return self.field.elt([sum((frac[i] * B[i][k] for i in range(n)), Fraction(0)) for k in range(n)])

    def __mul__(self, other):
        if isinstance(other, FieldElement):
            other = principal_ideal(self.field, other)
        return ideal_mul(self, other)

    __rmul__ = __mul__

    def __add__(self, other):
        return ideal_add(self, other)

    def inverse(self) -> "FractionalIdeal":
        return ideal_inverse(self)

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = unit_ideal(self.field)
        for _ in range(k):
            out = out * self
        return out

    def with_label(self, label: str) -> "FractionalIdeal":
        return FractionalIdeal(self.den, self.hnf, label, self.field)

    def check_stable(self) -> "FractionalIdeal":
        """Exact O-module check via the multiplication table."""
        for b in self.basis_elements():
            for j in range(self.field.degree):
                if not self.contains(b * self.field.basis_element(j)):
                    raise InvariantViolation("lattice is not stable under the integral basis", ideal=self.label, basis=j)
        return self


def ideal_from_basis(field: NumberFieldSpec, rows, label: str = "", check: bool = True) -> FractionalIdeal:
    rows = [[_frac(v) for v in r] for r in rows]
    den, H = _hnf_of_rows(rows, field.degree)
    I = FractionalIdeal(den, H, label, field)
    return I.check_stable() if check else I


def ideal_from_generators(field: NumberFieldSpec, gens: Sequence[FieldElement], label: str = "") -> FractionalIdeal:
    rows = []
    for g in gens:
        for j in range(field.degree):
            rows.append(field.mul_coords(g.c, field.basis_element(j).c))
    den, H = _hnf_of_rows(rows, field.degree)
    return FractionalIdeal(den, H, label, field)


def principal_ideal(field: NumberFieldSpec, g, label: str = "") -> FractionalIdeal:
    if not isinstance(g, FieldElement):
        g = field.elt(g) if isinstance(g, (list, tuple)) else field.scalar(g)
    return ideal_from_generators(field, [g], label or f"({g})")


def unit_ideal(field: NumberFieldSpec) -> FractionalIdeal:
    return principal_ideal(field, field.one(), "(1)")


def ideal_mul(I: FractionalIdeal, J: FractionalIdeal) -> FractionalIdeal:
    f = I.field
    rows = [f.mul_coords(a.c, b.c) for a in I.basis_elements() for b in J.basis_elements()]
    den, H = _hnf_of_rows(rows, f.degree)
    return FractionalIdeal(den, H, f"{I.label}*{J.label}", f)


def ideal_add(I: FractionalIdeal, J: FractionalIdeal) -> FractionalIdeal:
    rows = I.hnf_basis + J.hnf_basis
    den, H = _hnf_of_rows(rows, I.field.degree)
    return FractionalIdeal(den, H, f"{I.label}+{J.label}", I.field)


def ideal_inverse(I: FractionalIdeal) -> FractionalIdeal:
    """{x : x*I in O}, computed as the dual of a Z-lattice."""
    f = I.field
    n = f.degree
    # y -> coords(x*b) is linear in y; collect the columns of all maps
    cols = []
    for b in I.basis_elements():
        M = f.mult_matrix(b)  # row k = coords(e_k * b)
        for j in range(n):
            cols.append([M[k][j] for k in range(n)])
    den, H = _hnf_of_rows(cols, n)
    Bm = _to_fmpq_mat([[Fraction(v, den) for v in r] for r in H])
    dual = Bm.inv().transpose()
    rows = _from_fmpq_mat(dual)
    den2, H2 = _hnf_of_rows(rows, n)
    return FractionalIdeal(den2, H2, f"{I.label}^-1", f)


def coprime(I: FractionalIdeal, J: FractionalIdeal) -> bool:
    return ideal_add(I, J) == unit_ideal(I.field)


# ----------------------------------------------------------------------------
# units and class representatives


def _is_torsion(g: FieldElement, bound: int = 64) -> int:
    """Order of g if it is a root of unity (exact), else 0."""
    one = g.field.one()
    x = g
    for k in range(1, bound + 1):
        if x == one:
            return k
        x = x * g
    return 0


@dataclass(eq=False)
class UnitGroupSpec:
    generators: tuple
    torsion_order: int
    index_in_full: int
    congruence_level: FractionalIdeal | None = None  # None means the full unit group
    label: str = ""

    def validate(self, field: NumberFieldSpec) -> "UnitGroupSpec":
        for g in self.generators:
            nrm = field.norm(g)
            if abs(nrm) != 1 or not g.is_integral():
                raise InvariantViolation("unit generator must be integral of norm +-1", generator=g, norm=nrm)
            if self.congruence_level is not None and not self.congruence_level.contains(g - field.one()):
                raise InvariantViolation("generator not congruent to 1 mod the congruence level", generator=g)
        if len(self.torsion_elements()) != self.torsion_order:
            raise InvariantViolation("declared torsion order disagrees with the generators", declared=self.torsion_order, computed=len(self.torsion_elements()))
        return self

    def torsion_generators(self) -> list:
        return [g for g in self.generators if _is_torsion(g)]

    def free_generators(self) -> list:
        return [g for g in self.generators if not _is_torsion(g)]

    def torsion_elements(self) -> list:
        if not self.generators:
            return []
        field = self.generators[0].field
        elems = [field.one()]
        seen = {field.one()}
        frontier = [field.one()]
        gens = self.torsion_generators()
        while frontier:
            nxt = []
            for x in frontier:
                for g in gens:
                    y = x * g
                    if y not in seen:
                        seen.add(y)
                        elems.append(y)
                        nxt.append(y)
            frontier = nxt
        return elems

    @property
    def is_finite(self) -> bool:
        return not self.free_generators()

    def order(self) -> int | None:
        return self.torsion_order if self.is_finite else None


def trivial_unit_group(field: NumberFieldSpec) -> UnitGroupSpec:
    return UnitGroupSpec((field.one(),), 1, 0, None, "{1}")


@dataclass(eq=False)
class ClassRepSet:
    """Representatives of I(f)/P_f; ``generators`` is set for principal reps."""

    modulus: FractionalIdeal
    reps: tuple
    generators: tuple | None = None

    def validate(self) -> "ClassRepSet":
        one = unit_ideal(self.modulus.field)
        for b in self.reps:
            if not b.is_integral() or ideal_add(b, self.modulus) != one:
                raise InvariantViolation("class representative not coprime to the modulus", rep=b.label)
        if self.generators is not None:
            for b, g in zip(self.reps, self.generators):
                if principal_ideal(b.field, g) != b:
                    raise InvariantViolation("generator does not generate its representative", rep=b.label)
        return self


def principal_ray_class_reps(field: NumberFieldSpec, f: FractionalIdeal, units: UnitGroupSpec) -> ClassRepSet:
    """Ray class representatives for a field of class number one.

    I(f)/P_f is then (O/f)^x modulo the image of the units; one
    generator per orbit is returned, smallest first.
    """
    O = unit_ideal(field)
    residues = coset_reps(field, f, O)
    coprime_res = [x for x in residues if coprime(principal_ideal(field, x) if not x.is_zero() else f, f)]
    if f == O:
        return ClassRepSet(f, (principal_ideal(field, field.one(), "(1)"),), (field.one(),)).validate()
    orbits = unit_orbits(field, coprime_res, units, f)
    gens = []
    for orb in orbits:
        gens.append(min(orb, key=_elt_size_key))
    reps = tuple(principal_ideal(field, g, f"({g})") for g in gens)
    return ClassRepSet(f, reps, tuple(gens)).validate()


def _elt_size_key(x: FieldElement):
    return (sum(abs(v) for v in x.c), tuple(-abs(v) for v in x.c), tuple(-v for v in x.c))


# ----------------------------------------------------------------------------
# cosets and orbits


def coset_reps(field: NumberFieldSpec, sub: FractionalIdeal, super_: FractionalIdeal) -> list[FieldElement]:
    """Representatives of super/sub, in lexicographic order of HNF digits."""
    if not super_.contains_ideal(sub):
        raise NotContained("sub is not contained in super", sub=sub.label, super=super_.label)
    n = field.degree
    T = [super_.coords(b) for b in sub.basis_elements()]
    _den, H = _hnf_of_rows(T, n)
    assert _den == 1
    diag = [H[i][i] for i in range(n)]
    S = super_.hnf_basis
    out = []
    for digits in itertools.product(*[range(d) for d in diag]):
        out.append(field.elt([sum((digits[i] * S[i][k] for i in range(n)), Fraction(0)) for k in range(n)]))
    return out


def unit_orbits(field: NumberFieldSpec, points: Sequence[FieldElement], gamma: UnitGroupSpec, modulus: FractionalIdeal) -> list[list[FieldElement]]:
    """Orbits (as canonical residues mod ``modulus``) of gamma on ``points``."""
    canon = [modulus.reduce(p) for p in points]
    keyset = set(canon)
    gens = [g for g in gamma.generators if g != field.one()]
    for p in canon:
        for g in gens:
            if modulus.reduce(g * p) not in keyset:
                raise NotStable("point set is not stable under the unit group", point=p, generator=g)
    seen = set()
    orbits = []
    for p in canon:
        if p in seen:
            continue
        orb = [p]
        seen.add(p)
        frontier = [p]
        # finiteness of the residue set bounds this loop
        while frontier:
            nxt = []
            for x in frontier:
                for g in gens:
                    y = modulus.reduce(g * x)
                    if y not in seen:
                        seen.add(y)
                        orb.append(y)
                        nxt.append(y)
            frontier = nxt
        orbits.append(orb)
    return orbits


def unit_orbit_reps(field: NumberFieldSpec, points: Sequence[FieldElement], gamma: UnitGroupSpec, modulus: FractionalIdeal) -> list[tuple[FieldElement, int]]:
    return [(orb[0], len(orb)) for orb in unit_orbits(field, points, gamma, modulus)]


# ----------------------------------------------------------------------------
# embedding ideals as lattices


def embed_ideal(field: NumberFieldSpec, ideal: FractionalIdeal, cm: CMTypeSpec, scale=None):
    from .lattice import ComplexLattice, IdealProvenance

    d = field.d
    if scale is None:
        scale = (1,) * d
    scale = tuple(to_acb(c) for c in scale)
    if len(scale) != d:
        raise ValueError("scale must have one entry per embedding in Sigma")
    for c in scale:
        if c.real.is_zero() and c.imag.is_zero():
            raise ValueError("scale has a zero entry")
    with workprec(field.precision + GUARD_BITS):
        gens = tuple(tuple(field.embed(b, k) * scale[i] for i, k in enumerate(cm.sigma)) for b in ideal.basis_elements())
    prov = IdealProvenance(field, ideal, cm, scale)
    lat = ComplexLattice(gens, field.precision, prov)
    lat.check_rank()
    return lat


# ----------------------------------------------------------------------------
# presets and config ingestion


@dataclass(eq=False)
class PrimeData:
    p: int
    ideal: FractionalIdeal
    generator: FieldElement | None
    residue_degree: int
    in_sigma: bool  # True when the prime belongs to Sigma_p


@dataclass(eq=False)
class FieldConfig:
    field: NumberFieldSpec
    cm: CMTypeSpec
    units: UnitGroupSpec
    class_number: int | None = None
    primes: tuple = ()
    source_fingerprint: str = ""

    def unit_ideal(self) -> FractionalIdeal:
        return unit_ideal(self.field)


PRESETS = {
    "Q(i)": dict(polynomial=[1, 0, 1], labels=["1", "i"], disc=-4, sigma=[0], units=[[0, 1]], torsion=4,
                 primes=[dict(p=5, generator=[2, 1], in_sigma=True), dict(p=5, generator=[2, -1], in_sigma=False)]),
    "Q(sqrt-3)": dict(polynomial=[1, 1, 1], labels=["1", "w"], disc=-3, sigma=[0], units=[[0, -1]], torsion=6,
                      primes=[dict(p=7, generator=[3, 1], in_sigma=True), dict(p=7, generator=[2, -1], in_sigma=False)]),
    "Q(zeta5)": dict(polynomial=[1, 1, 1, 1, 1], labels=["1", "z", "z^2", "z^3"], disc=125, sigma=[0, 1],
                     units=[[0, 0, 0, -1], [0, 0, -1, -1]], torsion=10),
    "Q(zeta8)": dict(polynomial=[1, 0, 0, 0, 1], labels=["1", "z", "z^2", "z^3"], disc=256, sigma=[0, 2],
                     units=[[0, 1, 0, 0]], torsion=8, index=0, subfield_generator=[0, 0, 1, 0]),
}


def preset(name: str, precision: int = 128) -> FieldConfig:
    """Built-in fields. Q(zeta5) uses Sigma = {zeta->zeta, zeta->zeta^2}."""
    if name not in PRESETS:
        raise MalformedConfig(f"unknown preset {name!r}", known=sorted(PRESETS))
    p = PRESETS[name]
    f = field_from_polynomial(name, p["polynomial"], None, precision, p["disc"], p["labels"]).validate()
    fibers = None
    if "subfield_generator" in p:
        fibers = fibers_from_subfield(f, f.elt(p["subfield_generator"]))
    cm = CMTypeSpec(tuple(p["sigma"]), fibers).validate(f)
    gens = tuple(f.elt(g) for g in p["units"])
    units = UnitGroupSpec(gens, p["torsion"], p.get("index", 1), None, "O^x").validate(f)
    primes = []
    for pd in p.get("primes", []):
        g = f.elt(pd["generator"])
        primes.append(PrimeData(pd["p"], principal_ideal(f, g, f"({g})"), g, 1, pd["in_sigma"]))
    return FieldConfig(f, cm, units, 1, tuple(primes), f"preset:{name}:{precision}")


def _read_document(doc) -> dict:
    if isinstance(doc, dict):
        return doc
    if isinstance(doc, (str, os.PathLike)) and os.path.exists(str(doc)):
        with open(doc, "rb") as fh:
            data = fh.read()
        try:
            return _toml.loads(data.decode())
        except Exception as exc:  # noqa: BLE001
            raise MalformedConfig(f"cannot parse {doc}: {exc}") from exc
    if isinstance(doc, str):
        try:
            return _toml.loads(doc)
        except Exception as exc:  # noqa: BLE001
            raise MalformedConfig(f"cannot parse config text: {exc}") from exc
    raise MalformedConfig("config must be a path, TOML text or a mapping")


def _need(d: dict, key: str, where: str = "field"):
    if key not in d:
        raise MalformedConfig(f"missing field {key!r} in [{where}]", missing=key)
    return d[key]


def load_field(config_document, precision: int | None = None) -> NumberFieldSpec:
    """Parse and validate the [field] part of a config document."""
    data = _read_document(config_document)
    fd = data.get("field", data)
    if "preset" in fd:
        return preset(fd["preset"], precision or int(fd.get("precision", 128))).field
    degree = int(_need(fd, "degree"))
    if degree < 2 or degree % 2:
        raise MalformedConfig("degree must be even and >= 2", degree=degree)
    prec = int(precision or fd.get("precision", 128))
    labels = tuple(fd.get("basis", ["1"] + [f"e{j}" for j in range(1, degree)]))
    disc = fd.get("discriminant")
    if "polynomial" in fd:
        f = field_from_polynomial(fd.get("name", "L"), fd["polynomial"], fd.get("basis_poly"), prec, disc, labels)
        if "mult_table" in fd and [[list(x) for x in r] for r in f.mult_table] != fd["mult_table"]:
            raise InvariantViolation("declared multiplication table disagrees with the polynomial")
    else:
        table = _need(fd, "mult_table")
        emb_raw = _need(fd, "embeddings")
        pairing = _need(fd, "conjugation")
        if disc is None:
            raise MalformedConfig("missing field 'discriminant' in [field]", missing="discriminant")
        declared = int(fd.get("embedding_precision", prec))
        with workprec(declared + GUARD_BITS):
            try:
                emb = tuple(tuple(acb(arb(str(z[0])), arb(str(z[1]))) for z in row) for row in emb_raw)
            except Exception as exc:  # noqa: BLE001
                raise MalformedConfig(f"bad embedding entry: {exc}") from exc
        try:
            mt = tuple(tuple(tuple(int(v) for v in table[i][j]) for j in range(degree)) for i in range(degree))
        except (IndexError, TypeError, ValueError) as exc:
            raise MalformedConfig(f"bad multiplication table: {exc}") from exc
        f = NumberFieldSpec(fd.get("name", "L"), degree, labels, mt, emb, tuple(int(x) for x in pairing), int(disc), min(prec, declared))
    return f.validate()


def load_field_config(config_document, precision: int | None = None) -> FieldConfig:
    """Parse a full field config: field, CM type, units and prime data."""
    data = _read_document(config_document)
    fd = data.get("field", {})
    if "preset" in fd:
        cfg = preset(fd["preset"], precision or int(fd.get("precision", 128)))
        cfg.source_fingerprint = _fingerprint_doc(data)
        return cfg
    f = load_field(data, precision)
    cmd = data.get("cm", {})
    fibers = tuple(tuple(x) for x in cmd["fibers"]) if "fibers" in cmd else None
    cm = CMTypeSpec(tuple(_need(cmd, "sigma", "cm")), fibers).validate(f)
    ud = data.get("units", {})
    gens = tuple(f.elt(g) for g in ud.get("generators", [[1] + [0] * (f.degree - 1)]))
    level = None
    if ud.get("congruence", "full") != "full":
        level = ideal_from_basis(f, ud["congruence"], "f")
    units = UnitGroupSpec(gens, int(ud.get("torsion_order", 1)), int(ud.get("index_in_full", 1)), level, "units").validate(f)
    primes = []
    for pd in data.get("primes", []):
        if "generator" in pd:
            g = f.elt(pd["generator"])
            I = principal_ideal(f, g, f"({g})")
        else:
            g = None
            I = ideal_from_basis(f, _need(pd, "hnf", "primes"), f"p{pd.get('p')}")
        primes.append(PrimeData(int(_need(pd, "p", "primes")), I, g, int(pd.get("residue_degree", 1)), bool(pd.get("in_sigma", False))))
    cn = data.get("classes", {}).get("class_number")
    return FieldConfig(f, cm, units, cn, tuple(primes), _fingerprint_doc(data))


def _fingerprint_doc(data: dict) -> str:
    return hashlib.sha256(json.dumps(data, sort_keys=True, default=str).encode()).hexdigest()[:16]
