"""Exact arithmetic in cyclotomic fields Q(zeta_N), zeta_N = exp(2 pi i / N)."""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

from flint import acb, arb, fmpq, fmpq_poly, fmpz_poly

from ._num import GUARD_BITS, workprec


def _fr(c) -> Fraction:
    c = fmpq(c)
    return Fraction(int(c.p), int(c.q))


@lru_cache(maxsize=None)
def cyclotomic_field(N: int) -> "CycloField":
    return CycloField(N)


class CycloField:
    def __init__(self, N: int):
        if N < 1:
            raise ValueError("N must be positive")
        # Q(zeta_N) = Q(zeta_2N) for odd N; keep N as given for indexing
        self.N = N
        self.modulus = fmpq_poly(fmpz_poly.cyclotomic(N))
        self.degree = self.modulus.degree()

    def __repr__(self):
        return f"Q(zeta_{self.N})"

    def __call__(self, value) -> "CycloElement":
        if isinstance(value, CycloElement):
            if value.F is self:
                return value
            return value.lift(self)
        if isinstance(value, (int, Fraction)):
            return CycloElement(self, fmpq_poly([fmpq(Fraction(value).numerator, Fraction(value).denominator)]))
        if isinstance(value, complex):
            raise TypeError("inexact value")
        raise TypeError(f"cannot coerce {type(value).__name__}")

    def zero(self):
        return self(0)

    def one(self):
        return self(1)

    def zeta(self, k: int = 1) -> "CycloElement":
        k %= self.N
        return CycloElement(self, fmpq_poly([0] * k + [1]))

    def i(self) -> "CycloElement":
        if self.N % 4:
            raise ValueError(f"i is not in {self!r}")
        return self.zeta(self.N // 4)

    def gaussian(self, re, im=0) -> "CycloElement":
        return self(Fraction(re)) + self(Fraction(im)) * self.i() if im else self(Fraction(re))

    def root_of_unity(self, num: int, den: int) -> "CycloElement":
        """exp(2 pi i num/den)."""
        if self.N % den:
            raise ValueError(f"zeta_{den} is not in {self!r}")
        return self.zeta((num % den) * (self.N // den))


def common_field(a: CycloField, b: CycloField) -> CycloField:
    return cyclotomic_field(a.N * b.N // math.gcd(a.N, b.N))


class CycloElement:
    __slots__ = ("F", "p")

    def __init__(self, F: CycloField, p: fmpq_poly):
        self.F = F
        self.p = p % F.modulus if p.degree() >= F.degree else p

    # coercion
    def _co(self, other):
        if isinstance(other, CycloElement):
            if other.F is self.F:
                return self, other
            F = common_field(self.F, other.F)
            return self.lift(F), other.lift(F)
        return self, self.F(other)

    def lift(self, F: CycloField) -> "CycloElement":
        if F.N % self.F.N:
            raise ValueError(f"{self.F!r} does not embed in {F!r}")
        e = F.N // self.F.N
        coeffs = self.p.coeffs()
        out = [fmpq(0)] * (e * (len(coeffs) - 1) + 1) if coeffs else [fmpq(0)]
        for k, c in enumerate(coeffs):
            out[k * e] = c
        return CycloElement(F, fmpq_poly(out))

    def __add__(self, o):
        a, b = self._co(o)
        return CycloElement(a.F, a.p + b.p)

    __radd__ = __add__

    def __neg__(self):
        return CycloElement(self.F, -self.p)

    def __sub__(self, o):
        a, b = self._co(o)
        return CycloElement(a.F, a.p - b.p)

    def __rsub__(self, o):
        a, b = self._co(o)
        return CycloElement(a.F, b.p - a.p)

    def __mul__(self, o):
        a, b = self._co(o)
        return CycloElement(a.F, a.p * b.p)

    __rmul__ = __mul__

    def inverse(self) -> "CycloElement":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        g, s, _t = self.p.xgcd(self.F.modulus)
        return CycloElement(self.F, s / g)

    def __truediv__(self, o):
        a, b = self._co(o)
        return a * b.inverse()

    def __rtruediv__(self, o):
        a, b = self._co(o)
        return b * a.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = self.F.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, o):
        try:
            a, b = self._co(o)
        except (TypeError, ValueError):
            return NotImplemented
        return (a.p - b.p).is_zero()

    def __hash__(self):
        r = self.as_rational()
        if r is not None:
            return hash(r)
        return hash((self.F.N, str(self.p)))

    def is_zero(self) -> bool:
        return self.p.is_zero()

    def is_rational(self) -> bool:
        return self.p.degree() <= 0

    def as_rational(self):
        if not self.is_rational():
            return None
        c = self.p.coeffs()
        return _fr(c[0]) if c else Fraction(0)

    def conj(self) -> "CycloElement":
        """Complex conjugation, zeta -> zeta^-1."""
        N = self.F.N
        out = fmpq_poly([0])
        for k, c in enumerate(self.p.coeffs()):
            if c != 0:
                out += fmpq_poly([0] * ((-k) % N) + [c])
        return CycloElement(self.F, out)

    def as_gaussian(self):
        """(re, im) Fractions when the element lies in Q(i), else None."""
        if self.is_rational():
            return self.as_rational(), Fraction(0)
        if self.F.N % 4:
            return None
        re = (self + self.conj()) * Fraction(1, 2)
        im = (self - self.conj()) / (self.F.i() * 2)
        if re.is_rational() and im.is_rational():
            return re.as_rational(), im.as_rational()
        return None

    def coefficients(self) -> list:
        c = [_fr(x) for x in self.p.coeffs()]
        return c + [Fraction(0)] * (self.F.degree - len(c))

    def to_acb(self, prec: int = 128) -> acb:
        with workprec(prec + GUARD_BITS):
            z = acb(arb(2) / self.F.N).exp_pi_i()
            acc = acb(0)
            zk = acb(1)
            for c in self.p.coeffs():
                if c != 0:
                    acc += zk * arb(c)
                zk *= z
            return acc

    def __complex__(self):
        return complex(self.to_acb(64).mid())

    def __repr__(self):
        g = self.as_gaussian()
        if g is not None:
            re, im = g
            if im == 0:
                return str(re)
            return f"{re}{'+' if im >= 0 else '-'}{abs(im)}*i"
        return f"{self.p.str(var='z')} in Q(zeta_{self.F.N})"

    def to_json(self) -> dict:
        return {"N": self.F.N, "coefficients": [str(c) for c in self.coefficients()], "repr": repr(self)}


def cyclotomic_index(poly) -> int | None:
    """n with poly == Phi_n (coefficients low to high), else None."""
    P = fmpz_poly([int(c) for c in poly])
    deg = P.degree()
    for n in range(1, 8 * deg + 8):
        # phi(n) == deg is necessary
        if fmpz_poly.cyclotomic(n).degree() == deg and fmpz_poly.cyclotomic(n) == P:
            return n
    return None
