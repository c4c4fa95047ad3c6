"""Ball-arithmetic helpers on top of python-flint."""
from __future__ import annotations

import math
import threading
from contextlib import contextmanager
from fractions import Fraction

import flint
from flint import acb, arb, fmpq

GUARD_BITS = 32

# flint's working precision is process-global; serialize changes to it
_prec_lock = threading.RLock()


@contextmanager
def workprec(bits: int):
    with _prec_lock:
        old = flint.ctx.prec
        flint.ctx.prec = max(int(bits), 53)
        try:
            yield
        finally:
            flint.ctx.prec = old


def to_arb(x) -> arb:
    if isinstance(x, arb):
        return x
    if isinstance(x, Fraction):
        return arb(fmpq(x.numerator, x.denominator))
    if isinstance(x, int):
        return arb(x)
    if isinstance(x, str):
        if "/" in x:
            return to_arb(Fraction(x))
        return arb(x)
    if isinstance(x, float):
        return arb(x)
    if isinstance(x, acb):
        return x.real
    if hasattr(x, "_mpf_"):
        return arb(str(x))
    raise TypeError(f"cannot convert {type(x).__name__} to arb")


def to_acb(x) -> acb:
    if isinstance(x, acb):
        return x
    if isinstance(x, (arb, Fraction, int, float, str)):
        return acb(to_arb(x))
    if isinstance(x, complex):
        return acb(arb(x.real), arb(x.imag))
    if isinstance(x, tuple) and len(x) == 2:
        return acb(to_arb(x[0]), to_arb(x[1]))
    if hasattr(x, "_mpc_"):
        return acb(arb(str(x.real)), arb(str(x.imag)))
    if hasattr(x, "_mpf_"):
        return acb(arb(str(x)))
    if hasattr(x, "to_acb"):
        return x.to_acb()
    raise TypeError(f"cannot convert {type(x).__name__} to acb")


def radius(x) -> float:
    """Upper bound for |x - mid(x)| as a float."""
    if isinstance(x, arb):
        return float(x.rad()) * (1 + 1e-15)
    r = float(x.real.rad()) + float(x.imag.rad())
    return r * (1 + 1e-15)


def mid(x):
    if isinstance(x, arb):
        return x.mid()
    return acb(x.real.mid(), x.imag.mid())


def with_error(x, err: float):
    """Inflate a ball by an absolute error ``err`` in each of Re and Im."""
    if err <= 0:
        return x
    e = arb(0, err)
    if isinstance(x, arb):
        return x + e
    return x + acb(e, e)


def log2_abs_upper(x) -> float:
    m = abs(complex(mid(x))) + radius(x)
    return math.log2(m) if m > 0 else -math.inf


def decimal_str(x, err: float | None = None) -> str:
    """Decimal rendering that never shows digits below the certified error."""
    if err is None:
        err = radius(x)
    if err > 0:
        digits = max(1, min(200, int(-math.log10(err)) + 2))
    else:
        digits = 40
    if isinstance(x, arb):
        return x.mid().str(digits, radius=False)
    re = x.real.mid().str(digits, radius=False)
    im = x.imag.mid().str(digits, radius=False)
    return f"{re} + {im}j" if not im.startswith("-") else f"{re} - {im[1:]}j"


def pi() -> arb:
    return arb.pi()


def lemniscate_constant() -> arb:
    """varpi = pi / AGM(1, sqrt 2)."""
    return arb.pi() / arb(1).agm(arb(2).sqrt())


def exact_str(q: Fraction) -> str:
    return str(q)
