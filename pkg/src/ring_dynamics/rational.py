"""Rational targets for winding ratios: continued fractions and simplest fractions."""

from __future__ import annotations

import math
from fractions import Fraction


def convergents(x: float, max_terms: int = 20) -> list[Fraction]:
    """Continued-fraction convergents of ``x`` (exact in the binary value of x)."""
    frac = Fraction(x)
    out = []
    h_prev, h = 0, 1
    k_prev, k = 1, 0
    for _ in range(max_terms):
        a = math.floor(frac)
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        out.append(Fraction(h, k))
        rem = frac - a
        if rem == 0:
            break
        frac = 1 / rem
    return out


def _simplest(lo: Fraction, hi: Fraction | None) -> Fraction:
    """Smallest-denominator fraction in the open interval (lo, hi); hi=None means +inf."""
    fl = math.floor(lo)
    if hi is None or fl + 1 < hi:
        return Fraction(fl + 1)
    # (lo, hi) sits inside [fl, fl + 1]: recurse on the reciprocal of the fractional parts
    lo_frac, hi_frac = lo - fl, hi - fl
    inner = _simplest(1 / hi_frac, None if lo_frac == 0 else 1 / lo_frac)
    return fl + 1 / inner


def simplest_rational(lo: float, hi: float) -> Fraction:
    """Fraction with the smallest denominator strictly inside (lo, hi), lo >= 0.

    This is the Stern-Brocot descent written as a continued-fraction
    recursion; among fractions of that denominator it has the smallest
    numerator.
    """
    lo_f, hi_f = Fraction(lo), Fraction(hi)
    if not lo_f < hi_f:
        raise ValueError("need lo < hi")
    if lo_f < 0:
        raise ValueError("need lo >= 0")
    return _simplest(lo_f, hi_f)


def rational_in_range(lo: float, hi: float, q_max: int) -> Fraction:
    """Simplest fraction in (lo, hi) with denominator <= q_max, or ValueError."""
    f = simplest_rational(lo, hi)
    if f.denominator > q_max:
        raise ValueError(
            f"no rational with denominator <= {q_max} in ({lo:.6g}, {hi:.6g}); simplest is {f}")
    return f
