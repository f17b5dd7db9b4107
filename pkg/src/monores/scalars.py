"""Scalar ground field helpers: exact rationals under the real or a p-adic absolute value.

All quantities in the package are `fractions.Fraction` instances; a `Norm`
only changes how magnitudes are compared, never how values are computed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import MonoresError

Rational = Fraction


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


def padic_valuation(q: Rational, p: int) -> int:
    """Exponent of p in q (q nonzero)."""
    if q == 0:
        raise MonoresError("valuation of zero is undefined")
    num, den = q.numerator, q.denominator
    v = 0
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


@dataclass(frozen=True)
class Norm:
    """Absolute value on Q: kind 'real', or 'padic' with an odd or even prime p."""

    kind: str = "real"
    p: int | None = None

    def __post_init__(self):
        if self.kind not in ("real", "padic"):
            raise MonoresError(f"unknown norm kind {self.kind!r}")
        if self.kind == "padic":
            if self.p is None or not _is_prime(self.p):
                raise MonoresError(f"padic norm needs a prime, got {self.p!r}")
        elif self.p is not None:
            raise MonoresError("real norm takes no prime")

    def abs(self, q: Rational) -> Rational:
        """|q| as an exact rational (p-adic magnitudes are powers of p)."""
        if q == 0:
            return Fraction(0)
        if self.kind == "real":
            return q if q > 0 else -q
        v = padic_valuation(q, self.p)
        return Fraction(1, self.p**v) if v >= 0 else Fraction(self.p ** (-v))

    def log_abs(self, q: Rational) -> float:
        """log |q| as a float via exact integer log2 (safe for huge magnitudes)."""
        a = self.abs(q)
        if a == 0:
            raise MonoresError("log of zero magnitude")
        return _log2_fraction(a) * math.log(2.0)

    def key(self) -> str:
        return "real" if self.kind == "real" else f"padic:{self.p}"

    @staticmethod
    def parse(text: str) -> "Norm":
        if text == "real":
            return Norm("real")
        if text.startswith("padic:"):
            try:
                p = int(text.split(":", 1)[1])
            except ValueError:
                raise MonoresError(f"bad norm spec {text!r}")
            return Norm("padic", p)
        raise MonoresError(f"bad norm spec {text!r}")


def _log2_fraction(a: Fraction) -> float:
    """log2 of a positive rational without float overflow/underflow."""
    num, den = a.numerator, a.denominator
    # Scale both parts near 1 before the float division.
    shift = num.bit_length() - den.bit_length()
    if shift > 0:
        den <<= shift
    else:
        num <<= -shift
    return shift + math.log2(num / den)
