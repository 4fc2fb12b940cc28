"""Exact arithmetic on the circle of angles Q/Z under the doubling map.

Angles are reduced fractions in [0, 1) with arbitrary-precision integer
numerator and denominator.  Everything here is exact; floating point only
appears when a caller converts an angle to a point on the unit circle.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import NamedTuple, Optional, Tuple

from .errors import DomainError


class Angle:
    """A point of R/Z stored as the reduced fraction p/q with 0 <= p < q.

    Immutable and hashable; the natural order is the order of representatives
    in [0, 1).  Use :func:`in_cyclic_arc` for circular comparisons.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: int, den: int = 1):
        if den == 0:
            raise ZeroDivisionError("angle denominator must be nonzero")
        if den < 0:
            num, den = -num, -den
        num %= den
        g = gcd(num, den)
        object.__setattr__(self, "num", num // g)
        object.__setattr__(self, "den", den // g)

    def __setattr__(self, name, value):
        raise AttributeError("Angle is immutable")

    @classmethod
    def parse(cls, text: str) -> "Angle":
        """Parse "p/q" (or a bare integer string) into an angle."""
        s = text.strip()
        if "/" in s:
            p, q = s.split("/", 1)
            return cls(int(p), int(q))
        return cls(int(s), 1)

    def as_fraction(self) -> Fraction:
        return Fraction(self.num, self.den)

    def __float__(self) -> float:
        return self.num / self.den

    def __str__(self) -> str:
        return f"{self.num}/{self.den}"

    def __repr__(self) -> str:
        return f"Angle({self.num}, {self.den})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Angle)
            and self.num == other.num
            and self.den == other.den
        )

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def __lt__(self, other: "Angle") -> bool:
        return self.num * other.den < other.num * self.den

    def __le__(self, other: "Angle") -> bool:
        return self.num * other.den <= other.num * self.den

    def __gt__(self, other: "Angle") -> bool:
        return other < self

    def __ge__(self, other: "Angle") -> bool:
        return other <= self

    def __add__(self, other: "Angle") -> "Angle":
        return Angle(self.num * other.den + other.num * self.den,
                     self.den * other.den)

    def __sub__(self, other: "Angle") -> "Angle":
        """Difference mod 1, again canonical in [0, 1)."""
        return Angle(self.num * other.den - other.num * self.den,
                     self.den * other.den)

    def is_zero(self) -> bool:
        return self.num == 0


ZERO = Angle(0, 1)
HALF = Angle(1, 2)


class OrbitClass(NamedTuple):
    """Minimal preperiod and period of an angle under doubling."""

    preperiod: int
    period: int


def normalize(num: int, den: int) -> Angle:
    """Reduced canonical representative of num/den mod 1."""
    return Angle(num, den)


def double(theta: Angle) -> Angle:
    """The angle 2*theta mod 1."""
    return Angle(2 * theta.num, theta.den)


def halves(theta: Angle) -> Tuple[Angle, Angle]:
    """Both preimages of theta under doubling, in increasing order.

    Returns (theta/2, theta/2 + 1/2); the first is always in [0, 1/2).
    """
    return Angle(theta.num, 2 * theta.den), Angle(theta.num + theta.den,
                                                  2 * theta.den)


def classify(theta: Angle) -> OrbitClass:
    """Exact (preperiod, period) of theta under doubling.

    The orbit of p/q stays among fractions with denominator dividing q, so
    it is finite and the classification is a finite computation on
    numerators mod q.
    """
    q = theta.den
    seen = {}
    n = theta.num
    step = 0
    while n not in seen:
        seen[n] = step
        n = (2 * n) % q
        step += 1
    first = seen[n]
    return OrbitClass(preperiod=first, period=step - first)


def bubble_exponent(theta: Angle) -> Optional[int]:
    """The k >= 0 with theta = n/(3*2^k), n coprime to 6, if one exists.

    These are exactly the angles of rays landing at iterated preimages of
    the alpha fixed point in the Basilica model (equivalently at bubble
    touch points), and exactly the reduced fractions with denominator
    3*2^k.  Returns None for every other rational angle.
    """
    q = theta.den
    if q % 3 != 0:
        return None
    rest = q // 3
    k = rest.bit_length() - 1
    if 1 << k != rest:
        return None
    return k


def is_bubble_angle(theta: Angle) -> bool:
    """True iff theta is of the form n/(3*2^k) with n coprime to 6."""
    return bubble_exponent(theta) is not None


def in_cyclic_arc(theta: Angle, a: Angle, b: Angle, open_arc: bool = True) -> bool:
    """Whether theta lies on the counterclockwise arc from a to b.

    The arc is traversed in increasing angle from a to b (wrapping through
    0 when b < a).  With ``open_arc`` both endpoints are excluded,
    otherwise both are included.  Requires a != b.
    """
    if a == b:
        raise DomainError("cyclic arc endpoints must differ")
    t = theta - a
    span = b - a
    if open_arc:
        return not t.is_zero() and t < span
    return t <= span
