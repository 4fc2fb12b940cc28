"""Iteration, membership tests, and pointwise conformal data.

Infinity is represented by the complex value ``INF``; the rational family
passes through it legitimately (its superattracting cycle is {0, inf}), so
evaluation treats it as an ordinary point of the sphere.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Tuple

from ..errors import ConvergenceError, DomainError

INF = complex(math.inf, 0.0)

MEMBER = "member"
ESCAPED = "escaped"


def _is_inf(z: complex) -> bool:
    return math.isinf(z.real) or math.isinf(z.imag)


def quadratic_map(z: complex, c: complex) -> complex:
    return z * z + c


def basilica_map(z: complex) -> complex:
    return z * z - 1


def rational_map(z: complex, a: complex) -> complex:
    """Evaluate a/(z^2 + 2z) on the sphere.

    The poles 0 and -2 map to INF and INF maps to 0, so the superattracting
    cycle 0 -> inf -> 0 is evaluated exactly.
    """
    if _is_inf(z):
        return 0j
    d = z * z + 2 * z
    if d == 0:
        return INF
    return a / d


def to_basilica(z: complex) -> complex:
    """The Moebius change of coordinate -1/(z+1).

    Conjugates the rational map with a = 1 to the quadratic z^2 - 1; sphere
    complete, with -1 -> inf and inf -> 0.
    """
    if _is_inf(z):
        return 0j
    w = z + 1
    if w == 0:
        return INF
    return -1 / w


def from_basilica(w: complex) -> complex:
    """Inverse of :func:`to_basilica`: -1/w - 1."""
    if _is_inf(w):
        return complex(-1, 0)
    if w == 0:
        return INF
    return -1 / w - 1


@dataclass(frozen=True)
class EscapeResult:
    """Outcome of a membership iteration.

    ``member`` means the iteration budget ran out without an escape
    certificate (so the point is undecided in the strict sense and is
    reported as a member by convention); ``escaped`` carries the iteration
    at which the certificate fired.
    """

    status: str
    iterations: int
    final_modulus: float

    @property
    def escaped(self) -> bool:
        return self.status == ESCAPED


def in_mandelbrot(c: complex, max_iter: int = 256, radius: float = 2.0) -> EscapeResult:
    """Escape-time membership test for z^2 + c, critical orbit of 0."""
    if max_iter < 1:
        raise DomainError("max_iter must be at least 1")
    if radius < 2:
        raise DomainError("escape radius below 2 cannot certify escape")
    z = 0j
    for n in range(max_iter):
        z = z * z + c
        mod = abs(z)
        if mod > radius:
            return EscapeResult(ESCAPED, n + 1, mod)
    return EscapeResult(MEMBER, max_iter, abs(z))


def in_m2(a: complex, max_iter: int = 256, eps: float = 1e-3) -> EscapeResult:
    """Membership in the non-escape locus of a/(z^2 + 2z).

    Iterates the free critical point -1 and certifies basin entry for the
    superattracting cycle {0, inf} on the even-step map, which behaves
    like z^2/2 near infinity and like (4/a) z^2 near 0.  The certificate
    is two consecutive even steps with modulus below eps and still
    shrinking (or above 1/eps and still growing); an orbit point landing
    exactly on the cycle certifies escape immediately.
    """
    if a == 0:
        raise DomainError("the parameter a = 0 is excluded from the family")
    if max_iter < 2:
        raise DomainError("max_iter must be at least 2")
    y = complex(-1, 0)
    streak = 0
    half_steps = max_iter // 2
    for n in range(half_steps):
        y_next = rational_map(rational_map(y, a), a)
        if y == 0 or _is_inf(y):
            return EscapeResult(ESCAPED, 2 * n, 0.0 if y == 0 else math.inf)
        m, m_next = abs(y), abs(y_next)
        near_zero = m < eps and m_next < m
        near_inf = m > 1 / eps and m_next > m
        streak = streak + 1 if (near_zero or near_inf) else 0
        if streak >= 2:
            return EscapeResult(ESCAPED, 2 * (n + 1), m_next)
        y = y_next
    return EscapeResult(MEMBER, 2 * half_steps, abs(y))


def boettcher_value(c: complex, z: complex, terms: int = 48) -> Tuple[complex, float]:
    """The value B(z) conjugating z^2 + c to w^2 near infinity.

    Uses the convergent product B(z) = z * prod_k (1 + c/z_k^2)^(1/2^(k+1))
    along the escaping orbit z_k.  Each factor tends to 1, so the principal
    root keeps the branch continuous (nearest-argument choice).  Returns
    the truncated value together with a relative error estimate, the size
    of the last factor's deviation from 1.

    Raises if the orbit does not stay in the region |z_k^2| > |c| where the
    factors are well defined.
    """
    if terms < 1:
        raise DomainError("need at least one product term")
    w = z
    value = z
    err = math.inf
    for k in range(terms):
        w2 = w * w
        if abs(w2) <= abs(c) or abs(w2) < 3.99:
            raise DomainError(
                f"orbit point {w} is not deep enough in the escape region")
        factor = 1 + c / w2
        exponent = 0.5 ** (k + 1)
        value *= factor ** exponent
        err = abs(cmath.log(factor)) * exponent
        if err < 1e-18:
            break
        w = w2 + c
    return value, err


def misiurewicz_solve(preperiod: int, period: int, seed: complex,
                      max_steps: int = 80, tol: float = 1e-13) -> complex:
    """Newton solve for a parameter whose critical orbit is preperiodic.

    Solves f_c^(l+p)(c) = f_c^l(c) for c, where l and p are the requested
    preperiod and period and the iterates start at the critical value c.
    The equation also vanishes at parameters of lower type, so the seed
    chooses the root.  The residual is checked after convergence.
    """
    if preperiod < 1 or period < 1:
        raise DomainError("preperiod and period must be positive")
    if not (math.isfinite(seed.real) and math.isfinite(seed.imag)):
        raise DomainError("seed must be finite")
    c = seed
    total = preperiod + period
    for _ in range(max_steps):
        z = c
        dz = 1 + 0j
        z_low = dz_low = None
        for k in range(total):
            if k == preperiod:
                z_low, dz_low = z, dz
            dz = 2 * z * dz + 1
            z = z * z + c
        g = z - z_low
        dg = dz - dz_low
        if dg == 0:
            raise ConvergenceError("Newton derivative vanished", abs(g))
        step = g / dg
        c -= step
        if abs(step) < tol * max(1.0, abs(c)):
            break
    residual = _preperiodic_residual(c, preperiod, period)
    if residual > 1e-10:
        raise ConvergenceError(
            f"Newton did not converge from seed {seed}", residual)
    return c


def _preperiodic_residual(c: complex, preperiod: int, period: int) -> float:
    z = c
    z_low = None
    for k in range(preperiod + period):
        if k == preperiod:
            z_low = z
        z = z * z + c
    return abs(z - z_low)
