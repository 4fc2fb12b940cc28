"""Rays in bubbles for the family a/(z^2 + 2z).

The attracting basin of the superattracting cycle {0, inf} is a union of
bubbles; paths from infinity through chains of bubble closures play the
role external rays play for polynomials.  A ray in bubbles at angle theta
crosses exactly the touch points encoded by the lamination chain of
-theta, so the combinatorial address is exact and only the segments
inside each bubble are numerical.

Numerics are organized around the even-step map G = g_a o g_a, which
fixes infinity with local behavior z^2/2 and therefore carries an
escape-style coordinate phi on the bubble of infinity, phi(G(z)) =
phi(z)^2 with phi(z) ~ z/2.  Internal rays of that bubble are traced by
inverse iteration of G with nearest-branch selection; deeper bubbles are
conformal pullbacks of the bubble of infinity, so their segments are
path pullbacks anchored at already-computed touch points.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from ..circle import Angle, bubble_exponent, classify, double, in_cyclic_arc
from ..errors import DomainError, InternalConsistencyError, RayNonexistentError
from ..lamination import (
    FIVE_SIXTHS,
    ONE_SIXTH,
    ONE_THIRD,
    TWO_THIRDS,
    Lamination,
    Leaf,
    orient,
)
from .maps import rational_map
from .rays import RayTrace, extrapolate_geometric

BASE_LEVEL = 8.0
STEPS_PER_HALVING = 16
LEVEL_END = 1e-8
CRITICAL_CLEARANCE = 1e-9
ROOT_PAIR = frozenset((ONE_THIRD, TWO_THIRDS))
MAJOR_PAIR = frozenset((FIVE_SIXTHS, ONE_SIXTH))


def _even_map(z: complex, a: complex) -> complex:
    return rational_map(rational_map(z, a), a)


def bubble_boettcher(a: complex, w: complex, terms: int = 48) -> Tuple[complex, float]:
    """Escape coordinate of the even-step map on the bubble of infinity.

    Returns phi(w) with phi(G(w)) = phi(w)^2 and phi(w)/ (w/2) -> 1 at
    infinity, computed as lim (G^n(w)/2)^(2^-n) with nearest-argument
    branch continuity, together with the size of the last correction.
    Raises if the even-step orbit of w fails to grow into the region
    where the limit is trustworthy; callers pre-iterate to get there.
    """
    if a == 0:
        raise DomainError("the parameter a = 0 is excluded from the family")
    prev = w / 2
    err = math.inf
    cur = w
    floor = 4 * max(1.0, math.sqrt(abs(a)))
    for n in range(1, terms + 1):
        cur = _even_map(cur, a)
        mod = abs(cur)
        if cur == 0 or math.isinf(mod) or mod < floor:
            raise DomainError(
                f"point {w} is not deep enough in the bubble of infinity")
        root = (cur / 2) ** (0.5 ** n)
        k = round((cmath.phase(prev) - cmath.phase(root))
                  / (math.tau * 0.5 ** n))
        root *= cmath.exp(1j * math.tau * (0.5 ** n) * k)
        err = abs(root - prev) / max(1e-300, abs(root))
        prev = root
        if err < 1e-15:
            break
    return prev, err


def _inverse_step(w: complex, a: complex, near: complex) -> complex:
    """The preimage of w under g_a closest to ``near``.

    Solves z^2 + 2z = a/w.  A discriminant collapsing to zero means w is
    the critical value -a, i.e. the path runs into the critical point -1,
    which is exactly the nonexistence condition for rays in bubbles.
    """
    if w == 0 or math.isinf(abs(w)):
        raise InternalConsistencyError("inverse step at a cycle point")
    disc = 1 + a / w
    root = cmath.sqrt(disc)
    if abs(root) < CRITICAL_CLEARANCE:
        raise RayNonexistentError(
            f"path through the critical value of a={a}: the ray hits the "
            "critical point -1 or one of its preimages")
    z1 = -1 + root
    z2 = -1 - root
    return z1 if abs(z1 - near) <= abs(z2 - near) else z2


def _pull_samples(w_prev: complex, w_cur: complex, a: complex,
                  z_prev: complex, budget: int) -> List[complex]:
    """Continuous-branch preimages of the segment (w_prev, w_cur].

    Subdivides in the image whenever the two branch candidates are not
    clearly separated at the current step size.
    """
    z = _inverse_step(w_cur, a, z_prev)
    mirror = -2 - z
    separated = abs(z - z_prev) <= 0.7 * abs(mirror - z_prev)
    if separated or abs(w_cur - w_prev) < 1e-13:
        return [z]
    if budget <= 0:
        raise InternalConsistencyError(
            "branch selection stayed ambiguous under subdivision")
    mid = (w_prev + w_cur) / 2
    left = _pull_samples(w_prev, mid, a, z_prev, budget - 1)
    right = _pull_samples(mid, w_cur, a, left[-1], budget - 1)
    return left + right


def _pull_path(path: Sequence[complex], a: complex, anchor: complex) -> List[complex]:
    """One inverse branch of g_a along a sampled path, anchored at start."""
    out = [_inverse_step(path[0], a, anchor)]
    for w_prev, w_cur in zip(path, path[1:]):
        out.extend(_pull_samples(w_prev, w_cur, a, out[-1], budget=24))
    return out


class BasinCoordinates:
    """Internal-ray machinery on the bubble of infinity of one map.

    Rays are indexed by internal angles; the angle-0 ray is the fixed ray
    landing at the alpha fixed point where the two cycle bubbles touch.
    Points live on a geometric ladder of levels s = log|phi|: the point
    at level s and angle u is the inverse-branch image of the point at
    level 2s and angle 2u, one even step up the ladder.
    """

    def __init__(self, a: complex, s0: float = BASE_LEVEL,
                 steps_per_halving: int = STEPS_PER_HALVING,
                 s_end: float = LEVEL_END):
        if a == 0:
            raise DomainError("the parameter a = 0 is excluded from the family")
        self.a = a
        self.s0 = s0
        self.steps = steps_per_halving
        self.s_end = s_end
        self.n_levels = 1 + math.ceil(
            steps_per_halving * math.log2(s0 / s_end))
        self._rays: Dict[Fraction, List[complex]] = {}
        self._alpha: Optional[complex] = None

    def level(self, i: int) -> float:
        return self.s0 * 2.0 ** (-i / self.steps)

    def _level_index(self, s: float) -> int:
        i = math.ceil(self.steps * math.log2(self.s0 / s) - 1e-9)
        return max(0, min(self.n_levels - 1, i))

    def ray(self, u: Fraction) -> List[complex]:
        """All ladder points of the internal ray at a rational angle.

        The point at level s and angle u is the branch preimage of the
        point at level 2s and angle 2u, so the full doubling orbit of u
        (eventually periodic for any rational) is traced jointly, one
        synchronized level at a time.
        """
        u = u % 1
        if u not in self._rays:
            self._trace_orbit(u)
        return self._rays[u]

    def _trace_orbit(self, u: Fraction) -> None:
        orbit = [u]
        seen = {u: 0}
        while True:
            nxt = (2 * orbit[-1]) % 1
            if nxt in seen:
                break
            seen[nxt] = len(orbit)
            orbit.append(nxt)
        rays: Dict[Fraction, List[complex]] = {
            angle: self._rays.get(angle, []) for angle in orbit}
        for i in range(self.n_levels):
            s = self.level(i)
            for angle in orbit:
                pts = rays[angle]
                if len(pts) > i:
                    continue
                if i < self.steps:
                    pts.append(self.point_at(angle, s))
                    continue
                upstream_angle = (2 * angle) % 1
                upstream = rays.get(upstream_angle)
                if upstream is None:
                    upstream = self.ray(upstream_angle)
                pts.append(self._inverse_even(upstream[i - self.steps],
                                              pts[-1]))
        self._rays.update(rays)

    def _inverse_even(self, w: complex, near: complex) -> complex:
        mid = _inverse_step(w, self.a, rational_map(near, self.a))
        return _inverse_step(mid, self.a, near)

    def point_at(self, u: Fraction, s: float) -> complex:
        """Newton solve phi(z) = exp(s + 2 pi i u) in the far field."""
        target = cmath.exp(complex(s, math.tau * float(u)))
        z = 2 * target
        for _ in range(60):
            phi, _err = bubble_boettcher(self.a, z)
            dphi = self._log_derivative(z) * phi
            step = (phi - target) / dphi
            z -= step
            if abs(step) < 1e-13 * max(1.0, abs(z)):
                return z
        raise InternalConsistencyError(
            f"far-field Newton stalled at angle {u}, level {s}")

    def _log_derivative(self, z: complex, terms: int = 48) -> complex:
        """d/dz log phi as the limit 2^-n (G^n)'(z) / G^n(z)."""
        cur = z
        deriv = 1 + 0j
        best = 1 / z
        for n in range(1, terms + 1):
            deriv *= self._even_derivative(cur)
            cur = _even_map(cur, self.a)
            est = deriv / cur * 0.5 ** n
            if abs(est - best) < 1e-15 * abs(est):
                return est
            best = est
        return best

    def _even_derivative(self, z: complex) -> complex:
        mid = rational_map(z, self.a)
        return self._g_derivative(z) * self._g_derivative(mid)

    def _g_derivative(self, z: complex) -> complex:
        d = z * z + 2 * z
        return -self.a * (2 * z + 2) / (d * d)

    def _ray_tail(self, pts: Sequence[complex], skip_last: int = 0) -> List[complex]:
        upper = len(pts) - skip_last
        picked = list(pts[upper - 1:: -self.steps][:8])
        picked.reverse()
        return picked

    def alpha(self) -> complex:
        """The fixed point where the two cycle bubbles touch.

        Landing point of the angle-0 internal ray, Newton polished on the
        even-step fixed point equation.
        """
        if self._alpha is None:
            seed = extrapolate_geometric(self._ray_tail(self.ray(Fraction(0))))
            self._alpha = self._newton_fixed(seed)
        return self._alpha

    def _newton_fixed(self, seed: complex) -> complex:
        z = seed
        for _ in range(60):
            g = _even_map(z, self.a) - z
            dg = self._even_derivative(z) - 1
            step = g / dg
            z -= step
            if abs(step) < 1e-14 * max(1.0, abs(z)):
                return z
        raise InternalConsistencyError("alpha polish did not converge")

    def landing(self, u: Fraction, pre_steps: int) -> complex:
        """Polished landing point of the internal ray at dyadic angle u.

        The landing point is an iterated preimage of alpha; the ray tail
        seeds Newton on g^m(x) = alpha with m = pre_steps.
        """
        seed = extrapolate_geometric(self._ray_tail(self.ray(u)))
        return self.newton_preimage_of_alpha(seed, pre_steps)

    def newton_preperiodic(self, seed: complex, pre: int, period: int) -> complex:
        """Polish a point with g^(pre+period)(x) = g^(pre)(x) near the seed.

        Damped Newton: steps that grow the residual are halved, which
        matters when the seed sits at the edge of the quadratic basin of
        a long repelling cycle.
        """
        def residual(z: complex):
            w = z
            dw = 1 + 0j
            w_low = dw_low = None
            for k in range(pre + period):
                if k == pre:
                    w_low, dw_low = w, dw
                dw *= self._g_derivative(w)
                w = rational_map(w, self.a)
            return w - w_low, dw - dw_low

        z = seed
        g, dg = residual(z)
        for _ in range(80):
            if dg == 0:
                raise InternalConsistencyError("degenerate preperiodic Newton")
            step = g / dg
            scale = 1.0
            for _ in range(10):
                cand = z - scale * step
                g_new, dg_new = residual(cand)
                if abs(g_new) < abs(g) or abs(scale * step) < 1e-14:
                    break
                scale /= 2
            z, g, dg = cand, g_new, dg_new
            if abs(scale * step) < 1e-14 * max(1.0, abs(z)):
                return z
        raise InternalConsistencyError(
            "boundary landing polish did not converge")

    def newton_preimage_of_alpha(self, seed: complex, m: int) -> complex:
        alpha = self.alpha()
        z = seed
        for _ in range(60):
            w = z
            dw = 1 + 0j
            for _ in range(m):
                dw *= self._g_derivative(w)
                w = rational_map(w, self.a)
            if dw == 0:
                raise InternalConsistencyError("degenerate preimage Newton")
            step = (w - alpha) / dw
            z -= step
            if abs(step) < 1e-14 * max(1.0, abs(z)):
                return z
        raise InternalConsistencyError("touch point polish did not converge")

    def segment(self, u: Fraction, s_hi: float) -> List[complex]:
        """Ray points from level s_hi down to the boundary end."""
        pts = self.ray(u)
        start = self._level_index(s_hi)
        return pts[start:]


@dataclass
class BubbleRay:
    """A ray in bubbles: combinatorial chain plus numerical trace.

    The trace's potential slot stores the chain index of each point; the
    touch points are the bubble-to-bubble crossings, Newton polished.
    """

    angle: Angle
    chain: List[Leaf]
    trace: RayTrace
    touch_points: List[complex] = field(default_factory=list)
    finite: bool = False
    """True when the ray terminates (at a touch point or on a bubble
    boundary) rather than being truncated."""


def central_gap_angle(leaf: Leaf, lamination: Optional[Lamination] = None) -> Fraction:
    """Internal angle, on the central bubble, of one of its boundary leaves.

    The root leaf sits at internal angle 0 and the leaf joining 5/6 and
    1/6 at angle 1/2.  Every other boundary leaf of the central gap lives
    on one of the two gap arcs, (2/3, 5/6) or (1/6, 1/3); the gap's
    return map is the second iterate of doubling, under which boundary
    leaves map to boundary leaves and internal angles double, so the
    angle is half the twice-doubled image's angle, shifted by 1/2 on one
    of the arcs.  Internal angles follow the escape coordinate of
    :func:`bubble_boettcher`, which parametrizes the bubble of infinity
    like the exterior of the disk; walking the boundary with increasing
    internal angle therefore traverses external angles downward, which
    puts the (2/3, 5/6) arc on the shifted branch.
    """
    ends = frozenset(leaf.endpoints())
    if ends == ROOT_PAIR:
        return Fraction(0)
    if ends == MAJOR_PAIR:
        return Fraction(1, 2)
    if (in_cyclic_arc(leaf.a, TWO_THIRDS, FIVE_SIXTHS)
            and in_cyclic_arc(leaf.b, TWO_THIRDS, FIVE_SIXTHS)):
        offset = Fraction(1, 2)
    elif (in_cyclic_arc(leaf.a, ONE_SIXTH, ONE_THIRD)
            and in_cyclic_arc(leaf.b, ONE_SIXTH, ONE_THIRD)):
        offset = Fraction(0)
    else:
        raise InternalConsistencyError(
            f"{leaf} is not a boundary leaf of the central gap")
    image = leaf.image().image()
    return central_gap_angle(image) / 2 + offset


def chain_leaf_at_depth(xi: Angle, depth: int) -> Leaf:
    """The depth-d leaf whose arc contains xi, built by exact pullback.

    The depth-d arcs are exactly the d-th preimage arcs of the base arc
    from 5/6 counterclockwise to 1/6, so containment means the d-th
    double of xi lies in the base arc, and the leaf endpoints fall out of
    pulling the base pair back along xi's orbit.  No lamination storage
    is involved, which lets chains extend to arbitrary depth.
    """
    orbit = [xi]
    for _ in range(depth):
        orbit.append(double(orbit[-1]))
    if not in_cyclic_arc(orbit[depth], FIVE_SIXTHS, ONE_SIXTH):
        raise DomainError(
            f"no depth-{depth} leaf contains {xi}")
    a, b = FIVE_SIXTHS, ONE_SIXTH
    for j in range(depth):
        target = orbit[depth - 1 - j]
        span = b - a
        half_span = Angle(span.num, 2 * span.den)
        start_lo = Angle(a.num, 2 * a.den)
        start_hi = Angle(a.num + a.den, 2 * a.den)
        end_lo = start_lo + half_span
        end_hi = start_hi + half_span
        if in_cyclic_arc(target, start_lo, end_lo):
            a, b = start_lo, end_lo
        elif in_cyclic_arc(target, start_hi, end_hi):
            a, b = start_hi, end_hi
        else:
            raise InternalConsistencyError(
                f"pullback of the base arc lost the orbit of {xi}")
    return orient(a, b, depth)


def extended_chain(xi: Angle, max_leaves: int) -> List[Leaf]:
    """The leaves separating xi from the central gap, outermost first.

    Computed directly from the doubling orbit: the root leaf when xi lies
    strictly between 1/3 and 2/3, then one leaf for every orbit index
    whose image falls in the base arc.  Stops after ``max_leaves`` leaves
    or once the orbit provably yields no further crossing (the remaining
    orbit stays in the central footprint arcs).
    """
    out: List[Leaf] = []
    if in_cyclic_arc(xi, ONE_THIRD, TWO_THIRDS):
        out.append(orient(ONE_THIRD, TWO_THIRDS, -1))
    pre, per = classify(xi)
    cap = pre + per * (max_leaves + 1)
    cur = xi
    for d in range(cap + 1):
        if len(out) >= max_leaves:
            break
        if in_cyclic_arc(cur, FIVE_SIXTHS, ONE_SIXTH):
            out.append(chain_leaf_at_depth(xi, d))
        cur = double(cur)
    return out


def internal_angle_of_footprint(xi: Angle) -> Optional[Fraction]:
    """Internal angle on the central bubble of a boundary point.

    Points of the circle separated from the center by no leaf at all form
    the boundary footprint of the central bubble, contained in the two
    arcs (2/3, 5/6) and (1/6, 1/3).  The itinerary of xi under the second
    iterate of doubling through those arcs is the binary expansion of the
    internal angle (in the exterior-style orientation of
    :func:`bubble_boettcher`, the (2/3, 5/6) arc carries digit 1); a
    rational angle gives an eventually periodic expansion, returned as an
    exact fraction.  Returns None when xi is not a footprint angle (some
    orbit point leaves both arcs).
    """
    bits: List[int] = []
    seen: Dict[Angle, int] = {}
    cur = xi
    while cur not in seen:
        seen[cur] = len(bits)
        if in_cyclic_arc(cur, TWO_THIRDS, FIVE_SIXTHS):
            bits.append(1)
        elif in_cyclic_arc(cur, ONE_SIXTH, ONE_THIRD):
            bits.append(0)
        else:
            return None
        cur = double(double(cur))
    start = seen[cur]
    pre, cyc = bits[:start], bits[start:]
    m, p = len(pre), len(cyc)
    int_pre = int("".join(map(str, pre)), 2) if pre else 0
    int_cyc = int("".join(map(str, cyc)), 2)
    return Fraction(int_pre * (2 ** p - 1) + int_cyc,
                    2 ** m * (2 ** p - 1))


def _doubled_pair(pair: Tuple[Angle, Angle]) -> Tuple[Angle, Angle]:
    return (double(pair[0]), double(pair[1]))


def _pairs_nested(outer: Tuple[Angle, Angle], inner: Tuple[Angle, Angle]) -> bool:
    """Whether the chord ``inner`` lies inside the short arc of ``outer``."""
    o = orient(outer[0], outer[1], 0)
    return (o.contains_in_arc(inner[0], open_arc=True)
            and o.contains_in_arc(inner[1], open_arc=True))


def gap_generation(leaf_in: Leaf, leaf_out: Leaf, cap: int = 64) -> int:
    """Iterations of the map sending the gap between two crossed leaves
    onto the central bubble.

    Both leaves bound the bubble the ray traverses between them; doubling
    maps bubble to bubble, and the bubble is central exactly when its two
    marked leaves stop being nested (the root leaf and the major leaf sit
    back to back across the center).
    """
    p = leaf_in.endpoints()
    q = leaf_out.endpoints()
    for n in range(1, cap + 1):
        p = _doubled_pair(p)
        q = _doubled_pair(q)
        if not (_pairs_nested(p, q) or _pairs_nested(q, p)):
            return n
    raise InternalConsistencyError(
        f"gap between {leaf_in} and {leaf_out} never reached the center")


def _forward_leaf(leaf: Leaf, steps: int) -> Leaf:
    cur = leaf
    for _ in range(steps):
        cur = cur.image()
    return cur


def _touch_depth(leaf: Leaf) -> int:
    """Preimage steps from the leaf's touch point down to alpha."""
    return leaf.depth + 1


def _chain_strictly_containing(lamination: Lamination, leaf: Leaf) -> List[Leaf]:
    """Leaves whose open arc contains the closed arc of ``leaf``."""
    out = []
    for other in lamination:
        if other.endpoints() == leaf.endpoints():
            continue
        if (other.contains_in_arc(leaf.a) and other.contains_in_arc(leaf.b)):
            out.append(other)
    out.sort(key=lambda l: l.depth)
    return out


def _hub_path(coords: BasinCoordinates, u_in: Fraction, u_out: Fraction,
              hub_level: float) -> List[complex]:
    """Model path across the central bubble between two boundary angles.

    Ascends the internal ray at the entry angle to the hub level, walks
    the equilevel arc the short way around, and descends the exit ray.
    """
    ascent = coords.segment(u_in, hub_level)
    ascent.reverse()
    descent = coords.segment(u_out, hub_level)
    hub_s = coords.level(coords._level_index(hub_level))
    arc = _hub_arc(coords, u_in, u_out, hub_s)
    return ascent + arc + descent


def _hub_arc(coords: BasinCoordinates, u_in: Fraction, u_out: Fraction,
             s: float, samples_per_turn: int = 128) -> List[complex]:
    delta = (u_out - u_in) % 1
    if delta > Fraction(1, 2):
        delta -= 1
    steps = max(2, math.ceil(abs(float(delta)) * samples_per_turn))
    pts = []
    for j in range(1, steps):
        u = (u_in + delta * Fraction(j, steps)) % 1
        pts.append(coords.point_at(u, s))
    return pts


def trace_bubble_ray(a: complex, theta: Angle, lamination: Lamination,
                     max_bubbles: int = 12,
                     hub_level: float = 1.0) -> BubbleRay:
    """Trace the ray in bubbles of g_a at a rational angle.

    The combinatorial chain consists of the leaves separating -theta from
    the central gap; each crossed leaf becomes a touch point, an iterated
    g_a-preimage of the alpha fixed point, and each bubble's segment is
    the pullback of an internal-ray path of the central bubble under the
    bubble's generation map, anchored at the previous touch point.  Three
    landing regimes arise: touch angles theta end on the touch point of
    their own leaf; angles whose mirrored orbit enters the central
    footprint end on the boundary of a finite-generation bubble at a
    non-touch point; every other rational angle crosses bubbles forever
    and the trace is truncated after ``max_bubbles`` crossings, with the
    landing polished through the preperiodicity the point inherits from
    the angle.  The lamination argument only needs to contain the landing
    leaf of touch angles; chains extend past its depth exactly.

    Raises :class:`RayNonexistentError` when a pullback runs into the
    critical point -1 or one of its preimages.
    """
    if a == 0:
        raise DomainError("the parameter a = 0 is excluded from the family")
    mirror = Angle(-theta.num, theta.den)
    touch_target = bubble_exponent(theta) is not None
    boundary_gen: Optional[int] = None
    boundary_angle: Optional[Fraction] = None
    if touch_target:
        target_leaf = lamination.leaf_of(mirror)
        if target_leaf is None:
            raise DomainError(
                f"lamination depth {lamination.max_depth} is too shallow "
                f"for the landing leaf of {theta}")
        chain = _chain_strictly_containing(lamination, target_leaf)
        chain.append(target_leaf)
    else:
        boundary_gen, boundary_angle = _boundary_address(mirror)
        if boundary_gen == 0:
            return _footprint_ray(a, theta, boundary_angle)
        chain = extended_chain(mirror, max_bubbles + 1)
        if len(chain) > max_bubbles:
            chain = chain[:max_bubbles]
            boundary_gen = boundary_angle = None

    coords = BasinCoordinates(a)
    trace = RayTrace(kind="bubble", angle=theta)
    touch_points: List[complex] = []

    first = chain[0]
    u_first = central_gap_angle(first)
    entry = coords.segment(u_first, coords.s0)
    x_first = coords.landing(u_first, _touch_depth(first))
    _extend(trace, entry + [x_first], 0)
    touch_points.append(x_first)

    anchor = x_first
    for k in range(1, len(chain)):
        leaf_in, leaf_out = chain[k - 1], chain[k]
        gen = gap_generation(leaf_in, leaf_out)
        u_in = central_gap_angle(_forward_leaf(leaf_in, gen))
        u_out = central_gap_angle(_forward_leaf(leaf_out, gen))
        model = _hub_path(coords, u_in, u_out, hub_level)
        segment = _pull_back_segment(model, a, gen, anchor)
        x_next = coords.newton_preimage_of_alpha(
            segment[-1], _touch_depth(leaf_out))
        _extend(trace, segment + [x_next], k)
        touch_points.append(x_next)
        anchor = x_next

    if touch_target:
        trace.landing_estimate, trace.landed = touch_points[-1], True
        finite = True
    elif boundary_gen is not None:
        landing = _boundary_segment(
            coords, trace, chain, anchor,
            boundary_gen, boundary_angle, hub_level)
        trace.landing_estimate, trace.landed = landing, True
        finite = True
    else:
        est, gated = _bubble_landing(touch_points)
        seed = est if est is not None else touch_points[-1]
        trace.landing_estimate, trace.landed = _polish_periodic_landing(
            coords, theta, seed, est, gated)
        finite = False
    return BubbleRay(angle=theta, chain=chain, trace=trace,
                     touch_points=touch_points, finite=finite)


def _polish_periodic_landing(coords: BasinCoordinates, theta: Angle,
                             seed: complex, est: Optional[complex],
                             gated: bool):
    """Newton polish for the landing of a truncated infinite ray.

    The map doubles ray angles, so the landing point inherits the
    preperiod and period of the angle's doubling orbit; Newton on that
    preperiodicity converges from the crossing extrapolate.  Falls back
    to the raw extrapolate when the polished root wanders off, which
    signals a seed outside the intended basin.
    """
    pre, per = classify(theta)
    try:
        polished = coords.newton_preperiodic(seed, pre, per)
    except InternalConsistencyError:
        return est, gated
    if abs(polished - seed) < 0.25:
        return polished, True
    return est, gated


def _boundary_address(mirror: Angle) -> Tuple[Optional[int], Optional[Fraction]]:
    """Where the mirrored angle's orbit first enters the central footprint.

    A ray lands on the boundary of a finite-generation bubble exactly
    when some forward image of its mirror angle is a footprint angle of
    the central bubble; the first such index is the landing bubble's
    generation.  The doubling orbit is finite, so the scan is complete.
    Returns (None, None) for rays crossing infinitely many bubbles.
    """
    from ..circle import classify
    pre, per = classify(mirror)
    cur = mirror
    for n in range(pre + per):
        s = internal_angle_of_footprint(cur)
        if s is not None:
            return n, s
        cur = double(cur)
    return None, None


def _boundary_segment(coords: BasinCoordinates, trace: RayTrace,
                      chain: List[Leaf], anchor: complex, gen: int,
                      s_out: Fraction, hub_level: float) -> complex:
    """Final segment of a ray landing on a bubble boundary off the tree.

    The landing bubble has generation ``gen``; the segment is the
    pullback of a hub path from the entry leaf's image angle to the
    footprint internal angle, and the landing point is polished with the
    preperiodicity it inherits from the internal angle's doubling orbit.
    """
    u_in = central_gap_angle(_forward_leaf(chain[-1], gen))
    model = _hub_path(coords, u_in, s_out, hub_level)
    segment = _pull_back_segment(model, coords.a, gen, anchor)
    s_angle = Angle(s_out.numerator, s_out.denominator)
    pre, per = classify(s_angle)
    landing = coords.newton_preperiodic(
        segment[-1], gen + 2 * pre, 2 * per)
    _extend(trace, segment + [landing], len(chain))
    return landing


def _footprint_ray(a: complex, theta: Angle, s: Fraction) -> BubbleRay:
    """A ray in bubbles that never leaves the bubble of infinity.

    Angles with an empty lamination chain land on the boundary of the
    central bubble itself; the ray is the single internal ray at the
    footprint's internal angle, with no touch points.
    """
    coords = BasinCoordinates(a)
    pts = coords.ray(s)
    trace = RayTrace(kind="bubble", angle=theta)
    seed = extrapolate_geometric(coords._ray_tail(pts))
    s_angle = Angle(s.numerator, s.denominator)
    pre, per = classify(s_angle)
    landing = coords.newton_preperiodic(seed, 2 * pre, 2 * per)
    _extend(trace, pts + [landing], 0)
    trace.landing_estimate = landing
    trace.landed = True
    return BubbleRay(angle=theta, chain=[], trace=trace,
                     touch_points=[], finite=True)


def _pull_back_segment(model: Sequence[complex], a: complex, gen: int,
                       anchor: complex) -> List[complex]:
    """Pull a central-bubble path back ``gen`` steps of g_a.

    The forward images of the anchor supply the branch anchor at every
    intermediate level, since the anchor's orbit runs through exactly the
    bubbles being pulled through.
    """
    forward = [anchor]
    for _ in range(gen):
        forward.append(rational_map(forward[-1], a))
    path = list(model)
    for level in range(gen - 1, -1, -1):
        path = _pull_path(path, a, forward[level])
    return path


def _extend(trace: RayTrace, points: Sequence[complex], index: int) -> None:
    for p in points:
        trace.points.append(p)
        trace.potentials.append(float(index))


def _bubble_landing(touch_points: List[complex]):
    if len(touch_points) >= 4:
        est = extrapolate_geometric(touch_points)
        prev = extrapolate_geometric(touch_points[:-1])
        return est, abs(est - prev) < 1e-9
    if len(touch_points) == 3:
        return extrapolate_geometric(touch_points), False
    if touch_points:
        return touch_points[-1], False
    return None, False


def alpha_fixed_point(a: complex) -> complex:
    """The touch point of the two cycle bubbles of a/(z^2 + 2z)."""
    return BasinCoordinates(a).alpha()


def trace_internal_ray(a: complex, u: Fraction,
                       s_end: float = LEVEL_END) -> RayTrace:
    """Internal ray of the bubble of infinity at a rational angle.

    The trace walks from deep inside the bubble toward the boundary; the
    landing estimate is extrapolated from the tail and, for the fixed
    angle-0 ray, polished to the alpha fixed point.
    """
    coords = BasinCoordinates(a, s_end=s_end)
    u = Fraction(u) % 1
    pts = coords.ray(u)
    trace = RayTrace(kind="bubble", angle=Angle(u.numerator, u.denominator))
    for i, z in enumerate(pts):
        trace.points.append(z)
        trace.potentials.append(coords.level(i))
    if u == 0:
        trace.landing_estimate = coords.alpha()
        trace.landed = True
    else:
        est = extrapolate_geometric(coords._ray_tail(pts))
        prev = extrapolate_geometric(coords._ray_tail(pts, skip_last=1))
        trace.landing_estimate = est
        trace.landed = abs(est - prev) < 1e-9
    return trace
