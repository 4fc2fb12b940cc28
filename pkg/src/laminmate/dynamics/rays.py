"""External ray continuation for the quadratic family.

Rays are traced by the standard two-loop scheme: the outer loop walks the
potential down a geometric schedule (a fixed number of nodes per halving),
while the inner loop Newton-corrects the point against the conjugacy
functional equation at a depth where the escape coordinate is essentially
the identity.  Angles are doubled exactly as rationals, never as floats,
so deep targets keep full angular precision.
"""

from __future__ import annotations

import csv
import io
import math
import cmath
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..circle import Angle, double
from ..errors import DomainError, RayBrokenError

DEFAULT_T0 = 8.0
DEFAULT_STEPS_PER_DOUBLING = 24
DEFAULT_T_END = 1e-7
NEWTON_TOL = 1e-13
NEWTON_MAX_ITER = 40
LANDING_GATE = 1e-9
LANDING_NODES = 8


@dataclass
class RayTrace:
    """A traced ray: polyline, per-point potentials, landing metadata.

    For external and parameter rays the potentials decrease strictly
    toward the landing point; for rays in bubbles the same slot stores the
    bubble chain index of each point instead.
    """

    kind: str
    angle: Angle
    points: List[complex] = field(default_factory=list)
    potentials: List[float] = field(default_factory=list)
    landing_estimate: Optional[complex] = None
    landed: bool = False
    diagnostic: Optional[str] = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "re", "im"])
        for t, z in zip(self.potentials, self.points):
            writer.writerow([repr(t), repr(z.real), repr(z.imag)])
        return buf.getvalue()

    def to_json_dict(self) -> dict:
        doc = {
            "format_version": 1,
            "kind": self.kind,
            "angle": str(self.angle),
            "landed": self.landed,
            "landing_estimate": None,
            "points": [[repr(t), repr(z.real), repr(z.imag)]
                       for t, z in zip(self.potentials, self.points)],
        }
        if self.landing_estimate is not None:
            doc["landing_estimate"] = [repr(self.landing_estimate.real),
                                       repr(self.landing_estimate.imag)]
        if self.diagnostic is not None:
            doc["diagnostic"] = self.diagnostic
        return doc


def extrapolate_geometric(points: Sequence[complex]) -> complex:
    """Limit of a sequence with geometrically decaying error modes.

    Iterated Aitken delta-squared; each sweep removes the currently
    dominant geometric mode, which is the Richardson step appropriate for
    nodes on a geometric potential schedule.
    """
    seq = list(points)
    while len(seq) >= 3:
        nxt = []
        for x0, x1, x2 in zip(seq, seq[1:], seq[2:]):
            d1 = x1 - x0
            d2 = x2 - x1
            den = d2 - d1
            if den == 0 or not cmath.isfinite(den):
                nxt.append(x2)
            else:
                nxt.append(x2 - d2 * d2 / den)
        seq = nxt
    return seq[-1]


def _tail(points: Sequence[complex], stride: int, offset: int) -> List[complex]:
    upper = len(points) - offset
    picked = list(points[upper - 1:: -stride][:LANDING_NODES])
    picked.reverse()
    return picked


def _neville_to_zero(xs: Sequence[float], ys: Sequence[complex]) -> complex:
    tab = list(ys)
    n = len(xs)
    for k in range(1, n):
        tab = [((0 - xs[i + k]) * tab[i] + xs[i] * tab[i + 1])
               / (xs[i] - xs[i + k]) for i in range(n - k)]
    return tab[0]


def _landing(points: List[complex], potentials: List[float],
             stride: int) -> Tuple[Optional[complex], bool]:
    """Landing estimate plus convergence flag from the trace tail.

    Three extrapolants compete: geometric acceleration sampled once and
    twice per potential halving (right for repelling and preperiodic
    landing points, whose approach is a power of t), and polynomial
    extrapolation in 1/log t (right for parabolic landing points, whose
    approach is polynomial in 1/log t).  The winner is the candidate
    whose value moves least when the tail is shifted back one node, and
    the ray is declared landed when that movement is below the gate.
    """
    candidates = []
    for s in (stride, 2 * stride):
        if len(points) < (LANDING_NODES - 1) * s + 2:
            continue
        est = extrapolate_geometric(_tail(points, s, 0))
        prev = extrapolate_geometric(_tail(points, s, 1))
        candidates.append((abs(est - prev), est))
    s_log = 4 * stride
    if len(points) >= (LANDING_NODES - 1) * s_log + 2:
        idx = list(range(len(points) - 1, -1, -s_log))[:LANDING_NODES]
        if all(potentials[i] < 0.05 for i in idx):
            xs = [1.0 / math.log(potentials[i]) for i in idx]
            ys = [points[i] for i in idx]
            est = _neville_to_zero(xs, ys)
            idx2 = [i - 1 for i in idx]
            xs2 = [1.0 / math.log(potentials[i]) for i in idx2]
            ys2 = [points[i] for i in idx2]
            prev = _neville_to_zero(xs2, ys2)
            candidates.append((abs(est - prev), est))
    if not candidates:
        if len(points) >= 3:
            return extrapolate_geometric(points[-3:]), False
        return None, False
    diff, est = min(candidates, key=lambda c: c[0])
    return est, diff < LANDING_GATE


def _schedule(t0: float, t_end: float, steps_per_doubling: int):
    """Yield (node index, potential, depth) down the geometric ladder."""
    if t_end <= 0:
        raise DomainError("t_end must be positive")
    if t_end >= t0:
        raise DomainError(f"t_end must be below the starting potential {t0}")
    m = 0
    while True:
        t = t0 * 2.0 ** (-m / steps_per_doubling)
        if t < t_end * (1 - 1e-12):
            return
        depth = (m + steps_per_doubling - 1) // steps_per_doubling
        yield m, t, depth
        m += 1


def _target(t: float, depth: int, angle_at_depth: Angle) -> complex:
    """The escape coordinate target exp(2^depth * (t + 2 pi i angle)).

    The angle at depth is supplied exactly; the modulus exponent
    2^depth * t stays within [t0, 2 t0] by construction.
    """
    exponent = t * (2.0 ** depth)
    phase = math.tau * angle_at_depth.num / angle_at_depth.den
    return cmath.exp(complex(exponent, phase))


def _newton_dynamic(c: complex, depth: int, target: complex, seed: complex) -> complex:
    z = seed
    for _ in range(NEWTON_MAX_ITER):
        w = z
        dw = 1 + 0j
        for _ in range(depth):
            dw = 2 * w * dw
            w = w * w + c
        if dw == 0:
            raise ZeroDivisionError
        step = (w - target) / dw
        z -= step
        if abs(step) < NEWTON_TOL * max(1.0, abs(z)):
            return z
    raise ArithmeticError


def _newton_parameter(depth: int, target: complex, seed: complex) -> complex:
    c = seed
    for _ in range(NEWTON_MAX_ITER):
        z = c
        dz = 1 + 0j
        for _ in range(depth):
            dz = 2 * z * dz + 1
            z = z * z + c
        if dz == 0:
            raise ZeroDivisionError
        step = (z - target) / dz
        c -= step
        if abs(step) < NEWTON_TOL * max(1.0, abs(c)):
            return c
    raise ArithmeticError


def trace_dynamic_ray(c: complex, theta: Angle, t_end: float = DEFAULT_T_END,
                      steps_per_doubling: int = DEFAULT_STEPS_PER_DOUBLING,
                      t0: float = DEFAULT_T0) -> RayTrace:
    """Trace the external ray of z^2 + c at a rational angle.

    Continuation runs from potential ``t0`` down to ``t_end``.  A failure
    of the Newton correction signals the ray running into the critical
    orbit and raises :class:`RayBrokenError` with the offending potential.
    """
    trace = RayTrace(kind="dynamic", angle=theta)
    angles = _angle_ladder(theta)
    seed = None
    frozen = 0
    for m, t, depth in _schedule(t0, t_end, steps_per_doubling):
        target = _target(t, depth, angles(depth))
        approx = target - c / (2 * target)
        guess = approx if seed is None else seed
        try:
            z = _newton_dynamic(c, depth, approx, guess)
        except (ArithmeticError, ZeroDivisionError, OverflowError):
            if frozen >= 2:
                # the trace stopped resolving: the point sits at the
                # landing point to machine precision, not on a broken ray
                trace.diagnostic = (
                    f"resolution exhausted at potential {t:.3e}")
                break
            raise RayBrokenError(
                f"dynamic ray {theta} for c={c} broke at potential {t:.3e}; "
                "the continuation hit the critical orbit", t)
        if seed is not None and abs(z - seed) < 1e-14 * max(1.0, abs(z)):
            frozen += 1
        else:
            frozen = 0
        trace.points.append(z)
        trace.potentials.append(t)
        seed = z
        if frozen >= steps_per_doubling:
            trace.diagnostic = f"resolution exhausted at potential {t:.3e}"
            break
    trace.landing_estimate, trace.landed = _landing(
        trace.points, trace.potentials, steps_per_doubling)
    return trace


def trace_parameter_ray(theta: Angle, t_end: float = DEFAULT_T_END,
                        steps_per_doubling: int = DEFAULT_STEPS_PER_DOUBLING,
                        t0: float = DEFAULT_T0) -> RayTrace:
    """Trace the parameter ray at a rational angle.

    The escape coordinate of the parameter plane is evaluated through the
    critical value orbit c -> f_c^n(c) with its derivative recursion.  A
    failing node is retried on a locally refined schedule; a persistently
    failing node truncates the trace and records a diagnostic instead of
    raising.
    """
    trace = RayTrace(kind="parameter", angle=theta)
    angles = _angle_ladder(theta)
    seed = None
    prev = None
    for m, t, depth in _schedule(t0, t_end, steps_per_doubling):
        target = _target(t, depth, angles(depth))
        approx = target if seed is None else target - seed / (2 * target)
        guess = approx if seed is None else seed
        try:
            cpt = _newton_parameter(depth, approx, guess)
        except (ArithmeticError, ZeroDivisionError, OverflowError):
            cpt = _refined_parameter_node(prev, t, depth, angles, seed)
            if cpt is None:
                trace.diagnostic = (
                    f"continuation stalled at potential {t:.3e}; trace truncated")
                break
        trace.points.append(cpt)
        trace.potentials.append(t)
        seed = cpt
        prev = (t, depth)
    trace.landing_estimate, trace.landed = _landing(
        trace.points, trace.potentials, steps_per_doubling)
    return trace


def _refined_parameter_node(prev: Optional[Tuple[float, int]], t: float,
                            depth: int, angles, seed: Optional[complex],
                            splits: int = 4) -> Optional[complex]:
    """Retry a failed node by stepping through intermediate potentials."""
    if prev is None or seed is None:
        return None
    t_prev = prev[0]
    current = seed
    for k in range(1, splits + 1):
        frac = k / splits
        tt = t_prev * (t / t_prev) ** frac
        dd = depth
        target = _target(tt, dd, angles(dd))
        approx = target - current / (2 * target)
        try:
            current = _newton_parameter(dd, approx, current)
        except (ArithmeticError, ZeroDivisionError, OverflowError):
            return None
    return current


def _angle_ladder(theta: Angle) -> Callable[[int], Angle]:
    """Exact doubled angles, memoized: ladder(n) = 2^n * theta mod 1."""
    cache = [theta]

    def ladder(n: int) -> Angle:
        while len(cache) <= n:
            cache.append(double(cache[-1]))
        return cache[n]

    return ladder


def trace_dynamic_rays_batch(c: complex, thetas: Sequence[Angle],
                             t_end: float = DEFAULT_T_END,
                             steps_per_doubling: int = DEFAULT_STEPS_PER_DOUBLING,
                             t0: float = DEFAULT_T0):
    """Vectorized dynamic-ray tracing for many angles of one polynomial.

    Follows the same schedule and Newton iteration as
    :func:`trace_dynamic_ray` but advances all rays simultaneously with
    numpy.  Returns (landing_estimates, landed_mask, final_points).
    """
    n_rays = len(thetas)
    ladders = [_angle_ladder(th) for th in thetas]
    z = None
    tail: List[np.ndarray] = []
    phases = None
    cached_depth = None
    for m, t, depth in _schedule(t0, t_end, steps_per_doubling):
        if depth != cached_depth:
            phases = np.array(
                [math.tau * ladders[i](depth).num / ladders[i](depth).den
                 for i in range(n_rays)])
            cached_depth = depth
        modulus = t * (2.0 ** depth)
        target = np.exp(modulus + 1j * phases)
        approx = target - c / (2 * target)
        guess = approx.copy() if z is None else z.copy()
        z = _newton_dynamic_batch(c, depth, approx, guess)
        tail.append(z.copy())
    tail_arr = np.array(tail)
    stride = steps_per_doubling
    est = _batch_extrapolate(tail_arr, stride, end_offset=0)
    prev = _batch_extrapolate(tail_arr, stride, end_offset=1)
    landed = np.abs(est - prev) < LANDING_GATE
    return est, landed, tail_arr[-1]


def _newton_dynamic_batch(c: complex, depth: int, target: np.ndarray,
                          seed: np.ndarray) -> np.ndarray:
    z = seed
    for _ in range(NEWTON_MAX_ITER):
        w = z.copy()
        dw = np.ones_like(z)
        for _ in range(depth):
            dw = 2 * w * dw
            w = w * w + c
        step = (w - target) / dw
        z = z - step
        if np.max(np.abs(step) / np.maximum(1.0, np.abs(z))) < NEWTON_TOL:
            return z
    raise RayBrokenError("batch Newton stalled", float("nan"))


def _batch_extrapolate(tail: np.ndarray, stride: int, end_offset: int) -> np.ndarray:
    rows = []
    idx = tail.shape[0] - 1 - end_offset
    while idx >= 0 and len(rows) < LANDING_NODES:
        rows.append(tail[idx])
        idx -= stride
    rows.reverse()
    seq = [np.asarray(r) for r in rows]
    while len(seq) >= 3:
        nxt = []
        for x0, x1, x2 in zip(seq, seq[1:], seq[2:]):
            d1 = x1 - x0
            d2 = x2 - x1
            den = d2 - d1
            safe = np.where(den == 0, 1, den)
            corr = np.where(den == 0, 0, d2 * d2 / safe)
            nxt.append(x2 - corr)
        seq = nxt
    return seq[-1]


def equipotential_arc(c: Optional[complex], t: float, start: Angle, end: Angle,
                      parameter_plane: bool = False,
                      t0: float = DEFAULT_T0,
                      seed: Optional[complex] = None,
                      steps_per_deep_turn: float = 32.0) -> List[complex]:
    """Points of the equipotential at height t between two angles.

    Walks the angle counterclockwise from ``start`` to ``end`` in exact
    rational steps small enough that the depth-n image moves a small
    fraction of a turn, Newton-correcting at each step.  Used to close
    ray pairs into leaf curves.  Without an explicit ``seed`` the ray at
    the start angle is traced down to t to obtain one.
    """
    depth = max(0, math.ceil(math.log2(t0 / t)))
    span = (end - start).as_fraction()
    steps = max(8, math.ceil(float(span) * (2 ** depth) * steps_per_deep_turn))
    if seed is None:
        if parameter_plane:
            seed = trace_parameter_ray(start, t_end=t, t0=t0).points[-1]
        else:
            seed = trace_dynamic_ray(0j if c is None else c, start,
                                     t_end=t, t0=t0).points[-1]
    pts: List[complex] = []
    cur = seed
    for j in range(steps + 1):
        u = start.as_fraction() + span * j / steps
        u_deep = Fraction(u * 2 ** depth) % 1
        phase = math.tau * float(u_deep)
        target = cmath.exp(complex(t * 2.0 ** depth, phase))
        if parameter_plane:
            approx = target if cur is None else target - cur / (2 * target)
            cur = _newton_parameter(depth, approx, approx if cur is None else cur)
        else:
            cc = 0j if c is None else c
            approx = target - cc / (2 * target)
            cur = _newton_dynamic(cc, depth, approx, approx if cur is None else cur)
        pts.append(cur)
    return pts


@dataclass
class LeafCurve:
    """A leaf embedded in a dynamical or parameter plane.

    Two external rays at the leaf's endpoint angles joined by an
    equipotential arc on the leaf's arc side.
    """

    points: List[complex]
    landing_a: Optional[complex]
    landing_b: Optional[complex]
    broken: bool = False


def trace_dynamical_leaf(c: complex, leaf, t_end: float = DEFAULT_T_END,
                         t_join: float = 0.05,
                         steps_per_doubling: int = DEFAULT_STEPS_PER_DOUBLING,
                         parameter_plane: bool = False) -> LeafCurve:
    """Embed a lamination leaf as a ray / equipotential / ray curve.

    The curve follows the ray at the leaf's first endpoint angle from its
    landing point up to the join potential, crosses along the
    equipotential on the leaf's arc side, and descends the second ray.
    Any curve joining the two ray landing points through the exterior
    works; this choice needs no global inverse of the escape coordinate.
    """
    tracer = trace_parameter_ray if parameter_plane else (
        lambda th, **kw: trace_dynamic_ray(c, th, **kw))
    try:
        ray_a = tracer(leaf.a, t_end=t_end, steps_per_doubling=steps_per_doubling)
        ray_b = tracer(leaf.b, t_end=t_end, steps_per_doubling=steps_per_doubling)
    except RayBrokenError:
        return LeafCurve(points=[], landing_a=None, landing_b=None, broken=True)
    join_a = _first_index_at_or_below(ray_a.potentials, t_join)
    join_b = _first_index_at_or_below(ray_b.potentials, t_join)
    t_arc = ray_a.potentials[join_a]
    arc = equipotential_arc(c, t_arc, leaf.a, leaf.b,
                            parameter_plane=parameter_plane,
                            seed=ray_a.points[join_a])
    upward = list(reversed(ray_a.points[join_a:]))
    downward = ray_b.points[join_b:]
    points = upward + arc + downward
    return LeafCurve(points=points,
                     landing_a=ray_a.landing_estimate,
                     landing_b=ray_b.landing_estimate,
                     broken=not (ray_a.landed and ray_b.landed))


def _first_index_at_or_below(potentials: List[float], t_join: float) -> int:
    for i, t in enumerate(potentials):
        if t <= t_join:
            return i
    return len(potentials) - 1
