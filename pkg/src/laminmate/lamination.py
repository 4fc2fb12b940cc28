"""Exact construction of the invariant Basilica lamination.

The lamination is the family of disjoint chords of the closed unit disk
obtained from the root chord joining angles 1/3 and 2/3 together with all
iterated preimages of the chord joining 5/6 and 1/6 under angle doubling.
Endpoints are exactly the angles n/(3*2^k) with n coprime to 6; every such
angle is an endpoint of exactly one leaf.

Depth bookkeeping: the root leaf (1/3, 2/3) has depth -1, the leaf
(5/6, 1/6) has depth 0, and the leaves at depth d+1 are the preimage pairs
of the leaves at depth d.  A depth-d leaf (d >= 0) has endpoint
denominators 3*2^(d+1) and subtends an arc of exact length 1/(3*2^d).
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Set, Tuple

from .circle import Angle, bubble_exponent, double, halves, in_cyclic_arc
from .errors import DomainError, InternalConsistencyError

ONE_THIRD = Angle(1, 3)
TWO_THIRDS = Angle(2, 3)
FIVE_SIXTHS = Angle(5, 6)
ONE_SIXTH = Angle(1, 6)

DEPTH_CAP = 30


@dataclass(frozen=True)
class Leaf:
    """A chord of the disk stored so the ccw arc from a to b is short.

    The arc from ``a`` counterclockwise to ``b`` has length at most 1/2;
    for every generated leaf this arc is the one cut off from the disk
    center together with the angles the leaf separates.
    """

    a: Angle
    b: Angle
    depth: int

    def __post_init__(self):
        if self.a == self.b:
            raise DomainError("leaf endpoints must differ")

    def arc_length(self) -> Fraction:
        return (self.b - self.a).as_fraction()

    def contains_in_arc(self, theta: Angle, open_arc: bool = True) -> bool:
        """Whether theta lies on the (short) ccw arc from a to b."""
        return in_cyclic_arc(theta, self.a, self.b, open_arc=open_arc)

    def endpoints(self) -> Tuple[Angle, Angle]:
        return (self.a, self.b)

    def image(self) -> "Leaf":
        """The leaf joining the doubled endpoints, one depth up."""
        return orient(double(self.a), double(self.b), self.depth - 1)

    def __str__(self) -> str:
        return f"<{self.a},{self.b}>"


def orient(x: Angle, y: Angle, depth: int) -> Leaf:
    """Build a leaf from an unordered endpoint pair.

    Picks the orientation whose ccw arc x->y is at most 1/2.  For the root
    pair {1/3, 2/3} this selects the arc through 1/2, which is the side of
    the disk holding the 1/2-limb.
    """
    if (y - x).as_fraction() <= Fraction(1, 2):
        return Leaf(x, y, depth)
    return Leaf(y, x, depth)


def crosses(l1: Leaf, l2: Leaf) -> bool:
    """Whether two chords with distinct endpoints link each other.

    True iff exactly one endpoint of l2 lies strictly inside the arc of l1,
    which is symmetric in the two leaves.
    """
    if l1.endpoints() == l2.endpoints():
        raise DomainError("crossing test needs two distinct leaves")
    ina = l1.contains_in_arc(l2.a)
    inb = l1.contains_in_arc(l2.b)
    return ina != inb


class Lamination:
    """The Basilica lamination generated down to a fixed depth.

    Immutable after construction.  Leaves are indexed by depth (sorted by
    their ``a`` endpoint) and by endpoint angle.
    """

    def __init__(self, max_depth: int, by_depth: Dict[int, List[Leaf]]):
        self.max_depth = max_depth
        self._by_depth = by_depth
        self._by_endpoint: Dict[Angle, Leaf] = {}
        self._arc_starts: Dict[int, List[Angle]] = {}
        for depth, leaves in by_depth.items():
            leaves.sort(key=lambda l: l.a.as_fraction())
            self._arc_starts[depth] = [l.a for l in leaves]
            for leaf in leaves:
                for endpoint in leaf.endpoints():
                    if endpoint in self._by_endpoint:
                        raise InternalConsistencyError(
                            f"angle {endpoint} is an endpoint of two leaves")
                    self._by_endpoint[endpoint] = leaf

    @classmethod
    def generate(cls, max_depth: int) -> "Lamination":
        """Generate the lamination with preimage depths 0..max_depth.

        Depth -1 holds the root leaf (1/3, 2/3) and depth 0 holds
        (5/6, 1/6).  Each leaf (a, b) at depth d spawns two leaves at
        depth d+1 by pairing the four halved angles
        {a/2, a/2 + 1/2, b/2, b/2 + 1/2} so that paired endpoints lie on
        the same component of the circle cut at 1/3 and 5/6.
        """
        if not 0 <= max_depth <= DEPTH_CAP:
            raise DomainError(
                f"max_depth must be between 0 and {DEPTH_CAP}, got {max_depth}")
        by_depth: Dict[int, List[Leaf]] = {
            -1: [orient(ONE_THIRD, TWO_THIRDS, -1)],
            0: [orient(FIVE_SIXTHS, ONE_SIXTH, 0)],
        }
        for depth in range(max_depth):
            nxt: List[Leaf] = []
            for leaf in by_depth[depth]:
                nxt.extend(_pull_back(leaf))
            by_depth[depth + 1] = nxt
        return cls(max_depth, by_depth)

    def leaves_at(self, depth: int) -> List[Leaf]:
        return list(self._by_depth.get(depth, []))

    def __iter__(self):
        for depth in range(-1, self.max_depth + 1):
            yield from self._by_depth.get(depth, [])

    def __len__(self) -> int:
        return sum(len(v) for v in self._by_depth.values())

    def leaf_of(self, theta: Angle) -> Optional[Leaf]:
        """The unique leaf having theta as an endpoint, if generated."""
        return self._by_endpoint.get(theta)

    def pinch_class(self, theta: Angle) -> Set[Angle]:
        """The equivalence class of theta: itself plus its leaf partner."""
        leaf = self.leaf_of(theta)
        if leaf is None:
            return {theta}
        return {leaf.a, leaf.b}

    def leaf_containing(self, theta: Angle, depth: int) -> Optional[Leaf]:
        """The depth-``depth`` leaf whose open arc contains theta, if any.

        Arcs at a fixed depth are pairwise disjoint, so a sorted lookup on
        the arc start angle finds the only candidates (the predecessor,
        plus the last leaf for arcs wrapping through 0).
        """
        starts = self._arc_starts.get(depth)
        if not starts:
            return None
        leaves = self._by_depth[depth]
        i = bisect.bisect_right(starts, theta.as_fraction(),
                                key=lambda a: a.as_fraction())
        for candidate in (leaves[i - 1], leaves[-1]):
            if candidate.contains_in_arc(theta):
                return candidate
        return None

    def separating_chain(self, theta: Angle) -> List[Leaf]:
        """All leaves whose open arc contains theta, outermost first.

        These are the leaves separating theta from the gap of the disk
        center adjacent to angle 0, i.e. the chain of touch points a path
        from the central bubble must cross to reach the angle-theta
        boundary point.  Endpoint angles are rejected: a ray toward such
        an angle terminates on a leaf, which ``leaf_of`` returns.
        """
        if bubble_exponent(theta) is not None:
            raise DomainError(
                f"{theta} is a leaf endpoint angle; use leaf_of instead")
        chain = []
        for depth in range(-1, self.max_depth + 1):
            leaf = self.leaf_containing(theta, depth)
            if leaf is not None:
                chain.append(leaf)
        for outer, inner in zip(chain, chain[1:]):
            if not (outer.contains_in_arc(inner.a) and outer.contains_in_arc(inner.b)):
                raise InternalConsistencyError(
                    f"chain leaves {outer} and {inner} are not nested")
        return chain

    def pinch_pairs(self) -> "PinchReport":
        """All leaves as pairs of identified angles, root leaf set apart.

        Every leaf other than the root pairs the two angles whose
        parameter rays land at Misiurewicz points identified by the
        collapse map; the root leaf (1/3, 2/3) instead bounds the limb
        that collapses to a single point, so it is reported separately.
        """
        pairs = [leaf.endpoints() for leaf in self if leaf.depth >= 0]
        return PinchReport(pairs=pairs,
                           limb_boundary=(ONE_THIRD, TWO_THIRDS))

    def to_json_dict(self) -> dict:
        return {
            "format_version": 1,
            "max_depth": self.max_depth,
            "leaves": [
                {"a": str(leaf.a), "b": str(leaf.b), "depth": leaf.depth}
                for leaf in sorted(
                    self, key=lambda l: (l.depth, l.a.as_fraction()))
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"


@dataclass(frozen=True)
class PinchReport:
    pairs: List[Tuple[Angle, Angle]] = field(default_factory=list)
    limb_boundary: Tuple[Angle, Angle] = (ONE_THIRD, TWO_THIRDS)


def _pull_back(leaf: Leaf) -> List[Leaf]:
    """The two preimage leaves of a leaf under doubling.

    The four halved endpoints are paired by the component of the circle
    cut at {1/3, 5/6} each falls in; the two resulting chords never link,
    which is asserted as a guard.
    """
    a_lo, a_hi = halves(leaf.a)
    b_lo, b_hi = halves(leaf.b)
    groups: Dict[bool, List[Angle]] = {True: [], False: []}
    for angle in (a_lo, a_hi, b_lo, b_hi):
        groups[in_cyclic_arc(angle, ONE_THIRD, FIVE_SIXTHS)].append(angle)
    if len(groups[True]) != 2 or len(groups[False]) != 2:
        raise InternalConsistencyError(
            f"halves of {leaf} do not split two against two")
    out = [orient(pair[0], pair[1], leaf.depth + 1) for pair in groups.values()]
    if crosses(out[0], out[1]):
        raise InternalConsistencyError(
            f"preimage leaves of {leaf} cross each other")
    return out


def leaf_geometry(leaf: Leaf, samples: int) -> List[complex]:
    """The hyperbolic geodesic of the disk joining the leaf endpoints.

    Returns ``samples`` points from exp(2*pi*i*a) to exp(2*pi*i*b).  For
    non-antipodal endpoints this is the arc of the circle through both
    points orthogonal to the unit circle; antipodal endpoints give the
    straight diameter.  Geodesics of disjoint chords never intersect, so
    drawing every leaf this way keeps the picture disjoint.
    """
    if samples < 2:
        raise DomainError("need at least 2 samples")
    u = _unit(leaf.a)
    v = _unit(leaf.b)
    span = (leaf.b - leaf.a).as_fraction()
    if span == Fraction(1, 2):
        return [u + (v - u) * j / (samples - 1) for j in range(samples)]
    dot = u.real * v.real + u.imag * v.imag
    center = (u + v) / (1 + dot)
    phi_u = math.atan2((u - center).imag, (u - center).real)
    phi_v = math.atan2((v - center).imag, (v - center).real)
    sweep = math.remainder(phi_v - phi_u, math.tau)
    radius = math.sqrt(abs(center) ** 2 - 1)
    pts = []
    for j in range(samples):
        phi = phi_u + sweep * j / (samples - 1)
        pts.append(center + radius * complex(math.cos(phi), math.sin(phi)))
    # pin the endpoints to the exact circle points
    pts[0] = u
    pts[-1] = v
    return pts


def _unit(theta: Angle) -> complex:
    quarter, rem = divmod(4 * theta.num, theta.den)
    if rem == 0:
        return (1 + 0j, 1j, -1 + 0j, -1j)[quarter]
    t = math.tau * theta.num / theta.den
    return complex(math.cos(t), math.sin(t))
