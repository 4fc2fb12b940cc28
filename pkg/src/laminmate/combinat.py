"""Parameter-space combinatorics of periodic and preperiodic angles.

Periodic angles under doubling pair up into the wakes of hyperbolic
components; each wake carries a four-ray strip whose preperiodic boundary
angles are computed by exact interval pullback.  The bounding predicate
asks whether some forward image of a wake angle enters the open arc from
5/6 counterclockwise through 0 to 1/6, the arc cut off by the major leaf
of the Basilica lamination.
"""

from __future__ import annotations

import bisect
import csv
import io
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .circle import Angle, bubble_exponent, classify, double, halves, in_cyclic_arc
from .errors import DomainError, InternalConsistencyError
from .lamination import (
    FIVE_SIXTHS,
    ONE_SIXTH,
    ONE_THIRD,
    TWO_THIRDS,
    Lamination,
    PinchReport,
)

MAX_PAIRING_PERIOD = 20


@dataclass(frozen=True)
class WakePair:
    """The two periodic angles whose parameter rays bound one wake."""

    phi1: Angle
    phi2: Angle
    period: int

    def __post_init__(self):
        for phi in (self.phi1, self.phi2):
            pre, per = classify(phi)
            if pre != 0 or per != self.period:
                raise DomainError(
                    f"{phi} is not periodic of exact period {self.period}")
        if not self.phi1 < self.phi2:
            raise DomainError("wake angles must satisfy phi1 < phi2 in [0,1)")

    def in_half_limb(self) -> bool:
        """Whether the wake sits inside the wake of the angle pair 1/3, 2/3."""
        return ONE_THIRD <= self.phi1 and self.phi2 <= TWO_THIRDS

    def __str__(self) -> str:
        return f"({self.phi1}, {self.phi2})"


@dataclass(frozen=True)
class StripAngles:
    """The four ray angles bounding a renormalization strip.

    Cyclically ordered 0 < phi1 < psi1 < psi2 < phi2 < 0; the phi are the
    periodic wake angles and the psi are preperiodic.
    """

    phi1: Angle
    psi1: Angle
    psi2: Angle
    phi2: Angle

    def __post_init__(self):
        if not (self.phi1 < self.psi1 < self.psi2 < self.phi2):
            raise InternalConsistencyError(
                "strip angles out of cyclic order: "
                f"{self.phi1}, {self.psi1}, {self.psi2}, {self.phi2}")
        for psi in (self.psi1, self.psi2):
            if classify(psi).preperiod == 0:
                raise InternalConsistencyError(f"{psi} should be preperiodic")


@dataclass(frozen=True)
class BoundednessReport:
    """Witness exponents for the bounding predicate on a wake pair.

    ``phi1_witness`` is the smallest n with 2^n * phi1 in the open arc
    (5/6, 1/6) through 0, or None; likewise for phi2.  At least one side
    always carries a witness for wakes outside the 1/2-limb.
    """

    phi1_witness: Optional[int]
    phi2_witness: Optional[int]


def periodic_angles(period: int) -> List[Angle]:
    """All angles of exact period ``period`` under doubling, sorted."""
    if period < 1:
        raise DomainError("period must be positive")
    den = 2 ** period - 1
    out = []
    for k in range(den):
        theta = Angle(k, den)
        if classify(theta).period == period:
            out.append(theta)
    return sorted(out, key=lambda a: a.as_fraction())


def _chords_cross(a1: Angle, b1: Angle, a2: Angle, b2: Angle) -> bool:
    inside_a = in_cyclic_arc(a2, a1, b1)
    inside_b = in_cyclic_arc(b2, a1, b1)
    return inside_a != inside_b


def pair_periodic_angles(period: int) -> List[WakePair]:
    """Pair the angles of exact period p into wake boundary pairs.

    Periods are processed increasingly; within a period the smallest
    unpaired angle is joined to the smallest unpaired angle keeping every
    chord built so far (this period and all lower ones) non-crossing.
    The scan is implemented with a stack: a new angle pairs with the last
    unpaired angle below it whenever the chord between them crosses no
    lower-period chord.  Period 1 has only the fixed angle 0, which pairs
    with nothing.
    """
    if not 1 <= period <= MAX_PAIRING_PERIOD:
        raise DomainError(
            f"period must be between 1 and {MAX_PAIRING_PERIOD}")
    if period == 1:
        return []
    lower: List[Tuple[Angle, Angle]] = []
    for p in range(2, period):
        lower.extend((w.phi1, w.phi2) for w in _pair_one_period(p, lower))
    return _pair_one_period(period, lower)


def _pair_one_period(period: int, lower: Sequence[Tuple[Angle, Angle]]) -> List[WakePair]:
    # endpoints of lower-period chords, sorted once for interval queries
    marks = []
    for idx, (x, y) in enumerate(lower):
        marks.append((x.as_fraction(), idx))
        marks.append((y.as_fraction(), idx))
    marks.sort()
    positions = [m[0] for m in marks]

    def crossing_free(lo: Angle, hi: Angle) -> bool:
        left = bisect.bisect_right(positions, lo.as_fraction())
        right = bisect.bisect_left(positions, hi.as_fraction())
        counts = Counter(marks[i][1] for i in range(left, right))
        return all(c == 2 for c in counts.values())

    pairs: List[WakePair] = []
    stack: List[Angle] = []
    for theta in periodic_angles(period):
        if stack and crossing_free(stack[-1], theta):
            pairs.append(WakePair(stack.pop(), theta, period))
        else:
            stack.append(theta)
    if stack:
        raise InternalConsistencyError(
            f"period {period} left unpaired angles {stack}")
    return sorted(pairs, key=lambda w: w.phi1.as_fraction())


def bounded_side(phi: Angle) -> Optional[int]:
    """Smallest n >= 0 with 2^n * phi strictly inside the arc (5/6, 1/6).

    The arc runs counterclockwise from 5/6 through 0 to 1/6.  The doubling
    orbit of a rational is eventually periodic, so searching
    n < preperiod + period decides the predicate exactly.
    """
    q = phi.den
    num = phi.num
    seen = set()
    n = 0
    while num not in seen:
        seen.add(num)
        sixfold = 6 * num
        if (sixfold > 5 * q or sixfold < q) and sixfold != 5 * q and sixfold != q:
            return n
        num = (2 * num) % q
        n += 1
    return None


def boundedness(wake: WakePair) -> BoundednessReport:
    """Bounding witnesses for both wake angles.

    Rejects wakes inside the 1/2-limb (including the pair (1/3, 2/3)
    itself); for every other wake at least one witness exists, which is
    asserted.
    """
    if wake.in_half_limb():
        raise DomainError(
            f"wake {wake} lies in the 1/2-limb; the bounding predicate "
            "does not apply there")
    w1 = bounded_side(wake.phi1)
    w2 = bounded_side(wake.phi2)
    if w1 is None and w2 is None:
        raise InternalConsistencyError(
            f"wake {wake} has no bounding witness on either side")
    return BoundednessReport(phi1_witness=w1, phi2_witness=w2)


def strip_angles(wake: WakePair) -> StripAngles:
    """The four boundary angles of the wake's renormalization strip.

    The preperiodic pair is found by exact interval pullback: starting
    from the arc (phi1, phi2), pull back p times under halving, at step k
    choosing the inverse branch whose closed arc contains the orbit point
    2^(p-k) * phi; after p steps the tracked phi is one endpoint of the
    pulled-back arc and the other endpoint is the strip angle psi.  Two
    consistency checks guard the construction: 2^(p-1) applied to each psi
    must land among the four halved wake angles, and the classical
    half-angle identity must pair the wake angles one plain, one shifted.
    """
    if wake.in_half_limb():
        raise DomainError(
            f"wake {wake} lies in the 1/2-limb; no strip is computed there")
    p = wake.period
    psi1 = _pullback_endpoint(wake, wake.phi1)
    psi2 = _pullback_endpoint(wake, wake.phi2)
    strip = StripAngles(phi1=wake.phi1, psi1=psi1, psi2=psi2, phi2=wake.phi2)

    half_set = set(halves(wake.phi1) + halves(wake.phi2))
    for psi in (psi1, psi2):
        cur = psi
        for _ in range(p - 1):
            cur = double(cur)
        if cur not in half_set:
            raise InternalConsistencyError(
                f"strip angle {psi} does not pull back through the halved "
                f"wake angles of {wake}")

    lo1, hi1 = halves(wake.phi1)
    lo2, hi2 = halves(wake.phi2)
    last1 = wake.phi1
    last2 = wake.phi2
    for _ in range(p - 1):
        last1 = double(last1)
        last2 = double(last2)
    alt_a = last1 == lo1 and last2 == hi2
    alt_b = last2 == lo2 and last1 == hi1
    if alt_a == alt_b:
        raise InternalConsistencyError(
            f"wake {wake} violates the half-angle splitting identity")
    return strip


def _pullback_endpoint(wake: WakePair, tracked: Angle) -> Angle:
    p = wake.period
    lo, hi = wake.phi1, wake.phi2
    for k in range(1, p + 1):
        target = tracked
        for _ in range(p - k):
            target = double(target)
        branches = ((Angle(lo.num, 2 * lo.den), Angle(hi.num, 2 * hi.den)),
                    (Angle(lo.num + lo.den, 2 * lo.den),
                     Angle(hi.num + hi.den, 2 * hi.den)))
        chosen = None
        for b_lo, b_hi in branches:
            if in_cyclic_arc(target, b_lo, b_hi, open_arc=False):
                if chosen is not None:
                    raise InternalConsistencyError(
                        f"pullback branch for {wake} ambiguous at step {k}")
                chosen = (b_lo, b_hi)
        if chosen is None:
            raise InternalConsistencyError(
                f"pullback branch for {wake} missing at step {k}")
        lo, hi = chosen
    if tracked == lo:
        return hi
    if tracked == hi:
        return lo
    raise InternalConsistencyError(
        f"tracked angle {tracked} is not an endpoint of the pulled-back arc "
        f"({lo}, {hi})")


def pinch_pairs(lamination: Lamination) -> PinchReport:
    """Angle pairs identified by the collapse map, per lamination leaf.

    Delegates to the lamination: every non-root leaf gives one pair of
    parameter-ray angles whose Misiurewicz landing points are identified;
    the root leaf is the boundary of the limb that collapses to a point.
    """
    return lamination.pinch_pairs()


def twin_angles(portrait: Set[Angle]) -> Set[Angle]:
    """Validate a ray portrait and return its slice-two counterpart.

    Parameter ray portraits without bubble-touch angles, outside the
    1/2-limb, correspond bijectively and angle-preservingly to portraits
    in the 2-cycle slice, so the returned set equals the input; the value
    of the operation is the validation.
    """
    if not portrait:
        raise DomainError("empty portrait")
    for theta in portrait:
        if bubble_exponent(theta) is not None:
            raise DomainError(
                f"{theta} is a bubble-touch angle of the form n/(3*2^k); "
                "twin portraits are only defined away from these")
        if in_cyclic_arc(theta, ONE_THIRD, TWO_THIRDS, open_arc=True):
            raise DomainError(
                f"{theta} lies inside the 1/2-limb wake (1/3, 2/3); twin "
                "portraits exist only outside it")
    return set(portrait)


def boundedness_table(max_period: int) -> List[dict]:
    """Witness table rows for every wake of period <= max_period.

    Wakes inside the 1/2-limb are skipped.  Row keys match the CSV header
    period, phi1, phi2, witness_phi1, witness_phi2.
    """
    rows = []
    for p in range(1, max_period + 1):
        for wake in pair_periodic_angles(p):
            if wake.in_half_limb():
                continue
            report = boundedness(wake)
            rows.append({
                "period": p,
                "phi1": str(wake.phi1),
                "phi2": str(wake.phi2),
                "witness_phi1": "" if report.phi1_witness is None else report.phi1_witness,
                "witness_phi2": "" if report.phi2_witness is None else report.phi2_witness,
            })
    return rows


def boundedness_csv(max_period: int) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(
        buf,
        fieldnames=["period", "phi1", "phi2", "witness_phi1", "witness_phi2"],
        lineterminator="\n")
    writer.writeheader()
    for row in boundedness_table(max_period):
        writer.writerow(row)
    return buf.getvalue()
