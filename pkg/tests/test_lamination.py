import json
import math
from fractions import Fraction
from math import gcd

import pytest

from laminmate.circle import Angle, bubble_exponent, double
from laminmate.errors import DomainError
from laminmate.lamination import (
    Lamination,
    Leaf,
    crosses,
    leaf_geometry,
    orient,
)


def leaf_set(leaves):
    return {frozenset((l.a, l.b)) for l in leaves}


def pair(p1, q1, p2, q2):
    return frozenset((Angle(p1, q1), Angle(p2, q2)))


@pytest.fixture(scope="module")
def lam8():
    return Lamination.generate(8)


@pytest.fixture(scope="module")
def lam12():
    return Lamination.generate(12)


class TestGenerate:
    def test_depth_zero(self):
        lam = Lamination.generate(0)
        assert leaf_set(lam) == {pair(1, 3, 2, 3), pair(5, 6, 1, 6)}

    def test_depth_one(self):
        lam = Lamination.generate(1)
        assert leaf_set(lam.leaves_at(1)) == {
            pair(5, 12, 7, 12), pair(11, 12, 1, 12)}

    def test_depth_two(self):
        lam = Lamination.generate(2)
        assert leaf_set(lam.leaves_at(2)) == {
            pair(5, 24, 7, 24), pair(17, 24, 19, 24),
            pair(11, 24, 13, 24), pair(23, 24, 1, 24)}

    def test_depth_out_of_range(self):
        with pytest.raises(DomainError):
            Lamination.generate(-1)
        with pytest.raises(DomainError):
            Lamination.generate(31)

    def test_count_law(self, lam8):
        for depth in range(0, 9):
            assert len(lam8.leaves_at(depth)) == 2 ** depth
        assert len(lam8) == 2 ** 9

    def test_forward_invariance(self, lam8):
        for depth in range(1, 9):
            parents = leaf_set(lam8.leaves_at(depth - 1))
            for leaf in lam8.leaves_at(depth):
                img = leaf.image()
                assert frozenset((img.a, img.b)) in parents
        root = lam8.leaves_at(0)[0]
        assert frozenset(root.image().endpoints()) == pair(1, 3, 2, 3)

    def test_arc_length_law(self, lam12):
        for depth in range(0, 13):
            want = Fraction(1, 3 * 2 ** depth)
            for leaf in lam12.leaves_at(depth):
                assert leaf.arc_length() == want

    def test_endpoint_denominators(self, lam8):
        for depth in range(0, 9):
            den = 3 * 2 ** (depth + 1)
            for leaf in lam8.leaves_at(depth):
                assert leaf.a.den == den and leaf.b.den == den

    def test_endpoint_completeness(self, lam8):
        # endpoints at depths -1..n are exactly the angles of the form
        # m/(3*2^k) with k <= n+1
        endpoints = set()
        for leaf in lam8:
            endpoints.update(leaf.endpoints())
        expected = set()
        for k in range(0, 10):
            den = 3 * 2 ** k
            expected.update(
                Angle(n, den) for n in range(den) if gcd(n, den) == 1)
        assert endpoints == expected

    def test_pairwise_noncrossing_exhaustive(self, lam8):
        leaves = list(lam8)
        for i, l1 in enumerate(leaves):
            for l2 in leaves[i + 1:]:
                assert not crosses(l1, l2), f"{l1} crosses {l2}"

    def test_same_depth_arcs_disjoint(self, lam8):
        for depth in range(0, 9):
            leaves = sorted(lam8.leaves_at(depth),
                            key=lambda l: l.a.as_fraction())
            for cur, nxt in zip(leaves, leaves[1:]):
                assert (cur.b - cur.a).as_fraction() <= (nxt.a - cur.a).as_fraction()


class TestQueries:
    def test_leaf_of(self, lam8):
        assert frozenset(lam8.leaf_of(Angle(5, 6)).endpoints()) == pair(5, 6, 1, 6)
        assert frozenset(lam8.leaf_of(Angle(11, 12)).endpoints()) == pair(11, 12, 1, 12)
        assert lam8.leaf_of(Angle(1, 5)) is None

    def test_pinch_class(self, lam8):
        assert lam8.pinch_class(Angle(1, 6)) == {Angle(1, 6), Angle(5, 6)}
        assert lam8.pinch_class(Angle(1, 3)) == {Angle(1, 3), Angle(2, 3)}
        assert lam8.pinch_class(Angle(0, 1)) == {Angle(0, 1)}

    def test_crossing_examples(self):
        root = orient(Angle(1, 3), Angle(2, 3), -1)
        major = orient(Angle(5, 6), Angle(1, 6), 0)
        assert not crosses(root, major)
        d2a = orient(Angle(5, 24), Angle(7, 24), 2)
        d2b = orient(Angle(11, 24), Angle(13, 24), 2)
        assert not crosses(d2a, d2b)
        assert crosses(orient(Angle(0, 1), Angle(1, 2), 0),
                       orient(Angle(1, 4), Angle(3, 4), 0))


def scan_chain(lam, theta):
    """Independent oracle: full scan of every leaf for arc containment."""
    found = [l for l in lam if l.contains_in_arc(theta)]
    return sorted(found, key=lambda l: l.depth)


class TestSeparatingChain:
    def test_quarter_angle_depth4(self):
        lam = Lamination.generate(4)
        chain = lam.separating_chain(Angle(1, 4))
        assert [frozenset(l.endpoints()) for l in chain] == [
            pair(5, 24, 7, 24),
            pair(11, 48, 13, 48),
            pair(23, 96, 25, 96),
        ]

    def test_angle_zero_chain(self, lam12):
        # the chain toward angle 0 crosses one leaf per depth, the family
        # <5/6,1/6>, <11/12,1/12>, <23/24,1/24>, ... nesting down to 0
        chain = lam12.separating_chain(Angle(0, 1))
        assert chain == scan_chain(lam12, Angle(0, 1))
        assert len(chain) == 13
        assert frozenset(chain[0].endpoints()) == pair(5, 6, 1, 6)
        assert frozenset(chain[1].endpoints()) == pair(11, 12, 1, 12)
        assert frozenset(chain[2].endpoints()) == pair(23, 24, 1, 24)
        for leaf in chain:
            assert leaf.contains_in_arc(Angle(0, 1))

    def test_half_angle_chain(self, lam12):
        # toward angle 1/2 the path crosses the root leaf and then the
        # nested family <5/12,7/12>, <11/24,13/24>, ...
        chain = lam12.separating_chain(Angle(1, 2))
        assert chain == scan_chain(lam12, Angle(1, 2))
        assert frozenset(chain[0].endpoints()) == pair(1, 3, 2, 3)
        assert frozenset(chain[1].endpoints()) == pair(5, 12, 7, 12)
        assert frozenset(chain[2].endpoints()) == pair(11, 24, 13, 24)

    def test_matches_scan_oracle(self, lam8):
        for theta in [Angle(1, 5), Angle(2, 5), Angle(1, 7), Angle(9, 11),
                      Angle(13, 17), Angle(1, 9), Angle(22, 23)]:
            assert lam8.separating_chain(theta) == scan_chain(lam8, theta)

    def test_rejects_endpoint_angles(self, lam8):
        with pytest.raises(DomainError):
            lam8.separating_chain(Angle(5, 6))
        with pytest.raises(DomainError):
            lam8.separating_chain(Angle(1, 3))

    def test_monotone_in_depth(self):
        shallow = Lamination.generate(5)
        deep = Lamination.generate(9)
        for theta in [Angle(1, 4), Angle(0, 1), Angle(1, 7), Angle(3, 5)]:
            c1 = [frozenset(l.endpoints()) for l in shallow.separating_chain(theta)]
            c2 = [frozenset(l.endpoints()) for l in deep.separating_chain(theta)]
            assert c2[:len(c1)] == c1


class TestPinchPairs:
    def test_depth0(self):
        report = Lamination.generate(0).pinch_pairs()
        assert [frozenset(p) for p in report.pairs] == [pair(5, 6, 1, 6)]
        assert frozenset(report.limb_boundary) == pair(1, 3, 2, 3)

    def test_depth1_adds_two(self):
        report = Lamination.generate(1).pinch_pairs()
        got = {frozenset(p) for p in report.pairs}
        assert pair(5, 12, 7, 12) in got
        assert pair(11, 12, 1, 12) in got
        assert len(got) == 3

    def test_all_endpoints_are_bubble_angles(self, lam8):
        report = lam8.pinch_pairs()
        for x, y in report.pairs:
            assert bubble_exponent(x) is not None
            assert bubble_exponent(y) is not None


class TestGeometry:
    def test_diameter(self):
        pts = leaf_geometry(orient(Angle(0, 1), Angle(1, 2), 0), 3)
        assert pts == [complex(1, 0), complex(0, 0), complex(-1, 0)]

    def test_root_leaf_midpoint(self):
        # geodesic joining exp(2pi i/3) and exp(4pi i/3): circle centered
        # at -2 with radius sqrt(3), crossing the real axis at sqrt(3)-2
        pts = leaf_geometry(orient(Angle(1, 3), Angle(2, 3), -1), 101)
        mid = pts[50]
        assert abs(mid - (math.sqrt(3) - 2)) < 1e-12

    def test_endpoints_exact(self):
        for leaf in Lamination.generate(3):
            pts = leaf_geometry(leaf, 17)
            for end, angle in ((pts[0], leaf.a), (pts[-1], leaf.b)):
                t = math.tau * angle.num / angle.den
                assert abs(end - complex(math.cos(t), math.sin(t))) < 1e-15

    def test_points_stay_in_disk(self):
        for leaf in Lamination.generate(4):
            for p in leaf_geometry(leaf, 33):
                assert abs(p) <= 1 + 1e-12


class TestJson:
    def test_round_trip_shape(self):
        lam = Lamination.generate(2)
        doc = json.loads(lam.to_json())
        assert doc["max_depth"] == 2
        assert len(doc["leaves"]) == 8
        assert doc["leaves"][0] == {"a": "1/3", "b": "2/3", "depth": -1}
        assert doc["leaves"][1] == {"a": "5/6", "b": "1/6", "depth": 0}
        depths = [entry["depth"] for entry in doc["leaves"]]
        assert depths == sorted(depths)
