"""Self-check suites: every release criterion as an executable check.

Each check returns a :class:`CheckResult` with the measured quantity so
failures are diagnosable from the report alone.  The suites are wired
into the command line (``laminmate verify <suite>``) and into the test
suite; tolerances live here and nowhere else.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List

import numpy as np

from .circle import Angle, bubble_exponent, double
from .combinat import boundedness, pair_periodic_angles, pinch_pairs
from .dynamics import (
    in_m2,
    to_basilica,
    trace_bubble_ray,
    trace_dynamic_ray,
    trace_dynamic_rays_batch,
    trace_parameter_ray,
)
from .lamination import Lamination, crosses
from .render import RenderConfig, render_m2

GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: str
    seconds: float

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.name}: {self.measured} ({self.seconds:.2f}s)"


def _run(name: str, fn: Callable[[], tuple]) -> CheckResult:
    start = time.perf_counter()
    passed, measured = fn()
    return CheckResult(name=name, passed=passed, measured=measured,
                       seconds=time.perf_counter() - start)


def lamination_suite() -> List[CheckResult]:
    lam12 = Lamination.generate(12)
    lam8 = Lamination.generate(8)
    out = []

    def count_law():
        total = len(lam12)
        per_depth = all(
            len(lam12.leaves_at(d)) == 2 ** d for d in range(13))
        return (total == 2 ** 13 and per_depth,
                f"total {total}, expected {2 ** 13}")

    def forward_invariance():
        bad = 0
        for depth in range(1, 13):
            parents = {frozenset(l.endpoints())
                       for l in lam12.leaves_at(depth - 1)}
            for leaf in lam12.leaves_at(depth):
                img = leaf.image()
                if frozenset((img.a, img.b)) not in parents:
                    bad += 1
        return bad == 0, f"{bad} leaves with missing forward image"

    def arc_length_law():
        bad = 0
        for depth in range(0, 13):
            want = Fraction(1, 3 * 2 ** depth)
            for leaf in lam12.leaves_at(depth):
                if leaf.arc_length() != want:
                    bad += 1
        return bad == 0, f"{bad} leaves off the exact arc law"

    def noncrossing():
        leaves = list(lam8)
        for i, l1 in enumerate(leaves):
            for l2 in leaves[i + 1:]:
                if crosses(l1, l2):
                    return False, f"{l1} crosses {l2}"
        return True, f"all {len(leaves)} leaves pairwise unlinked"

    out.append(_run("lamination-count-law-depth-12", count_law))
    out.append(_run("lamination-forward-invariance", forward_invariance))
    out.append(_run("lamination-arc-length-exact", arc_length_law))
    out.append(_run("lamination-noncrossing-depth-8", noncrossing))
    return out


def combinat_suite() -> List[CheckResult]:
    out = []

    def witnesses():
        missing = []
        for p in range(2, 9):
            for wake in pair_periodic_angles(p):
                if wake.in_half_limb():
                    continue
                rep = boundedness(wake)
                if rep.phi1_witness is None and rep.phi2_witness is None:
                    missing.append(str(wake))
        return not missing, f"{len(missing)} wakes without witness"

    def example_pair():
        from .combinat import WakePair
        rep = boundedness(WakePair(Angle(1, 5), Angle(4, 15), 4))
        ok = rep.phi1_witness is None and rep.phi2_witness == 2
        return ok, f"(3/15, 4/15) -> ({rep.phi1_witness}, {rep.phi2_witness})"

    def satellite_pair():
        from .combinat import WakePair
        rep = boundedness(WakePair(Angle(1, 7), Angle(2, 7), 3))
        ok = rep.phi1_witness is not None and rep.phi2_witness is not None
        return ok, f"(1/7, 2/7) -> ({rep.phi1_witness}, {rep.phi2_witness})"

    def pinch_structure():
        lam = Lamination.generate(6)
        report = pinch_pairs(lam)
        n = len(report.pairs)
        all_bubble = all(
            bubble_exponent(x) is not None and bubble_exponent(y) is not None
            for x, y in report.pairs)
        has_major = (Angle(5, 6), Angle(1, 6)) in report.pairs
        ok = n == 2 ** 7 - 1 and all_bubble and has_major
        return ok, f"{n} pairs (expected {2 ** 7 - 1}), major present: {has_major}"

    out.append(_run("wake-witness-exists-periods-2-8", witnesses))
    out.append(_run("wake-3-15-4-15-one-sided", example_pair))
    out.append(_run("wake-1-7-2-7-both-sides", satellite_pair))
    out.append(_run("pinch-pairs-depth-6", pinch_structure))
    return out


def numerics_suite() -> List[CheckResult]:
    out = []

    def conjugacy():
        rng = np.random.default_rng(20260808)
        worst = 0.0
        count = 0
        while count < 1000:
            z = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
            if abs(z) > 2:
                continue
            if min(abs(z + 1), abs(z), abs(z + 2)) <= 1e-3:
                continue
            count += 1
            g1 = 1 / (z * z + 2 * z)
            lhs = to_basilica(g1)
            rhs = to_basilica(z) ** 2 - 1
            worst = max(worst, abs(lhs - rhs))
        return worst < 1e-12, f"max residual {worst:.3e} over 1000 points"

    def parameter_landings():
        targets = [
            (Angle(0, 1), 0.25 + 0j, "1/4"),
            (Angle(1, 3), -0.75 + 0j, "-3/4"),
            (Angle(1, 6), 1j, "i"),
            (Angle(5, 6), -1j, "-i"),
        ]
        worst = 0.0
        for theta, target, _name in targets:
            tr = trace_parameter_ray(theta, t_end=1e-25)
            if tr.landing_estimate is None:
                return False, f"ray {theta} has no landing estimate"
            worst = max(worst, abs(tr.landing_estimate - target))
        return worst < 1e-3, f"worst landing error {worst:.3e}"

    def squaring_rays():
        thetas = []
        for q in range(1, 64):
            for p in range(q):
                theta = Angle(p, q)
                if theta.den == q:
                    thetas.append(theta)
        est, landed, _ = trace_dynamic_rays_batch(0j, thetas)
        targets = np.array([
            np.exp(2j * np.pi * t.num / t.den) for t in thetas])
        worst = float(np.max(np.abs(est - targets)))
        return (worst < 1e-8 and bool(landed.all()),
                f"{len(thetas)} rays, worst landing error {worst:.3e}")

    def m2_membership():
        one = in_m2(complex(1, 0))
        z = complex(-1, 0)
        fixed = abs(1 / (z * z + 2 * z) - z)
        esc4 = in_m2(complex(-4, 0))
        esc_big = in_m2(complex(1e6, 0))
        ok = (one.status == "member" and fixed < 1e-15
              and esc4.status == "escaped" and esc_big.status == "escaped")
        return ok, (f"a=1 {one.status} (|g(-1)+1|={fixed:.1e}), "
                    f"a=-4 {esc4.status}, a=1e6 {esc_big.status}")

    def twin_landing():
        lam = Lamination.generate(12)
        ray = trace_bubble_ray(complex(1, 0), Angle(1, 3), lam)
        err_alpha = abs(ray.trace.landing_estimate - GOLDEN)
        pushed = to_basilica(ray.trace.landing_estimate)
        mirror = trace_dynamic_ray(complex(-1, 0), Angle(2, 3), t_end=1e-13)
        err_push = abs(pushed - mirror.landing_estimate)
        ok = err_alpha < 1e-6 and err_push < 1e-6
        return ok, (f"|B(1/3) - alpha| = {err_alpha:.3e}, "
                    f"pushforward gap {err_push:.3e}")

    out.append(_run("moebius-conjugacy-residual", conjugacy))
    out.append(_run("parameter-ray-landings", parameter_landings))
    out.append(_run("squaring-dynamic-rays-den-63", squaring_rays))
    out.append(_run("m2-membership-certificates", m2_membership))
    out.append(_run("bubble-ray-twin-landing", twin_landing))
    return out


def render_suite() -> List[CheckResult]:
    out = []

    def m2_stability():
        base = RenderConfig(width=512, height=512, viewport=(-8, 8, -8, 8),
                            max_iter=500)
        doubled = RenderConfig(width=512, height=512, viewport=(-8, 8, -8, 8),
                               max_iter=1000)
        n1 = render_m2(base).member_count()
        n2 = render_m2(doubled).member_count()
        drift = abs(n1 - n2) / n1
        return drift < 0.02, f"members {n1} -> {n2}, drift {drift:.3%}"

    def determinism():
        cfg1 = RenderConfig(width=96, height=96, viewport=(-8, 8, -8, 8),
                            max_iter=300, threads=1)
        cfg4 = RenderConfig(width=96, height=96, viewport=(-8, 8, -8, 8),
                            max_iter=300, threads=4)
        b1 = render_m2(cfg1).png_bytes()
        b2 = render_m2(cfg1).png_bytes()
        b4 = render_m2(cfg4).png_bytes()
        tr1 = trace_parameter_ray(Angle(1, 6), t_end=1e-6).to_csv()
        tr2 = trace_parameter_ray(Angle(1, 6), t_end=1e-6).to_csv()
        ok = b1 == b2 == b4 and tr1 == tr2
        return ok, f"png rerun {b1 == b2}, threads {b1 == b4}, trace rerun {tr1 == tr2}"

    out.append(_run("m2-member-count-stability", m2_stability))
    out.append(_run("render-and-trace-determinism", determinism))
    return out


SUITES: Dict[str, Callable[[], List[CheckResult]]] = {
    "lamination": lamination_suite,
    "combinat": combinat_suite,
    "numerics": numerics_suite,
    "render": render_suite,
}


def run_suite(name: str) -> List[CheckResult]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; have {sorted(SUITES)}")
    return SUITES[name]()


def run_all() -> List[CheckResult]:
    out: List[CheckResult] = []
    for name in ("lamination", "combinat", "numerics", "render"):
        out.extend(run_suite(name))
    return out
