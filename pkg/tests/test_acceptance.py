"""Release gate: every criterion checked at its stated tolerance.

Each test prints one pass/fail line (run pytest with -s or read captured
output) and asserts both the measurement and the time envelope.
"""

import math
import time

import numpy as np
import pytest

from laminmate.circle import Angle, bubble_exponent
from laminmate.combinat import WakePair, boundedness, pair_periodic_angles
from laminmate.dynamics import (
    in_m2,
    to_basilica,
    trace_bubble_ray,
    trace_dynamic_ray,
    trace_dynamic_rays_batch,
    trace_parameter_ray,
)
from laminmate.lamination import Lamination, crosses
from laminmate.render import RenderConfig, render_m2
from laminmate.verify import run_suite


def report(name, passed, measured, seconds, budget):
    flag = "PASS" if passed else "FAIL"
    print(f"{flag} {name}: {measured} [{seconds:.2f}s, budget {budget}s]")
    assert passed, f"{name}: {measured}"
    assert seconds < budget, f"{name} exceeded {budget}s ({seconds:.2f}s)"


class TestAcceptance:
    def test_criterion_1_lamination_laws(self):
        start = time.perf_counter()
        results = run_suite("lamination")
        elapsed = time.perf_counter() - start
        measured = "; ".join(r.measured for r in results)
        report("criterion-1 lamination laws depth 12",
               all(r.passed for r in results), measured, elapsed, 5.0)

    def test_criterion_2_wake_witnesses(self):
        start = time.perf_counter()
        missing = []
        for p in range(2, 9):
            for wake in pair_periodic_angles(p):
                if wake.in_half_limb():
                    continue
                rep = boundedness(wake)
                if rep.phi1_witness is None and rep.phi2_witness is None:
                    missing.append(str(wake))
        rep_a = boundedness(WakePair(Angle(3, 15), Angle(4, 15), 4))
        rep_b = boundedness(WakePair(Angle(1, 7), Angle(2, 7), 3))
        ok = (not missing
              and rep_a.phi1_witness is None and rep_a.phi2_witness == 2
              and rep_b.phi1_witness == 0 and rep_b.phi2_witness == 2)
        elapsed = time.perf_counter() - start
        report("criterion-2 wake bounding witnesses",
               ok,
               f"no missing witness up to period 8; (3/15,4/15) -> "
               f"({rep_a.phi1_witness},{rep_a.phi2_witness}); (1/7,2/7) -> "
               f"({rep_b.phi1_witness},{rep_b.phi2_witness})",
               elapsed, 10.0)

    def test_criterion_3_conjugacy_residual(self):
        start = time.perf_counter()
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
            lhs = to_basilica(1 / (z * z + 2 * z))
            rhs = to_basilica(z) ** 2 - 1
            worst = max(worst, abs(lhs - rhs))
        elapsed = time.perf_counter() - start
        report("criterion-3 conjugacy residual", worst < 1e-12,
               f"max residual {worst:.3e} over 1000 seeded points",
               elapsed, 1.0)

    def test_criterion_4_parameter_ray_landings(self):
        start = time.perf_counter()
        targets = [(Angle(0, 1), 0.25 + 0j), (Angle(1, 3), -0.75 + 0j),
                   (Angle(1, 6), 1j), (Angle(5, 6), -1j)]
        worst = 0.0
        for theta, target in targets:
            tr = trace_parameter_ray(theta, t_end=1e-25)
            assert tr.landing_estimate is not None
            worst = max(worst, abs(tr.landing_estimate - target))
        elapsed = time.perf_counter() - start
        report("criterion-4 parameter ray landings", worst < 1e-3,
               f"worst landing error {worst:.3e}", elapsed, 60.0)

    def test_criterion_5_squaring_ray_exactness(self):
        start = time.perf_counter()
        thetas = [Angle(p, q) for q in range(1, 64) for p in range(q)
                  if Angle(p, q).den == q]
        est, landed, _ = trace_dynamic_rays_batch(0j, thetas)
        targets = np.array(
            [np.exp(2j * np.pi * t.num / t.den) for t in thetas])
        worst = float(np.max(np.abs(est - targets)))
        elapsed = time.perf_counter() - start
        report("criterion-5 squaring rays denominator <= 63",
               worst < 1e-8 and bool(landed.all()),
               f"{len(thetas)} rays, worst error {worst:.3e}", elapsed, 5.0)

    def test_criterion_6_m2_membership_and_stability(self):
        start = time.perf_counter()
        one = in_m2(complex(1, 0))
        z = complex(-1, 0)
        fixed_gap = abs(1 / (z * z + 2 * z) - z)
        esc4 = in_m2(complex(-4, 0))
        esc_big = in_m2(complex(1e6, 0))
        n500 = render_m2(RenderConfig(width=512, height=512,
                                      viewport=(-8, 8, -8, 8),
                                      max_iter=500)).member_count()
        n1000 = render_m2(RenderConfig(width=512, height=512,
                                       viewport=(-8, 8, -8, 8),
                                       max_iter=1000)).member_count()
        drift = abs(n500 - n1000) / n500
        ok = (one.status == "member" and fixed_gap < 1e-15
              and esc4.status == "escaped" and esc_big.status == "escaped"
              and drift < 0.02)
        elapsed = time.perf_counter() - start
        report("criterion-6 slice-two membership",
               ok,
               f"a=1 {one.status} |g(-1)+1|={fixed_gap:.1e}; a=-4 "
               f"{esc4.status}; a=1e6 {esc_big.status}; member count "
               f"{n500} -> {n1000} drift {drift:.3%}",
               elapsed, 60.0)

    def test_criterion_7_twin_landing(self):
        start = time.perf_counter()
        lam = Lamination.generate(12)
        golden = (math.sqrt(5) - 1) / 2
        ray = trace_bubble_ray(complex(1, 0), Angle(1, 3), lam)
        err_alpha = abs(ray.trace.landing_estimate - golden)
        pushed = to_basilica(ray.trace.landing_estimate)
        mirror = trace_dynamic_ray(complex(-1, 0), Angle(2, 3), t_end=1e-13)
        err_push = abs(pushed - mirror.landing_estimate)
        elapsed = time.perf_counter() - start
        report("criterion-7 twin landing at a=1",
               err_alpha < 1e-6 and err_push < 1e-6,
               f"|B(1/3)-alpha|={err_alpha:.3e}, pushforward gap "
               f"{err_push:.3e}", elapsed, 10.0)

    def test_criterion_8_pinch_structure(self):
        start = time.perf_counter()
        lam = Lamination.generate(6)
        rep = lam.pinch_pairs()
        n = len(rep.pairs)
        all_touch = all(
            bubble_exponent(x) is not None and bubble_exponent(y) is not None
            for x, y in rep.pairs)
        depths = sorted({lam.leaf_of(x).depth for x, _ in rep.pairs})
        ok = (n == 127 and all_touch and depths == list(range(0, 7))
              and (Angle(5, 6), Angle(1, 6)) in rep.pairs)
        elapsed = time.perf_counter() - start
        report("criterion-8 pinch structure depth 6", ok,
               f"{n} pairs over depths {depths}, all touch angles: "
               f"{all_touch}", elapsed, 5.0)

    def test_criterion_9_determinism(self):
        start = time.perf_counter()
        kw = dict(width=96, height=96, viewport=(-8, 8, -8, 8), max_iter=300)
        b_run1 = render_m2(RenderConfig(threads=1, **kw)).png_bytes()
        b_run2 = render_m2(RenderConfig(threads=1, **kw)).png_bytes()
        b_thr = render_m2(RenderConfig(threads=4, **kw)).png_bytes()
        t_run1 = trace_parameter_ray(Angle(1, 6), t_end=1e-6).to_csv()
        t_run2 = trace_parameter_ray(Angle(1, 6), t_end=1e-6).to_csv()
        lam = Lamination.generate(8)
        br1 = trace_bubble_ray(complex(1, 0), Angle(0, 1), lam,
                               max_bubbles=6).trace.to_csv()
        br2 = trace_bubble_ray(complex(1, 0), Angle(0, 1), lam,
                               max_bubbles=6).trace.to_csv()
        ok = (b_run1 == b_run2 == b_thr and t_run1 == t_run2 and br1 == br2)
        elapsed = time.perf_counter() - start
        report("criterion-9 determinism", ok,
               f"render rerun {b_run1 == b_run2}, threads 1 vs 4 "
               f"{b_run1 == b_thr}, traces identical "
               f"{t_run1 == t_run2 and br1 == br2}", elapsed, 30.0)
