import cmath
import json
import math

import numpy as np
import pytest

from laminmate.circle import Angle
from laminmate.dynamics import (
    misiurewicz_solve,
    trace_dynamic_ray,
    trace_dynamic_rays_batch,
    trace_dynamical_leaf,
    trace_parameter_ray,
)
from laminmate.dynamics.rays import equipotential_arc
from laminmate.errors import RayBrokenError
from laminmate.lamination import Lamination, orient


def circle_point(theta: Angle) -> complex:
    return cmath.exp(2j * math.pi * theta.num / theta.den)


class TestDynamicRays:
    def test_angle_zero_squaring(self):
        tr = trace_dynamic_ray(0j, Angle(0, 1))
        assert tr.landed
        assert abs(tr.landing_estimate - 1) < 1e-10
        # the trace runs down the positive real axis
        assert all(abs(z.imag) < 1e-12 for z in tr.points)

    def test_angle_half_squaring(self):
        tr = trace_dynamic_ray(0j, Angle(1, 2))
        assert abs(tr.landing_estimate + 1) < 1e-10

    def test_potentials_strictly_decreasing(self):
        tr = trace_dynamic_ray(0j, Angle(1, 7))
        assert all(a > b for a, b in zip(tr.potentials, tr.potentials[1:]))

    def test_all_denominator_63_rays_land_on_circle(self):
        for q in (7, 9, 63):
            for p in range(1, q):
                th = Angle(p, q)
                tr = trace_dynamic_ray(0j, th)
                assert abs(tr.landing_estimate - circle_point(th)) < 1e-8

    def test_preperiodic_ray_for_i_matches_newton_oracle(self):
        # the angle-1/6 ray of z^2 + i lands at a preperiodic point x with
        # f^2(x) = f^4(x); Newton from the traced landing confirms it
        c = 1j
        tr = trace_dynamic_ray(c, Angle(1, 6), t_end=1e-9)
        x = tr.landing_estimate

        def orbit_gap(z):
            w = z
            vals = [w]
            for _ in range(4):
                w = w * w + c
                vals.append(w)
            return vals[4] - vals[2]

        z = x
        for _ in range(50):
            h = 1e-7
            d = (orbit_gap(z + h) - orbit_gap(z - h)) / (2 * h)
            step = orbit_gap(z) / d
            z -= step
            if abs(step) < 1e-12:
                break
        assert abs(z - x) < 1e-6

    def test_broken_ray_raises(self):
        # for c on the parameter ray at angle 1/2, the dynamic rays at
        # angles 1/4 and 3/4 run into the critical point
        with pytest.raises(RayBrokenError):
            trace_dynamic_ray(complex(-3, 0), Angle(1, 4), t_end=1e-9)

    def test_resolution_stall_is_graceful(self):
        # fast landings freeze at machine resolution instead of breaking
        tr = trace_dynamic_ray(complex(-1, 0), Angle(0, 1), t_end=1e-13)
        assert tr.landed
        beta = (1 + math.sqrt(5)) / 2
        assert abs(tr.landing_estimate - beta) < 1e-12


class TestParameterRays:
    def test_cusp(self):
        tr = trace_parameter_ray(Angle(0, 1), t_end=1e-25)
        assert abs(tr.landing_estimate - 0.25) < 1e-3

    def test_period_two_root(self):
        # the cycle z^2+z+c+1 has multiplier 4(c+1), parabolic at c=-3/4
        root = -0.75
        tr = trace_parameter_ray(Angle(1, 3), t_end=1e-25)
        assert abs(tr.landing_estimate - root) < 1e-3

    def test_misiurewicz_targets(self):
        target = misiurewicz_solve(2, 2, complex(0.2, 1.1))
        tr = trace_parameter_ray(Angle(1, 6), t_end=1e-25)
        assert abs(tr.landing_estimate - target) < 1e-3
        tr = trace_parameter_ray(Angle(5, 6), t_end=1e-25)
        assert abs(tr.landing_estimate - target.conjugate()) < 1e-3

    def test_pinched_angles_land_apart(self):
        # 5/6 and 1/6 are identified by the lamination but their
        # parameter rays land at different points
        up = trace_parameter_ray(Angle(1, 6), t_end=1e-25)
        down = trace_parameter_ray(Angle(5, 6), t_end=1e-25)
        assert abs(up.landing_estimate - down.landing_estimate) > 1.9

    def test_csv_and_json_exports(self):
        tr = trace_parameter_ray(Angle(1, 3), t_end=1e-3)
        text = tr.to_csv()
        assert text.splitlines()[0] == "t,re,im"
        assert len(text.splitlines()) == len(tr.points) + 1
        doc = tr.to_json_dict()
        assert doc["kind"] == "parameter"
        assert doc["angle"] == "1/3"
        json.dumps(doc)


class TestBatchTracer:
    def test_matches_single_rays(self):
        thetas = [Angle(p, 63) for p in (1, 5, 13, 31, 44)]
        est, landed, final = trace_dynamic_rays_batch(0j, thetas)
        assert landed.all()
        for i, th in enumerate(thetas):
            single = trace_dynamic_ray(0j, th)
            assert abs(est[i] - single.landing_estimate) < 1e-12

    def test_correct_targets(self):
        thetas = [Angle(p, 63) for p in range(1, 63)]
        est, landed, _ = trace_dynamic_rays_batch(0j, thetas)
        assert landed.all()
        targets = np.array([circle_point(t) for t in thetas])
        assert np.max(np.abs(est - targets)) < 1e-8


class TestEquipotentialAndLeafCurves:
    def test_equipotential_modulus_for_squaring(self):
        t = 0.05
        pts = equipotential_arc(0j, t, Angle(5, 6), Angle(1, 6))
        for z in pts:
            assert abs(abs(z) - math.exp(t)) < 1e-10

    def test_leaf_curve_endpoints_squaring(self):
        lam = Lamination.generate(0)
        root = lam.leaves_at(-1)[0]
        curve = trace_dynamical_leaf(0j, root, t_end=1e-9)
        assert abs(curve.landing_a - circle_point(Angle(1, 3))) < 1e-8
        assert abs(curve.landing_b - circle_point(Angle(2, 3))) < 1e-8
        assert not curve.broken

    def test_leaf_curve_symmetry_squaring(self):
        major = orient(Angle(5, 6), Angle(1, 6), 0)
        curve = trace_dynamical_leaf(0j, major, t_end=1e-9)
        pts = np.array(curve.points)
        # the arc from 5/6 to 1/6 is symmetric under conjugation
        assert abs(curve.landing_a.conjugate() - curve.landing_b) < 1e-8
        assert abs(pts.imag.max() + pts.imag.min()) < 1e-6

    def test_basilica_leaf_lands_on_alpha_preimage(self):
        # both endpoint rays of the major leaf land at -alpha, the
        # nonfixed preimage of the alpha fixed point of z^2 - 1
        alpha = (1 - math.sqrt(5)) / 2
        major = orient(Angle(5, 6), Angle(1, 6), 0)
        curve = trace_dynamical_leaf(complex(-1, 0), major, t_end=1e-13)
        assert abs(curve.landing_a - (-alpha)) < 1e-6
        assert abs(curve.landing_b - (-alpha)) < 1e-6
