"""Command-line front end.

Subcommands wrap the library into reproducible runs with machine-readable
outputs.  Angles cross this boundary only as exact "p/q" strings, so the
combinatorial commands are exact end to end; rerunning any command with
identical flags produces byte-identical artifacts.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

from . import __version__
from .circle import Angle, bubble_exponent, classify
from .combinat import (
    WakePair,
    boundedness,
    boundedness_csv,
    pair_periodic_angles,
    pinch_pairs,
    strip_angles,
)
from .dynamics import (
    in_m2,
    in_mandelbrot,
    misiurewicz_solve,
    trace_bubble_ray,
    trace_dynamic_ray,
    trace_parameter_ray,
)
from .errors import DomainError, RayBrokenError, RayNonexistentError
from .lamination import Lamination
from .render import (
    RenderConfig,
    lamination_disk_svg,
    render_m1,
    render_m1_overlay,
    render_m2,
)
from .verify import SUITES, run_suite

THREADS_ENV = "LAMIN_MATE_THREADS"


def _angle(text: str) -> Angle:
    try:
        return Angle.parse(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad angle {text!r}: {exc}")


def _complex(text: str) -> complex:
    try:
        re, im = text.split(",")
        return complex(float(re), float(im))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"bad complex {text!r}; expected 're,im'")


def _threads(args) -> int:
    env = os.environ.get(THREADS_ENV)
    if env is not None:
        return max(1, int(env))
    if args.threads is not None:
        return max(1, args.threads)
    return os.cpu_count() or 1


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laminmate",
        description=(
            "Exact circle combinatorics, the Basilica lamination, external "
            "and bubble ray tracing, and renders for the quadratic family "
            "and the superattracting 2-cycle slice."))
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lamination",
                       help="generate the lamination and dump it as JSON")
    p.add_argument("--depth", type=int, required=True,
                   help="maximal preimage depth, between 0 and 30")
    p.add_argument("--out", default="-", help="output path (default stdout)")

    p = sub.add_parser("classify",
                       help="orbit class and touch-angle form of an angle")
    p.add_argument("angle", type=_angle, help="angle as p/q")

    p = sub.add_parser("pair", help="wake pairs of one period (Lavaurs rule)")
    p.add_argument("--period", type=int, required=True,
                   help="exact period under doubling, between 1 and 20")

    p = sub.add_parser("bounded",
                       help="bounding witnesses for one wake pair")
    p.add_argument("--phi1", type=_angle, required=True)
    p.add_argument("--phi2", type=_angle, required=True)

    p = sub.add_parser("bounded-table",
                       help="CSV of witnesses for all wakes up to a period")
    p.add_argument("--max-period", type=int, default=8)
    p.add_argument("--out", default="-")

    p = sub.add_parser("strip",
                       help="renormalization strip angles of a wake pair")
    p.add_argument("--phi1", type=_angle, required=True)
    p.add_argument("--phi2", type=_angle, required=True)

    p = sub.add_parser("pinch",
                       help="angle pairs identified by the collapse map")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--out", default="-")

    p = sub.add_parser("ray", help="trace a dynamic or parameter ray")
    p.add_argument("--kind", choices=("dynamic", "parameter"),
                   required=True)
    p.add_argument("--angle", type=_angle, required=True)
    p.add_argument("--c", type=_complex, default=0j,
                   help="polynomial parameter for dynamic rays, as 're,im'")
    p.add_argument("--tend", type=float, default=1e-7,
                   help="final potential of the continuation")
    p.add_argument("--steps", type=int, default=24,
                   help="nodes per potential halving")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default="-")

    p = sub.add_parser("bubble-ray",
                       help="trace a ray in bubbles of a/(z^2+2z)")
    p.add_argument("--a", type=_complex, default=complex(1, 0))
    p.add_argument("--angle", type=_angle, required=True)
    p.add_argument("--depth", type=int, default=12,
                   help="lamination depth for the combinatorial chain")
    p.add_argument("--max-bubbles", type=int, default=10)
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--out", default="-")

    p = sub.add_parser("member", help="membership test for one parameter")
    p.add_argument("--family", choices=("m1", "m2"), required=True)
    p.add_argument("--point", type=_complex, required=True)
    p.add_argument("--max-iter", type=int, default=512)

    p = sub.add_parser("misiurewicz",
                       help="Newton solve for a preperiodic parameter")
    p.add_argument("--preperiod", type=int, required=True)
    p.add_argument("--period", type=int, required=True)
    p.add_argument("--seed", type=_complex, required=True)

    p = sub.add_parser("render", help="raster or vector figures")
    p.add_argument("target", choices=("m1", "m2", "disk", "overlay"))
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, default=800)
    p.add_argument("--height", type=int, default=800)
    p.add_argument("--viewport", type=float, nargs=4,
                   metavar=("RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"))
    p.add_argument("--max-iter", type=int, default=400)
    p.add_argument("--palette", choices=("gray", "blue"), default="gray")
    p.add_argument("--depth", type=int, default=4,
                   help="lamination depth for disk and overlay targets")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default all cores; "
                        f"{THREADS_ENV} overrides)")

    p = sub.add_parser("verify", help="run one of the self-check suites")
    p.add_argument("suite", choices=sorted(SUITES) + ["all"])
    p.add_argument("--json", action="store_true", dest="as_json")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (DomainError, RayBrokenError, RayNonexistentError,
            ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "lamination":
        lam = Lamination.generate(args.depth)
        _write(args.out, lam.to_json())
        return 0

    if args.command == "classify":
        theta = args.angle
        orbit = classify(theta)
        k = bubble_exponent(theta)
        doc = {
            "angle": str(theta),
            "preperiod": orbit.preperiod,
            "period": orbit.period,
            "touch_angle": k is not None,
        }
        if k is not None:
            doc["touch_exponent"] = k
        print(json.dumps(doc, sort_keys=True))
        return 0

    if args.command == "pair":
        for wake in pair_periodic_angles(args.period):
            print(f"{wake.phi1} {wake.phi2}")
        return 0

    if args.command == "bounded":
        wake = _wake_from(args.phi1, args.phi2)
        rep = boundedness(wake)
        fmt = lambda w: "none" if w is None else f"n={w}"
        print(f"phi1: {fmt(rep.phi1_witness)}, phi2: {fmt(rep.phi2_witness)}")
        return 0

    if args.command == "bounded-table":
        _write(args.out, boundedness_csv(args.max_period))
        return 0

    if args.command == "strip":
        strip = strip_angles(_wake_from(args.phi1, args.phi2))
        print(f"{strip.phi1} {strip.psi1} {strip.psi2} {strip.phi2}")
        return 0

    if args.command == "pinch":
        lam = Lamination.generate(args.depth)
        report = pinch_pairs(lam)
        doc = {
            "format_version": 1,
            "limb_boundary": [str(a) for a in report.limb_boundary],
            "pairs": [[str(x), str(y)] for x, y in report.pairs],
        }
        _write(args.out, json.dumps(doc, indent=2) + "\n")
        return 0

    if args.command == "ray":
        if args.kind == "parameter":
            trace = trace_parameter_ray(args.angle, t_end=args.tend,
                                        steps_per_doubling=args.steps)
        else:
            trace = trace_dynamic_ray(args.c, args.angle, t_end=args.tend,
                                      steps_per_doubling=args.steps)
        text = (trace.to_csv() if args.format == "csv"
                else json.dumps(trace.to_json_dict(), indent=2) + "\n")
        _write(args.out, text)
        if trace.landing_estimate is not None:
            print(f"landing estimate: {trace.landing_estimate} "
                  f"(landed: {trace.landed})", file=sys.stderr)
        return 0

    if args.command == "bubble-ray":
        lam = Lamination.generate(args.depth)
        ray = trace_bubble_ray(args.a, args.angle, lam,
                               max_bubbles=args.max_bubbles)
        if args.format == "csv":
            _write(args.out, ray.trace.to_csv())
        else:
            doc = ray.trace.to_json_dict()
            doc["chain"] = [[str(l.a), str(l.b)] for l in ray.chain]
            doc["finite"] = ray.finite
            doc["touch_points"] = [[repr(x.real), repr(x.imag)]
                                   for x in ray.touch_points]
            _write(args.out, json.dumps(doc, indent=2) + "\n")
        return 0

    if args.command == "member":
        if args.family == "m1":
            res = in_mandelbrot(args.point, max_iter=args.max_iter)
        else:
            res = in_m2(args.point, max_iter=args.max_iter)
        print(json.dumps({
            "family": args.family,
            "point": [args.point.real, args.point.imag],
            "status": res.status,
            "iterations": res.iterations,
        }, sort_keys=True))
        return 0

    if args.command == "misiurewicz":
        c = misiurewicz_solve(args.preperiod, args.period, args.seed)
        print(json.dumps({"c": [c.real, c.imag]}))
        return 0

    if args.command == "render":
        return _render(args)

    if args.command == "verify":
        suites = sorted(SUITES) if args.suite == "all" else [args.suite]
        results = []
        for name in suites:
            results.extend(run_suite(name))
        if args.as_json:
            print(json.dumps([{
                "name": r.name, "passed": r.passed,
                "measured": r.measured, "seconds": round(r.seconds, 3),
            } for r in results], indent=2))
        else:
            for r in results:
                print(r.line())
            failed = sum(1 for r in results if not r.passed)
            print(f"{len(results) - failed}/{len(results)} checks passed")
        return 0

    raise DomainError(f"unhandled command {args.command}")


def _wake_from(phi1: Angle, phi2: Angle) -> WakePair:
    period = classify(phi1).period
    return WakePair(phi1, phi2, period)


def _render(args) -> int:
    threads = _threads(args)
    if args.target == "disk":
        lam = Lamination.generate(args.depth)
        _write(args.out, lamination_disk_svg(lam, args.depth))
        return 0
    if args.target == "m2":
        viewport = tuple(args.viewport) if args.viewport else (-8.0, 8.0, -8.0, 8.0)
        cfg = RenderConfig(width=args.width, height=args.height,
                           viewport=viewport, max_iter=args.max_iter,
                           palette=args.palette, threads=threads)
        render_m2(cfg).save(args.out)
        return 0
    viewport = tuple(args.viewport) if args.viewport else (-2.2, 1.2, -1.7, 1.7)
    if args.target == "m1":
        cfg = RenderConfig(width=args.width, height=args.height,
                           viewport=viewport, max_iter=args.max_iter,
                           palette=args.palette, threads=threads)
        render_m1(cfg).save(args.out)
        return 0
    cfg = RenderConfig(width=args.width, height=args.height,
                       viewport=viewport, max_iter=args.max_iter,
                       palette=args.palette, overlay_depth=args.depth,
                       threads=threads)
    lam = Lamination.generate(max(args.depth, 1))
    render_m1_overlay(cfg, lam).save(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
