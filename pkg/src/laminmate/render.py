"""Raster and vector figure generation.

Escape-time rasters for the Mandelbrot set and for the non-escape locus
of a/(z^2 + 2z), leaf-curve overlays in the parameter plane, and the
lamination disk as SVG.  Rendering is deterministic: pixel centers are
sampled on a fixed grid, rows are computed independently (so thread count
cannot change a single byte of output), and nothing is seeded.
"""

from __future__ import annotations

import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from PIL import Image

from .errors import DomainError
from .lamination import Lamination, leaf_geometry
from .dynamics.rays import trace_dynamical_leaf

FORMAT_VERSION = 1

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RenderConfig:
    """Resolution, viewport, iteration budgets, and overlay switches."""

    width: int = 512
    height: int = 512
    viewport: Tuple[float, float, float, float] = (-2.2, 1.2, -1.7, 1.7)
    max_iter: int = 256
    escape_radius: float = 2.0
    basin_eps: float = 1e-3
    palette: str = "gray"
    overlay_depth: int = 0
    shade_limb: bool = True
    threads: int = 1
    supersample: bool = False

    def __post_init__(self):
        re_min, re_max, im_min, im_max = self.viewport
        if not (re_min < re_max and im_min < im_max):
            raise DomainError("viewport must be a nondegenerate rectangle")
        if self.max_iter < 1 or self.width < 1 or self.height < 1:
            raise DomainError("iteration count and size must be positive")

    def to_json_dict(self) -> dict:
        doc = asdict(self)
        doc["format_version"] = FORMAT_VERSION
        return doc


@dataclass
class ImageGrid:
    """Per-pixel classification plus optional RGB overlay.

    ``status`` is 0 for member pixels and 1 for escaped pixels;
    ``iterations`` holds the certifying iteration for escaped pixels and
    the budget for members.  Pixel (row, col) samples the complex point
    at the center of its cell, rows running top down.
    """

    config: RenderConfig
    status: np.ndarray
    iterations: np.ndarray
    rgb: Optional[np.ndarray] = None

    def point_at(self, row: int, col: int) -> complex:
        re_min, re_max, im_min, im_max = self.config.viewport
        w, h = self.config.width, self.config.height
        re = re_min + (col + 0.5) * (re_max - re_min) / w
        im = im_max - (row + 0.5) * (im_max - im_min) / h
        return complex(re, im)

    def pixel_of(self, z: complex) -> Tuple[int, int]:
        re_min, re_max, im_min, im_max = self.config.viewport
        w, h = self.config.width, self.config.height
        col = (z.real - re_min) / (re_max - re_min) * w - 0.5
        row = (im_max - z.imag) / (im_max - im_min) * h - 0.5
        return (int(round(row)), int(round(col)))

    def member_count(self) -> int:
        return int(np.sum(self.status == 0))

    def to_rgb(self) -> np.ndarray:
        if self.rgb is not None:
            return self.rgb
        return _colorize(self.status, self.iterations,
                         self.config.max_iter, self.config.palette)

    def png_bytes(self) -> bytes:
        img = Image.fromarray(self.to_rgb(), mode="RGB")
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return buf.getvalue()

    def save(self, path: str, sidecar: bool = True) -> None:
        with open(path, "wb") as fh:
            fh.write(self.png_bytes())
        if sidecar:
            with open(path + ".json", "w") as fh:
                json.dump(self.config.to_json_dict(), fh, indent=2,
                          sort_keys=True)
                fh.write("\n")


def _colorize(status: np.ndarray, iterations: np.ndarray, max_iter: int,
              palette: str) -> np.ndarray:
    h, w = status.shape
    rgb = np.zeros((h, w, 3), dtype=np.uint8)
    escaped = status == 1
    level = np.zeros_like(iterations, dtype=np.float64)
    level[escaped] = 0.25 + 0.75 * np.sqrt(iterations[escaped] / max_iter)
    shade = np.clip(level * 255, 0, 255).astype(np.uint8)
    if palette == "gray":
        for k in range(3):
            rgb[..., k] = shade
    elif palette == "blue":
        rgb[..., 2] = shade
        rgb[..., 1] = (shade * 0.6).astype(np.uint8)
        rgb[..., 0] = (shade * 0.25).astype(np.uint8)
    else:
        raise DomainError(f"unknown palette {palette!r}")
    return rgb


def _row_points(cfg: RenderConfig, row: int) -> np.ndarray:
    re_min, re_max, im_min, im_max = cfg.viewport
    cols = np.arange(cfg.width)
    re = re_min + (cols + 0.5) * (re_max - re_min) / cfg.width
    im = im_max - (row + 0.5) * (im_max - im_min) / cfg.height
    return re + 1j * im


def _run_rows(cfg: RenderConfig, kernel) -> Tuple[np.ndarray, np.ndarray]:
    status = np.zeros((cfg.height, cfg.width), dtype=np.uint8)
    iters = np.zeros((cfg.height, cfg.width), dtype=np.int32)

    def work(row: int) -> None:
        s, it = kernel(_row_points(cfg, row))
        status[row] = s
        iters[row] = it

    threads = max(1, cfg.threads)
    if threads == 1:
        for row in range(cfg.height):
            work(row)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, range(cfg.height)))
    return status, iters


def _mandelbrot_kernel(cs: np.ndarray, max_iter: int, radius: float):
    n = cs.shape[0]
    status = np.zeros(n, dtype=np.uint8)
    iters = np.full(n, max_iter, dtype=np.int32)
    z = np.zeros(n, dtype=np.complex128)
    alive = np.arange(n)
    c_alive = cs.copy()
    r2 = radius * radius
    for step in range(1, max_iter + 1):
        z = z * z + c_alive
        escaped = (z.real * z.real + z.imag * z.imag) > r2
        if escaped.any():
            hit = alive[escaped]
            status[hit] = 1
            iters[hit] = step
            keep = ~escaped
            alive = alive[keep]
            z = z[keep]
            c_alive = c_alive[keep]
            if alive.size == 0:
                break
    return status, iters


def _g_vec(z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Vectorized a/(z^2 + 2z) with the cycle through infinity exact."""
    nonfinite = ~np.isfinite(z.real) | ~np.isfinite(z.imag)
    d = z * z + 2 * z
    zero_d = d == 0
    with np.errstate(all="ignore"):
        out = a / d
    out[zero_d] = np.inf
    out[nonfinite] = 0
    return out


def _m2_kernel(points: np.ndarray, max_iter: int, eps: float):
    n = points.shape[0]
    status = np.zeros(n, dtype=np.uint8)
    iters = np.full(n, max_iter, dtype=np.int32)
    zero_param = points == 0
    status[zero_param] = 1
    iters[zero_param] = 0
    alive = np.flatnonzero(~zero_param)
    a = points[alive]
    y = np.full(alive.shape, -1.0 + 0j, dtype=np.complex128)
    streak = np.zeros(alive.shape, dtype=np.int8)
    inv_eps = 1.0 / eps
    for step in range(1, max_iter // 2 + 1):
        exact = (y == 0) | ~np.isfinite(y.real) | ~np.isfinite(y.imag)
        y2 = _g_vec(_g_vec(y, a), a)
        m = np.abs(y)
        m2 = np.abs(y2)
        with np.errstate(invalid="ignore"):
            shrinking = (m < eps) & (m2 < m)
            growing = (m > inv_eps) & (m2 > m)
        streak = np.where(shrinking | growing, streak + 1, 0)
        escaped = exact | (streak >= 2)
        if escaped.any():
            hit = alive[escaped]
            status[hit] = 1
            iters[hit] = 2 * step
            keep = ~escaped
            alive = alive[keep]
            a = a[keep]
            y2 = y2[keep]
            streak = streak[keep]
            if alive.size == 0:
                break
        y = y2
    return status, iters


def render_m1(cfg: RenderConfig) -> ImageGrid:
    """Escape-time raster of the Mandelbrot set over the viewport."""
    status, iters = _run_rows(
        cfg, lambda cs: _mandelbrot_kernel(cs, cfg.max_iter, cfg.escape_radius))
    return ImageGrid(config=cfg, status=status, iterations=iters)


def render_m2(cfg: RenderConfig) -> ImageGrid:
    """Membership raster for the 2-cycle slice over the viewport.

    Escaped pixels are shaded by the iteration at which the basin entry
    certificate fired (raw modulus oscillates around the cycle through
    infinity, so it cannot be used directly).  The excluded parameter
    a = 0 renders as escaped by convention.
    """
    status, iters = _run_rows(
        cfg, lambda pts: _m2_kernel(pts, cfg.max_iter, cfg.basin_eps))
    return ImageGrid(config=cfg, status=status, iterations=iters)


LEAF_COLOR = (255, 80, 40)
LIMB_COLOR = (70, 110, 255)
BROKEN_COLOR = (255, 220, 60)


def render_m1_overlay(cfg: RenderConfig, lamination: Lamination,
                      t_join: float = 0.08,
                      t_end: float = 1e-8) -> ImageGrid:
    """Mandelbrot raster with embedded lamination leaves.

    Each leaf up to ``cfg.overlay_depth`` is drawn as its parameter-plane
    curve (two parameter rays joined along an equipotential).  The region
    cut off by the root leaf's curve, the closed neighborhood of the
    1/2-limb that the collapse map sends to a point, is shaded.  Curves
    whose rays failed to land are drawn dashed.
    """
    if cfg.overlay_depth > lamination.max_depth:
        raise DomainError(
            f"overlay depth {cfg.overlay_depth} exceeds the lamination "
            f"depth {lamination.max_depth}")
    grid = render_m1(cfg)
    rgb = grid.to_rgb().copy()

    if cfg.shade_limb:
        root = lamination.leaves_at(-1)[0]
        root_curve = trace_dynamical_leaf(
            None, root, t_end=t_end, t_join=t_join, parameter_plane=True)
        polygon = list(root_curve.points)
        if root_curve.landing_a is not None:
            polygon = [root_curve.landing_a] + polygon
        if root_curve.landing_b is not None:
            polygon = polygon + [root_curve.landing_b]
        _shade_polygon(rgb, grid, polygon, LIMB_COLOR, alpha=0.35)
        _draw_polyline(rgb, grid, polygon, LIMB_COLOR,
                       dashed=root_curve.broken)

    for depth in range(0, cfg.overlay_depth + 1):
        for leaf in lamination.leaves_at(depth):
            curve = trace_dynamical_leaf(
                None, leaf, t_end=t_end, t_join=t_join, parameter_plane=True)
            if curve.broken:
                logger.warning("leaf %s traced without a clean landing; "
                               "drawn dashed", leaf)
            color = BROKEN_COLOR if curve.broken else LEAF_COLOR
            _draw_polyline(rgb, grid, curve.points, color,
                           dashed=curve.broken)

    grid.rgb = rgb
    return grid


def _draw_polyline(rgb: np.ndarray, grid: ImageGrid,
                   points: Sequence[complex], color: Tuple[int, int, int],
                   dashed: bool = False) -> None:
    h, w = rgb.shape[:2]
    col = np.array(color, dtype=np.uint8)
    drawn = 0
    for z0, z1 in zip(points, points[1:]):
        r0, c0 = grid.pixel_of(z0)
        r1, c1 = grid.pixel_of(z1)
        steps = max(abs(r1 - r0), abs(c1 - c0), 1)
        for k in range(steps + 1):
            drawn += 1
            if dashed and (drawn // 6) % 2 == 1:
                continue
            r = round(r0 + (r1 - r0) * k / steps)
            c = round(c0 + (c1 - c0) * k / steps)
            if 0 <= r < h and 0 <= c < w:
                rgb[r, c] = col


def _shade_polygon(rgb: np.ndarray, grid: ImageGrid,
                   polygon: Sequence[complex], color: Tuple[int, int, int],
                   alpha: float) -> None:
    """Even-odd fill of a polygon given in complex coordinates."""
    if len(polygon) < 3:
        return
    h, w = rgb.shape[:2]
    cfg = grid.config
    re_min, re_max, im_min, im_max = cfg.viewport
    xs = np.array([z.real for z in polygon])
    ys = np.array([z.imag for z in polygon])
    x2 = np.roll(xs, -1)
    y2 = np.roll(ys, -1)
    col_centers = re_min + (np.arange(w) + 0.5) * (re_max - re_min) / w
    overlay = np.array(color, dtype=np.float64)
    for row in range(h):
        y = im_max - (row + 0.5) * (im_max - im_min) / h
        straddle = (ys <= y) != (y2 <= y)
        if not straddle.any():
            continue
        xi = xs[straddle] + (y - ys[straddle]) / (y2[straddle] - ys[straddle]) \
            * (x2[straddle] - xs[straddle])
        crossings = (col_centers[:, None] < xi[None, :]).sum(axis=1)
        inside = crossings % 2 == 1
        if inside.any():
            base = rgb[row, inside].astype(np.float64)
            rgb[row, inside] = ((1 - alpha) * base + alpha * overlay
                                ).astype(np.uint8)


def lamination_disk_svg(lamination: Lamination, depth: int,
                        size: int = 800, samples: int = 64) -> str:
    """SVG drawing of the unit circle with geodesic leaves through depth.

    Stroke width decreases with depth so deep leaves stay readable.
    """
    if depth > lamination.max_depth:
        raise DomainError(
            f"requested depth {depth} exceeds the lamination depth "
            f"{lamination.max_depth}")
    half = size / 2
    scale = 0.46 * size

    def xy(z: complex) -> str:
        return f"{half + scale * z.real:.3f},{half - scale * z.imag:.3f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" '
        f'height="{size}" viewBox="0 0 {size} {size}">',
        f'<!-- format_version {FORMAT_VERSION} -->',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<circle cx="{half}" cy="{half}" r="{scale:.3f}" fill="none" '
        f'stroke="black" stroke-width="1.5"/>',
    ]
    for d in range(-1, depth + 1):
        width = max(0.25, 2.2 * 0.78 ** (d + 1))
        color = "#cc2200" if d == -1 else "#003399"
        for leaf in lamination.leaves_at(d):
            pts = leaf_geometry(leaf, samples)
            path = "M" + " L".join(xy(p) for p in pts)
            parts.append(
                f'<path d="{path}" fill="none" stroke="{color}" '
                f'stroke-width="{width:.3f}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
