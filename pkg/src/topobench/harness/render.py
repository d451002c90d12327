"""SVG drawings and PGM raster dumps of decoded designs."""
from __future__ import annotations

from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike

from ..geometry import Capsule, CurvedBeam, DesignDomain, HexTile, MaterialLayout
from ..problem import make_decoder

SCALE = 6.0  # SVG pixels per length unit
MARGIN = 10.0


def _num(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".")


def _clip_band(poly: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Sutherland-Hodgman clip of a polygon to ``lo <= y <= hi``."""
    for bound, keep in ((lo, lambda y: y >= lo), (hi, lambda y: y <= hi)):
        out = []
        n = len(poly)
        for k in range(n):
            a, b = poly[k], poly[(k + 1) % n]
            ina, inb = keep(a[1]), keep(b[1])
            if ina:
                out.append(a)
            if ina != inb:
                t = (bound - a[1]) / (b[1] - a[1])
                out.append(a + t * (b - a))
        poly = np.array(out)
        if len(poly) == 0:
            break
    return poly


def _curved_outline(b: CurvedBeam, samples: int = 64) -> np.ndarray:
    p1, p2 = np.asarray(b.p1, float), np.asarray(b.p2, float)
    length = b.length
    ex = (p2 - p1) / length
    ey = np.array([-ex[1], ex[0]])
    mid = 0.5 * (p1 + p2)
    u = np.linspace(-0.5 * length, 0.5 * length, samples)
    v = b.centerline(u)
    half = 0.5 * b.local_thickness(u)
    upper = [mid + ui * ex + (vi + hi) * ey for ui, vi, hi in zip(u, v, half)]
    lower = [mid + ui * ex + (vi - hi) * ey for ui, vi, hi in zip(u, v, half)]
    return np.array(upper + lower[::-1])


class _Svg:
    def __init__(self, domain: DesignDomain):
        self.domain = domain
        self.parts = []

    def xy(self, p) -> Tuple[str, str]:
        return _num(MARGIN + SCALE * p[0]), _num(MARGIN + SCALE * (self.domain.height - p[1]))

    def polygon(self, pts, **style):
        coords = " ".join(",".join(self.xy(p)) for p in pts)
        self.parts.append(f'<polygon points="{coords}"{_style(style)}/>')

    def line(self, a, b, **style):
        (x1, y1), (x2, y2) = self.xy(a), self.xy(b)
        self.parts.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"{_style(style)}/>')

    def circle(self, c, r, **style):
        x, y = self.xy(c)
        self.parts.append(f'<circle cx="{x}" cy="{y}" r="{_num(SCALE * r)}"{_style(style)}/>')

    def text(self) -> str:
        w = _num(2 * MARGIN + SCALE * self.domain.width)
        h = _num(2 * MARGIN + SCALE * self.domain.height)
        body = "\n".join(self.parts)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">\n'
                f"{body}\n</svg>\n")


def _style(style: dict) -> str:
    return "".join(f' {k.replace("_", "-")}="{v}"' for k, v in style.items())


MATERIAL = dict(fill="#1f4e99", fill_opacity="0.85", stroke="none")


def layout_svg(layout: MaterialLayout) -> str:
    d = layout.domain
    svg = _Svg(d)
    for p in layout.primitives:
        if isinstance(p, Capsule):
            svg.line(p.p1, p.p2, stroke=MATERIAL["fill"], stroke_opacity="0.85",
                     stroke_width=_num(SCALE * p.thickness), stroke_linecap="round")
        elif isinstance(p, CurvedBeam):
            if p.length < 1e-9:
                svg.circle(p.p1, 0.5 * p.t_mid, **MATERIAL)
                continue
            svg.polygon(_curved_outline(p), **MATERIAL)
            for u in (-0.5 * p.length, 0.5 * p.length):
                svg.circle(_end_centre(p, u), 0.5 * float(p.local_thickness(u)), **MATERIAL)
        elif isinstance(p, HexTile):
            poly = _clip_band(np.asarray(p.vertices, float), p.y_lo, p.y_hi)
            if len(poly):
                svg.polygon(poly, **MATERIAL)
    svg.polygon([(0, 0), (d.width, 0), (d.width, d.height), (0, d.height)],
                fill="none", stroke="black", stroke_width="1")
    svg.line((0, d.midline), (d.width, d.midline), stroke="red", stroke_width="1", stroke_dasharray="6,4")
    return svg.text()


def _end_centre(b: CurvedBeam, u: float) -> np.ndarray:
    p1, p2 = np.asarray(b.p1, float), np.asarray(b.p2, float)
    ex = (p2 - p1) / b.length
    ey = np.array([-ex[1], ex[0]])
    return 0.5 * (p1 + p2) + u * ex + float(b.centerline(u)) * ey


def raster_pgm(raster: ArrayLike) -> bytes:
    """Binary PGM; material is 255, image row 0 is the top of the domain."""
    r = np.asarray(raster, dtype=bool)
    img = np.where(r.T[::-1], 255, 0).astype(np.uint8)
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes()


def render_design(x: ArrayLike, parameterization: str, dimension: int,
                  out_prefix: Optional[Union[str, Path]] = None) -> Tuple[str, bytes]:
    """Decode ``x`` and return ``(svg_text, pgm_bytes)``; optionally write ``<prefix>.svg/.pgm``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != dimension or not np.all(np.isfinite(x)):
        raise ValueError(f"design vector must have {dimension} finite entries")
    if x.min() < 0 or x.max() > 1:
        raise ValueError("design vector must lie in the unit box")
    layout = make_decoder(parameterization, dimension)(x)
    svg, pgm = layout_svg(layout), raster_pgm(layout.raster)
    if out_prefix is not None:
        out_prefix = Path(out_prefix)
        out_prefix.parent.mkdir(parents=True, exist_ok=True)
        out_prefix.with_suffix(".svg").write_text(svg)
        out_prefix.with_suffix(".pgm").write_bytes(pgm)
    return svg, pgm
