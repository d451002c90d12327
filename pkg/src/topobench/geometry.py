"""Geometric parameterizations of the cantilever design domain.

Three decoders map a point of the unit hypercube to a material layout:

* ``decode_ht``   -- honeycomb tiling, one on/off variable per hexagonal tile
* ``decode_mmc``  -- straight capsule-shaped beams, 5 variables per beam
* ``decode_cmmc`` -- curved beams with parabolic thickness and a sinusoidal
  centerline, 10 variables per beam

Every decoded layout is mirrored about the horizontal midline and rasterized
onto the finite element grid by cell-center membership.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

HT_THRESHOLD = 0.5
T_MIN, T_MAX = 1.0, 25.0
MIN_BEAM_LENGTH = 1.0
MIN_LOCAL_THICKNESS = 0.5

# (rows, cols, deleted) of the half-domain honeycomb per dimensionality
HT_LAYOUTS = {10: (2, 5, 0), 20: (3, 7, 1), 50: (4, 13, 2)}


@dataclass(frozen=True)
class DesignDomain:
    width: float = 100.0
    height: float = 50.0
    cells_x: int = 100
    cells_y: int = 50

    def __post_init__(self):
        if self.cells_x <= 0 or self.cells_y <= 0:
            raise ValueError("cell counts must be positive")
        if not math.isclose(self.width / self.cells_x, self.height / self.cells_y):
            raise ValueError("cells must be square")

    @property
    def cell_size(self) -> float:
        return self.width / self.cells_x

    @property
    def midline(self) -> float:
        return 0.5 * self.height

    @property
    def n_cells(self) -> int:
        return self.cells_x * self.cells_y

    def cell_centers(self) -> NDArray[np.float64]:
        """Cell centers as an array of shape ``(cells_x, cells_y, 2)``."""
        h = self.cell_size
        xs = (np.arange(self.cells_x) + 0.5) * h
        ys = (np.arange(self.cells_y) + 0.5) * h
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return np.stack([gx, gy], axis=-1)


DEFAULT_DOMAIN = DesignDomain()


@dataclass(frozen=True)
class Capsule:
    p1: tuple[float, float]
    p2: tuple[float, float]
    thickness: float

    def __post_init__(self):
        if not self.thickness > 0:
            raise ValueError(f"capsule thickness must be positive, got {self.thickness}")


@dataclass(frozen=True)
class CurvedBeam:
    """Beam between two endpoints with varying thickness and a wavy centerline.

    In the local frame (u along p1->p2, v normal to it, origin at the
    midpoint) the centerline is ``v = amplitude * sin(frequency * (u + phase))``
    and the local thickness is a parabola through the three thickness values.
    """

    p1: tuple[float, float]
    p2: tuple[float, float]
    t_left: float
    t_mid: float
    t_right: float
    amplitude: float = 0.0
    frequency: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if min(self.t_left, self.t_mid, self.t_right) <= 0:
            raise ValueError("curved beam thicknesses must be positive")

    @property
    def length(self) -> float:
        return math.dist(self.p1, self.p2)

    def centerline(self, u: ArrayLike) -> NDArray[np.float64]:
        return self.amplitude * np.sin(self.frequency * (np.asarray(u, dtype=float) + self.phase))

    def local_thickness(self, u: ArrayLike) -> NDArray[np.float64]:
        s = 2.0 * np.asarray(u, dtype=float) / self.length
        tl, tm, tr = self.t_left, self.t_mid, self.t_right
        phi = (tl + tr - 2.0 * tm) / 4.0 * s**2 + (tr - tl) / 4.0 * s + tm
        return np.maximum(phi, MIN_LOCAL_THICKNESS)


@dataclass(frozen=True)
class HexTile:
    """Hexagonal tile restricted to a horizontal band ``[y_lo, y_hi]``.

    ``vertices`` is a (6, 2) array ordered around the hexagon; ``index`` is
    the position of the tile in its grid (mirrored copies share it).
    """

    center: tuple[float, float]
    vertices: NDArray[np.float64] = field(repr=False, compare=False)
    y_lo: float
    y_hi: float
    index: int = -1
    active: bool = True

    def __post_init__(self):
        if self.y_hi <= self.y_lo:
            raise ValueError("hex tile clip band is empty")


Primitive = Union[Capsule, CurvedBeam, HexTile]


@dataclass(frozen=True)
class MaterialLayout:
    primitives: tuple[Primitive, ...]
    raster: NDArray[np.bool_] = field(repr=False, compare=False)
    domain: DesignDomain = DEFAULT_DOMAIN

    @property
    def volume_fraction(self) -> float:
        return float(self.raster.mean())


@dataclass(frozen=True)
class HTGridSpec:
    dim: int
    rows: int
    cols: int
    deleted: int
    tiles: tuple[HexTile, ...]
    domain: DesignDomain = DEFAULT_DOMAIN

    @property
    def n_laid_out(self) -> int:
        return self.rows * self.cols

    @cached_property
    def tile_masks(self) -> NDArray[np.bool_]:
        """Mirrored raster of every tile, shape ``(n_tiles, cells_x, cells_y)``."""
        return np.stack([rasterize(mirror([t], self.domain), self.domain) for t in self.tiles])


# ---------------------------------------------------------------------------
# membership


def _as_points(point: ArrayLike) -> tuple[NDArray[np.float64], bool]:
    pts = np.asarray(point, dtype=float)
    scalar = pts.ndim == 1
    return np.atleast_2d(pts).reshape(-1, 2), scalar


def _local_frame(p1, p2, pts):
    """Coordinates of ``pts`` in the frame centered at the p1-p2 midpoint."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    d = p2 - p1
    length = math.hypot(d[0], d[1])
    eu = d / length
    ev = np.array([-eu[1], eu[0]])
    rel = pts - 0.5 * (p1 + p2)
    return rel @ eu, rel @ ev, length


def _in_disc(pts, center, radius):
    dx = pts[:, 0] - center[0]
    dy = pts[:, 1] - center[1]
    return dx * dx + dy * dy <= radius * radius


def _capsule_mask(c: Capsule, pts):
    r = 0.5 * c.thickness
    if math.dist(c.p1, c.p2) < MIN_BEAM_LENGTH:
        return _in_disc(pts, 0.5 * (np.asarray(c.p1) + np.asarray(c.p2)), r)
    u, v, length = _local_frame(c.p1, c.p2, pts)
    half = 0.5 * length
    body = (np.abs(u) <= half) & (np.abs(v) <= r)
    caps = ((u + half) ** 2 + v * v <= r * r) | ((u - half) ** 2 + v * v <= r * r)
    return body | caps


def _curved_mask(b: CurvedBeam, pts):
    if b.length < MIN_BEAM_LENGTH:
        mid = 0.5 * (np.asarray(b.p1) + np.asarray(b.p2))
        return _in_disc(pts, mid, 0.5 * b.t_mid)
    u, v, length = _local_frame(b.p1, b.p2, pts)
    half = 0.5 * length
    inside_span = np.abs(u) <= half
    body = inside_span & (np.abs(v - b.centerline(u)) <= 0.5 * b.local_thickness(u))
    ends = np.array([-half, half])
    cl = b.centerline(ends)
    radii = 0.5 * b.local_thickness(ends)
    caps = ((u - ends[0]) ** 2 + (v - cl[0]) ** 2 <= radii[0] ** 2) | (
        (u - ends[1]) ** 2 + (v - cl[1]) ** 2 <= radii[1] ** 2
    )
    return body | caps


def _hex_mask(h: HexTile, pts):
    verts = h.vertices
    inside_pos = np.ones(len(pts), dtype=bool)
    inside_neg = np.ones(len(pts), dtype=bool)
    for k in range(len(verts)):
        a = verts[k]
        b = verts[(k + 1) % len(verts)]
        cross = (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0])
        inside_pos &= cross >= 0
        inside_neg &= cross <= 0
    band = (pts[:, 1] >= h.y_lo) & (pts[:, 1] <= h.y_hi)
    return (inside_pos | inside_neg) & band


def contains(primitive: Primitive, point: ArrayLike):
    """Membership test; accepts one point ``(x, y)`` or an ``(n, 2)`` array."""
    pts, scalar = _as_points(point)
    if isinstance(primitive, Capsule):
        mask = _capsule_mask(primitive, pts)
    elif isinstance(primitive, CurvedBeam):
        mask = _curved_mask(primitive, pts)
    elif isinstance(primitive, HexTile):
        mask = _hex_mask(primitive, pts)
    else:
        raise TypeError(f"unknown primitive type {type(primitive).__name__}")
    return bool(mask[0]) if scalar else mask


def _bounding_box(p: Primitive) -> tuple[float, float, float, float]:
    if isinstance(p, HexTile):
        (x0, y0), (x1, y1) = p.vertices.min(axis=0), p.vertices.max(axis=0)
        return x0, max(y0, p.y_lo), x1, min(y1, p.y_hi)
    if isinstance(p, Capsule):
        pad = 0.5 * p.thickness
    else:
        # loose bound: the thickness parabola never exceeds twice the largest thickness
        pad = abs(p.amplitude) + max(p.t_left, p.t_mid, p.t_right) + 1.0
    xs = (p.p1[0], p.p2[0])
    ys = (p.p1[1], p.p2[1])
    return min(xs) - pad, min(ys) - pad, max(xs) + pad, max(ys) + pad


def rasterize(primitives: Sequence[Primitive], domain: DesignDomain = DEFAULT_DOMAIN) -> NDArray[np.bool_]:
    """Boolean grid ``raster[i, j]`` (i along x, j along y) of covered cell centers."""
    raster = np.zeros((domain.cells_x, domain.cells_y), dtype=bool)
    if not primitives:
        return raster
    h = domain.cell_size
    centers = domain.cell_centers()
    for p in primitives:
        x0, y0, x1, y1 = _bounding_box(p)
        # the bounding box only prunes work, membership decides
        i0 = max(int(math.floor(x0 / h - 0.5)) - 1, 0)
        i1 = min(int(math.ceil(x1 / h - 0.5)) + 2, domain.cells_x)
        j0 = max(int(math.floor(y0 / h - 0.5)) - 1, 0)
        j1 = min(int(math.ceil(y1 / h - 0.5)) + 2, domain.cells_y)
        if i0 >= i1 or j0 >= j1:
            continue
        block = centers[i0:i1, j0:j1].reshape(-1, 2)
        mask = contains(p, block).reshape(i1 - i0, j1 - j0)
        raster[i0:i1, j0:j1] |= mask
    return raster


# ---------------------------------------------------------------------------
# symmetry


def _reflect(p: tuple[float, float], domain: DesignDomain) -> tuple[float, float]:
    return (p[0], domain.height - p[1])


def reflect(primitive: Primitive, domain: DesignDomain = DEFAULT_DOMAIN) -> Primitive:
    """Mirror image of a primitive about the horizontal midline."""
    if isinstance(primitive, Capsule):
        return Capsule(_reflect(primitive.p1, domain), _reflect(primitive.p2, domain), primitive.thickness)
    if isinstance(primitive, CurvedBeam):
        # reflection flips the local normal, so the centerline offset changes sign
        return CurvedBeam(
            _reflect(primitive.p1, domain),
            _reflect(primitive.p2, domain),
            primitive.t_left,
            primitive.t_mid,
            primitive.t_right,
            -primitive.amplitude,
            primitive.frequency,
            primitive.phase,
        )
    if isinstance(primitive, HexTile):
        verts = primitive.vertices.copy()
        verts[:, 1] = domain.height - verts[:, 1]
        return HexTile(
            _reflect(primitive.center, domain),
            verts[::-1].copy(),
            domain.height - primitive.y_hi,
            domain.height - primitive.y_lo,
            primitive.index,
            primitive.active,
        )
    raise TypeError(f"unknown primitive type {type(primitive).__name__}")


def mirror(primitives: Sequence[Primitive], domain: DesignDomain = DEFAULT_DOMAIN) -> list[Primitive]:
    """The primitives followed by their reflections about ``y = height / 2``."""
    return list(primitives) + [reflect(p, domain) for p in primitives]


# ---------------------------------------------------------------------------
# decoders


def _check_unit(x: ArrayLike) -> NDArray[np.float64]:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"design vector must be one-dimensional, got shape {x.shape}")
    if x.size and (np.any(~np.isfinite(x)) or x.min() < 0.0 or x.max() > 1.0):
        raise ValueError("design vector coordinates must lie in [0, 1]")
    return x


def _thickness(a: float) -> float:
    return T_MIN + a * (T_MAX - T_MIN)


def _layout(primitives: list[Primitive], domain: DesignDomain) -> MaterialLayout:
    prims = mirror(primitives, domain)
    return MaterialLayout(tuple(prims), rasterize(prims, domain), domain)


def decode_mmc(x: ArrayLike, domain: DesignDomain = DEFAULT_DOMAIN) -> MaterialLayout:
    x = _check_unit(x)
    if x.size == 0 or x.size % 5:
        raise ValueError(f"MMC design length must be a positive multiple of 5, got {x.size}")
    beams = []
    for a1, a2, a3, a4, a5 in x.reshape(-1, 5):
        beams.append(
            Capsule(
                (a1 * domain.width, a2 * domain.height),
                (a3 * domain.width, a4 * domain.height),
                _thickness(a5),
            )
        )
    return _layout(beams, domain)


def decode_cmmc(x: ArrayLike, domain: DesignDomain = DEFAULT_DOMAIN) -> MaterialLayout:
    x = _check_unit(x)
    if x.size == 0 or x.size % 10:
        raise ValueError(f"curved MMC design length must be a positive multiple of 10, got {x.size}")
    beams = []
    for row in x.reshape(-1, 10):
        p1 = (row[0] * domain.width, row[1] * domain.height)
        p2 = (row[2] * domain.width, row[3] * domain.height)
        length = max(math.dist(p1, p2), MIN_BEAM_LENGTH)
        beams.append(
            CurvedBeam(
                p1,
                p2,
                _thickness(row[4]),
                _thickness(row[5]),
                _thickness(row[6]),
                amplitude=row[7] * domain.height / 4.0,
                frequency=row[8] * 4.0 * math.pi / length,
                phase=row[9] * length,
            )
        )
    return _layout(beams, domain)


def _hexagon(cx: float, cy: float, half_w: float, half_h: float) -> NDArray[np.float64]:
    # pointy-top: tips up and down, vertical flanks shared with row neighbours
    return np.array(
        [
            [cx, cy + half_h],
            [cx - half_w, cy + 0.5 * half_h],
            [cx - half_w, cy - 0.5 * half_h],
            [cx, cy - half_h],
            [cx + half_w, cy - 0.5 * half_h],
            [cx + half_w, cy + 0.5 * half_h],
        ]
    )


def build_ht_grid(dim: int, domain: DesignDomain = DEFAULT_DOMAIN) -> HTGridSpec:
    """Honeycomb over the bottom half of the domain.

    Rows of edge-sharing hexagons run from the midline (row 0, centered on
    it) down to the bottom edge (last row, centered on it); odd rows are
    shifted right by half a tile.  The tiles are stretched vertically so the
    rows interlock exactly.  Deleted tiles are taken from the bottom row,
    rightmost first.
    """
    if dim not in HT_LAYOUTS:
        raise ValueError(f"unsupported honeycomb dimensionality {dim}; choose from {sorted(HT_LAYOUTS)}")
    rows, cols, deleted = HT_LAYOUTS[dim]
    half = domain.midline
    width = domain.width / cols
    row_pitch = half / (rows - 1)
    # interlocking rows sit 3/4 of a tip-to-tip height apart
    half_h = row_pitch / 1.5
    laid_out = []
    for r in range(rows):
        cy = half - r * row_pitch
        shift = 0.5 * width if r % 2 else 0.0
        laid_out.extend((r, c, (c + 0.5) * width + shift, cy) for c in range(cols))
    dropped = {(rows - 1, cols - 1 - k) for k in range(deleted)}
    kept = [(cx, cy) for r, c, cx, cy in laid_out if (r, c) not in dropped]
    tiles = tuple(
        HexTile((cx, cy), _hexagon(cx, cy, 0.5 * width, half_h), 0.0, half, index=i)
        for i, (cx, cy) in enumerate(kept)
    )
    return HTGridSpec(dim, rows, cols, deleted, tiles, domain)


def decode_ht(x: ArrayLike, grid: HTGridSpec) -> MaterialLayout:
    x = _check_unit(x)
    if x.size != len(grid.tiles):
        raise ValueError(f"honeycomb grid has {len(grid.tiles)} tiles but design has {x.size} coordinates")
    on = x > HT_THRESHOLD
    active = [t for t, flag in zip(grid.tiles, on) if flag]
    # the union of cached per-tile rasters equals rasterizing the union
    raster = np.any(grid.tile_masks[on], axis=0) if on.any() else np.zeros(grid.tile_masks.shape[1:], dtype=bool)
    return MaterialLayout(tuple(mirror(active, grid.domain)), raster, grid.domain)
