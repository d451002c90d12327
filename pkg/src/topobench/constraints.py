"""Volume and connectivity constraints with the funnel-shaped penalty.

Constraint geometry works on the raster: material components are 8-connected
cell sets, and the distance between two components is the smallest
center-to-center distance shortened by one cell diagonal, so 8-adjacent cells
are at distance zero.  Distances entering the penalty are measured on the
domain rescaled to the unit square.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import ndimage

from .geometry import DEFAULT_DOMAIN, DesignDomain, MaterialLayout

V_MAX = 0.5
PENALTY_FACTOR = 1e3
F_WORST = 500.0
SQRT2 = math.sqrt(2.0)
# both boundary terms at the largest distance in the unit square
EMPTY_CONNECTIVITY = 2.0 * SQRT2

_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class ComponentSet:
    labels: NDArray[np.int32] = field(repr=False, compare=False)
    components: tuple[NDArray[np.intp], ...] = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.components)


@dataclass(frozen=True)
class BoundarySet:
    support: NDArray[np.intp] = field(repr=False, compare=False)
    load: tuple[int, int]

    @classmethod
    def cantilever(cls, domain: DesignDomain = DEFAULT_DOMAIN) -> "BoundarySet":
        support = np.stack([np.zeros(domain.cells_y, dtype=np.intp), np.arange(domain.cells_y)], axis=1)
        return cls(support, (domain.cells_x - 1, domain.cells_y // 2))

    def geometries(self) -> list[NDArray[np.intp]]:
        return [self.support, np.array([self.load], dtype=np.intp)]


@dataclass(frozen=True)
class ConstraintReport:
    volume_fraction: float
    connectivity: float
    g1_norm: float
    g2_norm: float
    g_aggregate: float
    n_components: int = 0

    @property
    def feasible(self) -> bool:
        return self.g_aggregate == 0.0


# ---------------------------------------------------------------------------
# volume and components


def volume_fraction(raster: ArrayLike) -> float:
    raster = np.asarray(raster, dtype=bool)
    return float(raster.sum()) / raster.size


def connected_components(raster: ArrayLike) -> ComponentSet:
    raster = np.asarray(raster, dtype=bool)
    labels, n = ndimage.label(raster, structure=_EIGHT)
    if n == 0:
        return ComponentSet(labels, ())
    idx = np.argwhere(labels)
    order = np.argsort(labels[idx[:, 0], idx[:, 1]], kind="stable")
    idx = idx[order]
    counts = np.bincount(labels[idx[:, 0], idx[:, 1]], minlength=n + 1)[1:]
    parts = np.split(idx, np.cumsum(counts)[:-1])
    return ComponentSet(labels, tuple(parts))


def _perimeter(cells: NDArray[np.intp], labels: NDArray[np.int32]) -> NDArray[np.intp]:
    """Cells with at least one 8-neighbour outside their component.

    Nearest pairs between disjoint cell sets can always be found among these.
    """
    if len(cells) <= 8:
        return cells
    lab = labels[cells[0, 0], cells[0, 1]]
    own = np.pad(labels == lab, 1, constant_values=False)
    interior = ndimage.binary_erosion(own, structure=_EIGHT)[1:-1, 1:-1]
    keep = ~interior[cells[:, 0], cells[:, 1]]
    return cells[keep]


# ---------------------------------------------------------------------------
# distances


def min_distance(
    cells_a: ArrayLike,
    cells_b: ArrayLike,
    scale: Sequence[float] = (1.0, 1.0),
    adjacency_allowance: bool = True,
) -> float:
    """Shortest gap between two cell sets, given as ``(n, 2)`` integer indices.

    With the allowance, each center-to-center displacement is shortened by
    one cell diagonal (floored at zero) before rescaling by ``scale``, so the
    result is zero exactly when some pair is 8-adjacent or shared.
    """
    a = np.asarray(cells_a, dtype=float).reshape(-1, 2)
    b = np.asarray(cells_b, dtype=float).reshape(-1, 2)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("min_distance needs two non-empty cell sets")
    sx, sy = float(scale[0]), float(scale[1])
    best = math.inf
    # chunk to bound memory on large sets
    step = max(1, 200_000 // len(b))
    for k in range(0, len(a), step):
        dx = a[k : k + step, None, 0] - b[None, :, 0]
        dy = a[k : k + step, None, 1] - b[None, :, 1]
        if adjacency_allowance:
            norm = np.hypot(dx, dy)
            with np.errstate(divide="ignore", invalid="ignore"):
                shrink = np.where(norm > SQRT2, 1.0 - SQRT2 / norm, 0.0)
            dx = dx * shrink
            dy = dy * shrink
        d = np.hypot(dx * sx, dy * sy).min()
        best = min(best, float(d))
        if best == 0.0:
            break
    return best


def mst_weight_matrix(weights: ArrayLike) -> list[tuple[int, int]]:
    """Kruskal's minimum spanning tree of a complete weighted graph.

    Equal weights are resolved by the lexicographically smallest ``(i, j)``.
    """
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    if w.shape != (n, n):
        raise ValueError("weight matrix must be square")
    iu, ju = np.triu_indices(n, k=1)
    order = np.lexsort((ju, iu, w[iu, ju]))
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    edges: list[tuple[int, int]] = []
    for k in order:
        i, j = int(iu[k]), int(ju[k])
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
            edges.append((i, j))
            if len(edges) == n - 1:
                break
    return edges


def mst_weight(weights: ArrayLike) -> float:
    w = np.asarray(weights, dtype=float)
    return float(sum(w[i, j] for i, j in mst_weight_matrix(w)))


def _normalizing_scale(domain: DesignDomain) -> tuple[float, float]:
    h = domain.cell_size
    return h / domain.width, h / domain.height


def connectivity(
    components: ComponentSet,
    boundaries: BoundarySet,
    domain: DesignDomain = DEFAULT_DOMAIN,
) -> float:
    """Least total distance joining all components to each other and to the boundaries.

    Distances are measured on the domain mapped to the unit square.  A
    boundary counts as attached only when some component covers one of its
    cells; components attach to each other through 8-adjacency.
    """
    n = len(components)
    if n == 0:
        return EMPTY_CONNECTIVITY
    scale = _normalizing_scale(domain)
    rims = [_perimeter(c, components.labels) for c in components.components]

    total = 0.0
    for gamma in boundaries.geometries():
        labels_on = components.labels[gamma[:, 0], gamma[:, 1]]
        if labels_on.any():
            continue
        total += min(min_distance(gamma, rim, scale, adjacency_allowance=False) for rim in rims)

    if n > 1:
        w = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                w[i, j] = w[j, i] = min_distance(rims[i], rims[j], scale)
        total += mst_weight(w)
    return total


# ---------------------------------------------------------------------------
# aggregation and the penalized objective


def aggregate(
    volume: float,
    connectivity_value: float,
    penalty_factor: float = PENALTY_FACTOR,
    v_max: float = V_MAX,
    n_components: int = 0,
) -> ConstraintReport:
    """Normalize and combine the two constraint violations.

    ``volume`` is the material volume as a fraction of the domain and
    ``connectivity_value`` is measured on the unit-square domain.
    """
    if not penalty_factor > 0:
        raise ValueError("penalty factor must be positive")
    g1 = max(volume - v_max, 0.0)
    g2 = connectivity_value / SQRT2
    return ConstraintReport(
        volume_fraction=volume,
        connectivity=connectivity_value,
        g1_norm=g1,
        g2_norm=g2,
        g_aggregate=penalty_factor * (g1 + g2),
        n_components=n_components,
    )


def evaluate_constraints(
    raster: ArrayLike,
    penalty_factor: float = PENALTY_FACTOR,
    domain: DesignDomain = DEFAULT_DOMAIN,
    boundaries: Optional[BoundarySet] = None,
    v_max: float = V_MAX,
) -> ConstraintReport:
    raster = np.asarray(raster, dtype=bool)
    boundaries = boundaries or BoundarySet.cantilever(domain)
    comps = connected_components(raster)
    conn = connectivity(comps, boundaries, domain)
    return aggregate(volume_fraction(raster), conn, penalty_factor, v_max, n_components=len(comps))


def is_feasible(raster: ArrayLike, domain: DesignDomain = DEFAULT_DOMAIN, v_max: float = V_MAX) -> bool:
    """Cheap feasibility test that skips distance computations."""
    raster = np.asarray(raster, dtype=bool)
    if not raster.any() or volume_fraction(raster) > v_max:
        return False
    labels, n = ndimage.label(raster, structure=_EIGHT)
    if n != 1:
        return False
    bnd = BoundarySet.cantilever(domain)
    return bool(raster[0, :].any() and raster[bnd.load])


@dataclass(frozen=True)
class PenaltyConfig:
    f_worst: float = F_WORST
    penalty_factor: float = PENALTY_FACTOR
    v_max: float = V_MAX


@dataclass
class EvaluationCounter:
    """Running totals shared by all evaluations of one run."""

    total_evaluations: int = 0
    simulations_used: int = 0


@dataclass(frozen=True)
class EvaluationRecord:
    x: NDArray[np.float64] = field(repr=False, compare=False)
    feasible: bool
    volume_fraction: float
    connectivity: float
    g_aggregate: float
    f_raw: Optional[float]
    f_obj: float
    eval_index: int
    sim_index: int
    failed: bool = False

    @property
    def simulated(self) -> bool:
        # every feasible evaluation is charged, including failed solves
        return self.feasible


class SolverFailure(RuntimeError):
    """The structural solver did not produce a usable solution."""


def penalized_objective(
    x: ArrayLike,
    decoder: Callable[[NDArray[np.float64]], MaterialLayout],
    evaluator: Callable[[NDArray[np.bool_]], float],
    penalty: PenaltyConfig = PenaltyConfig(),
    counter: Optional[EvaluationCounter] = None,
) -> EvaluationRecord:
    """Evaluate one design under the funnel penalty.

    Feasible designs are simulated and charged one unit of the simulation
    budget; infeasible ones get ``f_worst + g`` without calling ``evaluator``.
    """
    counter = counter if counter is not None else EvaluationCounter()
    x = np.asarray(x, dtype=float)
    layout = decoder(x)
    report = evaluate_constraints(layout.raster, penalty.penalty_factor, layout.domain, v_max=penalty.v_max)
    counter.total_evaluations += 1
    f_raw = None
    failed = False
    if report.feasible:
        counter.simulations_used += 1
        try:
            f_raw = float(evaluator(layout.raster))
            f_obj = f_raw
        except SolverFailure:
            failed = True
            f_obj = penalty.f_worst
    else:
        f_obj = penalty.f_worst + report.g_aggregate
    return EvaluationRecord(
        x=x.copy(),
        feasible=report.feasible,
        volume_fraction=report.volume_fraction,
        connectivity=report.connectivity,
        g_aggregate=report.g_aggregate,
        f_raw=f_raw,
        f_obj=f_obj,
        eval_index=counter.total_evaluations,
        sim_index=counter.simulations_used,
        failed=failed,
    )
