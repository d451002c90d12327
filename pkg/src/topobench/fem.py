"""Orthotropic plane-stress compliance on the regular cantilever mesh.

Bilinear quadrilaterals on unit-square elements, nodes numbered column by
column (``node = i * (ny + 1) + j``, ``i`` along x), two DOFs per node.  Void
cells keep an ersatz stiffness so the system stays nonsingular.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Optional, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg, sparse

from .constraints import SolverFailure
from .geometry import DEFAULT_DOMAIN, DesignDomain

RESIDUAL_TOL = 1e-8
# refinement continues past the tolerance so compliance is reproducible to ~1e-12
REFINE_TARGET = 1e-14
MAX_REFINEMENTS = 6
# calibrated so a full-span midline beam spans the reported compliance range
LOAD_MAGNITUDE = 0.15


class InvalidMaterial(ValueError):
    pass


@dataclass(frozen=True)
class MaterialModel:
    E1: float = 25.0
    E2: float = 1.0
    G12: float = 0.5
    nu12: float = 0.25
    void_factor: float = 1e-6

    def __post_init__(self):
        if min(self.E1, self.E2, self.G12) <= 0:
            raise InvalidMaterial("moduli must be positive")
        if not 0.0 < self.void_factor < 1.0:
            raise InvalidMaterial("void factor must lie in (0, 1)")
        if 1.0 - self.nu12 * self.nu21 <= 0:
            raise InvalidMaterial("constitutive matrix is not positive definite")

    @property
    def nu21(self) -> float:
        return self.nu12 * self.E2 / self.E1

    def constitutive(self) -> NDArray[np.float64]:
        """Plane-stress stiffness in Voigt order (xx, yy, xy), axis 1 along x."""
        den = 1.0 - self.nu12 * self.nu21
        return np.array(
            [
                [self.E1, self.nu12 * self.E2, 0.0],
                [self.nu12 * self.E2, self.E2, 0.0],
                [0.0, 0.0, self.G12 * den],
            ]
        ) / den

    def scaled(self, s: float) -> "MaterialModel":
        return replace(self, E1=self.E1 * s, E2=self.E2 * s, G12=self.G12 * s)


# local nodes counter-clockwise from the lower-left corner
_XI = np.array([-1.0, 1.0, 1.0, -1.0])
_ETA = np.array([-1.0, -1.0, 1.0, 1.0])


def _b_matrix(xi: float, eta: float, size: float) -> NDArray[np.float64]:
    dn_dxi = 0.25 * _XI * (1.0 + eta * _ETA)
    dn_deta = 0.25 * _ETA * (1.0 + xi * _XI)
    # square element: Jacobian is (size / 2) * I
    dn_dx = dn_dxi * 2.0 / size
    dn_dy = dn_deta * 2.0 / size
    b = np.zeros((3, 8))
    b[0, 0::2] = dn_dx
    b[1, 1::2] = dn_dy
    b[2, 0::2] = dn_dy
    b[2, 1::2] = dn_dx
    return b


def element_stiffness(
    material: MaterialModel = MaterialModel(),
    size: float = 1.0,
    thickness: float = 1.0,
    order: int = 2,
) -> NDArray[np.float64]:
    """8x8 stiffness of a square bilinear element by Gauss-Legendre quadrature."""
    d = material.constitutive()
    if np.any(np.linalg.eigvalsh(d) <= 0):
        raise InvalidMaterial("constitutive matrix is not positive definite")
    pts, wts = np.polynomial.legendre.leggauss(order)
    det_j = (0.5 * size) ** 2
    ke = np.zeros((8, 8))
    for xi, wx in zip(pts, wts):
        for eta, wy in zip(pts, wts):
            b = _b_matrix(xi, eta, size)
            ke += wx * wy * det_j * thickness * (b.T @ d @ b)
    return 0.5 * (ke + ke.T)


@lru_cache(maxsize=4)
def _mesh_indices(nx: int, ny: int):
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    i = i.ravel()
    j = j.ravel()
    n0 = i * (ny + 1) + j
    nodes = np.stack([n0, n0 + (ny + 1), n0 + (ny + 1) + 1, n0 + 1], axis=1)
    edof = np.empty((nx * ny, 8), dtype=np.int64)
    edof[:, 0::2] = 2 * nodes
    edof[:, 1::2] = 2 * nodes + 1
    rows = np.repeat(edof, 8, axis=1).ravel()
    cols = np.tile(edof, (1, 8)).ravel()
    return edof, rows, cols


@dataclass(frozen=True)
class FemProblem:
    density: NDArray[np.float64] = field(repr=False, compare=False)
    material: MaterialModel = MaterialModel()
    domain: DesignDomain = DEFAULT_DOMAIN
    load: float = LOAD_MAGNITUDE

    def __post_init__(self):
        d = np.asarray(self.density)
        if d.shape != (self.domain.cells_x, self.domain.cells_y):
            raise ValueError(f"density shape {d.shape} does not match the mesh")
        if d.dtype == bool or not np.all(d > 0):
            raise ValueError("element densities must be positive floats; use FemProblem.from_raster for a raster")

    @classmethod
    def from_raster(cls, raster: ArrayLike, material: MaterialModel = MaterialModel(),
                    domain: DesignDomain = DEFAULT_DOMAIN, load: float = LOAD_MAGNITUDE) -> "FemProblem":
        raster = np.asarray(raster, dtype=bool)
        if raster.shape != (domain.cells_x, domain.cells_y):
            raise ValueError(f"raster shape {raster.shape} does not match the mesh")
        density = np.where(raster, 1.0, material.void_factor)
        return cls(density, material, domain, load)

    @property
    def n_nodes(self) -> tuple[int, int]:
        return self.domain.cells_x + 1, self.domain.cells_y + 1

    @property
    def n_dofs(self) -> int:
        nx, ny = self.n_nodes
        return 2 * nx * ny

    @property
    def load_node(self) -> tuple[int, int]:
        return self.domain.cells_x, self.domain.cells_y // 2

    def node_id(self, i: int, j: int) -> int:
        return i * (self.domain.cells_y + 1) + j

    def fixed_dofs(self) -> NDArray[np.int64]:
        ny = self.domain.cells_y + 1
        nodes = np.arange(ny)  # i = 0
        return np.sort(np.concatenate([2 * nodes, 2 * nodes + 1]))

    def force(self) -> NDArray[np.float64]:
        f = np.zeros(self.n_dofs)
        f[2 * self.node_id(*self.load_node) + 1] = -self.load
        return f


@dataclass(frozen=True)
class ComplianceResult:
    compliance: float
    residual: float
    n_free_dofs: int
    displacement: NDArray[np.float64] = field(repr=False, compare=False)


def assemble(problem: FemProblem) -> sparse.csc_matrix:
    """Global stiffness before boundary conditions."""
    nx, ny = problem.domain.cells_x, problem.domain.cells_y
    ke = element_stiffness(problem.material, problem.domain.cell_size)
    _, rows, cols = _mesh_indices(nx, ny)
    values = (problem.density.reshape(-1)[:, None] * ke.reshape(1, -1)).ravel()
    k = sparse.coo_matrix((values, (rows, cols)), shape=(problem.n_dofs, problem.n_dofs)).tocsc()
    k.sum_duplicates()
    return k


@lru_cache(maxsize=4)
def _band_layout(nx: int, ny: int, fixed: tuple[int, ...]):
    """Scatter map from element entries into upper banded storage of the free block."""
    _, rows, cols = _mesh_indices(nx, ny)
    n_dofs = 2 * (nx + 1) * (ny + 1)
    free_index = np.full(n_dofs, -1, dtype=np.int64)
    free = np.setdiff1d(np.arange(n_dofs), np.asarray(fixed, dtype=np.int64))
    free_index[free] = np.arange(len(free))
    r = free_index[rows]
    c = free_index[cols]
    keep = (r >= 0) & (c >= 0) & (r <= c)
    bw = int((c[keep] - r[keep]).max())
    flat = (bw + r[keep] - c[keep]) * len(free) + c[keep]
    return free, keep, flat, bw


# node offsets (di, dj) of the four local nodes, counter-clockwise
_LOCAL_NODES = ((0, 0), (1, 0), (1, 1), (0, 1))


def _apply_stiffness(problem: FemProblem, ke: NDArray, u: NDArray) -> NDArray:
    """Element-by-element K @ u in the precision of ``u``."""
    nx, ny = problem.domain.cells_x, problem.domain.cells_y
    edof, _, _ = _mesh_indices(nx, ny)
    ke = ke.astype(u.dtype)
    fe = (u[edof] @ ke.T) * problem.density.reshape(-1, 1).astype(u.dtype)
    fe = fe.reshape(nx, ny, 4, 2)
    out = np.zeros((nx + 1, ny + 1, 2), dtype=u.dtype)
    for k, (di, dj) in enumerate(_LOCAL_NODES):
        out[di : di + nx, dj : dj + ny] += fe[:, :, k]
    return out.reshape(-1)


def assemble_and_solve(problem: FemProblem) -> ComplianceResult:
    """Solve K u = F with the left edge clamped; compliance is F . u.

    The free block is symmetric positive definite and banded under the
    column-wise node numbering, so a banded Cholesky factorization is used.
    """
    nx, ny = problem.domain.cells_x, problem.domain.cells_y
    ke = element_stiffness(problem.material, problem.domain.cell_size)
    free, keep, flat, bw = _band_layout(nx, ny, tuple(problem.fixed_dofs().tolist()))
    values = (problem.density.reshape(-1)[:, None] * ke.reshape(1, -1)).ravel()[keep]
    band = np.bincount(flat, weights=values, minlength=(bw + 1) * len(free)).reshape(bw + 1, len(free))
    f = problem.force()
    ff = f[free]
    try:
        factor = (linalg.cholesky_banded(band, lower=False, check_finite=False), False)
    except linalg.LinAlgError as exc:
        raise SolverFailure(f"stiffness matrix is not positive definite: {exc}") from exc
    # the void contrast leaves large displacements on floating islands, so the
    # residual is formed in extended precision and the solve refined against it
    u = np.zeros(problem.n_dofs, dtype=np.longdouble)
    u[free] = linalg.cho_solve_banded(factor, ff, check_finite=False)
    ffl = ff.astype(np.longdouble)
    residual = previous = np.inf
    for _ in range(MAX_REFINEMENTS + 1):
        if not np.all(np.isfinite(u)):
            raise SolverFailure("non-finite displacements")
        r = ffl - _apply_stiffness(problem, ke, u)[free]
        residual = float(np.linalg.norm(r.astype(float)) / np.linalg.norm(ff))
        if residual <= REFINE_TARGET or residual > 0.5 * previous:
            break
        previous = residual
        u[free] += linalg.cho_solve_banded(factor, r.astype(float), check_finite=False)
    if residual > RESIDUAL_TOL:
        raise SolverFailure(f"relative residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}")
    compliance = float(f.astype(np.longdouble) @ u)
    u = u.astype(float)
    return ComplianceResult(compliance, residual, len(free), u)


def compliance_of(raster: ArrayLike, material: MaterialModel = MaterialModel(),
                  domain: DesignDomain = DEFAULT_DOMAIN, load: float = LOAD_MAGNITUDE) -> float:
    return assemble_and_solve(FemProblem.from_raster(raster, material, domain, load)).compliance


class ComplianceEvaluator:
    """Callable raster -> compliance, as wired into the penalized objective."""

    def __init__(self, material: MaterialModel = MaterialModel(), domain: DesignDomain = DEFAULT_DOMAIN,
                 load: float = LOAD_MAGNITUDE):
        self.material = material
        self.domain = domain
        self.load = load
        self.calls = 0

    def __call__(self, raster: ArrayLike) -> float:
        self.calls += 1
        return compliance_of(raster, self.material, self.domain, self.load)


def write_displacements(result: ComplianceResult, problem: FemProblem, path: Union[str, Path]) -> None:
    """CSV with one row per node: ``node_i, node_j, ux, uy``."""
    nx, ny = problem.n_nodes
    u = result.displacement.reshape(nx, ny, 2)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("node_i,node_j,ux,uy\n")
        for i in range(nx):
            for j in range(ny):
                fh.write(f"{i},{j},{u[i, j, 0]:.17g},{u[i, j, 1]:.17g}\n")


def write_matrix_market(problem: FemProblem, path: Union[str, Path]) -> None:
    from scipy.io import mmwrite

    mmwrite(str(path), assemble(problem))
