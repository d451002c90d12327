"""Plane-stress compliance of straight midline beams of increasing thickness.

A thin beam along the midline is about as flexible as a connected design
gets, and a beam filling the whole domain height is about as stiff.  Their
compliances show the range the objective spans.
"""
import time

from topobench.fem import FemProblem, assemble_and_solve
from topobench.geometry import Capsule, rasterize

for thickness in (1, 5, 10, 25):
    raster = rasterize([Capsule((0, 25), (100, 25), thickness)])
    t0 = time.perf_counter()
    res = assemble_and_solve(FemProblem.from_raster(raster))
    dt = time.perf_counter() - t0
    print(f"half-thickness {thickness:2d}: {raster.sum():5d} solid cells, compliance {res.compliance:10.4f}, "
          f"residual {res.residual:.1e}, {dt * 1e3:.0f} ms")
