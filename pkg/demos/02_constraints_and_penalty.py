"""How the constraint funnel scores a design before any simulation.

A design is simulated only when it is connected to both the support and the
load and stays under the volume limit.  Otherwise it gets the worst
objective plus a penalty that shrinks as the design approaches feasibility,
so an optimizer still has a slope to follow.
"""
import numpy as np

from topobench.constraints import evaluate_constraints
from topobench.problem import CantileverProblem

problem = CantileverProblem("MMC", 10)

cases = {
    "full-length beam": [0.0, 0.5, 1.0, 0.5, 0.3] * 2,
    "beam stops short": [0.0, 0.5, 0.7, 0.5, 0.3] * 2,
    "floating beam": [0.2, 0.5, 0.7, 0.5, 0.3] * 2,
    "too much material": [0.0, 0.5, 1.0, 0.5, 1.0] * 2,
}

print(f"{'case':20s} {'volume':>7s} {'connect':>8s} {'g':>9s} {'objective':>10s}")
for label, x in cases.items():
    rec = problem(np.array(x))
    print(f"{label:20s} {rec.volume_fraction:7.3f} {rec.connectivity:8.4f} {rec.g_aggregate:9.3f} {rec.f_obj:10.4f}")

# the gap that remains for a short beam is the distance to the load, scaled by the domain diagonal
report = evaluate_constraints(problem.decode(np.array(cases["beam stops short"])).raster)
print(f"\nshort beam: {report.n_components} component(s), normalized gap {report.connectivity:.4f}")
