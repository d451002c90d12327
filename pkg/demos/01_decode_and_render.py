"""Decode one design vector per parameterization and draw it.

Each decoder maps a point of the unit box to mirrored primitives, which are
rasterized on the 100 x 50 cell grid.  The SVG shows the primitives, the PGM
shows the raster the solver actually sees.
"""
import sys
from pathlib import Path

import numpy as np

from topobench.constraints import volume_fraction
from topobench.problem import make_decoder
from topobench.harness import render_design

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)

designs = {
    # two straight beams: support corner to load point, plus a brace
    "MMC": np.array([0.0, 0.5, 1.0, 0.5, 0.4, 0.0, 0.9, 0.6, 0.5, 0.3]),
    "CMMC": np.random.default_rng(7).random(10),
    "HT": np.r_[np.ones(5), np.zeros(5)],
}

for name, x in designs.items():
    layout = make_decoder(name, 10)(x)
    render_design(x, name, 10, out / name.lower())
    print(f"{name:5s} {len(layout.primitives):2d} primitives, volume fraction {volume_fraction(layout.raster):.3f}")

print(f"drawings written to {out}/")
