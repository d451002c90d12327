"""Summaries, rank tests and convergence curves from a directory of runs.

Usage: python3 05_statistics.py RESULTS_DIR
The directory is what ``topobench run`` writes.  Without an argument a
tiny matrix is run first.
"""
import sys
import tempfile
from pathlib import Path

import numpy as np

from topobench.harness import (
    ExperimentConfig, export_convergence, export_summary, mann_whitney_u, read_runs, run_matrix,
)

if len(sys.argv) > 1:
    out = Path(sys.argv[1])
else:
    out = Path(tempfile.mkdtemp())
    run_matrix([ExperimentConfig("MMC", 5, o, seeds=tuple(range(6)), budget_per_dim=4) for o in ("DE", "CMA-ES")], out)

logs = read_runs(out)
summaries, tests, summary_csv, _ = export_summary(logs, out)
print(summary_csv)
for p, d, t in tests:
    print(f"{p}-{d}D {t.pair[0]} vs {t.pair[1]}: U={t.u:g}, p={t.p_value:.4f}")

# the same test with the exact null distribution, for comparison
by_cfg = {}
for log in logs:
    by_cfg.setdefault(log.config_id, []).append(log.final_best)
if len(by_cfg) >= 2:
    (ka, a), (kb, b) = list(by_cfg.items())[:2]
    exact = mann_whitney_u(np.array(a), np.array(b), mode="exact")
    print(f"exact p for {ka} vs {kb}: {exact.p_value:.4f}")

export_convergence(logs, "simulations", out / "convergence_simulations.csv")
print(f"convergence curves in {out / 'convergence_simulations.csv'}")
