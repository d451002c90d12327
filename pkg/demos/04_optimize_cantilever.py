"""Run the three optimizers on one small problem and compare their final scores.

Every run gets the same simulation budget (20 per design variable).
Infeasible candidates are free, so runs differ in how many total
evaluations they spend.
"""
import sys
import tempfile

from topobench.harness import ExperimentConfig, read_runs, run_matrix

param = sys.argv[1] if len(sys.argv) > 1 else "MMC"
seeds = (0, 1, 2)
configs = [ExperimentConfig(param, 10, o, seeds=seeds, max_evaluations=3000) for o in ("DE", "CMA-ES", "BO")]

with tempfile.TemporaryDirectory() as out:
    for res in run_matrix(configs, out, progress=lambda r: print(f"  {r.config_id} seed {r.seed}: {r.status}", flush=True)):
        pass
    for log in sorted(read_runs(out), key=lambda l: (l.config_id, l.seed)):
        first = log.eval_index[log.feasible][0] if log.feasible.any() else None
        print(f"{log.config_id:16s} seed {log.seed}: best {log.final_best:9.4f} after {log.eval_index[-1]} evaluations "
              f"({log.sim_index[-1]} simulated, first feasible at evaluation {first})")
