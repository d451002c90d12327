"""Per-run CSV logs, the run manifest, and the experiment matrix driver."""
from __future__ import annotations

import csv
import io
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from ..optimizers import BudgetState, RunTrace, make_optimizer, run_optimizer
from ..problem import CantileverProblem
from .config import ExperimentConfig, format_config

RUN_COLUMNS = (
    "eval_index", "sim_index", "feasible", "volume_fraction", "connectivity",
    "g_aggregate", "f_raw", "f_obj", "best_so_far",
)
MANIFEST_COLUMNS = ("config_id", "seed", "status", "wall_time", "final_best")
RUNS_DIR = "runs"
MANIFEST = "manifest.csv"


def fmt(v: float) -> str:
    """Full-precision float text (17 significant digits)."""
    return format(float(v), ".17g")


def run_header(dim: int) -> List[str]:
    return list(RUN_COLUMNS) + [f"x_{k}" for k in range(dim)]


def run_filename(config_id: str, seed: int) -> str:
    return f"{config_id}_seed{seed:03d}.csv"


def atomic_write(path: Union[str, Path], text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_to_csv(trace: RunTrace, dim: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(run_header(dim))
    for r, best in zip(trace.records, trace.best_so_far):
        w.writerow(
            [r.eval_index, r.sim_index, int(r.feasible), fmt(r.volume_fraction), fmt(r.connectivity),
             fmt(r.g_aggregate), "" if r.f_raw is None else fmt(r.f_raw), fmt(r.f_obj), fmt(best)]
            + [fmt(v) for v in r.x]
        )
    return buf.getvalue()


@dataclass
class RunLog:
    """One run as read back from its CSV; everything downstream is computed from this."""

    config_id: str
    seed: int
    eval_index: np.ndarray
    sim_index: np.ndarray
    feasible: np.ndarray
    volume_fraction: np.ndarray
    connectivity: np.ndarray
    g_aggregate: np.ndarray
    f_raw: np.ndarray  # nan where not simulated
    f_obj: np.ndarray
    best_so_far: np.ndarray
    x: np.ndarray

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def final_best(self) -> float:
        return float(self.best_so_far[-1]) if len(self.best_so_far) else math.inf

    @property
    def best_x(self) -> np.ndarray:
        return self.x[int(np.argmin(self.f_obj))]

    def best_feasible_by_evaluation(self) -> np.ndarray:
        """Best feasible f_obj after each evaluation; nan before the first feasible one."""
        vals = np.where(self.feasible, self.f_obj, np.inf)
        acc = np.minimum.accumulate(vals) if len(vals) else vals
        return np.where(np.isfinite(acc), acc, np.nan)

    def best_feasible_by_simulation(self) -> np.ndarray:
        """Entry k is the best objective after k + 1 simulations."""
        vals = self.f_obj[self.feasible]
        return np.minimum.accumulate(vals) if len(vals) else vals


def read_run(path: Union[str, Path]) -> RunLog:
    path = Path(path)
    stem = path.stem
    config_id, _, seed = stem.rpartition("_seed")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if tuple(header[: len(RUN_COLUMNS)]) != RUN_COLUMNS:
        raise ValueError(f"{path}: unexpected header")
    dim = len(header) - len(RUN_COLUMNS)
    cols = list(zip(*body)) if body else [()] * len(header)

    def num(k, dtype=float):
        return np.array([float(v) if v != "" else np.nan for v in cols[k]], dtype=float).astype(dtype)

    x = np.array([[float(v) for v in row[len(RUN_COLUMNS):]] for row in body], dtype=float).reshape(-1, dim)
    return RunLog(
        config_id, int(seed), num(0, int), num(1, int), num(2, int).astype(bool), num(3), num(4), num(5),
        num(6), num(7), num(8), x,
    )


def read_runs(directory: Union[str, Path]) -> List[RunLog]:
    d = Path(directory)
    if (d / RUNS_DIR).is_dir():
        d = d / RUNS_DIR
    return [read_run(p) for p in sorted(d.glob("*_seed*.csv"))]


# ---------------------------------------------------------------------------
# execution


def execute_run(cfg: ExperimentConfig, seed: int) -> RunTrace:
    problem = CantileverProblem(cfg.parameterization, cfg.dimension, cfg.penalty, cfg.material, load=cfg.load)
    opt = make_optimizer(cfg.optimizer, cfg.dimension, seed=seed, **dict(cfg.options))
    return run_optimizer(opt, problem, BudgetState(cfg.simulation_budget), cfg.max_evaluations or None)


@dataclass
class RunResult:
    config_id: str
    seed: int
    status: str
    wall_time: float
    final_best: float

    def row(self) -> List[str]:
        return [self.config_id, str(self.seed), self.status, f"{self.wall_time:.3f}", fmt(self.final_best)]


def _run_job(cfg: ExperimentConfig, seed: int, out: str) -> RunResult:
    t0 = time.perf_counter()
    try:
        trace = execute_run(cfg, seed)
        atomic_write(Path(out) / RUNS_DIR / run_filename(cfg.config_id, seed), trace_to_csv(trace, cfg.dimension))
        status = "ok" if not trace.stopped_early else "ok-capped"
        best = float(trace.best_so_far[-1]) if trace.records else math.inf
    except Exception as exc:  # recorded in the manifest, the matrix carries on
        status = f"failed: {type(exc).__name__}: {exc}".replace("\n", " ").replace(",", ";")
        best = math.nan
    return RunResult(cfg.config_id, seed, status, time.perf_counter() - t0, best)


def read_manifest(out: Union[str, Path]) -> dict:
    path = Path(out) / MANIFEST
    if not path.exists():
        return {}
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {
        (r["config_id"], int(r["seed"])): RunResult(
            r["config_id"], int(r["seed"]), r["status"], float(r["wall_time"]), float(r["final_best"])
        )
        for r in rows
    }


def write_manifest(out: Union[str, Path], results: Iterable[RunResult]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MANIFEST_COLUMNS)
    for r in results:
        w.writerow(r.row())
    atomic_write(Path(out) / MANIFEST, buf.getvalue())


def run_matrix(
    configs: Sequence[ExperimentConfig],
    out: Optional[Union[str, Path]] = None,
    workers: int = 1,
    resume: bool = False,
    progress=None,
) -> List[RunResult]:
    """Execute every (config, seed) pair and persist one CSV per run plus a manifest.

    With ``resume`` set, pairs whose run CSV already exists are skipped and
    keep their previous manifest entry.  ``progress`` is called with each
    finished RunResult.
    """
    if not configs:
        return []
    out = Path(out if out is not None else configs[0].out)
    try:
        (out / RUNS_DIR).mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")
    for cfg in {c.config_id: c for c in configs}.values():
        atomic_write(out / "configs" / f"{cfg.config_id}.cfg", format_config(cfg))

    previous = read_manifest(out) if resume else {}
    pairs = [(cfg, seed) for cfg in configs for seed in cfg.seeds]
    results: dict = {}
    todo = []
    for cfg, seed in pairs:
        key = (cfg.config_id, seed)
        if resume and (out / RUNS_DIR / run_filename(*key)).exists():
            prev = previous.get(key)
            if prev is None:
                log = read_run(out / RUNS_DIR / run_filename(*key))
                prev = RunResult(key[0], seed, "ok", math.nan, log.final_best)
            results[key] = prev
        else:
            todo.append((cfg, seed))

    def record(res: RunResult):
        results[(res.config_id, res.seed)] = res
        if progress is not None:
            progress(res)
        write_manifest(out, [results[(c.config_id, s)] for c, s in pairs if (c.config_id, s) in results])

    if workers <= 1 or len(todo) <= 1:
        for cfg, seed in todo:
            record(_run_job(cfg, seed, str(out)))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_job, cfg, seed, str(out)) for cfg, seed in todo]
            for fut in futures:
                record(fut.result())
    ordered = [results[(c.config_id, s)] for c, s in pairs]
    write_manifest(out, ordered)
    return ordered
