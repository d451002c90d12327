"""Convergence curves and summary tables, computed from run logs alone."""
from __future__ import annotations

import csv
import io
import itertools
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .runs import RunLog, atomic_write, fmt
from .stats import StatTestResult, mann_whitney_u

CONVERGENCE_COLUMNS = ("config_id", "axis", "index", "mean", "se", "n")
SUMMARY_COLUMNS = (
    "config_id", "parameterization", "dimension", "optimizer", "runs",
    "min", "q1", "median", "q3", "max", "iqr", "best_seed", "best_run",
)
PVALUE_COLUMNS = ("parameterization", "dimension", "optimizer_a", "optimizer_b", "u", "p_value", "n", "m", "verdict")


def split_config_id(config_id: str) -> Tuple[str, int, str]:
    param, dim, opt = config_id.split("-", 2)
    return param, int(dim.rstrip("D")), opt


def group_by_config(logs: Sequence[RunLog]) -> Dict[str, List[RunLog]]:
    groups: Dict[str, List[RunLog]] = defaultdict(list)
    for log in logs:
        groups[log.config_id].append(log)
    for g in groups.values():
        g.sort(key=lambda r: r.seed)
    return dict(sorted(groups.items()))


def _curve(log: RunLog, axis: str) -> np.ndarray:
    if axis == "total":
        return log.best_feasible_by_evaluation()
    if axis == "simulations":
        return log.best_feasible_by_simulation()
    raise ValueError(f"axis must be 'total' or 'simulations', got {axis!r}")


def mean_curve(logs: Sequence[RunLog], axis: str = "total"):
    """Mean and standard error of the best feasible objective per budget index.

    Shorter runs carry their final value forward.  ``n`` counts the runs with
    a feasible point by that index; mean and SE are over those runs only and
    undefined (nan) where ``n`` is zero.
    """
    curves = [_curve(log, axis) for log in logs]
    length = max((len(c) for c in curves), default=0)
    table = np.full((len(curves), length), np.nan)
    for k, c in enumerate(curves):
        if len(c):
            table[k, : len(c)] = c
            table[k, len(c):] = c[-1]
    n = np.sum(~np.isnan(table), axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(n > 0, np.nansum(table, axis=0) / np.maximum(n, 1), np.nan)
        dev = np.where(np.isnan(table), 0.0, table - mean) ** 2
        var = np.where(n > 1, dev.sum(axis=0) / np.maximum(n - 1, 1), 0.0)
    se = np.where(n > 0, np.sqrt(var / np.maximum(n, 1)), np.nan)
    return np.arange(1, length + 1), mean, se, n


def export_convergence(logs: Sequence[RunLog], axis: str = "total",
                       path: Optional[Union[str, Path]] = None) -> str:
    """Long-format CSV of per-config mean curves; empty cells before the first feasible point."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CONVERGENCE_COLUMNS)
    for cid, group in group_by_config(logs).items():
        idx, mean, se, n = mean_curve(group, axis)
        for i, mu, s, k in zip(idx, mean, se, n):
            if k == 0:
                w.writerow([cid, axis, i, "", "", 0])
            else:
                w.writerow([cid, axis, i, fmt(mu), fmt(s), k])
    text = buf.getvalue()
    if path is not None:
        atomic_write(path, text)
    return text


@dataclass
class ConfigSummary:
    config_id: str
    finals: np.ndarray
    best_seed: int

    def row(self) -> list:
        p, d, o = split_config_id(self.config_id)
        q = np.percentile(self.finals, [0, 25, 50, 75, 100])
        return [self.config_id, p, d, o, len(self.finals)] + [fmt(v) for v in q] + [
            fmt(q[3] - q[1]), self.best_seed, f"{self.config_id}_seed{self.best_seed:03d}.csv"]


def pairwise_tests(logs: Sequence[RunLog], mode: str = "approx") -> List[Tuple[str, int, StatTestResult]]:
    finals: Dict[Tuple[str, int], Dict[str, np.ndarray]] = defaultdict(dict)
    for cid, group in group_by_config(logs).items():
        p, d, o = split_config_id(cid)
        finals[(p, d)][o] = np.array([g.final_best for g in group])
    out = []
    for (p, d), by_opt in sorted(finals.items()):
        for a, b in itertools.combinations(sorted(by_opt), 2):
            out.append((p, d, mann_whitney_u(by_opt[a], by_opt[b], mode=mode, pair=(a, b))))
    return out


def export_summary(logs: Sequence[RunLog], out_dir: Optional[Union[str, Path]] = None):
    """Final-objective distribution per config plus all pairwise optimizer tests.

    Returns ``(summaries, tests, summary_csv, pvalues_csv)``; when
    ``out_dir`` is given both tables are written there.
    """
    summaries = []
    for cid, group in group_by_config(logs).items():
        finals = np.array([g.final_best for g in group])
        summaries.append(ConfigSummary(cid, finals, group[int(np.argmin(finals))].seed))
    tests = pairwise_tests(logs)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for s in summaries:
        w.writerow(s.row())
    summary_csv = buf.getvalue()

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PVALUE_COLUMNS)
    for p, d, t in tests:
        verdict = "significant" if t.significant else "not significantly different"
        w.writerow([p, d, t.pair[0], t.pair[1], fmt(t.u), fmt(t.p_value), t.n, t.m, verdict])
    pvalues_csv = buf.getvalue()

    if out_dir is not None:
        atomic_write(Path(out_dir) / "summary.csv", summary_csv)
        atomic_write(Path(out_dir) / "pvalues.csv", pvalues_csv)
    return summaries, tests, summary_csv, pvalues_csv
