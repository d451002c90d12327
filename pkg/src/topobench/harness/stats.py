"""Two-sided Mann-Whitney U test."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats as sps

SIGNIFICANCE = 0.05


@dataclass(frozen=True)
class StatTestResult:
    pair: Tuple[str, str]
    u: float
    p_value: float
    n: int
    m: int

    @property
    def significant(self) -> bool:
        return self.p_value < SIGNIFICANCE


def midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with tied values sharing the mean of their positions."""
    return sps.rankdata(values, method="average")


def _approx_p(u: float, n: int, m: int, ranks: np.ndarray) -> float:
    N = n + m
    _, counts = np.unique(ranks, return_counts=True)
    tie = float(np.sum(counts**3 - counts))
    var = n * m / 12.0 * ((N + 1) - tie / (N * (N - 1))) if N > 1 else 0.0
    if var <= 0:
        return 1.0
    z = max(abs(u - n * m / 2.0) - 0.5, 0.0) / math.sqrt(var)
    return min(1.0, float(2.0 * sps.norm.sf(z)))


def _exact_p(ranks: np.ndarray, n: int) -> float:
    # doubled midranks are integers; count size-n subsets by rank sum
    r2 = np.rint(2 * ranks).astype(int)
    total = int(r2.sum())
    ways = np.zeros((n + 1, total + 1), dtype=object)
    ways[0, 0] = 1
    for r in r2:
        for k in range(n, 0, -1):
            ways[k, r:] = ways[k, r:] + ways[k - 1, : total + 1 - r]
    dist = ways[n]
    centre2 = n * (len(ranks) + 1)  # twice the null mean of the rank sum
    observed = abs(int(r2[:n].sum()) - centre2)
    sums = np.arange(total + 1)
    extreme = np.abs(2 * sums - 2 * centre2) >= 2 * observed
    hit = sum(dist[extreme])
    return float(hit) / float(sum(dist))


def mann_whitney_u(
    a: Sequence[float],
    b: Sequence[float],
    mode: str = "approx",
    pair: Optional[Tuple[str, str]] = None,
) -> StatTestResult:
    """Two-sided test of ``a`` against ``b``.

    ``mode="approx"`` uses the normal approximation with tie and continuity
    corrections; ``mode="exact"`` counts every assignment of the pooled
    midranks.  ``U`` is reported for the first sample.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    n, m = a.size, b.size
    ranks = midranks(np.concatenate([a, b]))
    u = float(ranks[:n].sum() - n * (n + 1) / 2.0)
    if mode == "approx":
        p = _approx_p(u, n, m, ranks)
    elif mode == "exact":
        p = _exact_p(ranks, n)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return StatTestResult(pair or ("A", "B"), u, min(1.0, p), n, m)
