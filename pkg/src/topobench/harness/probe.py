"""Feasible-fraction estimates of the design space (constraints only, no FEM)."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats as sps

from ..constraints import is_feasible
from ..problem import canonical_name, make_decoder


@dataclass(frozen=True)
class ProbeResult:
    parameterization: str
    dimension: int
    mode: str  # "monte-carlo" or "exhaustive"
    n_samples: int
    n_feasible: int
    ci_low: float
    ci_high: float

    @property
    def fraction(self) -> float:
        return self.n_feasible / self.n_samples


def _wilson(k: int, n: int, confidence: float = 0.95):
    ci = sps.binomtest(k, n).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def probe_feasible_fraction(parameterization: str, dimension: int, n_samples: Optional[int] = None,
                            seed: int = 0, exhaustive: bool = False, chunk: int = 4096) -> ProbeResult:
    """Fraction of the unit box that decodes to a feasible design.

    Monte Carlo mode samples ``n_samples`` uniform vectors.  Exhaustive mode
    (honeycomb only) checks every on/off tile pattern once.
    """
    param = canonical_name(parameterization)
    decode = make_decoder(param, dimension)
    if exhaustive:
        if param != "HT":
            raise ValueError("exhaustive mode needs the binary honeycomb parameterization")
        patterns = itertools.product((0.25, 0.75), repeat=dimension)
        hits = total = 0
        for x in patterns:
            hits += is_feasible(decode(np.array(x)).raster)
            total += 1
        return ProbeResult(param, dimension, "exhaustive", total, hits, *_wilson(hits, total))
    if n_samples is None or n_samples < 1:
        raise ValueError("n_samples must be a positive integer")
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < n_samples:
        block = rng.random((min(chunk, n_samples - done), dimension))
        hits += sum(is_feasible(decode(x).raster) for x in block)
        done += len(block)
    return ProbeResult(param, dimension, "monte-carlo", n_samples, hits, *_wilson(hits, n_samples))
