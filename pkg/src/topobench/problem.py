"""The cantilever benchmark problem: decoder + constraints + compliance."""
from __future__ import annotations

from collections import OrderedDict
from typing import Callable, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .constraints import EvaluationCounter, EvaluationRecord, PenaltyConfig, penalized_objective
from .fem import LOAD_MAGNITUDE, MaterialModel, compliance_of
from .geometry import DEFAULT_DOMAIN, DesignDomain, MaterialLayout, build_ht_grid, decode_cmmc, decode_ht, decode_mmc

PARAMETERIZATIONS = ("HT", "MMC", "CMMC")
DIMENSIONS = (10, 20, 50)


def make_decoder(parameterization: str, dim: int,
                 domain: DesignDomain = DEFAULT_DOMAIN) -> Callable[[ArrayLike], MaterialLayout]:
    p = parameterization.upper().replace("-", "").replace("_", "")
    if p == "HT":
        grid = build_ht_grid(dim, domain)
        return lambda x: decode_ht(x, grid)
    if p == "MMC":
        if dim % 5:
            raise ValueError("MMC dimension must be a multiple of 5")
        return lambda x: decode_mmc(x, domain)
    if p in ("CMMC", "CURVEDMMC"):
        if dim % 10:
            raise ValueError("curved MMC dimension must be a multiple of 10")
        return lambda x: decode_cmmc(x, domain)
    raise ValueError(f"unknown parameterization {parameterization!r}")


def canonical_name(parameterization: str) -> str:
    p = parameterization.upper().replace("-", "").replace("_", "")
    if p == "CURVEDMMC":
        p = "CMMC"
    if p not in PARAMETERIZATIONS:
        raise ValueError(f"unknown parameterization {parameterization!r}")
    return p


class CantileverProblem:
    """Penalized compliance of a parameterized cantilever design.

    Calling the problem evaluates one design vector against a shared
    counter.  Compliance values are memoized by raster, which only saves
    time: a repeated feasible design is still charged a simulation.
    """

    def __init__(self, parameterization: str, dim: int, penalty: PenaltyConfig = PenaltyConfig(),
                 material: MaterialModel = MaterialModel(), domain: DesignDomain = DEFAULT_DOMAIN,
                 load: float = LOAD_MAGNITUDE, cache_size: int = 4096):
        self.parameterization = canonical_name(parameterization)
        self.dim = dim
        self.penalty = penalty
        self.material = material
        self.domain = domain
        self.load = load
        self.decode = make_decoder(self.parameterization, dim, domain)
        self.fem_calls = 0
        self._cache: OrderedDict[bytes, float] = OrderedDict()
        self._cache_size = cache_size

    def compliance(self, raster: NDArray[np.bool_]) -> float:
        key = np.packbits(raster).tobytes()
        if key in self._cache:
            self._cache.move_to_end(key)
            return self._cache[key]
        self.fem_calls += 1
        c = compliance_of(raster, self.material, self.domain, self.load)
        self._cache[key] = c
        if len(self._cache) > self._cache_size:
            self._cache.popitem(last=False)
        return c

    def __call__(self, x: ArrayLike, counter: Optional[EvaluationCounter] = None) -> EvaluationRecord:
        return penalized_objective(x, self.decode, self.compliance, self.penalty, counter)
