"""Experiment configuration as flat ``key = value`` text.

One file describes one experiment or a matrix of them.  The three axis
keys accept comma-separated lists and expand to their Cartesian product::

    # default benchmark
    parameterization = HT, MMC, CMMC
    dimension = 10, 20, 50
    optimizer = DE, CMA-ES, BO
    seeds = 0-14
    out = results

Recognised keys (all optional):

    parameterization, dimension, optimizer   axis lists
    seeds               list or ranges, e.g. ``0-4, 9``
    budget_per_dim      simulations per dimension (20)
    max_evaluations     cap on total evaluations per run, 0 = none
    penalty_factor, f_worst, v_max
    E1, E2, G12, nu12, void_factor
    load                point-load magnitude
    out                 output directory
    option.<name>       optimizer keyword argument, e.g. ``option.popsize = 20``

Lines starting with ``#`` are comments.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Tuple, Union

from ..constraints import PenaltyConfig
from ..fem import LOAD_MAGNITUDE, MaterialModel
from ..optimizers import OPTIMIZERS
from ..problem import PARAMETERIZATIONS, canonical_name
from ..geometry import HT_LAYOUTS

DEFAULT_SEEDS = tuple(range(15))
OPTIMIZER_NAMES = tuple(OPTIMIZERS)


class ConfigError(ValueError):
    pass


def _optimizer_name(name: str) -> str:
    key = {"CMAES": "CMA-ES", "CMA": "CMA-ES"}.get(name.strip().upper(), name.strip().upper())
    if key not in OPTIMIZERS:
        raise ConfigError(f"unknown optimizer {name!r}")
    return key


@dataclass(frozen=True)
class ExperimentConfig:
    parameterization: str
    dimension: int
    optimizer: str
    seeds: Tuple[int, ...] = DEFAULT_SEEDS
    options: Tuple[Tuple[str, object], ...] = ()
    penalty: PenaltyConfig = PenaltyConfig()
    material: MaterialModel = MaterialModel()
    load: float = LOAD_MAGNITUDE
    budget_per_dim: int = 20
    max_evaluations: int = 0
    out: str = "results"

    def __post_init__(self):
        object.__setattr__(self, "parameterization", canonical_name(self.parameterization))
        object.__setattr__(self, "optimizer", _optimizer_name(self.optimizer))
        p, d = self.parameterization, self.dimension
        if p == "MMC" and d % 5:
            raise ConfigError("MMC dimension must be a multiple of 5")
        if p == "CMMC" and d % 10:
            raise ConfigError("curved MMC dimension must be a multiple of 10")
        if p == "HT" and d not in HT_LAYOUTS:
            raise ConfigError(f"no honeycomb grid for dimension {d}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.budget_per_dim < 1:
            raise ConfigError("budget_per_dim must be positive")

    @property
    def config_id(self) -> str:
        return f"{self.parameterization}-{self.dimension}D-{self.optimizer}"

    @property
    def simulation_budget(self) -> int:
        return self.budget_per_dim * self.dimension

    def with_seeds(self, seeds) -> "ExperimentConfig":
        return replace(self, seeds=tuple(int(s) for s in seeds))


def parse_seeds(text: str) -> Tuple[int, ...]:
    seeds: List[int] = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        lo, _, hi = part.partition("-")
        try:
            seeds.extend(range(int(lo), int(hi or lo) + 1))
        except ValueError:
            raise ConfigError(f"bad seed entry {part!r}") from None
    if not seeds:
        raise ConfigError("empty seed list")
    return tuple(seeds)


def _parse_scalar(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    return text


def _read_pairs(text: str) -> Dict[str, str]:
    pairs: Dict[str, str] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in pairs:
            raise ConfigError(f"line {n}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


_MATERIAL_KEYS = {f.name for f in fields(MaterialModel)}
_PENALTY_KEYS = {f.name for f in fields(PenaltyConfig)}


def parse_config(text: str) -> List[ExperimentConfig]:
    """Parse config text into one ExperimentConfig per matrix cell."""
    pairs = _read_pairs(text)
    axes = {}
    for key, default in (("parameterization", ",".join(PARAMETERIZATIONS)),
                         ("dimension", "10,20,50"),
                         ("optimizer", ",".join(OPTIMIZER_NAMES))):
        axes[key] = [v.strip() for v in pairs.pop(key, default).split(",") if v.strip()]
    common: dict = {}
    material, penalty, options = {}, {}, []
    for key, value in pairs.items():
        if key == "seeds":
            common["seeds"] = parse_seeds(value)
        elif key in ("budget_per_dim", "max_evaluations"):
            common[key] = int(value)
        elif key == "load":
            common["load"] = float(value)
        elif key == "out":
            common["out"] = value
        elif key in _MATERIAL_KEYS:
            material[key] = float(value)
        elif key in _PENALTY_KEYS:
            penalty[key] = float(value)
        elif key.startswith("option."):
            options.append((key[len("option."):], _parse_scalar(value)))
        else:
            raise ConfigError(f"unknown key {key!r}")
    if material:
        common["material"] = MaterialModel(**material)
    if penalty:
        common["penalty"] = PenaltyConfig(**penalty)
    common["options"] = tuple(sorted(options))
    return [
        ExperimentConfig(p, int(d), o, **common)
        for p, d, o in itertools.product(axes["parameterization"], axes["dimension"], axes["optimizer"])
    ]


def load_config(path: Union[str, Path]) -> List[ExperimentConfig]:
    return parse_config(Path(path).read_text())


def format_config(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config` for a single experiment."""
    lines = [
        f"parameterization = {cfg.parameterization}",
        f"dimension = {cfg.dimension}",
        f"optimizer = {cfg.optimizer}",
        "seeds = " + ", ".join(str(s) for s in cfg.seeds),
        f"budget_per_dim = {cfg.budget_per_dim}",
        f"max_evaluations = {cfg.max_evaluations}",
        f"load = {cfg.load!r}",
        f"out = {cfg.out}",
    ]
    lines += [f"{f.name} = {getattr(cfg.material, f.name)!r}" for f in fields(MaterialModel)]
    lines += [f"{f.name} = {getattr(cfg.penalty, f.name)!r}" for f in fields(PenaltyConfig)]
    lines += [f"option.{k} = {v}" for k, v in cfg.options]
    return "\n".join(lines) + "\n"


def default_matrix(seeds=DEFAULT_SEEDS, out: str = "results", **kwargs) -> List[ExperimentConfig]:
    return [
        ExperimentConfig(p, d, o, seeds=tuple(seeds), out=out, **kwargs)
        for p, d, o in itertools.product(PARAMETERIZATIONS, (10, 20, 50), OPTIMIZER_NAMES)
    ]
