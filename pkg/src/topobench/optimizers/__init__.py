from .base import BudgetExhausted, BudgetState, Optimizer, RunTrace, minimize, run_optimizer
from .bo import BayesianOptimization
from .cmaes import CMAES
from .de import DifferentialEvolution

OPTIMIZERS = {
    "DE": DifferentialEvolution,
    "CMA-ES": CMAES,
    "BO": BayesianOptimization,
}


def make_optimizer(name: str, dim: int, seed: int = 0, **options) -> Optimizer:
    key = {"CMAES": "CMA-ES", "CMA": "CMA-ES"}.get(name.upper(), name.upper())
    try:
        cls = OPTIMIZERS[key]
    except KeyError:
        raise ValueError(f"unknown optimizer {name!r}; choose from {sorted(OPTIMIZERS)}") from None
    return cls(dim, seed=seed, **options)


__all__ = [
    "BudgetExhausted", "BudgetState", "Optimizer", "RunTrace", "minimize", "run_optimizer",
    "BayesianOptimization", "CMAES", "DifferentialEvolution", "OPTIMIZERS", "make_optimizer",
]
