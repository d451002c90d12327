"""Ask/tell plumbing shared by the optimizers, and the budgeted run loop."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..constraints import EvaluationCounter, EvaluationRecord


class BudgetExhausted(RuntimeError):
    """Raised when candidates are requested after the simulation budget is spent."""


@dataclass
class BudgetState:
    simulation_budget: int
    simulations_used: int = 0
    total_evaluations: int = 0

    @classmethod
    def for_dimension(cls, dim: int, per_dim: int = 20) -> "BudgetState":
        return cls(per_dim * dim)

    @property
    def exhausted(self) -> bool:
        return self.simulations_used >= self.simulation_budget

    @property
    def remaining(self) -> int:
        return self.simulation_budget - self.simulations_used

    def as_counter(self) -> EvaluationCounter:
        return EvaluationCounter(self.total_evaluations, self.simulations_used)

    def sync(self, counter: EvaluationCounter) -> None:
        self.total_evaluations = counter.total_evaluations
        self.simulations_used = counter.simulations_used


class Optimizer:
    """Minimizer over the unit box with an ask/tell interface.

    Subclasses implement ``_ask`` and ``_tell``; this class enforces the box,
    the one-tell-per-ask protocol and the budget guard.
    """

    name = "base"

    def __init__(self, dim: int, seed: int = 0):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = dim
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.budget: Optional[BudgetState] = None
        self._pending: Optional[NDArray[np.float64]] = None
        self.best_x: Optional[NDArray[np.float64]] = None
        self.best_f = math.inf

    @property
    def population_size(self) -> int:
        raise NotImplementedError

    def ask(self) -> NDArray[np.float64]:
        if self.budget is not None and self.budget.exhausted:
            raise BudgetExhausted("simulation budget is exhausted")
        if self._pending is not None:
            raise RuntimeError("previous candidates have not been told yet")
        x = np.clip(np.atleast_2d(self._ask()), 0.0, 1.0)
        self._pending = x
        return x.copy()

    def tell(self, x: ArrayLike, f: ArrayLike) -> None:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        f = np.asarray(f, dtype=float).reshape(-1)
        if self._pending is None:
            raise RuntimeError("tell() without a preceding ask()")
        if len(f) != len(self._pending) or x.shape != self._pending.shape:
            raise ValueError(f"expected {len(self._pending)} results, got {len(f)}")
        self._pending = None
        k = int(np.argmin(f))
        if f[k] < self.best_f:
            self.best_f = float(f[k])
            self.best_x = x[k].copy()
        self._tell(x, f)

    def _ask(self) -> NDArray[np.float64]:
        raise NotImplementedError

    def _tell(self, x: NDArray[np.float64], f: NDArray[np.float64]) -> None:
        raise NotImplementedError


Objective = Callable[[NDArray[np.float64], EvaluationCounter], EvaluationRecord]


@dataclass
class RunTrace:
    records: List[EvaluationRecord] = field(default_factory=list)
    budget: Optional[BudgetState] = None
    stopped_early: bool = False

    @property
    def best_so_far(self) -> NDArray[np.float64]:
        """Running minimum of the penalized objective, one entry per evaluation."""
        if not self.records:
            return np.empty(0)
        return np.minimum.accumulate([r.f_obj for r in self.records])

    def best_by_simulations(self) -> NDArray[np.float64]:
        """Best feasible objective after each simulation (index k -> k+1 simulations)."""
        out = []
        best = math.inf
        for r in self.records:
            if r.feasible:
                best = min(best, r.f_obj)
                out.append(best)
        return np.asarray(out)

    @property
    def best(self) -> Optional[EvaluationRecord]:
        if not self.records:
            return None
        return min(self.records, key=lambda r: (r.f_obj, r.eval_index))

    @property
    def simulations_used(self) -> int:
        return self.records[-1].sim_index if self.records else 0


def run_optimizer(
    optimizer: Optimizer,
    objective: Objective,
    budget: BudgetState,
    max_evaluations: Optional[int] = None,
) -> RunTrace:
    """Alternate ask/tell until the simulation budget is spent.

    Only feasible evaluations consume budget.  A batch that would overrun
    the budget is evaluated in order and cut at the boundary; the truncated
    batch is not told.  ``max_evaluations`` caps the total number of calls
    as a safeguard against runs that never reach feasibility.
    """
    optimizer.budget = budget
    trace = RunTrace(budget=budget)
    counter = budget.as_counter()
    while not budget.exhausted:
        if max_evaluations is not None and budget.total_evaluations >= max_evaluations:
            trace.stopped_early = True
            break
        batch = optimizer.ask()
        values = []
        for x in batch:
            rec = objective(x, counter)
            budget.sync(counter)
            trace.records.append(rec)
            values.append(rec.f_obj)
            if budget.exhausted:
                break
            if max_evaluations is not None and budget.total_evaluations >= max_evaluations:
                break
        if len(values) == len(batch):
            optimizer.tell(batch, values)
        else:
            break
    if max_evaluations is not None and not budget.exhausted:
        trace.stopped_early = True
    return trace


def minimize(optimizer: Optimizer, fn: Callable[[NDArray[np.float64]], float], max_evaluations: int) -> float:
    """Plain ask/tell loop on an unconstrained function; returns the best value found."""
    used = 0
    while used < max_evaluations:
        batch = optimizer.ask()
        if used + len(batch) > max_evaluations:
            # partial batch: evaluate for the record but do not tell
            for x in batch[: max_evaluations - used]:
                f = float(fn(x))
                if f < optimizer.best_f:
                    optimizer.best_f, optimizer.best_x = f, x.copy()
            break
        optimizer.tell(batch, [fn(x) for x in batch])
        used += len(batch)
    return optimizer.best_f
