from __future__ import annotations

import numpy as np

from .base import Optimizer


class DifferentialEvolution(Optimizer):
    """DE/best/1/bin with dithered mutation and generation-wise selection.

    Defaults follow the common library settings: population ``15 * dim``,
    crossover rate 0.7 and a mutation factor drawn from ``U(0.5, 1)`` once per
    generation.  A trial replaces its parent when it is not worse.
    """

    name = "DE"

    def __init__(self, dim, seed=0, popsize=None, mutation=(0.5, 1.0), crossover=0.7):
        super().__init__(dim, seed)
        self.popsize = popsize if popsize is not None else 15 * dim
        if self.popsize < 4:
            raise ValueError("DE needs at least 4 individuals")
        self.mutation = mutation
        self.crossover = crossover
        self.population = None
        self.fitness = None
        self.generation = 0

    @property
    def population_size(self):
        return self.popsize

    def _ask(self):
        if self.population is None:
            return self.rng.random((self.popsize, self.dim))
        n, d = self.popsize, self.dim
        f = self.rng.uniform(*self.mutation)
        best = self.population[np.argmin(self.fitness)]
        trials = np.empty((n, d))
        idx = np.arange(n)
        for i in range(n):
            r1, r2 = self.rng.choice(np.delete(idx, i), 2, replace=False)
            mutant = best + f * (self.population[r1] - self.population[r2])
            cross = self.rng.random(d) < self.crossover
            cross[self.rng.integers(d)] = True
            trials[i] = np.where(cross, mutant, self.population[i])
        return trials

    def _tell(self, x, f):
        if self.population is None:
            self.population = x.copy()
            self.fitness = f.copy()
            return
        better = f <= self.fitness
        self.population[better] = x[better]
        self.fitness[better] = f[better]
        self.generation += 1
