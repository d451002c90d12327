from __future__ import annotations

import math

import numpy as np

from .base import Optimizer


class CMAES(Optimizer):
    """(mu/mu_w, lambda) CMA-ES with cumulative step-size adaptation.

    Samples are clipped to the unit box before evaluation and the clipped
    (repaired) points are what enter the update, so every told vector is a
    vector that was actually evaluated.
    """

    name = "CMA-ES"

    def __init__(self, dim, seed=0, sigma0=0.25, x0=None, popsize=None):
        super().__init__(dim, seed)
        n = dim
        self.lam = popsize if popsize is not None else 4 + int(math.floor(3 * math.log(n)))
        self.mu = self.lam // 2
        w = math.log(self.mu + 0.5) - np.log(np.arange(1, self.mu + 1))
        self.weights = w / w.sum()
        self.mu_eff = 1.0 / np.sum(self.weights**2)

        self.c_sigma = (self.mu_eff + 2) / (n + self.mu_eff + 5)
        self.d_sigma = 1 + 2 * max(0.0, math.sqrt((self.mu_eff - 1) / (n + 1)) - 1) + self.c_sigma
        self.c_c = (4 + self.mu_eff / n) / (n + 4 + 2 * self.mu_eff / n)
        self.c_1 = 2 / ((n + 1.3) ** 2 + self.mu_eff)
        self.c_mu = min(1 - self.c_1, 2 * (self.mu_eff - 2 + 1 / self.mu_eff) / ((n + 2) ** 2 + self.mu_eff))
        self.chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))

        self.mean = np.full(n, 0.5) if x0 is None else np.asarray(x0, dtype=float).copy()
        self.sigma = float(sigma0)
        self.C = np.eye(n)
        self.B = np.eye(n)
        self.D = np.ones(n)
        self.p_sigma = np.zeros(n)
        self.p_c = np.zeros(n)
        self.generation = 0

    @property
    def population_size(self):
        return self.lam

    def _ask(self):
        z = self.rng.standard_normal((self.lam, self.dim))
        y = (z * self.D) @ self.B.T
        return self.mean + self.sigma * y

    def _tell(self, x, f):
        n = self.dim
        order = np.argsort(f, kind="stable")
        y = (x[order[: self.mu]] - self.mean) / self.sigma
        y_w = self.weights @ y
        self.mean = self.mean + self.sigma * y_w

        inv_sqrt_c = self.B @ np.diag(1.0 / self.D) @ self.B.T
        self.p_sigma = (1 - self.c_sigma) * self.p_sigma + math.sqrt(
            self.c_sigma * (2 - self.c_sigma) * self.mu_eff
        ) * (inv_sqrt_c @ y_w)
        self.generation += 1
        ps_norm = np.linalg.norm(self.p_sigma)
        h_sigma = ps_norm / math.sqrt(1 - (1 - self.c_sigma) ** (2 * self.generation)) < (1.4 + 2 / (n + 1)) * self.chi_n
        self.p_c = (1 - self.c_c) * self.p_c + h_sigma * math.sqrt(self.c_c * (2 - self.c_c) * self.mu_eff) * y_w

        delta_h = (1 - h_sigma) * self.c_c * (2 - self.c_c)
        rank_mu = (y.T * self.weights) @ y
        self.C = (
            (1 - self.c_1 - self.c_mu) * self.C
            + self.c_1 * (np.outer(self.p_c, self.p_c) + delta_h * self.C)
            + self.c_mu * rank_mu
        )
        self.sigma *= math.exp((self.c_sigma / self.d_sigma) * (ps_norm / self.chi_n - 1))

        self.C = np.triu(self.C) + np.triu(self.C, 1).T
        evals, self.B = np.linalg.eigh(self.C)
        self.D = np.sqrt(np.maximum(evals, 1e-20))
