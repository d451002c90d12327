from __future__ import annotations

import math

import numpy as np
from scipy import optimize, stats
from scipy.stats import qmc

from .base import Optimizer
from .gp import GaussianProcess


def expected_improvement(mu, sd, best):
    """EI for minimization."""
    sd = np.maximum(sd, 1e-12)
    z = (best - mu) / sd
    return (best - mu) * stats.norm.cdf(z) + sd * stats.norm.pdf(z)


def warp_targets(y):
    """Standardize, apply a fitted Yeo-Johnson power transform, standardize again.

    Returns ``None`` when the targets carry no information (all equal).
    """
    y = np.asarray(y, dtype=float)
    sd = y.std()
    if not np.isfinite(sd) or sd <= 1e-12 * max(1.0, abs(y.mean())):
        return None
    z = (y - y.mean()) / sd
    try:
        z, _ = stats.yeojohnson(z)
    except (ValueError, FloatingPointError):
        pass
    sd = z.std()
    if not np.isfinite(sd) or sd <= 1e-12:
        return None
    return (z - z.mean()) / sd


class BayesianOptimization(Optimizer):
    """Sequential GP/EI Bayesian optimization on the unit box.

    A Latin-hypercube design of ``2 * dim`` points comes first, then one EI
    maximizer per ask.  Targets are power-warped before fitting.

    To bound the cost per step, hyperparameters get a multistart fit every
    ``restart_every`` steps and a warm-started refit every ``refit_every``
    steps; in between the GP is only conditioned on the new data.  Training
    sets larger than ``max_train`` keep the best half and the most recent
    rest.
    """

    name = "BO"

    def __init__(self, dim, seed=0, n_init=None, max_train=150, n_candidates=2000,
                 n_local=5, refit_restarts=2, restart_every=20, refit_every=5, warm_maxiter=30):
        super().__init__(dim, seed)
        self.n_init = n_init if n_init is not None else 2 * dim
        self.max_train = max_train
        self.n_candidates = n_candidates
        self.n_local = n_local
        self.refit_restarts = refit_restarts
        self.restart_every = restart_every
        self.refit_every = refit_every
        self.warm_maxiter = warm_maxiter
        self.gp = GaussianProcess(dim)
        self.X = np.empty((0, dim))
        self.Y = np.empty(0)
        self.iteration = 0

    @property
    def population_size(self):
        return 1

    def _training_set(self):
        n = len(self.Y)
        if n <= self.max_train:
            return self.X, self.Y
        k = self.max_train // 2
        best = np.argsort(self.Y, kind="stable")[:k]
        rest = np.setdiff1d(np.arange(n), best)[-(self.max_train - k):]
        idx = np.sort(np.concatenate([best, rest]))
        return self.X[idx], self.Y[idx]

    def _ask(self):
        if len(self.Y) == 0:
            sampler = qmc.LatinHypercube(d=self.dim, seed=self.rng)
            return sampler.random(self.n_init)
        x, y = self._training_set()
        z = warp_targets(y)
        if z is None:
            return self.rng.random((1, self.dim))
        if self.iteration % self.restart_every == 0:
            self.gp.fit(x, z, rng=self.rng, restarts=self.refit_restarts, maxiter=100)
        elif self.iteration % self.refit_every == 0:
            # warm-started refit from the previous hyperparameters
            self.gp.fit(x, z, maxiter=self.warm_maxiter)
        else:
            self.gp.condition(x, z)
        return self._maximize_ei(x, z)[None, :]

    def _maximize_ei(self, x, z):
        best = z.min()
        d = self.dim
        # global candidates plus Gaussian perturbations of the incumbents
        top = x[np.argsort(z, kind="stable")[: min(5, len(z))]]
        n_local_cand = self.n_candidates // 2
        local = top[self.rng.integers(len(top), size=n_local_cand)]
        local = np.clip(local + self.rng.normal(scale=0.05, size=local.shape), 0, 1)
        cand = np.vstack([self.rng.random((self.n_candidates - n_local_cand, d)), local])
        mu, sd = self.gp.predict(cand)
        ei = expected_improvement(mu, sd, best)

        def neg_log_ei(v):
            m, s, dm, ds = self.gp.predict_with_grad(v)
            s = max(s, 1e-12)
            z = (best - m) / s
            # log EI in a numerically safe form, gradient via dEI/dm = -Phi, dEI/ds = phi
            cdf, pdf = stats.norm.cdf(z), stats.norm.pdf(z)
            ei = s * (z * cdf + pdf)
            if ei <= 1e-300:
                return 690.0, np.zeros_like(v)
            grad = (-cdf * dm + pdf * ds) / ei
            return -math.log(ei), -grad

        starts = cand[np.argsort(-ei, kind="stable")[: self.n_local]]
        x_best, f_best = starts[0], neg_log_ei(starts[0])[0]
        for s0 in starts:
            res = optimize.minimize(neg_log_ei, s0, jac=True, method="L-BFGS-B", bounds=[(0.0, 1.0)] * d,
                                    options={"maxiter": 50})
            if res.fun < f_best:
                x_best, f_best = res.x, res.fun
        return np.clip(x_best, 0.0, 1.0)

    def _tell(self, x, f):
        self.X = np.vstack([self.X, x])
        self.Y = np.concatenate([self.Y, f])
        if len(self.Y) > self.n_init or len(x) == 1:
            self.iteration += 1
