"""Gaussian-process regression with an ARD Matern 5/2 kernel."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray
from scipy import linalg, optimize
from scipy.spatial.distance import cdist

SQRT5 = math.sqrt(5.0)

# bounds on log lengthscale, log signal variance, log noise variance
LOG_LS_BOUNDS = (math.log(1e-2), math.log(20.0))
LOG_SF_BOUNDS = (math.log(1e-2), math.log(1e2))
LOG_SN_BOUNDS = (math.log(1e-6), math.log(1.0))


def _scaled_sqdist(a, b, ls):
    return cdist(a / ls, b / ls, "sqeuclidean")


def matern52(a: NDArray, b: NDArray, ls: NDArray, sf2: float) -> NDArray:
    r2 = _scaled_sqdist(a, b, ls)
    r = np.sqrt(np.maximum(r2, 0.0))
    return sf2 * (1.0 + SQRT5 * r + 5.0 / 3.0 * r2) * np.exp(-SQRT5 * r)


@dataclass
class GPHyper:
    log_ls: NDArray[np.float64]
    log_sf2: float
    log_sn2: float

    def pack(self) -> NDArray[np.float64]:
        return np.concatenate([self.log_ls, [self.log_sf2, self.log_sn2]])

    @classmethod
    def unpack(cls, theta) -> "GPHyper":
        return cls(np.asarray(theta[:-2], dtype=float), float(theta[-2]), float(theta[-1]))


def neg_log_marginal_likelihood(theta, x, y):
    """Negative log evidence and its gradient in the log-parameters."""
    h = GPHyper.unpack(theta)
    ls = np.exp(h.log_ls)
    sf2, sn2 = math.exp(h.log_sf2), math.exp(h.log_sn2)
    n = len(y)
    r2 = _scaled_sqdist(x, x, ls)
    r = np.sqrt(np.maximum(r2, 0.0))
    e = np.exp(-SQRT5 * r)
    kf = sf2 * (1.0 + SQRT5 * r + 5.0 / 3.0 * r2) * e
    k = kf + (sn2 + 1e-10) * np.eye(n)
    try:
        c = linalg.cho_factor(k, lower=True, check_finite=False)
    except linalg.LinAlgError:
        return 1e25, np.zeros_like(theta)
    alpha = linalg.cho_solve(c, y, check_finite=False)
    nll = 0.5 * y @ alpha + np.sum(np.log(np.diag(c[0]))) + 0.5 * n * math.log(2 * math.pi)

    k_inv = linalg.cho_solve(c, np.eye(n), check_finite=False)
    w = np.outer(alpha, alpha) - k_inv
    wd = w * (sf2 * 5.0 / 3.0 * (1.0 + SQRT5 * r) * e)
    # sum_ab wd_ab (x_ak - x_bk)^2 expanded to avoid an (n, n, d) array
    xs = x / ls
    row = wd.sum(axis=1)
    g_ls = 2.0 * (row @ (xs * xs)) - 2.0 * np.einsum("ak,ak->k", xs, wd @ xs)
    g_sf = np.sum(w * kf)
    g_sn = sn2 * np.trace(w)
    grad = -0.5 * np.concatenate([g_ls, [g_sf, g_sn]])
    return float(nll), grad


class GaussianProcess:
    """Zero-mean GP on standardized targets with marginal-likelihood fitting."""

    def __init__(self, dim: int, hyper: Optional[GPHyper] = None):
        self.dim = dim
        self.hyper = hyper or GPHyper(np.full(dim, math.log(0.5)), 0.0, math.log(1e-3))
        self.x = None
        self.y = None
        self._chol = None
        self._alpha = None

    def bounds(self):
        return [LOG_LS_BOUNDS] * self.dim + [LOG_SF_BOUNDS, LOG_SN_BOUNDS]

    def fit(self, x, y, rng: Optional[np.random.Generator] = None, restarts: int = 2, maxiter: int = 100):
        """Fit hyperparameters from the current value plus random restarts."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        starts = [self.hyper.pack()]
        if rng is not None:
            lo, hi = np.array(self.bounds()).T
            for _ in range(restarts):
                starts.append(rng.uniform(lo, hi))
        best = None
        for t0 in starts:
            res = optimize.minimize(
                neg_log_marginal_likelihood, t0, args=(x, y), jac=True, method="L-BFGS-B",
                bounds=self.bounds(), options={"maxiter": maxiter},
            )
            if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
                best = res
        if best is not None:
            self.hyper = GPHyper.unpack(best.x)
        self.condition(x, y)
        return self

    def condition(self, x, y):
        """Condition on data with the current hyperparameters."""
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        h = self.hyper
        k = matern52(self.x, self.x, np.exp(h.log_ls), math.exp(h.log_sf2))
        k[np.diag_indices_from(k)] += math.exp(h.log_sn2) + 1e-10
        jitter = 1e-10
        while True:
            try:
                self._chol = linalg.cho_factor(k, lower=True, check_finite=False)
                break
            except linalg.LinAlgError:
                jitter *= 10
                if jitter > 1e-2:
                    raise
                k[np.diag_indices_from(k)] += jitter
        self._alpha = linalg.cho_solve(self._chol, self.y, check_finite=False)
        return self

    def predict(self, xq):
        """Posterior mean and standard deviation of the latent function."""
        xq = np.atleast_2d(np.asarray(xq, dtype=float))
        h = self.hyper
        sf2 = math.exp(h.log_sf2)
        ks = matern52(xq, self.x, np.exp(h.log_ls), sf2)
        mu = ks @ self._alpha
        v = linalg.solve_triangular(self._chol[0], ks.T, lower=True, check_finite=False)
        var = np.maximum(sf2 - np.sum(v * v, axis=0), 1e-18)
        return mu, np.sqrt(var)

    def predict_with_grad(self, xq):
        """Mean, standard deviation and their gradients at a single point."""
        xq = np.asarray(xq, dtype=float).reshape(1, -1)
        h = self.hyper
        ls = np.exp(h.log_ls)
        sf2 = math.exp(h.log_sf2)
        diff = (xq - self.x) / ls  # (n, d)
        r = np.sqrt(np.sum(diff * diff, axis=1))
        e = np.exp(-SQRT5 * r)
        ks = sf2 * (1.0 + SQRT5 * r + 5.0 / 3.0 * r * r) * e
        # dk/dx = -sf2 * 5/3 * (1 + sqrt5 r) e * (x - x_i) / ls^2
        dks = -(sf2 * 5.0 / 3.0 * (1.0 + SQRT5 * r) * e)[:, None] * diff / ls
        mu = float(ks @ self._alpha)
        dmu = self._alpha @ dks
        v = linalg.solve_triangular(self._chol[0], ks, lower=True, check_finite=False)
        dv = linalg.solve_triangular(self._chol[0], dks, lower=True, check_finite=False)
        var = sf2 - float(v @ v)
        if var <= 1e-18:
            return mu, 1e-9, dmu, np.zeros_like(dmu)
        sd = math.sqrt(var)
        dsd = -(v @ dv) / sd
        return mu, sd, dmu, dsd

    @property
    def noise_std(self) -> float:
        return math.exp(0.5 * self.hyper.log_sn2)
