import math

import numpy as np
import pytest

from topobench.constraints import EvaluationRecord
from topobench.optimizers import (
    CMAES,
    BayesianOptimization,
    BudgetExhausted,
    BudgetState,
    DifferentialEvolution,
    make_optimizer,
    minimize,
    run_optimizer,
)
from topobench.optimizers.bo import expected_improvement, warp_targets
from topobench.optimizers.gp import GaussianProcess, GPHyper, neg_log_marginal_likelihood
from topobench.problem import CantileverProblem


def sphere(x):
    return float(np.sum(np.asarray(x) ** 2))


def fake_objective(feasible_after=0, value=sphere):
    """Objective stub: the first ``feasible_after`` calls are infeasible."""

    def objective(x, counter):
        counter.total_evaluations += 1
        feasible = counter.total_evaluations > feasible_after
        if feasible:
            counter.simulations_used += 1
        f = value(x) if feasible else 600.0
        return EvaluationRecord(
            x=np.asarray(x, dtype=float).copy(), feasible=feasible, volume_fraction=0.1,
            connectivity=0.0 if feasible else 0.1, g_aggregate=0.0 if feasible else 100.0,
            f_raw=f if feasible else None, f_obj=f,
            eval_index=counter.total_evaluations, sim_index=counter.simulations_used,
        )

    return objective


# --- ask sizes and protocol ----------------------------------------------------


@pytest.mark.parametrize("dim, size", [(10, 150), (20, 300), (50, 750)])
def test_de_population_sizes(dim, size):
    opt = DifferentialEvolution(dim)
    assert opt.population_size == size
    x = opt.ask()
    assert x.shape == (size, dim)


@pytest.mark.parametrize("dim, size", [(10, 10), (20, 12), (50, 15)])
def test_cmaes_population_sizes(dim, size):
    assert CMAES(dim).population_size == size
    assert CMAES(dim).ask().shape == (size, dim)


def test_cmaes_first_ask_centred_and_clipped():
    opt = CMAES(10, seed=4, popsize=4000)
    x = opt.ask()
    assert x.min() >= 0.0 and x.max() <= 1.0
    assert np.allclose(x.mean(axis=0), 0.5, atol=0.02)
    # unclipped band |z| < 0.25 keeps its normal spread
    inner = x[(np.abs(x - 0.5) < 0.25).all(axis=1)]
    assert len(inner) > 0
    assert np.mean(x == 0.0) == pytest.approx(np.mean(x == 1.0), abs=0.01)


def test_bo_batch_size_one_after_initial_design():
    opt = BayesianOptimization(3, seed=0)
    first = opt.ask()
    assert first.shape == (6, 3)
    # one sample per stratum in every coordinate
    strata = np.sort(np.floor(first * 6), axis=0)
    assert np.array_equal(strata, np.tile(np.arange(6.0)[:, None], (1, 3)))
    opt.tell(first, [sphere(v) for v in first])
    for _ in range(3):
        x = opt.ask()
        assert x.shape == (1, 3)
        opt.tell(x, [sphere(x[0])])


def test_ask_after_exhaustion_is_illegal():
    opt = CMAES(2)
    opt.budget = BudgetState(5, simulations_used=5)
    with pytest.raises(BudgetExhausted):
        opt.ask()


def test_mismatched_tell_rejected():
    opt = CMAES(3)
    x = opt.ask()
    with pytest.raises(ValueError):
        opt.tell(x, np.zeros(len(x) - 1))


def test_double_ask_rejected():
    opt = DifferentialEvolution(2)
    opt.ask()
    with pytest.raises(RuntimeError):
        opt.ask()


def test_make_optimizer_names():
    assert isinstance(make_optimizer("cmaes", 2), CMAES)
    assert isinstance(make_optimizer("DE", 2), DifferentialEvolution)
    with pytest.raises(ValueError):
        make_optimizer("nelder-mead", 2)


# --- selection rules ------------------------------------------------------------


def _de_after_init(values):
    opt = DifferentialEvolution(2, seed=1, popsize=len(values))
    x = opt.ask()
    opt.tell(x, values)
    return opt


def test_de_child_replaces_worse_parent():
    opt = _de_after_init([3.0, 2.0, 1.0, 5.0])
    trial = opt.ask()
    opt.tell(trial, [0.5, 9.0, 9.0, 9.0])
    assert np.array_equal(opt.population[0], trial[0])
    assert opt.fitness[0] == 0.5
    assert opt.fitness[1] == 2.0


def test_de_child_replaces_equal_parent():
    opt = _de_after_init([3.0, 2.0, 1.0, 5.0])
    parents = opt.population.copy()
    trial = opt.ask()
    opt.tell(trial, [3.0, 2.0, 1.0, 5.0])
    assert np.array_equal(opt.population, trial)
    assert not np.array_equal(parents, trial)


def test_de_best_non_increasing():
    opt = DifferentialEvolution(5, seed=2, popsize=20)
    best = math.inf
    for _ in range(30):
        x = opt.ask()
        opt.tell(x, [sphere(v - 0.3) for v in x])
        cur = opt.fitness.min()
        assert cur <= best
        best = cur


def test_cmaes_step_size_shrinks_on_sphere():
    opt = CMAES(5, seed=0)
    minimize(opt, lambda x: sphere(x - 0.4), 600)
    assert opt.sigma < 0.05
    assert np.allclose(opt.mean, 0.4, atol=1e-2)


# --- sanity oracles --------------------------------------------------------------


@pytest.mark.parametrize("name", ["CMA-ES", "DE"])
def test_sphere_on_box(name):
    hits = sum(minimize(make_optimizer(name, 10, seed=s), sphere, 2000) < 1e-6 for s in range(15))
    assert hits >= 14


@pytest.mark.parametrize("name, options", [("CMA-ES", {}), ("DE", {"popsize": 20})])
def test_shifted_sphere_interior_optimum(name, options):
    # optimum away from the box faces, so clipping cannot help
    f = lambda x: sphere(x - 0.3)
    hits = sum(minimize(make_optimizer(name, 10, seed=s, **options), f, 2000) < 1e-6 for s in range(15))
    assert hits >= 14


def test_bo_bowl_proposal():
    hits = 0
    for s in range(10):
        opt = BayesianOptimization(2, seed=s)
        minimize(opt, lambda x: sphere(x - 0.5), 30)
        hits += np.linalg.norm(opt.ask()[0] - 0.5) < 0.15
    assert hits >= 8


def test_bo_all_equal_falls_back_to_uniform():
    opt = BayesianOptimization(3, seed=5, n_init=4)
    x = opt.ask()
    opt.tell(x, [7.0] * 4)
    props = []
    for _ in range(20):
        p = opt.ask()
        props.append(p[0])
        opt.tell(p, [7.0])
    props = np.array(props)
    assert props.shape == (20, 3)
    assert props.min() >= 0 and props.max() <= 1
    assert np.ptp(props, axis=0).min() > 0.3
    assert warp_targets(np.full(5, 2.0)) is None


# --- GP and acquisition ----------------------------------------------------------


def test_gp_interpolates_observations():
    rng = np.random.default_rng(0)
    x = rng.random((15, 2))
    y = np.sin(3 * x[:, 0]) + x[:, 1] ** 2
    gp = GaussianProcess(2)
    gp.fit(x, (y - y.mean()) / y.std(), rng=rng)
    mu, sd = gp.predict(x)
    yz = (y - y.mean()) / y.std()
    assert np.abs(mu - yz).max() < 3 * gp.noise_std + 1e-6
    assert np.all(sd >= 0)


def test_nll_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    x = rng.random((12, 3))
    y = rng.normal(size=12)
    theta = GPHyper(np.log([0.3, 0.6, 1.2]), 0.2, np.log(1e-2)).pack()
    _, grad = neg_log_marginal_likelihood(theta, x, y)
    eps = 1e-6
    for k in range(len(theta)):
        e = np.zeros_like(theta)
        e[k] = eps
        fd = (neg_log_marginal_likelihood(theta + e, x, y)[0] - neg_log_marginal_likelihood(theta - e, x, y)[0]) / (2 * eps)
        assert grad[k] == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_predict_gradients_match_finite_differences():
    rng = np.random.default_rng(2)
    x = rng.random((10, 2))
    gp = GaussianProcess(2, GPHyper(np.log([0.4, 0.7]), 0.0, np.log(1e-4)))
    gp.condition(x, np.cos(4 * x[:, 0]) - x[:, 1])
    q = np.array([[0.37, 0.61]])
    mu, sd, dmu, dsd = gp.predict_with_grad(q)
    eps = 1e-6
    for k in range(2):
        e = np.zeros((1, 2))
        e[0, k] = eps
        mp, sp = gp.predict(q + e)
        mm, sm = gp.predict(q - e)
        assert dmu[k] == pytest.approx((mp - mm)[0] / (2 * eps), rel=1e-5, abs=1e-8)
        assert dsd[k] == pytest.approx((sp - sm)[0] / (2 * eps), rel=1e-5, abs=1e-8)


def test_expected_improvement_values():
    assert expected_improvement(np.array([0.0]), np.array([1.0]), 0.0)[0] == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert expected_improvement(np.array([1.0]), np.array([0.0]), 0.0)[0] == 0.0
    assert expected_improvement(np.array([-2.0]), np.array([0.0]), 0.0)[0] == pytest.approx(2.0)


# --- budgeted runs ----------------------------------------------------------------


@pytest.mark.parametrize("name", ["DE", "CMA-ES", "BO"])
def test_budget_exact_with_truncated_batches(name):
    opt = make_optimizer(name, 3, seed=0)
    trace = run_optimizer(opt, fake_objective(feasible_after=7), BudgetState(23))
    assert trace.simulations_used == 23
    assert trace.records[-1].sim_index == 23
    assert len(trace.records) == 30
    sims = [r.sim_index for r in trace.records]
    assert sims == sorted(sims)
    assert [r.eval_index for r in trace.records] == list(range(1, 31))


def test_infeasible_prefix_charges_nothing():
    opt = DifferentialEvolution(2, seed=0, popsize=10)
    trace = run_optimizer(opt, fake_objective(feasible_after=50), BudgetState(40))
    assert trace.records[49].sim_index == 0
    assert trace.records[49].eval_index == 50
    assert trace.records[50].sim_index == 1
    assert trace.simulations_used == 40


def test_max_evaluations_cap():
    opt = CMAES(2, seed=0)
    trace = run_optimizer(opt, fake_objective(feasible_after=10**9), BudgetState(40), max_evaluations=25)
    assert len(trace.records) == 25
    assert trace.stopped_early
    assert trace.simulations_used == 0


@pytest.mark.parametrize("name", ["DE", "CMA-ES", "BO"])
def test_run_is_deterministic(name):
    def once():
        trace = run_optimizer(make_optimizer(name, 2, seed=9), fake_objective(3), BudgetState(30))
        return np.array([np.r_[r.x, r.f_obj] for r in trace.records])

    assert np.array_equal(once(), once())


def test_best_so_far_monotone_both_axes():
    trace = run_optimizer(CMAES(3, seed=1), fake_objective(5, lambda x: sphere(x - 0.2)), BudgetState(60))
    a = trace.best_so_far
    b = trace.best_by_simulations()
    assert np.all(np.diff(a) <= 0)
    assert np.all(np.diff(b) <= 0)
    assert len(b) == 60


def test_candidates_inside_box():
    for name in ("DE", "CMA-ES", "BO"):
        opt = make_optimizer(name, 4, seed=3)
        trace = run_optimizer(opt, fake_objective(0, lambda x: -sphere(x)), BudgetState(60))
        xs = np.array([r.x for r in trace.records])
        assert xs.min() >= 0 and xs.max() <= 1


def test_cantilever_run_spends_exact_budget():
    problem = CantileverProblem("MMC", 10)
    opt = CMAES(10, seed=0)
    trace = run_optimizer(opt, problem, BudgetState(12))
    assert trace.simulations_used == 12
    prev = 0
    for r in trace.records:
        assert r.sim_index == prev + (1 if r.feasible else 0)
        prev = r.sim_index
