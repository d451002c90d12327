import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from topobench.geometry import Capsule, rasterize
from topobench.harness import (
    ConfigError,
    ExperimentConfig,
    default_matrix,
    export_convergence,
    export_summary,
    format_config,
    mann_whitney_u,
    mean_curve,
    parse_config,
    parse_seeds,
    probe_feasible_fraction,
    raster_pgm,
    read_manifest,
    read_runs,
    render_design,
    run_matrix,
)
from topobench.harness.runs import RUN_COLUMNS, RunLog, run_filename

from oracles import exact_mann_whitney_p


def make_log(config_id, seed, f_obj, feasible, dim=2):
    f_obj = np.asarray(f_obj, dtype=float)
    feasible = np.asarray(feasible, dtype=bool)
    n = len(f_obj)
    return RunLog(
        config_id, seed, np.arange(1, n + 1), np.cumsum(feasible), feasible, np.zeros(n), np.zeros(n),
        np.zeros(n), np.where(feasible, f_obj, np.nan), f_obj, np.minimum.accumulate(f_obj), np.zeros((n, dim)),
    )


# --- config -------------------------------------------------------------------


def test_default_matrix_is_27_configs_of_15_seeds():
    m = default_matrix()
    assert len(m) == 27
    assert len({c.config_id for c in m}) == 27
    assert sum(len(c.seeds) for c in m) == 405
    assert m[0].seeds == tuple(range(15))


def test_parse_matrix_block():
    cfgs = parse_config(
        """
        # comment
        parameterization = HT, curved-mmc
        dimension = 10, 20
        optimizer = cmaes
        seeds = 0-2, 7
        option.popsize = 6
        E1 = 30
        out = somewhere
        """
    )
    assert [c.config_id for c in cfgs] == ["HT-10D-CMA-ES", "HT-20D-CMA-ES", "CMMC-10D-CMA-ES", "CMMC-20D-CMA-ES"]
    assert cfgs[0].seeds == (0, 1, 2, 7)
    assert cfgs[0].options == (("popsize", 6),)
    assert cfgs[0].material.E1 == 30.0
    assert cfgs[0].simulation_budget == 200


def test_config_round_trip():
    cfg = ExperimentConfig("MMC", 20, "DE", seeds=(3, 4), options=(("popsize", 12),), max_evaluations=99)
    (back,) = parse_config(format_config(cfg))
    assert back == cfg


@pytest.mark.parametrize(
    "text",
    [
        "parameterization = MMC\ndimension = 12",
        "parameterization = CMMC\ndimension = 15",
        "parameterization = HT\ndimension = 30",
        "optimizer = simplex",
        "colour = blue",
        "seeds = 1\nseeds = 2",
        "not a pair",
    ],
)
def test_config_errors(text):
    with pytest.raises(ValueError):
        parse_config(text)


def test_parse_seeds():
    assert parse_seeds("0-4") == (0, 1, 2, 3, 4)
    assert parse_seeds("3, 1,9") == (3, 1, 9)
    with pytest.raises(ConfigError):
        parse_seeds("a-b")


# --- Mann-Whitney --------------------------------------------------------------


def test_identical_constant_samples():
    for mode in ("approx", "exact"):
        r = mann_whitney_u([0.8392] * 15, [0.8392] * 15, mode=mode)
        assert r.p_value == 1.0
        assert r.u == 112.5


def test_three_versus_three_disjoint():
    r = mann_whitney_u([1, 2, 3], [4, 5, 6], mode="exact")
    assert r.u == 0
    assert r.p_value == pytest.approx(0.1, abs=1e-15)


def test_exact_mode_matches_enumeration_oracle():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n, m = rng.integers(1, 9, size=2)
        a = rng.normal(size=n)
        b = rng.normal(size=m) + rng.normal()
        if rng.random() < 0.4:
            a, b = np.round(a), np.round(b)
        assert mann_whitney_u(a, b, mode="exact").p_value == pytest.approx(exact_mann_whitney_p(a, b), abs=1e-12)


def test_approx_mode_matches_library_asymptotic_test():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n, m = rng.integers(2, 16, size=2)
        a = np.round(rng.normal(size=n), 1)
        b = np.round(rng.normal(size=m) + 0.5, 1)
        ref = sps.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic", use_continuity=True)
        r = mann_whitney_u(a, b)
        assert r.u == ref.statistic
        assert r.p_value == pytest.approx(ref.pvalue, rel=1e-9)


def test_benchmark_size_modes_agree():
    # at n = m = 15 the modes differ by at most ~0.006 (measured over 400 draws)
    rng = np.random.default_rng(2)
    for _ in range(20):
        a, b = rng.normal(size=15), rng.normal(size=15) + 0.7
        assert abs(mann_whitney_u(a, b).p_value - mann_whitney_u(a, b, "exact").p_value) < 0.01


def test_disjoint_benchmark_samples_are_significant():
    r = mann_whitney_u(np.arange(15.0), np.arange(15.0) + 100)
    assert r.significant
    assert r.u == 0


def test_empty_sample_rejected():
    with pytest.raises(ValueError):
        mann_whitney_u([], [1.0])


samples = st.lists(st.integers(0, 6), min_size=1, max_size=7)


@settings(max_examples=60, deadline=None)
@given(samples, samples)
def test_mann_whitney_properties(a, b):
    for mode in ("approx", "exact"):
        ab = mann_whitney_u(a, b, mode=mode)
        ba = mann_whitney_u(b, a, mode=mode)
        assert ab.p_value == pytest.approx(ba.p_value, abs=1e-12)
        assert 0 < ab.p_value <= 1
        assert 0 <= ab.u <= len(a) * len(b)
        assert ab.u + ba.u == len(a) * len(b)


# --- convergence and summary -----------------------------------------------------


def test_single_trace_convergence():
    log = make_log("MMC-10D-DE", 0, [5.0, 3.0, 4.0, 1.0], [True] * 4)
    idx, mean, se, n = mean_curve([log], "total")
    assert np.array_equal(mean, [5, 3, 3, 1])
    assert np.all(se == 0)


def test_two_trace_mean_and_standard_error():
    a = make_log("MMC-10D-DE", 0, [2.0], [True])
    b = make_log("MMC-10D-DE", 1, [4.0], [True])
    _, mean, se, n = mean_curve([a, b], "simulations")
    assert mean[0] == 3.0
    assert se[0] == pytest.approx(1.0)
    assert n[0] == 2


def test_infeasible_prefix_emits_empty_cells():
    log = make_log("HT-10D-CMA-ES", 0, [600.0, 570.7, 0.84, 0.84], [False, False, True, True])
    rows = list(csv.reader(export_convergence([log], "total").splitlines()))
    assert tuple(rows[0]) == ("config_id", "axis", "index", "mean", "se", "n")
    assert rows[1][3:] == ["", "", "0"]
    assert rows[2][3:] == ["", "", "0"]
    assert float(rows[3][3]) == 0.84


def test_short_runs_carry_their_final_value():
    a = make_log("MMC-10D-BO", 0, [2.0, 1.0, 1.0], [True] * 3)
    b = make_log("MMC-10D-BO", 1, [4.0], [True])
    _, mean, _, n = mean_curve([a, b], "total")
    assert np.array_equal(mean, [3.0, 2.5, 2.5])
    assert np.array_equal(n, [2, 2, 2])


def test_summary_identical_runs_not_significant():
    logs = [make_log(f"HT-10D-{o}", s, [600.0, 0.8392], [False, True]) for o in ("DE", "CMA-ES", "BO") for s in range(15)]
    summaries, tests, summary_csv, pvalues_csv = export_summary(logs)
    assert len(summaries) == 3
    assert len(tests) == 3
    assert all(t.p_value == 1.0 for _, _, t in tests)
    assert pvalues_csv.count("not significantly different") == 3
    row = next(csv.DictReader(summary_csv.splitlines()))
    assert float(row["median"]) == 0.8392
    assert float(row["iqr"]) == 0.0


def test_summary_disjoint_runs_significant(tmp_path):
    logs = [make_log("MMC-20D-DE", s, [1.0 + s], [True]) for s in range(15)]
    logs += [make_log("MMC-20D-BO", s, [50.0 + s], [True]) for s in range(15)]
    _, tests, _, _ = export_summary(logs, tmp_path)
    (_, _, t), = tests
    assert t.pair == ("BO", "DE") and t.significant
    assert (tmp_path / "summary.csv").exists() and (tmp_path / "pvalues.csv").exists()


# --- matrix runs -------------------------------------------------------------------


TINY = """
parameterization = MMC, HT
dimension = 10
optimizer = CMA-ES
seeds = 0-1
budget_per_dim = 1
max_evaluations = 2000
"""


@pytest.fixture(scope="module")
def tiny_matrix(tmp_path_factory):
    out = tmp_path_factory.mktemp("matrix")
    cfgs = parse_config(TINY)
    results = run_matrix(cfgs, out)
    return cfgs, out, results


def test_matrix_outputs(tiny_matrix):
    cfgs, out, results = tiny_matrix
    assert len(results) == 4
    manifest = read_manifest(out)
    assert set(manifest) == {(c.config_id, s) for c in cfgs for s in c.seeds}
    logs = read_runs(out)
    assert len(logs) == 4
    for log in logs:
        assert log.sim_index[-1] == 10
        assert np.array_equal(np.diff(np.r_[0, log.sim_index]), log.feasible.astype(int))
        assert np.array_equal(log.eval_index, np.arange(1, len(log.eval_index) + 1))
        assert np.all(np.isnan(log.f_raw) == ~log.feasible)
        assert math.isclose(manifest[(log.config_id, log.seed)].final_best, log.final_best)
    assert (out / "configs" / "MMC-10D-CMA-ES.cfg").exists()


def test_run_csv_schema(tiny_matrix):
    _, out, _ = tiny_matrix
    for path in sorted((out / "runs").glob("*.csv")):
        header = path.read_text().splitlines()[0].split(",")
        assert header == list(RUN_COLUMNS) + [f"x_{k}" for k in range(10)]


def test_run_csv_full_precision(tiny_matrix):
    _, out, _ = tiny_matrix
    path = out / "runs" / run_filename("MMC-10D-CMA-ES", 0)
    row = path.read_text().splitlines()[1].split(",")
    x = np.array([float(v) for v in row[len(RUN_COLUMNS):]])
    assert all(format(v, ".17g") == s for v, s in zip(x, row[len(RUN_COLUMNS):]))
    # the stored vector reproduces the stored record exactly
    from topobench.problem import CantileverProblem

    rec = CantileverProblem("MMC", 10)(x)
    assert format(rec.f_obj, ".17g") == row[RUN_COLUMNS.index("f_obj")]


def test_rerun_is_byte_identical(tiny_matrix, tmp_path):
    cfgs, out, _ = tiny_matrix
    run_matrix(cfgs, tmp_path)
    for p in sorted((out / "runs").glob("*.csv")):
        assert (tmp_path / "runs" / p.name).read_bytes() == p.read_bytes()


def test_resume_reruns_only_missing(tiny_matrix, tmp_path):
    cfgs, out, _ = tiny_matrix
    run_matrix(cfgs, tmp_path)
    victim = tmp_path / "runs" / run_filename("HT-10D-CMA-ES", 1)
    before = victim.read_bytes()
    victim.unlink()
    seen = []
    results = run_matrix(cfgs, tmp_path, resume=True, progress=seen.append)
    assert [(r.config_id, r.seed) for r in seen] == [("HT-10D-CMA-ES", 1)]
    assert victim.read_bytes() == before
    assert len(results) == 4


def test_failed_run_recorded_without_aborting(tmp_path):
    cfgs = parse_config("parameterization = MMC\ndimension = 10\noptimizer = DE\nseeds = 0-1\noption.bogus = 3")
    cfgs += parse_config("parameterization = MMC\ndimension = 10\noptimizer = CMA-ES\nseeds = 0\nbudget_per_dim = 1")
    results = run_matrix(cfgs, tmp_path)
    status = {(r.config_id, r.seed): r.status for r in results}
    assert status[("MMC-10D-DE", 0)].startswith("failed")
    assert status[("MMC-10D-DE", 1)].startswith("failed")
    assert status[("MMC-10D-CMA-ES", 0)] == "ok"
    assert len(read_manifest(tmp_path)) == 3


def test_output_path_that_is_a_file(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        run_matrix(parse_config(TINY), blocker)


def test_workers_give_identical_files(tiny_matrix, tmp_path):
    cfgs, out, _ = tiny_matrix
    run_matrix(cfgs, tmp_path, workers=2)
    for p in sorted((out / "runs").glob("*.csv")):
        assert (tmp_path / "runs" / p.name).read_bytes() == p.read_bytes()


# --- rendering -----------------------------------------------------------------------


def test_empty_design_render():
    svg, pgm = render_design(np.zeros(10), "HT", 10)
    assert svg.count("<polygon") == 1  # the domain outline
    assert svg.count("<line") == 1  # the midline
    assert pgm.startswith(b"P5\n100 50\n255\n")
    assert set(pgm[len(b"P5\n100 50\n255\n"):]) == {0}


def test_midline_beam_render_matches_rasterize():
    x = np.array([0.0, 0.5, 1.0, 0.5, 8 / 24])  # thickness 9
    _, pgm = render_design(x, "MMC", 5)
    expected = raster_pgm(rasterize([Capsule((0, 25), (100, 25), 9)]))
    assert pgm == expected
    img = np.frombuffer(pgm[len(b"P5\n100 50\n255\n"):], dtype=np.uint8).reshape(50, 100)
    assert np.array_equal(np.nonzero(img[:, 50])[0], np.arange(20, 30))


def test_pgm_row_zero_is_top():
    r = np.zeros((100, 50), dtype=bool)
    r[3, 49] = True  # top-left area of the domain
    img = np.frombuffer(raster_pgm(r)[len(b"P5\n100 50\n255\n"):], dtype=np.uint8).reshape(50, 100)
    assert img[0, 3] == 255 and img.sum() == 255


def test_render_is_deterministic(tmp_path):
    x = np.random.default_rng(0).random(20)
    render_design(x, "CMMC", 20, tmp_path / "a")
    render_design(x, "CMMC", 20, tmp_path / "b")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
    assert (tmp_path / "a.pgm").read_bytes() == (tmp_path / "b.pgm").read_bytes()


def test_render_svg_is_well_formed():
    import xml.etree.ElementTree as ET

    for p, d in (("HT", 50), ("MMC", 20), ("CMMC", 10)):
        svg, _ = render_design(np.random.default_rng(d).random(d), p, d)
        root = ET.fromstring(svg)
        assert root.tag.endswith("svg")


@pytest.mark.parametrize("x", [np.zeros(9), np.full(10, 1.5), np.full(10, np.nan)])
def test_render_invalid_vector(x):
    with pytest.raises(ValueError):
        render_design(x, "HT", 10)


# --- probe -----------------------------------------------------------------------------


def test_probe_ht_exhaustive():
    res = probe_feasible_fraction("HT", 10, exhaustive=True)
    assert (res.n_samples, res.n_feasible) == (1024, 1)
    assert res.fraction == pytest.approx(1 / 1024)
    assert res.ci_low < res.fraction < res.ci_high


def test_probe_monte_carlo_skips_fem(monkeypatch):
    import topobench.fem as fem

    def boom(*a, **k):
        raise AssertionError("probe must not run the solver")

    monkeypatch.setattr(fem, "assemble_and_solve", boom)
    res = probe_feasible_fraction("MMC", 10, 300, seed=1)
    assert res.mode == "monte-carlo" and res.n_samples == 300
    assert 0 <= res.ci_low <= res.fraction <= res.ci_high <= 1


def test_probe_wilson_interval_value():
    # k = 0 of n: upper bound z^2 / (n + z^2)
    from topobench.harness.probe import _wilson

    lo, hi = _wilson(0, 100)
    z2 = 1.959963984540054**2
    assert lo == 0 and hi == pytest.approx(z2 / (100 + z2), rel=1e-9)


def test_probe_zero_samples_rejected():
    with pytest.raises(ValueError):
        probe_feasible_fraction("CMMC", 10, 0)
