import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spacetime_spins.circuit import builtin
from spacetime_spins.experiment import (
    ConfigError,
    CurvePoint,
    ExperimentConfig,
    NoCrossing,
    barrier_analysis,
    default_window,
    delta_f_exact,
    delta_f_mc,
    depth_for,
    estimate_threshold,
    jackknife,
    ml_success,
    read_curves,
    run_experiment,
    setup_point,
    write_curves,
)
from spacetime_spins.oracle import exact_ml_success
from spacetime_spins.spinmodel import IndependentXZ


def test_ml_success_softmax():
    assert ml_success([0.0]) == pytest.approx(0.5)
    assert ml_success([math.log(3)]) == pytest.approx(0.75)
    assert ml_success([-math.log(3)]) == pytest.approx(0.75)
    assert ml_success([math.inf]) == 1.0
    assert ml_success([[1.0], [-1.0]], indicator=True).tolist() == [1.0, 0.0]


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=3))
def test_ml_success_range(df):
    k = len(df) + 1
    assert 1.0 / k - 1e-12 <= ml_success(df) <= 1.0 + 1e-12


def test_jackknife_mean_formula():
    x = np.random.default_rng(0).random(50)
    assert jackknife(x) == pytest.approx(x.var(ddof=1) / len(x))
    assert jackknife(x, lambda v: float(np.mean(v))) == pytest.approx(jackknife(x))
    with pytest.raises(ValueError):
        jackknife([1.0])


def test_depth_rules():
    assert depth_for("2d+1", 5) == 11
    assert depth_for("4d-1", 3) == 11
    assert depth_for("12d", 2) == 24
    assert depth_for("d", 7) == 7
    assert depth_for(9, 3) == 9
    with pytest.raises(ConfigError):
        depth_for("d^2", 3)


@pytest.mark.parametrize("bad", [
    {"distances": [3], "ps": [0.1]},
    {"family": "rep_memory", "distances": [], "ps": [0.1]},
    {"family": "rep_memory", "distances": [3], "ps": [0.7]},
    {"family": "rep_memory", "distances": [3], "ps": [0.1], "method": "magic"},
    {"family": "rep_memory", "distances": [3], "ps": [0.1], "colour": 1},
])
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(bad)


def test_exact_pipeline_matches_enumeration():
    # ML failure from sampled disorder converges to the enumerated ML failure
    c = builtin("rep_memory", d=3, T=3)
    cfg = ExperimentConfig(family="rep_memory", distances=[3], depth=3, ps=[0.1], realizations=40000, seed=4)
    (pt,) = run_experiment(cfg)
    exact = 1 - exact_ml_success(c, IndependentXZ(0.1, 0.0))
    assert abs(pt.rate - exact) < 2.5 * pt.ci
    # the hard indicator estimates the same quantity with more noise
    assert abs(pt.rate_indicator - exact) < 2.5 * pt.ci_indicator


def test_mc_matches_exact_delta_f():
    c = builtin("rep_memory", d=3, T=5)
    s = setup_point(c, IndependentXZ(0.1, 0.0))
    rng = np.random.default_rng(0)
    size = c.N * c.T
    etas = s.signs.signs(rng.random((3, size)) < 0.1, np.zeros((3, size), dtype=bool)).astype(np.int64)
    want = delta_f_exact(s, etas)
    mc = {"sweeps": 6000, "thermalize": 500, "replicas": 4}
    for e, w in zip(etas, want):
        got = delta_f_mc(s, e, "bennett", mc, seed=3)
        assert got[0] == pytest.approx(w[0], abs=0.15)
        got = delta_f_mc(s, e, "pa", {"population": 1000, "anneal_steps": 30}, seed=3)
        assert got[0] == pytest.approx(w[0], abs=0.15)


def test_mc_method_runs_through_experiment(tmp_path):
    cfg = ExperimentConfig(family="rep_memory", distances=[3], depth=3, ps=[0.1], realizations=4,
                           method="bennett", mc={"sweeps": 200, "thermalize": 50, "replicas": 3},
                           checkpoint=str(tmp_path / "ck.json"), seed=1)
    first = run_experiment(cfg)
    saved = json.loads((tmp_path / "ck.json").read_text())
    assert len(saved["3,0.1"]) == 4
    # resuming from a complete checkpoint reproduces the point
    assert run_experiment(cfg) == first


def test_outputs_and_round_trip(tmp_path):
    cfg = ExperimentConfig(family="rep_memory", distances=[3, 5], ps=[0.08, 0.1], realizations=200,
                           seed=2, output=str(tmp_path / "run"))
    pts = run_experiment(cfg)
    back = read_curves(tmp_path / "run.csv")
    assert [(q.d, q.p, q.n) for q in back] == [(q.d, q.p, q.n) for q in pts]
    assert all(abs(a.rate - b.rate) < 1e-9 for a, b in zip(back, pts))
    manifest = json.loads((tmp_path / "run.manifest.json").read_text())
    assert manifest["config"]["seed"] == 2 and "numpy" in manifest["versions"]
    assert (tmp_path / "run.timings.json").exists()


def synthetic_points(x_c=0.1, y_c=0.3, slopes=None, sigma=0.002, seed=0, ps=None):
    slopes = slopes or {3: 2.0, 5: 3.0, 7: 4.0}
    ps = ps if ps is not None else np.round(np.arange(0.08, 0.1201, 0.005), 4)
    rng = np.random.default_rng(seed)
    return [CurvePoint(d, float(p), y_c + b * (p - x_c) + rng.normal(0, sigma), 2 * sigma, 1000, seed)
            for d, b in slopes.items() for p in ps]


def test_threshold_exact_lines():
    pts = synthetic_points(sigma=0.0)
    est = estimate_threshold(pts, window=(0.08, 0.12), n_boot=50)
    assert est.x_c == pytest.approx(0.1, abs=1e-9)
    assert est.y_c == pytest.approx(0.3, abs=1e-9)
    assert est.fits[5][0] == pytest.approx(3.0)


def test_threshold_noisy_lines(tmp_path):
    pts = synthetic_points(sigma=0.003, seed=5)
    est = estimate_threshold(pts, n_boot=500)
    assert est.ci[0] < est.x_c < est.ci[1]
    assert abs(est.x_c - 0.1) < 3 * est.sigma + 1e-3
    write_curves(pts, tmp_path / "c.csv")
    again = estimate_threshold(read_curves(tmp_path / "c.csv"), n_boot=500)
    assert again.x_c == pytest.approx(est.x_c, rel=1e-6)


def test_default_window_brackets_flip():
    pts = synthetic_points(sigma=0.0)
    lo, hi = default_window(pts)
    assert lo <= 0.1 <= hi and (lo, hi) != (0.08, 0.12)


def test_no_crossing():
    parallel = synthetic_points(slopes={3: 2.0, 5: 2.0}, sigma=0.0)
    with pytest.raises(NoCrossing):
        estimate_threshold(parallel, window=(0.08, 0.12), n_boot=10)
    outside = synthetic_points(x_c=0.2, sigma=0.0)
    with pytest.raises(NoCrossing):
        estimate_threshold(outside, window=(0.08, 0.12), n_boot=10)


def test_barrier_limits():
    assert barrier_analysis("rep_standard")["limit"] == pytest.approx(math.log(4 / 3), abs=1e-12)
    assert barrier_analysis("toric")["limit"] == pytest.approx(math.log(16 / 15), abs=1e-12)
    # the finite-p value approaches the limit as p -> 0
    vals = [barrier_analysis("repetition", p)["value"] for p in (1e-2, 1e-4, 1e-6)]
    errs = [abs(v - math.log(4 / 3)) for v in vals]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-5
    with pytest.raises(ValueError):
        barrier_analysis("surface")


def test_identity_class_is_harmless():
    base = ExperimentConfig(family="rep_memory", distances=[3], ps=[0.1], realizations=300, seed=6)
    with_id = ExperimentConfig(family="rep_memory", distances=[3], ps=[0.1], realizations=300, seed=6,
                               classes=["I", "XL", "I"])
    assert run_experiment(base) == run_experiment(with_id)


def test_sub_threshold_failure_falls_with_distance():
    pts = run_experiment(ExperimentConfig(family="rep_memory", distances=[3, 5, 7], ps=[0.05],
                                          realizations=4000, seed=8))
    for small, big in zip(pts, pts[1:]):
        gap = small.rate - big.rate
        assert gap > 3 * math.hypot(small.ci / 2, big.ci / 2)
