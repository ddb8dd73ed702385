import numpy as np
import pytest

from stokolmo.engine import (GridSpec, OccupationHistogram, SimConfig,
                             occupation_histogram, simulate_ensemble,
                             simulate_path)
from stokolmo.verify import (_binomial_ci, classify_paths,
                             detect_blowup_signature,
                             estimate_basin_probabilities, tv_distance,
                             verify_verdict)


def hist(masses, lo=-2.0, hi=2.0):
    masses = np.asarray(masses, dtype=float)
    bins = masses.shape[1] - 2
    g = GridSpec(lo=lo, hi=hi, bins=bins)
    return OccupationHistogram(edges=g.edges(), masses=masses, total_weight=1.0)


# -- total variation -----------------------------------------------------------

def test_tv_identical_is_zero():
    h = hist([[0.0, 0.25, 0.25, 0.5, 0.0]])
    assert tv_distance(h, h) == 0.0


def test_tv_disjoint_is_one():
    a = hist([[0.0, 1.0, 0.0, 0.0, 0.0]])
    b = hist([[0.0, 0.0, 0.0, 1.0, 0.0]])
    assert tv_distance(a, b) == 1.0


def test_tv_takes_worst_species():
    a = hist([[0.0, 0.5, 0.5, 0.0, 0.0],
              [0.0, 1.0, 0.0, 0.0, 0.0]])
    b = hist([[0.0, 0.5, 0.5, 0.0, 0.0],
              [0.0, 0.5, 0.5, 0.0, 0.0]])
    assert tv_distance(a, b) == 0.5


def test_tv_symmetric_and_bounded():
    rng = np.random.default_rng(0)
    for _ in range(20):
        m1 = rng.dirichlet(np.ones(6), size=2)
        m2 = rng.dirichlet(np.ones(6), size=2)
        a, b = hist(m1), hist(m2)
        d = tv_distance(a, b)
        assert 0.0 <= d <= 1.0
        assert d == tv_distance(b, a)


def test_tv_rejects_grid_mismatch():
    a = hist([[0.0, 0.5, 0.5, 0.0, 0.0]])
    b = hist([[0.0, 0.5, 0.5, 0.0, 0.0]], hi=3.0)
    with pytest.raises(ValueError):
        tv_distance(a, b)


def test_stationary_halves_agree(bundled):
    # self-consistency: the two disjoint halves of a long stationary run
    # must carry the same occupation measure.  A single path needs several
    # thousand time units for its TV floor to drop below 0.05, so the run
    # is pooled across paths, which is exactly what the persistence check
    # consumes
    cfg = SimConfig(n_paths=32, t_max=220.0, burn_in=20.0, seed=1,
                    n_windows=2)
    stats = simulate_ensemble(bundled["logistic"], np.array([1.0]), cfg)
    h1, h2 = stats.window_histograms
    assert tv_distance(h1, h2) < 0.05


def test_single_path_halves_converge_with_span(bundled):
    # the same statistic on one path shrinks as the halves lengthen
    vals = []
    for T in (100.0, 800.0):
        cfg = SimConfig(n_paths=1, t_max=T, burn_in=0.0, seed=0, dt=2e-3)
        traj = simulate_path(bundled["logistic"], np.array([1.0]), cfg)
        mid = 20.0 + (T - 20.0) / 2.0
        h1 = occupation_histogram(traj, t_start=20.0, t_end=mid)
        h2 = occupation_histogram(traj, t_start=mid, t_end=T)
        vals.append(tv_distance(h1, h2))
    assert vals[1] < vals[0]


# -- path classification ---------------------------------------------------------

def synthetic_stats(y_end, blowup_time, n=2):
    P = len(y_end)
    cfg = SimConfig(n_paths=P, t_max=10.0, burn_in=1.0)
    from stokolmo.engine import EnsembleStats
    z = np.zeros((P, n))
    g = GridSpec(bins=2)
    h = OccupationHistogram(edges=g.edges(),
                            masses=np.full((n, 4), 0.25), total_weight=1.0)
    return EnsembleStats(
        cfg=cfg, x0=np.ones(n), y_end=np.asarray(y_end, dtype=float),
        t_end=np.full(P, 10.0), y_burn=z,
        blowup_time=np.asarray(blowup_time, dtype=float),
        extinct_time=np.full((P, n), np.nan), exponents=z,
        histogram=h, window_histograms=[h], mean_state=np.ones(n),
        mean_sq_state=np.ones(n), path_mean_state=np.ones((P, n)),
        stats_time=9.0, path_errors={})


def test_classify_paths_sorting():
    stats = synthetic_stats(
        y_end=[[1.0, 1.0],        # interior
               [-25.0, 0.4],      # species 1 extinct -> sink A
               [-25.0, -30.0],    # both extinct: not a predicted set
               [5.0, 5.0],        # blown up (flag wins over state)
               [0.2, -40.0]],     # species 2 extinct -> sink B
        blowup_time=[np.nan, np.nan, np.nan, 1.2, np.nan])
    counts, labels = classify_paths(
        stats, {"A": frozenset({0}), "B": frozenset({1})}, threshold=-20.0)
    assert counts == {"A": 1, "B": 1, "interior": 1, "blow-up": 1,
                      "unassigned": 1}
    assert list(labels) == ["interior", "A", "unassigned", "blow-up", "B"]
    assert sum(counts.values()) == stats.n_paths


def test_binomial_ci_edges():
    assert _binomial_ci(0, 100) == 0.03          # rule of three
    assert _binomial_ci(100, 100) == 0.03
    mid = _binomial_ci(50, 100)
    assert np.isclose(mid, 1.96 * np.sqrt(0.25 / 100))


def test_basin_estimates_sum_and_flag(bundled, verdict_of):
    verdict = verdict_of("lv_bistable")
    cfg = SimConfig(n_paths=48, t_max=120.0, burn_in=20.0, seed=3)
    stats = simulate_ensemble(bundled["lv_bistable"], np.ones(2), cfg)
    estimates, counts, labels, low_conf = estimate_basin_probabilities(
        stats, verdict)
    assert sum(counts.values()) == 48
    assert len(labels) == 48
    assert {e.measure for e in estimates} == {"face_1", "face_2"}
    for e in estimates:
        assert e.count >= 0 and e.ci > 0.0
        if e.count > 0:
            assert e.survivor_moments is not None


# -- full verification reports ----------------------------------------------------

def test_verify_refuses_inconclusive(bundled, verdict_of):
    with pytest.raises(ValueError):
        verify_verdict(bundled["linear1d"], verdict_of("linear1d"))


def test_verify_validates_x0(bundled, verdict_of):
    with pytest.raises(ValueError):
        verify_verdict(bundled["lv_coexist"], verdict_of("lv_coexist"),
                       SimConfig(n_paths=2, t_max=1.0, burn_in=0.0),
                       x0=np.array([1.0, -1.0]))


def test_verify_extinction_report(bundled, verdict_of):
    cfg = SimConfig(n_paths=48, t_max=200.0, burn_in=30.0, seed=0)
    rep = verify_verdict(bundled["lv_single_extinct"], verdict_of("lv_single_extinct"), cfg)
    assert rep.status == "PASSED"
    assert rep.n_paths == 48
    assert sum(rep.path_classes.values()) == 48
    assert rep.path_classes["face_1"] == 48     # species 2 always dies here
    (basin,) = rep.basins
    assert basin.p_hat == 1.0
    # survivors hover near the solved equilibrium m = 3.5
    assert abs(basin.survivor_moments[0] - 3.5) < 0.3
    names = [c.name for c in rep.checks]
    assert any("extinction_rate" in s for s in names)
    doc = rep.to_json_dict()
    assert doc["status"] == "PASSED" and "stats" not in doc


def test_verify_blowup_report(bundled, verdict_of):
    cfg = SimConfig(n_paths=64, t_max=40.0, burn_in=5.0, seed=0)
    rep = verify_verdict(bundled["coop_blowup"], verdict_of("coop_blowup"), cfg)
    assert rep.status == "PASSED"
    assert rep.path_classes["blow-up"] == 64


def test_blowup_signature_direction(bundled):
    cfg = SimConfig(n_paths=32, t_max=40.0, burn_in=5.0, seed=0)
    sig = detect_blowup_signature(bundled["coop_blowup"], cfg)
    assert sig["blowup_fraction"] == 1.0
    assert sig["slope_mean"] - 3.0 * sig["slope_se"] > 0.0
    # competitive control: same machinery must see no signature
    ctrl = detect_blowup_signature(bundled["lv_coexist"], cfg)
    assert ctrl["blowup_fraction"] == 0.0
    assert ctrl["slope_mean"] + 3.0 * ctrl["slope_se"] < 0.5


def test_blowup_signature_needs_two_species(bundled):
    with pytest.raises(ValueError):
        detect_blowup_signature(bundled["two_pred_one_prey"])
