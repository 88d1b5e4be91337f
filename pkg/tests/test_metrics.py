import numpy as np
import pytest

from gasflux.core import BAR, ValidationError
from gasflux.ensemble import QUANTILES, aggregate, quantile_bands, run_ensemble
from gasflux.metrics import (CrossingEvent, check_boundary_order, check_monotonicity,
                             detect_crossings, linepack, survival_time)
from gasflux.scenario import NoiseSpec
from gasflux.solver import BoundarySet, SolverConfig, SystemState, make_layout
from gasflux.trajectory import Trajectory


def traj(times, p_bar, ids=(1, 2)):
    p = np.asarray(p_bar, float) * BAR
    return Trajectory(np.asarray(times, float), ids, p, (1,), np.ones((len(times), 1)))


# --- linepack ------------------------------------------------------------------

def test_linepack_uniform_density(network):
    lay = make_layout(network, SolverConfig())
    st = SystemState(0.0, lay, np.full(lay.n_cells, 50.0), np.zeros(lay.n_edges),
                     np.full(11, 50.0), np.full(11, 60 * BAR), 0.0)
    per, total = linepack(st)
    lengths = np.array([p.length for p in network.pipes])
    assert np.allclose(per, 50.0 * lay.area * lengths, rtol=1e-12)
    assert total == pytest.approx(per.sum())
    st2 = SystemState(0.0, lay, 3.0 * st.rho, st.phi, st.rho_node, st.p_node, 0.0)
    assert linepack(st2)[1] == pytest.approx(3.0 * total, rel=1e-12)


# --- crossings -------------------------------------------------------------------

def test_detect_crossings_constructed():
    t = [0, 1, 2, 3, 4, 5]
    p = [[60, 55], [51, 49], [49, 48], [52, 51], [49, 52], [48, 50]]
    ev = detect_crossings(traj(t, p))
    assert [(e.time, e.node_id) for e in ev] == [(1.0, 2), (2.0, 1), (4.0, 1)]
    assert ev[0].pressure == 49 * BAR


def test_exactly_at_threshold_is_not_a_crossing():
    assert detect_crossings(traj([0, 1], [[60, 60], [50, 50]])) == []


def test_start_below_threshold_not_counted():
    assert detect_crossings(traj([0, 1], [[40, 60], [39, 60]])) == []


def test_crossing_order_ties_by_node():
    ev = detect_crossings(traj([0, 1], [[60, 60], [40, 40]]))
    assert ev == sorted(ev) and [e.node_id for e in ev] == [1, 2]
    assert CrossingEvent(1.0, 1, 0.0) < CrossingEvent(1.0, 2, 0.0)


def test_survival_time():
    t = [0, 10, 20, 30, 40]
    p = [[60, 60], [49, 60], [55, 60], [55, 49], [40, 40]]
    tr = traj(t, p)
    r = survival_time(tr, 15.0)
    assert r.tau == 15.0 and r.node_id == 2  # the t=10 crossing predates the insult
    assert survival_time(tr, 0.0).tau == 10.0
    assert survival_time(traj([0, 1], [[60, 60], [60, 60]]), 0.5).tau is None
    with pytest.raises(ValidationError):
        survival_time(tr, 100.0)
    for ins in (0.0, 5.0, 15.0, 35.0):
        first = [e for e in detect_crossings(tr) if e.time >= ins]
        r = survival_time(tr, ins)
        assert (r.tau is None) == (not first)
        if first:
            assert r.tau == first[0].time - ins


# --- monotonicity ----------------------------------------------------------------

def test_monotonicity_identical_inputs():
    tr = traj([0, 1, 2], [[60, 55], [58, 52], [57, 49]])
    rep = check_monotonicity(tr, tr, insult_time=0.0)
    assert rep.n_violations == 0 and rep.max_violation == 0.0 and rep.ok


def test_monotonicity_flags_violation():
    mild = traj([0, 1], [[60, 60], [55, 55]])
    severe = traj([0, 1], [[60, 60], [55, 56]])
    rep = check_monotonicity(mild, severe)
    assert rep.n_violations == 1 and rep.location == (1.0, 2) and not rep.ok
    assert "violations=1" in rep.summary()


def test_monotonicity_precondition():
    a = BoundarySet((1, 2), 0.0, 60.0, np.array([[-10.0, -10.0], [10.0, 10.0]]))
    b = BoundarySet((1, 2), 0.0, 60.0, np.array([[-10.0, -10.0], [10.0, 9.0]]))
    check_boundary_order(b, a)
    with pytest.raises(ValidationError, match="withdraws less"):
        check_boundary_order(a, b)
    tr = traj([0, 1], [[60, 60], [55, 55]])
    with pytest.raises(ValidationError):
        check_monotonicity(tr, tr, bc_mild=a, bc_severe=b)


# --- ensembles ---------------------------------------------------------------------

def test_quantile_bands_ordered():
    rng = np.random.default_rng(0)
    b = quantile_bands(rng.normal(size=(50, 30)))
    assert b.values.shape == (len(QUANTILES), 30)
    assert np.all(np.diff(b.values, axis=0) >= 0)
    lo, hi = b.band_75
    assert np.all(lo <= b.median) and np.all(b.median <= hi)


def test_quantile_bands_ignore_stopped_replicas():
    x = np.array([[1.0, 2.0], [3.0, np.nan]])
    assert quantile_bands(x).median.tolist() == [2.0, 2.0]


def test_single_replica_bands_equal_trajectory():
    tr = traj([0, 1, 2], [[60, 55], [58, 52], [57, 49]])
    stats = aggregate("x", [0], [tr], None)
    for j, nid in enumerate(tr.node_ids):
        vals = stats.bands[f"pressure_node_{nid}"].values
        assert np.array_equal(vals, np.tile(tr.pressures[:, j], (5, 1)))


def test_aggregate_is_seed_ordered():
    a = traj([0, 1, 2], [[60, 60], [45, 60], [44, 60]])
    b = traj([0, 1, 2], [[60, 60], [60, 60], [60, 45]])
    s1 = aggregate("x", [5, 3], [a, b], 0.0)
    s2 = aggregate("x", [3, 5], [b, a], 0.0)
    assert s1.seeds == [3, 5] and s1.tau_samples == s2.tau_samples == [2.0, 1.0]
    assert s1.first_nodes == [2, 1]
    assert s1.crossing_histogram == {1: 1, 2: 1}
    assert s1.tau_median == 1.5


def test_tau_median_counts_survivors_as_censored():
    a = traj([0, 1], [[60, 60], [45, 60]])
    c = traj([0, 1], [[60, 60], [60, 60]])
    s = aggregate("x", [0, 1, 2], [a, c, c], 0.0)
    assert s.tau_median is None and s.tau_mean == 1.0 and s.n_crossed == 1


def test_noiseless_ensemble_has_zero_spread(network, shipped):
    sc = shipped(3).with_(horizon=40 * 3600.0, noise=NoiseSpec())
    stats = run_ensemble(network, sc, 3)
    assert all(t == stats.tau_samples[0] for t in stats.tau_samples)
    b = stats.bands["pressure_node_6"].values
    assert np.all(b == b[0])
    if stats.n_crossed:
        assert stats.tau_std == 0.0


def test_ensemble_rejects_empty(network, shipped):
    with pytest.raises(ValidationError):
        run_ensemble(network, shipped(1), 0)
