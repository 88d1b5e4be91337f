"""Acceptance criteria. Each test records one PASS/FAIL line, echoed in the
terminal summary (and printed, visible with ``-s``)."""

import math
import time

import numpy as np
import pytest

from gasflux.core import BAR, data_path
from gasflux.ensemble import run_ensemble
from gasflux.io import write_ensemble
from gasflux.metrics import detect_crossings
from gasflux.scenario import compose, load_scenario
from gasflux.solver import SolverConfig, simulate
from gasflux.verify import (STEADY_TRIPLES, mass_conservation_error, monotonicity_pairs,
                            refinement_study, steady_pipe_error)

RESULTS: list = []
N_REPLICAS = 50
DAY = 86400.0


def report(num, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num} {name}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


@pytest.fixture(scope="session")
def ensembles(network, shipped):
    """The four n=50 ensembles, run once per session."""
    out, wall = {}, {}
    for k in (3, 4, 5, 6):
        t0 = time.perf_counter()
        out[k] = run_ensemble(network, shipped(k), N_REPLICAS, base_seed=0, workers=None)
        wall[k] = time.perf_counter() - t0
    return out, wall


def test_1_conservation(network, shipped):
    errs = {k: mass_conservation_error(shipped(k), network, seed=0) for k in range(1, 7)}
    worst = max(errs.values())
    detail = ", ".join(f"S{k} {e:.1e}" for k, e in errs.items())
    assert report(1, "mass conservation < 1e-9 per week", worst < 1e-9, detail)


def test_2_convergence_order():
    t0 = time.perf_counter()
    st = refinement_study()
    secs = time.perf_counter() - t0
    p = st["density_order"][-1]
    ok = p >= 1.8 and secs < 120
    assert report(2, "convergence order >= 1.8 in < 2 min", ok,
                  f"order {p:.3f} (pressure {st['pressure_order'][-1]:.3f}), {secs:.2f} s")


def test_3_steady_pipe():
    errs = [steady_pipe_error(*t) for t in STEADY_TRIPLES]
    assert report(3, "steady pipe within 0.5%", max(errs) < 5e-3,
                  "max relative error " + ", ".join(f"{e:.1e}" for e in errs))


def test_4_scenario1_periodic(network, shipped):
    traj = simulate(network, shipped(1))
    n_cross = len(detect_crossings(traj))
    t, p = traj.times, traj.pressures / BAR
    per = int(round(DAY / (t[1] - t[0])))
    # weekdays 1..4 share one demand shape; stop short of the ramp into the weekend
    diffs = []
    for k in (1, 2, 3):
        idx = np.nonzero((t >= k * DAY) & (t < (k + 1) * DAY - 1800.0))[0]
        diffs.append(float(np.max(np.abs(p[idx + per] - p[idx]))))
    first = float(np.max(np.abs(p[per:2 * per] - p[:per])))
    ok = n_cross == 0 and max(diffs) < 1e-3
    assert report(4, "S1 no crossings, 24 h periodic", ok,
                  f"{n_cross} crossings, min {p.min():.2f} bar, day-to-day max diff "
                  f"{max(diffs):.1e} bar (day 0->1 transient {first:.2f} bar)")


@pytest.mark.slow
def test_5_scenario_ordering(ensembles):
    stats, wall = ensembles
    med = {k: stats[k].tau_median for k in (3, 4, 5)}
    h = {k: (math.inf if v is None else v / 3600.0) for k, v in med.items()}
    s6 = stats[6].n_crossed
    total = sum(wall.values())
    ok = h[3] > h[4] and h[5] > h[4] and s6 == 0 and total <= 1800
    assert report(5, "ensemble ordering (n=50)", ok,
                  f"median tau S3 {h[3]:.2f} h, S4 {h[4]:.2f} h, S5 {h[5]:.2f} h, "
                  f"S6 crossings {s6}; runtime {total:.0f} s")


@pytest.mark.parametrize("seed", [0, 1])
def test_6_monotonicity(seed):
    reports = monotonicity_pairs(seed)
    ok = all(r.ok for r in reports.values())
    worst = max(r.max_violation for r in reports.values()) / BAR
    assert report(6, f"monotonicity pairs (seed {seed})", ok,
                  f"max p_severe - p_mild {worst:.1e} bar, "
                  + "; ".join(f"{k}: tau {r.tau_severe}<= {r.tau_mild}" for k, r in reports.items()))


def test_7_ou_variance(network, shipped):
    sc = shipped(3)
    sc = sc.with_(horizon=12 * 3600.0, insults=())
    nominal = compose(sc.with_(noise=sc.noise.__class__()), network)
    ids = network.node_ids
    demand = [i for i, n in enumerate(network.nodes) if n.kind == "demand"]
    grid = nominal.times
    in_h = grid <= sc.horizon
    mu = nominal.values[demand][:, in_h].mean(axis=1)
    # two well-separated samples per path (6 h = 12 relaxation times apart)
    cols = [int(6 * 3600 / sc.bc_dt), int(12 * 3600 / sc.bc_dt)]
    ratios = []
    seed = 0
    while len(ratios) < 10000:
        bc = compose(sc, network, seed)
        dev = (bc.values[demand][:, cols] - nominal.values[demand][:, cols]) / mu[:, None]
        ratios.extend(dev.ravel().tolist())
        seed += 1
    ratios = np.array(ratios[:10000])
    rel = ratios.var() / 0.01 - 1.0
    assert report(7, "OU variance within 10% of 0.01 mu^2", abs(rel) < 0.1,
                  f"{ratios.size} samples over {len(ids) - 2} demand nodes, variance/0.01mu^2 = "
                  f"{1 + rel:.4f}")


@pytest.mark.slow
def test_8_determinism(network, shipped, ensembles, tmp_path):
    stats, _ = ensembles
    a = write_ensemble(stats[3], tmp_path / "w_default")
    rerun = run_ensemble(network, shipped(3), N_REPLICAS, base_seed=0, workers=2)
    b = write_ensemble(rerun, tmp_path / "w2")
    same = all(x.read_bytes() == y.read_bytes() for x, y in zip(a, b))
    assert report(8, "byte-identical ensemble output across worker counts", same,
                  f"{len(a)} files compared (default workers vs 2)")


def test_9_performance(network, shipped):
    sc = shipped(1)
    cfg = SolverConfig(target_dx_m=1000.0, cfl=0.8)
    t0 = time.perf_counter()
    traj = simulate(network, sc, cfg)
    secs = time.perf_counter() - t0
    ok = secs <= 60.0 and traj.times[-1] == 7 * DAY
    assert report(9, "7-day run <= 60 s on one core", ok, f"{secs:.2f} s")
