"""Built-in verification battery: conservation, convergence, steady pipes, EOS, monotonicity."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (BAR, GasProperties, Network, density_from_pressure, israel_network,
                   network_from_dict, pressure_from_density)
from .solver.grid import Layout, PipeGrid, discretize
from .solver.simulate import SolverConfig, _Run, simulate
from .solver.state import BoundarySet
from .solver.steady import analytic_state, solve_network_flows, steady_state_init


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    limit: float
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"[{tag}] {self.name}: {self.value:.4g} (limit {self.limit:.4g}){extra}"


def single_pipe(length: float, diameter: float, friction: float = 0.01,
                name: str = "single-pipe") -> Network:
    """Two-node network: supply node 1 feeding demand node 2 (SI units)."""
    return network_from_dict({
        "name": name,
        "nodes": [{"id": 1, "kind": "supply", "p_min": 1.0, "p_max": 2e7},
                  {"id": 2, "kind": "demand", "p_min": 1.0, "p_max": 2e7}],
        "pipes": [{"id": 1, "from": 1, "to": 2, "length": length, "diameter": diameter,
                   "friction": friction}],
    })


# ---------------------------------------------------------------------------
# individual checks


def steady_pipe_error(mass_flow: float, length: float, diameter: float, p_in: float = 70 * BAR,
                      friction: float = 0.01, dx: float = 1000.0) -> float:
    """Relative mismatch of the relaxed ideal-gas steady state against
    ``p_in^2 - p_out^2 = (lambda L / D) R T phi |phi|``."""
    props = GasProperties(eos="ideal")
    net = single_pipe(length, diameter, friction)
    lay = Layout(net, discretize(net, dx))
    st = steady_state_init(lay, np.array([-mass_flow, mass_flow]), props, 1, p_in)
    phi = mass_flow / lay.area[0]
    expected = friction * length / diameter * props.RT * phi * abs(phi)
    p1, p2 = st.p_node
    return abs((p1 ** 2 - p2 ** 2) / expected - 1.0)


STEADY_TRIPLES = ((50.0, 50e3, 0.5), (150.0, 100e3, 0.914), (20.0, 30e3, 0.3))


def eos_roundtrip_error(props: Optional[GasProperties] = None) -> float:
    props = props or GasProperties()
    rho = np.geomspace(0.1, 200.0, 400)
    back = density_from_pressure(pressure_from_density(rho, props), props)
    return float(np.max(np.abs(back - rho) / rho))


def _pipe_run(n_cells: int, steps_per_cell: int, horizon: float, length: float = 40e3):
    """Single ideal-gas pipe driven by a smooth withdrawal pulse.

    Returns nodal pressures at six evenly spaced times and the final cell
    densities.
    """
    props = GasProperties(eos="ideal")
    net = single_pipe(length, 0.6)
    lay = Layout(net, [PipeGrid(1, n_cells, length / n_cells)])
    q0 = 60.0
    q, p = solve_network_flows(lay, np.array([-q0, q0]), props, 0, 60 * BAR)
    state = analytic_state(lay, q, p, props)
    tab = 1.0
    t = np.arange(0.0, horizon + 2 * tab, tab)
    pulse = 0.5 * q0 * np.sin(np.pi * np.clip(t / horizon, 0, 1)) ** 2
    values = np.vstack([-np.full_like(t, q0), q0 + pulse])
    bc = BoundarySet((1, 2), 0.0, tab, values, linear=True)
    run = _Run(state, bc, props)
    n_steps = steps_per_cell * n_cells
    dt = horizon / n_steps
    out = []
    per = n_steps // 6
    for _ in range(6):
        run.advance(per, dt)
        out.append(run.p_node.copy())
    return np.array(out), run.rho.copy()


def _order(errs):
    return [math.log2(e0 / e1) for e0, e1 in zip(errs[:-1], errs[1:])]


def refinement_study(levels=(20, 40, 80, 160), horizon: float = 3600.0) -> dict:
    """Halve dx and dt together (fixed Courant number) on a smooth pipe problem.

    Errors are successive differences between levels: the L2 norm of cell
    densities (fine pairs averaged onto the coarse cells) and the max norm of
    nodal pressure histories. Orders are log2 ratios of consecutive errors.
    """
    runs = [_pipe_run(n, 60, horizon) for n in levels]
    rho_err, p_err = [], []
    for (pc, rc), (pf, rf) in zip(runs[:-1], runs[1:]):
        restricted = 0.5 * (rf[0::2] + rf[1::2])
        rho_err.append(float(np.sqrt(np.mean((restricted - rc) ** 2))))
        p_err.append(float(np.max(np.abs(pf - pc))))
    return {"levels": list(levels), "density_l2": rho_err, "pressure_max": p_err,
            "density_order": _order(rho_err), "pressure_order": _order(p_err)}


def convergence_order(levels=(20, 40, 80, 160), horizon: float = 3600.0) -> tuple[float, list]:
    """Observed order in L2 density error on the finest pair of refinements."""
    study = refinement_study(levels, horizon)
    return study["density_order"][-1], study["density_l2"]


def mass_conservation_error(scenario=None, network: Optional[Network] = None,
                            seed: int = 0, config: SolverConfig = SolverConfig()) -> float:
    """|change in linepack - exact integral of net injection| / linepack, per week."""
    from .scenario import compose
    if scenario is None:
        from .core import data_path
        from .scenario import load_scenario
        network = israel_network()
        scenario = load_scenario(data_path("scenarios", "scenario3.json"), network)
    traj = simulate(network, scenario, config, seed)
    bc = compose(scenario, network, seed)
    span = traj.times[-1] - traj.times[0]
    n = int(round(span / bc.dt))
    injected = -float(bc.values[:, :n].sum()) * bc.dt
    change = traj.total_linepack[-1] - traj.total_linepack[0]
    rel = abs(change - injected) / traj.total_linepack[0]
    return rel * (7 * 86400.0 / span) if span > 0 else rel


def monotonicity_pairs(seed: int = 0, network: Optional[Network] = None):
    """Three ordered severity pairs on the shipped crest-insult scenario."""
    from .core import data_path
    from .metrics import check_monotonicity
    from .scenario import Insult, compose, fraction_loss, full_loss, load_scenario, ramp_loss

    net = network or israel_network()
    sc = load_scenario(data_path("scenarios", "scenario3.json"), net)
    T = sc.insult_time
    node = sc.insults[0].node_id

    def with_insult(g, kind):
        return sc.with_(insults=(Insult(node, T, g, kind),))

    pairs = {
        "full vs half supply loss": (with_insult(fraction_loss(0.5), "fraction_loss"),
                                     with_insult(full_loss(), "full_loss")),
        "instant vs 1 h ramp": (with_insult(ramp_loss(3600.0), "ramp_loss"),
                                with_insult(full_loss(), "full_loss")),
        "insult vs none": (sc.with_(insults=()), sc),
    }
    reports = {}
    for name, (mild, severe) in pairs.items():
        tm = simulate(net, mild, seed=seed)
        ts = simulate(net, severe, seed=seed)
        reports[name] = check_monotonicity(tm, ts, T, bc_mild=compose(mild, net, seed),
                                           bc_severe=compose(severe, net, seed))
    return reports


# ---------------------------------------------------------------------------


def _timed(fn: Callable[[], CheckResult]) -> CheckResult:
    t0 = time.perf_counter()
    res = fn()
    res.seconds = time.perf_counter() - t0
    return res


def run_battery(quick: bool = False) -> list[CheckResult]:
    results = []

    def conservation():
        err = mass_conservation_error()
        return CheckResult("mass conservation (relative, per week)", err < 1e-9, err, 1e-9)

    def order():
        st = refinement_study()
        p = st["density_order"][-1]
        return CheckResult("observed convergence order (L2 density)", p >= 1.8, p, 1.8,
                           f"nodal pressure order {st['pressure_order'][-1]:.3f}")

    def steady():
        errs = [steady_pipe_error(*t) for t in STEADY_TRIPLES]
        return CheckResult("steady pipe vs closed form (max relative)", max(errs) < 5e-3,
                           max(errs), 5e-3)

    def eos():
        err = eos_roundtrip_error()
        return CheckResult("EOS round trip (max relative)", err < 1e-10, err, 1e-10)

    def mono():
        reports = monotonicity_pairs()
        worst = max(r.max_violation for r in reports.values()) / BAR
        ok = all(r.ok for r in reports.values())
        bad = [k for k, r in reports.items() if not r.ok]
        return CheckResult("monotonicity pairs (max p_severe - p_mild, bar)", ok, worst, 1e-6,
                           "failing: " + ", ".join(bad) if bad else "3 pairs ordered")

    checks = [("eos", eos), ("steady", steady), ("order", order), ("conservation", conservation)]
    if not quick:
        checks.append(("monotonicity", mono))
    for _, fn in checks:
        results.append(_timed(fn))
    return results
