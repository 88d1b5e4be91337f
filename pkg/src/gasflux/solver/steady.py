"""Steady initial states.

Stage 1 solves the algebraic network problem: pipe mass flows ``q`` and
nodal pressure potentials ``Pi(p) = int_0^p p'/Z(p') dp'`` with

    Pi(p_from) - Pi(p_to) = lambda R T L q|q| / (2 D S**2)

per pipe and mass balance at every node, one node's pressure pinned. The
potential is linear along a pipe at steady state, which gives the cell
profiles in closed form. Stage 2 time-marches the discrete scheme with frozen
boundaries until nodal pressures stop moving, removing the O(dx^2) mismatch
between the continuous profile and the discrete steady state.
"""

from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np
from scipy.optimize import root

from ..core import (GasfluxError, GasProperties, ValidationError, density_from_pressure,
                    pressure_from_potential, pressure_potential)
from .grid import Layout
from .simulate import _Run, cfl_dt
from .state import BoundarySet, SystemState

log = logging.getLogger(__name__)


class SteadyStateError(GasfluxError, RuntimeError):
    pass


def pipe_resistance(layout: Layout, props: GasProperties) -> np.ndarray:
    """``K`` in ``Pi_from - Pi_to = K q|q|`` for every pipe."""
    L = layout.dx * np.array([g.n_cells for g in layout.grids])
    return layout.friction * props.RT * L / (2.0 * layout.diameter * layout.area ** 2)


def solve_network_flows(layout: Layout, withdrawals, props: GasProperties, ref_index: int,
                        ref_pressure: float):
    """Algebraic steady state: returns (pipe flows [kg/s], nodal pressures [Pa])."""
    d = np.asarray(withdrawals, float)
    n_nodes, n_pipes = layout.n_nodes, layout.n_pipes
    K = pipe_resistance(layout, props)
    pi_ref = float(pressure_potential(ref_pressure, props))
    if not np.any(d):
        return np.zeros(n_pipes), np.full(n_nodes, ref_pressure)

    # incidence: +1 where the pipe enters the node
    A = np.zeros((n_nodes, n_pipes))
    A[layout.to_idx, np.arange(n_pipes)] += 1.0
    A[layout.from_idx, np.arange(n_pipes)] -= 1.0
    keep = [i for i in range(n_nodes) if i != ref_index]
    q_scale = max(np.abs(d).max(), 1e-12)
    q0 = np.linalg.lstsq(A, d, rcond=None)[0]
    pi_free = [i for i in range(n_nodes) if i != ref_index]

    def unpack(x):
        q = x[:n_pipes] * q_scale
        pi = np.full(n_nodes, pi_ref)
        pi[pi_free] = x[n_pipes:] * pi_ref
        return q, pi

    def fun(x):
        q, pi = unpack(x)
        r_node = (A @ q - d)[keep] / q_scale
        r_pipe = (pi[layout.from_idx] - pi[layout.to_idx] - K * q * np.abs(q)) / pi_ref
        jac = np.zeros((len(x), len(x)))
        jac[:len(keep), :n_pipes] = A[keep]
        jac[len(keep):, :n_pipes] = -np.diag(2.0 * K * np.abs(q)) * q_scale / pi_ref
        cols = {node: n_pipes + j for j, node in enumerate(pi_free)}
        for k in range(n_pipes):
            f, t = layout.from_idx[k], layout.to_idx[k]
            if f in cols:
                jac[len(keep) + k, cols[f]] += 1.0
            if t in cols:
                jac[len(keep) + k, cols[t]] -= 1.0
        return np.concatenate([r_node, r_pipe]), jac

    x0 = np.concatenate([q0 / q_scale, np.ones(n_nodes - 1)])
    sol = root(fun, x0, jac=True, method="hybr", options={"xtol": 1e-13})
    resid = np.max(np.abs(fun(sol.x)[0]))
    if resid > 1e-9:
        raise SteadyStateError(f"network steady solve did not converge (scaled residual {resid:.3e})")
    q, pi = unpack(sol.x)
    if np.any(pi <= 0):
        bad = [layout.network.nodes[i].id for i in np.flatnonzero(pi <= 0)]
        raise SteadyStateError(f"no steady state with positive pressure at nodes {bad}")
    return q, pressure_from_potential(pi, props)


def analytic_state(layout: Layout, q, p_nodes, props: GasProperties) -> SystemState:
    """Cell profiles of the continuous steady solution for given flows/pressures."""
    pi_n = pressure_potential(np.asarray(p_nodes, float), props)
    rho = np.empty(layout.n_cells)
    phi = np.empty(layout.n_edges)
    for k, g in enumerate(layout.grids):
        pi_a, pi_b = pi_n[layout.from_idx[k]], pi_n[layout.to_idx[k]]
        s = g.centers / g.length
        pi_x = pi_a + (pi_b - pi_a) * s
        if np.any(pi_x <= 0):
            raise SteadyStateError(f"pipe {g.pipe_id}: steady pressure would vanish")
        rho[layout.cell_slice(k)] = density_from_pressure(pressure_from_potential(pi_x, props), props)
        phi[layout.edge_slice(k)] = q[k] / layout.area[k]
    p_nodes = np.asarray(p_nodes, float)
    return SystemState(0.0, layout, rho, phi, density_from_pressure(p_nodes, props), p_nodes, 0.0)


def steady_state_init(layout: Layout, withdrawals, props: GasProperties, ref_node: int,
                      ref_pressure: float, drift_tolerance: Optional[float] = 1e-6,
                      cfl: float = 0.8, max_hours: int = 400, backend: Optional[str] = None
                      ) -> SystemState:
    """Steady state for constant nodal withdrawals (negative = supply).

    ``drift_tolerance`` bounds the relative hourly change of every nodal
    pressure and of the total linepack after relaxation; ``None`` skips
    relaxation and returns the continuous profile.
    """
    d = np.asarray(withdrawals, float)
    if d.shape != (layout.n_nodes,):
        raise ValidationError("one withdrawal per node required")
    scale = max(np.abs(d).sum() / 2.0, 1e-300)
    if abs(d.sum()) > 1e-9 * scale:
        raise ValidationError(f"supplies and demands are unbalanced by {d.sum():.6g} kg/s")
    d = d - d.sum() / d.size if np.any(d) else d
    try:
        ref_index = layout.network.node_index()[ref_node]
    except KeyError:
        raise ValidationError(f"unknown reference node {ref_node}") from None
    q, p_nodes = solve_network_flows(layout, d, props, ref_index, ref_pressure)
    state = analytic_state(layout, q, p_nodes, props)
    if drift_tolerance is None or not np.any(d):
        return state

    bc = BoundarySet.constant(layout.network.node_ids, d, 3600.0 * (max_hours + 1))
    run = _Run(state, bc, props, backend)
    dt = cfl_dt(state, cfl, props)
    n = max(1, int(math.ceil(3600.0 / dt)))
    p_prev = run.p_node.copy()
    lp_prev = run.linepack().sum()
    drift = np.inf
    for hour in range(max_hours):
        run.advance(n, 3600.0 / n)
        lp = run.linepack().sum()
        drift = max(np.max(np.abs(run.p_node - p_prev) / p_prev), abs(lp - lp_prev) / lp_prev)
        if drift < drift_tolerance:
            log.debug("steady relaxation converged after %d h (drift %.2e)", hour + 1, drift)
            break
        p_prev = run.p_node.copy()
        lp_prev = lp
    else:
        raise SteadyStateError(
            f"steady relaxation not converged in {max_hours} h (hourly drift {drift:.3e}, "
            f"tolerance {drift_tolerance:.1e})")
    return SystemState(0.0, layout, run.rho, run.phi, run.rho_node, run.p_node, 0.0)
