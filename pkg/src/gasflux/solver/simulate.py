"""Time integration driver: CFL step selection, single steps and full runs."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from ..core import GasProperties, Network, ValidationError, sound_speed
from ..trajectory import Trajectory
from .grid import Layout, discretize
from .kernels import STATUS_BAD_DENSITY, STATUS_OK, Stepper
from .state import BoundarySet, InstabilityError, SystemState


@dataclass(frozen=True)
class SolverConfig:
    target_dx_m: float = 1000.0
    cfl: float = 0.8
    output_cadence_s: float = 300.0
    eos_mode: str = "cnga"
    drift_tolerance: float = 1e-6
    backend: Optional[str] = None

    def __post_init__(self):
        if not self.target_dx_m > 0:
            raise ValidationError("target_dx_m must be positive")
        if not 0.0 < self.cfl < 1.0:
            raise ValidationError("cfl must lie in (0, 1)")
        if not self.output_cadence_s > 0:
            raise ValidationError("output_cadence_s must be positive")
        if self.eos_mode not in ("cnga", "ideal"):
            raise ValidationError(f"unknown eos_mode {self.eos_mode!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "SolverConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ValidationError(f"unknown solver config keys: {sorted(extra)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


def cfl_dt(state: SystemState, cfl: float, props: GasProperties) -> float:
    """``cfl * min over pipes of dx / (max wave speed in that pipe)``."""
    if not 0.0 < cfl < 1.0:
        raise ValidationError("cfl must lie in (0, 1)")
    if not (np.all(np.isfinite(state.rho)) and np.all(np.isfinite(state.rho_node))):
        raise InstabilityError("non-finite state", time=state.t)
    lay = state.layout
    a = sound_speed(state.rho, props)
    a_max = np.full(lay.n_pipes, 0.0)
    np.maximum.at(a_max, lay.cell_pipe, a)
    a_node = sound_speed(state.rho_node, props)
    a_max = np.maximum(a_max, np.maximum(a_node[lay.from_idx], a_node[lay.to_idx]))
    return float(cfl * np.min(lay.dx / a_max))


class _Run:
    """Mutable working copy of a state bound to a kernel."""

    def __init__(self, state: SystemState, bc: BoundarySet, props: GasProperties,
                 backend: Optional[str] = None):
        self.layout = state.layout
        self.props = props
        self.bc = bc
        self.stepper = Stepper(state.layout, props, bc, backend)
        self.rho = np.array(state.rho)
        self.phi = np.array(state.phi)
        self.p_node = np.array(state.p_node)
        self.rho_node = np.array(state.rho_node)
        self.t = float(state.t)
        self.flux_time = float(state.flux_time)
        self.synced = state.flux_time == state.t
        # net injection carried by the current fluxes, used by the first drift
        self.stepper.out[0] = float(np.sum(state.end_outflows()))

    def _fail(self, status, t):
        lay = self.layout
        idx = int(self.stepper.out[1])
        if status == STATUS_BAD_DENSITY:
            pid = lay.grids[idx].pipe_id
            raise InstabilityError(f"non-positive or non-finite density in pipe {pid} at t={t:.1f} s",
                                   time=t, pipe_id=pid)
        nid = lay.network.nodes[idx].id
        raise InstabilityError(f"nodal pressure solve failed at node {nid} at t={t:.1f} s",
                               time=t, node_id=nid)

    def half_kick(self, dt):
        status = self.stepper.kick(self.rho, self.phi, self.p_node, self.rho_node,
                                   0.5 * dt, self.t + 0.5 * dt)
        if status != STATUS_OK:
            self._fail(status, self.t)
        self.flux_time = self.t + 0.5 * dt
        self.synced = False

    def advance(self, n_steps, dt):
        if self.synced:
            self.half_kick(dt)
        status, t = self.stepper.advance(self.rho, self.phi, self.p_node, self.rho_node,
                                         n_steps, dt, self.t)
        if status != STATUS_OK:
            self._fail(status, t)
        self.t = t
        self.flux_time = t + 0.5 * dt

    def snapshot(self) -> SystemState:
        return SystemState(self.t, self.layout, self.rho, self.phi, self.rho_node,
                           self.p_node, self.flux_time)

    def kirchhoff_residual(self) -> float:
        lay = self.layout
        flow = lay.inc_sign * lay.area[lay.inc_pipe] * self.phi[lay.inc_edge]
        out = np.bincount(lay.inc_node, flow, minlength=lay.n_nodes)
        t = min(max(self.flux_time, self.bc.t0), self.bc.t_end)
        return float(np.max(np.abs(out + self.bc.at(t))))

    def linepack(self) -> np.ndarray:
        lay = self.layout
        return np.bincount(lay.cell_pipe, self.rho, minlength=lay.n_pipes) * lay.area * lay.dx


def step(state: SystemState, bc: BoundarySet, dt: float, props: GasProperties,
         backend: Optional[str] = None) -> SystemState:
    """Advance one time step of size ``dt``.

    A state whose fluxes are synchronized with its densities (``flux_time ==
    t``) first receives a half flux update so the leapfrog staggering holds.
    """
    if not dt > 0:
        raise ValidationError("dt must be positive")
    run = _Run(state, bc, props, backend)
    run.advance(1, dt)
    return run.snapshot()


def integrate(state: SystemState, bc: BoundarySet, horizon: float, props: GasProperties,
              config: SolverConfig = SolverConfig(), metadata: Optional[dict] = None,
              stop_pressure: Optional[float] = None) -> Trajectory:
    """Integrate from ``state.t`` for ``horizon`` seconds, sampling at the cadence.

    The step is re-chosen from the CFL bound at the start of every output
    interval and shrunk so the interval holds a whole number of steps; samples
    therefore fall exactly on step boundaries. When the interval spans whole
    boundary-table periods, each period gets a whole number of steps too, so
    the injected mass equals the exact integral of the step-wise table.

    With ``stop_pressure`` [Pa] the run ends at the first sample where any
    nodal pressure is below it (a drained network, long past any crossing of
    interest); the end time is recorded as ``metadata["terminated_at_s"]``.
    """
    if horizon < 0:
        raise ValidationError("horizon must be non-negative")
    t0 = float(state.t)
    t_stop = t0 + horizon
    if horizon > 0 and (bc.t0 > t0 or bc.t_end < t_stop):
        raise ValidationError(
            f"boundary profiles cover [{bc.t0}, {bc.t_end}] s, run needs [{t0}, {t_stop}] s")
    if tuple(bc.node_ids) != tuple(state.layout.network.node_ids):
        raise ValidationError("boundary set nodes do not match the network")
    run = _Run(state, bc, props, config.backend)
    run.stepper.out[3] = 0.0
    cadence = config.output_cadence_s
    n_out = int(math.ceil(horizon / cadence - 1e-9)) if horizon > 0 else 0
    times = [t0]
    pressures = [run.p_node.copy()]
    linepack = [run.linepack()]
    injected = [0.0]
    resid = [run.kirchhoff_residual() if not run.synced else
             float(np.max(np.abs(state.end_outflows() + bc.at(t0))))]
    for k in range(1, n_out + 1):
        t_next = min(t0 + k * cadence, t_stop)
        span = t_next - run.t
        dt_max = cfl_dt(run.snapshot(), config.cfl, props)
        n = max(1, int(math.ceil(span / dt_max - 1e-12)))
        # whole steps per boundary interval: step midpoints never straddle a switch
        per = span / bc.dt
        if not bc.linear and per >= 1.0 and abs(per - round(per)) < 1e-9 \
                and abs((run.t - bc.t0) / bc.dt - round((run.t - bc.t0) / bc.dt)) < 1e-9:
            m = int(round(per))
            n = int(math.ceil(n / m)) * m
        run.advance(n, span / n)
        run.t = t_next
        times.append(t_next)
        pressures.append(run.p_node.copy())
        linepack.append(run.linepack())
        injected.append(float(run.stepper.out[3]))
        resid.append(run.kirchhoff_residual())
        if stop_pressure is not None and run.p_node.min() < stop_pressure and k < n_out:
            metadata = dict(metadata or {}, terminated_at_s=t_next)
            break
    net = state.layout.network
    return Trajectory(
        times=np.array(times),
        node_ids=tuple(net.node_ids),
        pressures=np.array(pressures),
        pipe_ids=tuple(p.id for p in net.pipes),
        linepack=np.array(linepack),
        injected_mass=np.array(injected),
        kirchhoff_residual=np.array(resid),
        metadata=dict(metadata or {}),
        final_state=run.snapshot(),
    )


def make_layout(network: Network, config: SolverConfig) -> Layout:
    return Layout(network, discretize(network, config.target_dx_m))


def simulate(network: Network, scenario, config: SolverConfig = SolverConfig(),
             seed: int = 0, props: Optional[GasProperties] = None,
             initial_state: Optional[SystemState] = None) -> Trajectory:
    """Run one scenario (or a ready :class:`BoundarySet` plus horizon) end to end.

    ``scenario`` is a :class:`gasflux.scenario.Scenario`; its boundary set is
    composed with ``seed``. Unless ``initial_state`` is given the run starts
    from the relaxed steady state of the noise-free loads at t = 0
    (see :func:`initial_state_for`).
    """
    from ..scenario import compose

    props = resolve_props(props, config)
    bc, meta = compose(scenario, network, seed, return_metadata=True)
    if initial_state is None:
        initial_state = initial_state_for(network, scenario, config, props)
    meta.update(seed=seed, scenario_id=scenario.id)
    return integrate(initial_state, bc, scenario.horizon, props, config, meta,
                     stop_pressure=scenario.stop_pressure)


def resolve_props(props: Optional[GasProperties], config: SolverConfig) -> GasProperties:
    props = props or GasProperties(eos=config.eos_mode)
    return props if props.eos == config.eos_mode else props.replace(eos=config.eos_mode)


def initial_state_for(network: Network, scenario, config: SolverConfig = SolverConfig(),
                      props: Optional[GasProperties] = None) -> SystemState:
    """Relaxed steady state for the scenario's nominal (noise-free) loads at t = 0."""
    from ..scenario import NoiseSpec, balanced_initial_withdrawals, compose
    from .steady import steady_state_init

    props = resolve_props(props, config)
    nominal = compose(scenario.with_(noise=NoiseSpec()), network)
    d0 = balanced_initial_withdrawals(network, nominal.at(0.0))
    ref = scenario.reference_node if scenario.reference_node is not None else \
        network.nodes_of_kind("supply")[0]
    return steady_state_init(make_layout(network, config), d0, props, ref,
                             scenario.reference_pressure,
                             drift_tolerance=config.drift_tolerance, backend=config.backend)
