"""Boundary-condition composition: demand profiles, noise, insults and controls.

Profiles carry non-negative flow magnitudes: supply rate at supply nodes,
withdrawal at demand nodes. :func:`compose` turns them into a signed
:class:`~gasflux.solver.state.BoundarySet` (supplies negative) in a fixed
order: base -> noise -> insults -> controls.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .core import BAR, GasProperties, Network, ValidationError
from .solver.state import BoundarySet

log = logging.getLogger(__name__)

HOUR = 3600.0
DAY = 86400.0


@dataclass(frozen=True, eq=False)
class Profile:
    node_id: int
    times: np.ndarray  # [s]
    values: np.ndarray  # [kg/s]
    interpolation: str = "step"

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        v = np.array(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise ValidationError(f"profile {self.node_id}: times and values must be equal-length 1-D")
        if np.any(np.diff(t) <= 0):
            raise ValidationError(f"profile {self.node_id}: time stamps must be strictly increasing")
        if self.interpolation not in ("step", "linear"):
            raise ValidationError(f"profile {self.node_id}: unknown interpolation {self.interpolation!r}")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.interpolation == "linear":
            out = np.interp(t, self.times, self.values)
        else:
            i = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.times.size - 1)
            out = self.values[i]
        return out if out.ndim else float(out)

    def with_values(self, values, times=None) -> "Profile":
        return Profile(self.node_id, self.times if times is None else times, values,
                       self.interpolation)

    def resample(self, times, interpolation: str = "step") -> "Profile":
        return Profile(self.node_id, times, self(times), interpolation)

    def covers(self, t0: float, t1: float) -> bool:
        end = self.times[-1] if self.interpolation == "linear" else math.inf
        return self.times[0] <= t0 and end >= t1


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "none"  # "ou" | "uniform" | "none"
    alpha: float = 1.0 / HOUR  # [1/s]
    gamma: Optional[float] = None  # [kg/s per sqrt(s)]; derived from variance_ratio when None
    variance_ratio: float = 0.01
    width_fraction: float = 0.05
    hold: float = 1800.0  # [s] uniform draws held this long
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("ou", "uniform", "none"):
            raise ValidationError(f"unknown noise kind {self.kind!r}")
        if not self.alpha > 0:
            raise ValidationError("noise alpha must be positive")
        if self.variance_ratio < 0 or self.width_fraction < 0:
            raise ValidationError("noise magnitudes must be non-negative")
        if self.gamma is not None and self.gamma < 0:
            raise ValidationError("noise gamma must be non-negative")


# Gamma transforms: (times, s_values, T) -> perturbation values. Plain classes
# rather than closures so scenarios pickle into worker processes.


@dataclass(frozen=True)
class FractionLoss:
    fraction: float = 1.0

    def __call__(self, t, s, T):
        return -self.fraction * np.asarray(s)


@dataclass(frozen=True)
class RampLoss:
    """Linear ramp from no loss at T to ``fraction`` of the flow at T + duration."""
    duration: float
    fraction: float = 1.0

    def __call__(self, t, s, T):
        return -self.fraction * np.clip((np.asarray(t) - T) / self.duration, 0.0, 1.0) * s


def full_loss() -> FractionLoss:
    return FractionLoss(1.0)


def fraction_loss(fraction: float) -> FractionLoss:
    return FractionLoss(fraction)


def ramp_loss(duration: float, fraction: float = 1.0) -> RampLoss:
    return RampLoss(duration, fraction)


@dataclass(frozen=True)
class Insult:
    node_id: int
    start: float  # [s]
    perturbation: Callable = field(default_factory=full_loss, compare=False)
    kind: str = "full_loss"
    params: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_dict(cls, rec: dict) -> "Insult":
        kind = rec.get("kind", "full_loss")
        start = float(rec["start_h"]) * HOUR if "start_h" in rec else float(rec["start_s"])
        if kind == "full_loss":
            g, params = full_loss(), {}
        elif kind == "fraction_loss":
            params = {"fraction": float(rec["fraction"])}
            g = fraction_loss(params["fraction"])
        elif kind == "ramp_loss":
            params = {"duration_s": float(rec.get("duration_h", 1.0)) * HOUR,
                      "fraction": float(rec.get("fraction", 1.0))}
            g = ramp_loss(params["duration_s"], params["fraction"])
        else:
            raise ValidationError(f"unknown insult kind {kind!r}")
        return cls(int(rec["node"]), start, g, kind, params)


@dataclass(frozen=True)
class ControlAction:
    kind: str  # "supply_step" | "demand_curtail"
    node_ids: tuple
    time: float  # [s]
    magnitude: Optional[float] = None  # dq [kg/s] or factor; None steps a supply to its max

    def __post_init__(self):
        if self.kind not in ("supply_step", "demand_curtail"):
            raise ValidationError(f"unknown control kind {self.kind!r}")
        object.__setattr__(self, "node_ids", tuple(self.node_ids))
        if self.kind == "demand_curtail":
            if self.magnitude is None or not 0.0 <= self.magnitude <= 1.0:
                raise ValidationError("curtailment factor must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class Scenario:
    id: str
    base_profiles: dict  # node id -> Profile
    horizon: float  # [s]
    noise: NoiseSpec = NoiseSpec()
    insults: tuple = ()
    controls: tuple = ()
    max_flow: dict = field(default_factory=dict)  # node id -> kg/s
    bc_dt: float = 60.0
    reference_node: Optional[int] = None
    reference_pressure: float = 70.0 * BAR
    stop_pressure: Optional[float] = None  # [Pa] end the run once any node drops below
    description: str = ""

    def __post_init__(self):
        if self.horizon < 0:
            raise ValidationError("scenario horizon must be non-negative")
        if not self.bc_dt > 0:
            raise ValidationError("bc_dt must be positive")
        object.__setattr__(self, "insults", tuple(self.insults))
        object.__setattr__(self, "controls", tuple(self.controls))
        for ins in self.insults:
            if not 0.0 <= ins.start <= self.horizon:
                raise ValidationError(f"insult at node {ins.node_id} starts outside the horizon")

    @property
    def insult_time(self) -> Optional[float]:
        return min((i.start for i in self.insults), default=None)

    def with_(self, **kw) -> "Scenario":
        return replace(self, **kw)


# ---------------------------------------------------------------------------
# stochastic perturbations


def calibrate_ou(mu: float, variance_ratio: float, alpha: float) -> float:
    """Noise amplitude giving stationary variance ``variance_ratio * mu**2``."""
    if not mu > 0 or variance_ratio < 0 or not alpha > 0:
        raise ValidationError("need mu > 0, variance_ratio >= 0, alpha > 0")
    return mu * math.sqrt(2.0 * alpha * variance_ratio)


def ou_sample_path(d: Profile, alpha: float, gamma: float, dt: Optional[float] = None,
                   seed: int = 0, rng: Optional[np.random.Generator] = None) -> Profile:
    """Mean-reverting noise around the nominal profile ``d``.

    The deviation ``Y = X - d`` is advanced with the exact transition
    ``Y' = Y e^{-alpha h} + gamma sqrt((1 - e^{-2 alpha h}) / (2 alpha)) xi``,
    so ``E[X] = d`` at every sample and ``Var -> gamma**2 / (2 alpha)``.
    Samples sit on ``d``'s own time stamps unless ``dt`` asks for a uniform grid.
    """
    if not alpha > 0 or gamma < 0 or (dt is not None and not dt > 0):
        raise ValidationError("need alpha > 0, gamma >= 0, dt > 0")
    if dt is not None:
        n = int(math.floor((d.times[-1] - d.times[0]) / dt + 1e-9)) + 1
        d = d.resample(d.times[0] + dt * np.arange(n), "step")
    if gamma == 0.0:
        return d
    rng = rng if rng is not None else np.random.default_rng(seed)
    h = np.diff(d.times)
    decay = np.exp(-alpha * h)
    scale = gamma * np.sqrt(-np.expm1(-2.0 * alpha * h) / (2.0 * alpha))
    xi = rng.standard_normal(h.size)
    y = np.empty(d.times.size)
    y[0] = 0.0
    for k in range(h.size):
        y[k + 1] = y[k] * decay[k] + scale[k] * xi[k]
    return d.with_values(d.values + y)


def uniform_noise(d: Profile, width_fraction: float, seed: int = 0, hold: Optional[float] = None,
                  rng: Optional[np.random.Generator] = None) -> Profile:
    """Multiply each sample by ``1 + U(-w/2, w/2)``; draws are held for ``hold`` seconds."""
    if width_fraction < 0:
        raise ValidationError("width_fraction must be non-negative")
    if width_fraction == 0.0:
        return d
    rng = rng if rng is not None else np.random.default_rng(seed)
    if hold is None:
        u = rng.uniform(-0.5, 0.5, d.times.size)
    else:
        block = np.floor((d.times - d.times[0]) / hold + 1e-9).astype(np.int64)
        u = rng.uniform(-0.5, 0.5, block[-1] + 1)[block]
    return d.with_values(d.values * (1.0 + width_fraction * u))


# ---------------------------------------------------------------------------
# insults and controls


def _with_breakpoint(p: Profile, T: float) -> Profile:
    if T in p.times or T < p.times[0]:
        return p
    times = np.sort(np.append(p.times, T))
    return p.with_values(p(times), times)


def apply_insult(s: Profile, insult: Insult) -> Profile:
    """``s(t) + Theta(t - T) * Gamma(t)``.

    Step profiles switch exactly at T; for linear profiles the jump spreads
    over the sample interval that starts at T.
    """
    if insult.node_id != s.node_id:
        raise ValidationError(f"insult for node {insult.node_id} applied to profile {s.node_id}")
    p = _with_breakpoint(s, insult.start) if s.interpolation == "step" else s
    after = p.times >= insult.start
    vals = p.values.copy()
    gamma = np.broadcast_to(insult.perturbation(p.times, p.values, insult.start), vals.shape)
    vals[after] = vals[after] + gamma[after]
    return p.with_values(vals)


def apply_control(p: Profile, action: ControlAction, max_flow: Optional[float] = None,
                  flags: Optional[list] = None) -> Profile:
    """Step a supply up by ``dq`` (clipped at ``max_flow``) or scale a demand, from
    the activation time onward. Clipping is appended to ``flags`` when given."""
    if p.node_id not in action.node_ids:
        raise ValidationError(f"control for nodes {action.node_ids} applied to profile {p.node_id}")
    if p.interpolation == "step":
        p = _with_breakpoint(p, action.time)
    after = p.times >= action.time
    vals = p.values.copy()
    if action.kind == "demand_curtail":
        if action.magnitude == 1.0:
            return p
        vals[after] = vals[after] * action.magnitude
        return p.with_values(vals)
    if action.magnitude is None:
        if max_flow is None:
            raise ValidationError(f"node {p.node_id}: step-to-max needs a max flow rate")
        vals[after] = max_flow
        return p.with_values(vals)
    if action.magnitude == 0.0:
        return p
    stepped = vals[after] + action.magnitude
    if max_flow is not None and np.any(stepped > max_flow):
        stepped = np.minimum(stepped, max_flow)
        if flags is not None:
            flags.append(f"supply step at node {p.node_id} clipped to {max_flow:g} kg/s")
        log.warning("supply step at node %s clipped to max flow %g kg/s", p.node_id, max_flow)
    vals[after] = stepped
    return p.with_values(vals)


# ---------------------------------------------------------------------------
# power -> gas


@dataclass(frozen=True, eq=False)
class EfficiencyCurve:
    load_fraction: np.ndarray
    efficiency: np.ndarray

    def __post_init__(self):
        lf = np.asarray(self.load_fraction, float)
        eff = np.asarray(self.efficiency, float)
        if lf.shape != eff.shape or lf.size < 2:
            raise ValidationError("efficiency curve needs at least two (load, efficiency) rows")
        if np.any(np.diff(lf) <= 0):
            raise ValidationError("efficiency curve load fractions must increase")
        if np.any(eff <= 0) or np.any(eff > 1):
            raise ValidationError("efficiencies must lie in (0, 1]")
        object.__setattr__(self, "load_fraction", lf)
        object.__setattr__(self, "efficiency", eff)

    def __call__(self, load):
        load = np.asarray(load, float)
        lo, hi = self.load_fraction[0], self.load_fraction[-1]
        if np.any((load < lo) | (load > hi)):
            log.warning("load fraction outside efficiency table [%g, %g]; clamped", lo, hi)
        return np.interp(np.clip(load, lo, hi), self.load_fraction, self.efficiency)

    @classmethod
    def from_csv(cls, path) -> "EfficiencyCurve":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        try:
            lf = [float(r["load_fraction"]) for r in rows]
            eff = [float(r["efficiency"]) for r in rows]
        except (KeyError, ValueError) as exc:
            raise ValidationError(f"{path}: bad efficiency curve ({exc})") from None
        return cls(np.array(lf), np.array(eff))


def power_to_gas(times, power_mw, curve: EfficiencyCurve, props: GasProperties,
                 capacity_mw: float, node_id: int = 0) -> Profile:
    """Gas mass flow [kg/s] burnt to produce ``power_mw`` (MW == MJ/s)."""
    power = np.asarray(power_mw, float)
    if not capacity_mw > 0:
        raise ValidationError("capacity must be positive")
    eta = curve(power / capacity_mw)
    gas = power / (eta * props.energy_density)
    return Profile(node_id, np.asarray(times, float), gas, "step")


# ---------------------------------------------------------------------------
# composition


def _signed(network: Network, node_id: int) -> float:
    return -1.0 if network.node(node_id).kind == "supply" else 1.0


def compose(scenario: Scenario, network: Network, seed: Optional[int] = None,
            return_metadata: bool = False):
    """Evaluate the scenario into a boundary table on its ``bc_dt`` grid.

    Stages run in a fixed order: base profiles -> demand noise -> insults ->
    controls. Noise draws come from one generator seeded with ``seed`` (the
    scenario's own noise seed when None), visiting demand nodes in network order.
    """
    seed = scenario.noise.seed if seed is None else seed
    ids = network.node_ids
    for nid in list(scenario.base_profiles) + [i.node_id for i in scenario.insults] + \
            [n for c in scenario.controls for n in c.node_ids]:
        if nid not in ids:
            raise ValidationError(f"scenario references unknown node {nid}")
    n_t = int(math.ceil(scenario.horizon / scenario.bc_dt - 1e-9)) + 2
    grid = scenario.bc_dt * np.arange(n_t)
    flags: list = []

    stage = "base"
    try:
        prof = {}
        for nid in ids:
            base = scenario.base_profiles.get(nid)
            if base is None:
                prof[nid] = Profile(nid, grid, np.zeros(n_t))
                continue
            if not base.covers(0.0, scenario.horizon):
                raise ValidationError(f"base profile of node {nid} does not cover the horizon")
            prof[nid] = base.resample(grid, "step")

        stage = "noise"
        ns = scenario.noise
        if ns.kind != "none":
            rng = np.random.default_rng(seed)
            in_horizon = grid <= scenario.horizon
            for nid in ids:
                if network.node(nid).kind != "demand" or nid not in scenario.base_profiles:
                    continue
                p = prof[nid]
                if ns.kind == "ou":
                    mu = float(np.mean(p.values[in_horizon]))
                    gamma = ns.gamma if ns.gamma is not None else (
                        calibrate_ou(mu, ns.variance_ratio, ns.alpha) if mu > 0 else 0.0)
                    prof[nid] = ou_sample_path(p, ns.alpha, gamma, rng=rng)
                else:
                    prof[nid] = uniform_noise(p, ns.width_fraction, hold=ns.hold, rng=rng)

        stage = "insults"
        for ins in scenario.insults:
            prof[ins.node_id] = apply_insult(prof[ins.node_id], ins)

        stage = "controls"
        for act in scenario.controls:
            for nid in act.node_ids:
                kind = network.node(nid).kind
                if act.kind == "supply_step" and kind != "supply":
                    raise ValidationError(f"supply step on non-supply node {nid}")
                if act.kind == "demand_curtail" and kind != "demand":
                    raise ValidationError(f"curtailment on non-demand node {nid}")
                prof[nid] = apply_control(prof[nid], act, scenario.max_flow.get(nid), flags)
    except ValidationError as exc:
        raise ValidationError(f"compose stage '{stage}': {exc}") from None

    values = np.empty((len(ids), n_t))
    for i, nid in enumerate(ids):
        values[i] = _signed(network, nid) * prof[nid](grid)
    bc = BoundarySet(tuple(ids), 0.0, scenario.bc_dt, values, linear=False)
    if return_metadata:
        return bc, {"clip_flags": flags}
    return bc


def balanced_initial_withdrawals(network: Network, d0, rel_tol: float = 1e-3):
    """Rescale supplies so they match the demand at t = 0 exactly.

    Profiles read from text carry round-off; anything beyond ``rel_tol`` of
    the demand is treated as a genuinely unbalanced start and rejected.
    """
    d0 = np.asarray(d0, float).copy()
    supply = np.array([n.kind == "supply" for n in network.nodes])
    demand = d0[~supply].sum()
    inj = -d0[supply].sum()
    if demand == 0.0 and inj == 0.0:
        return d0
    if inj <= 0 or abs(inj - demand) > rel_tol * max(abs(demand), abs(inj)):
        raise ValidationError(
            f"initial supply {inj:.6g} kg/s does not balance demand {demand:.6g} kg/s")
    d0[supply] *= demand / inj
    d0[supply] -= d0.sum() / supply.sum()
    return d0


# ---------------------------------------------------------------------------
# synthetic demand and files


def synthetic_week(network: Network, total_demand: float, demand_shares: dict,
                   supply_shares: dict, diurnal_amplitude: float = 0.15,
                   day_factors: Sequence[float] = (1, 1, 1, 1, 1, 0.9, 0.85),
                   baseload_fraction: float = 0.1, cadence: float = 1800.0,
                   days: Optional[int] = None) -> dict:
    """Nominal demand week: constant baseload plus a diurnal electric part.

    The electric share follows ``1 - A sin(2 pi t / 1 day)`` scaled by a
    per-day factor, so demand equals the daily mean at midnight, runs low in
    the first half of each day and high in the second. Supplies are flat
    within a day and match that day's mean demand.
    """
    days = len(day_factors) if days is None else days
    times = np.arange(0.0, days * DAY + cadence / 2, cadence)
    shares = np.array([demand_shares[n] for n in demand_shares], float)
    shares = shares / shares.sum()
    day = np.minimum((times // DAY).astype(int), days - 1)
    factor = np.asarray(day_factors, float)[day % len(day_factors)]
    diurnal = 1.0 - diurnal_amplitude * np.sin(2.0 * np.pi * times / DAY)
    unit = baseload_fraction + (1.0 - baseload_fraction) * diurnal * factor
    profiles = {}
    for nid, sh in zip(demand_shares, shares):
        profiles[int(nid)] = Profile(int(nid), times, total_demand * sh * unit, "linear")
    daily_mean = total_demand * (baseload_fraction + (1.0 - baseload_fraction) * factor)
    s_shares = np.array([supply_shares[n] for n in supply_shares], float)
    s_shares = s_shares / s_shares.sum()
    for nid, sh in zip(supply_shares, s_shares):
        profiles[int(nid)] = Profile(int(nid), times, daily_mean * sh, "linear")
    for nid in profiles:
        network.node(nid)
    return profiles


def read_profiles_csv(path) -> dict:
    """Long-format CSV ``time_s,node_id,flow_kg_s`` -> {node: linear Profile}."""
    series: dict = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        value_col = next((c for c in cols if c.endswith("_kg_s")), None)
        if "time_s" not in cols or "node_id" not in cols or value_col is None:
            raise ValidationError(f"{path}: expected columns time_s,node_id,<quantity>_kg_s")
        for r in reader:
            series.setdefault(int(r["node_id"]), []).append((float(r["time_s"]), float(r[value_col])))
    out = {}
    for nid, rows in series.items():
        rows.sort()
        t, v = zip(*rows)
        out[nid] = Profile(nid, np.array(t), np.array(v), "linear")
    return out


def write_profiles_csv(path, profiles: dict, column: str = "flow_kg_s") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_s", "node_id", column])
        for nid in sorted(profiles):
            p = profiles[nid]
            for t, v in zip(p.times, p.values):
                w.writerow([repr(float(t)), nid, repr(float(v))])


def scenario_from_dict(data: dict, base_dir=".") -> Scenario:
    base_dir = Path(base_dir)
    bp = data.get("base_profiles", {})
    profiles: dict = {}
    if "csv" in bp:
        profiles.update(read_profiles_csv(base_dir / bp["csv"]))
    for rec in bp.get("inline", []):
        t = np.array(rec["times_h"], float) * HOUR if "times_h" in rec else np.array(rec["times_s"], float)
        profiles[int(rec["node"])] = Profile(int(rec["node"]), t, rec["values_kg_s"],
                                             rec.get("interpolation", "linear"))
    nz = dict(data.get("noise", {"kind": "none"}))
    noise = NoiseSpec(
        kind=nz.get("kind", "none"),
        alpha=float(nz.get("alpha_per_s", 1.0 / HOUR)),
        gamma=None if nz.get("gamma") is None else float(nz["gamma"]),
        variance_ratio=float(nz.get("variance_ratio", 0.01)),
        width_fraction=float(nz.get("width_fraction", 0.05)),
        hold=float(nz.get("hold_s", 1800.0)),
        seed=int(nz.get("seed", 0)),
    )
    insults = tuple(Insult.from_dict(r) for r in data.get("insults", []))
    controls = []
    for rec in data.get("controls", []):
        start = float(rec["start_h"]) * HOUR if "start_h" in rec else float(rec["start_s"])
        nodes = rec.get("nodes", rec.get("node"))
        nodes = [nodes] if isinstance(nodes, (int, str)) and nodes != "all_demand" else nodes
        if rec["kind"] == "supply_step":
            mag = None if rec.get("to_max") else float(rec.get("delta_kg_s", 0.0))
        else:
            mag = float(rec["factor"])
        controls.append((rec["kind"], nodes, start, mag))
    ref = data.get("reference", {})
    sc = Scenario(
        id=str(data.get("id", "scenario")),
        description=str(data.get("description", "")),
        base_profiles=profiles,
        horizon=float(data["horizon_h"]) * HOUR,
        noise=noise,
        insults=insults,
        controls=(),
        max_flow={int(k): float(v) for k, v in data.get("max_flow_kg_s", {}).items()},
        bc_dt=float(data.get("bc_dt_s", 60.0)),
        reference_node=int(ref["node"]) if "node" in ref else None,
        reference_pressure=float(ref.get("pressure_bar", 70.0)) * BAR,
        stop_pressure=float(data["stop_below_bar"]) * BAR if data.get("stop_below_bar") else None,
    )
    # "all_demand" expands once the network is known; keep a placeholder list
    return sc.with_(controls=tuple(_Pending(*c) for c in controls))


@dataclass(frozen=True)
class _Pending:
    kind: str
    nodes: object
    time: float
    magnitude: Optional[float]


def resolve(scenario: Scenario, network: Network) -> Scenario:
    """Expand node selectors (``"all_demand"``) against a concrete network."""
    out = []
    for c in scenario.controls:
        if isinstance(c, _Pending):
            nodes = network.nodes_of_kind("demand") if c.nodes == "all_demand" else \
                [int(n) for n in c.nodes]
            c = ControlAction(c.kind, tuple(nodes), c.time, c.magnitude)
        out.append(c)
    return scenario.with_(controls=tuple(out))


def load_scenario(path, network: Optional[Network] = None) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from None
    sc = scenario_from_dict(data, path.parent)
    return resolve(sc, network) if network is not None else sc


# shipped nominal week: shares of total demand / supply per node
AUGUST_DEMAND_SHARES = {2: 0.15, 3: 0.10, 4: 0.12, 5: 0.08, 6: 0.05, 7: 0.12, 9: 0.13,
                        10: 0.12, 11: 0.13}
AUGUST_SUPPLY_SHARES = {1: 0.5, 8: 0.5}
AUGUST_TOTAL_KG_S = 500.0


def august_week(network: Network) -> dict:
    """The synthetic nominal August week shipped with the package."""
    return synthetic_week(network, AUGUST_TOTAL_KG_S, AUGUST_DEMAND_SHARES,
                          AUGUST_SUPPLY_SHARES, diurnal_amplitude=0.15,
                          day_factors=(1, 1, 1, 1, 1, 0.9, 0.85), baseload_fraction=0.1,
                          cadence=1800.0)


def _parse_time(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        pass
    try:
        from datetime import datetime, timezone
        dt = datetime.fromisoformat(text.strip())
    except ValueError:
        raise ValidationError(f"unreadable timestamp {text!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def read_unit_map(path) -> dict:
    """CSV ``unit_id,node_id[,capacity_MW]`` -> {unit: (node, capacity or None)}."""
    out = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            cap = r.get("capacity_MW")
            out[r["unit_id"].strip()] = (int(r["node_id"]), float(cap) if cap else None)
    return out


def ingest_power(power_csv, unit_map: dict, curve: EfficiencyCurve,
                 props: Optional[GasProperties] = None) -> dict:
    """Half-hourly unit outputs (``timestamp,unit_id,power_MW``) -> gas demand per node.

    Times are seconds from the earliest timestamp. A unit's load fraction is
    its power over its capacity, defaulting to the largest output observed
    for that unit. Units sharing a node are summed.
    """
    props = props or GasProperties()
    series: dict = {}
    with open(power_csv, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"timestamp", "unit_id", "power_MW"}
        if not need <= set(reader.fieldnames or []):
            raise ValidationError(f"{power_csv}: expected columns timestamp,unit_id,power_MW")
        for r in reader:
            series.setdefault(r["unit_id"].strip(), []).append(
                (_parse_time(r["timestamp"]), float(r["power_MW"])))
    if not series:
        raise ValidationError(f"{power_csv}: no power records")
    unknown = sorted(set(series) - set(unit_map))
    if unknown:
        raise ValidationError(f"units without a node mapping: {unknown}")
    t0 = min(t for rows in series.values() for t, _ in rows)
    grid = np.unique(np.array([t - t0 for rows in series.values() for t, _ in rows]))
    totals: dict = {}
    for unit, rows in sorted(series.items()):
        rows.sort()
        t = np.array([r[0] for r in rows]) - t0
        mw = np.array([r[1] for r in rows])
        if np.any(mw < 0):
            raise ValidationError(f"unit {unit}: negative power output")
        node, cap = unit_map[unit]
        cap = cap if cap else float(mw.max())
        if not cap > 0:
            continue
        gas = power_to_gas(t, mw, curve, props, cap, node)
        totals[node] = totals.get(node, 0.0) + gas(grid)
    return {n: Profile(n, grid, v, "step") for n, v in sorted(totals.items())}
