"""Network topology, gas properties and the CNGA equation of state."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

P_ATM = 101325.0  # Pa
R_UNIVERSAL = 8.31446  # J/(mol K)
M_AIR = 0.0289647  # kg/mol
PSI = 6894.757293168  # Pa per psi
MMBTU_MJ = 1055.06
BAR = 1e5


class GasfluxError(Exception):
    """Base class for all package errors."""


class ValidationError(GasfluxError, ValueError):
    pass


class DomainError(GasfluxError, ValueError):
    pass


NODE_KINDS = ("supply", "demand", "junction")


@dataclass(frozen=True)
class Node:
    id: int
    name: str
    kind: str
    p_min: float
    p_max: float
    elevation: float = 0.0  # stored only, dynamics ignore it

    def __post_init__(self):
        if self.kind not in NODE_KINDS:
            raise ValidationError(f"node {self.id}: unknown kind {self.kind!r}")
        if not (0.0 < self.p_min < self.p_max):
            raise ValidationError(f"node {self.id}: need 0 < p_min < p_max")


@dataclass(frozen=True)
class Pipe:
    id: int
    from_node: int
    to_node: int
    length: float
    diameter: float
    friction: float = 0.01

    def __post_init__(self):
        bad = [n for n, v in (("length", self.length), ("diameter", self.diameter),
                              ("friction", self.friction)) if not v > 0.0]
        if bad:
            raise ValidationError(f"pipe {self.id}: non-positive {', '.join(bad)}")

    @property
    def area(self) -> float:
        return math.pi * self.diameter ** 2 / 4.0


@dataclass(frozen=True)
class Network:
    nodes: tuple[Node, ...]
    pipes: tuple[Pipe, ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "pipes", tuple(self.pipes))
        problems = _network_problems(self.nodes, self.pipes)
        if problems:
            raise ValidationError("invalid network: " + "; ".join(problems))

    @property
    def node_ids(self) -> list[int]:
        return [n.id for n in self.nodes]

    def node_index(self) -> dict[int, int]:
        return {n.id: i for i, n in enumerate(self.nodes)}

    def node(self, node_id: int) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def nodes_of_kind(self, kind: str) -> list[int]:
        return [n.id for n in self.nodes if n.kind == kind]

    def reversed_pipe(self, pipe_id: int) -> "Network":
        """Copy of the network with one pipe's orientation flipped."""
        pipes = []
        for p in self.pipes:
            if p.id == pipe_id:
                p = Pipe(p.id, p.to_node, p.from_node, p.length, p.diameter, p.friction)
            pipes.append(p)
        return Network(self.nodes, tuple(pipes), self.name)


def _network_problems(nodes: Iterable[Node], pipes: Iterable[Pipe]) -> list[str]:
    problems = []
    ids = [n.id for n in nodes]
    seen = set()
    for i in ids:
        if i in seen:
            problems.append(f"duplicate node id {i}")
        seen.add(i)
    pipe_ids = set()
    for p in pipes:
        if p.id in pipe_ids:
            problems.append(f"duplicate pipe id {p.id}")
        pipe_ids.add(p.id)
        for end in (p.from_node, p.to_node):
            if end not in seen:
                problems.append(f"pipe {p.id} references unknown node {end}")
        if p.from_node == p.to_node:
            problems.append(f"pipe {p.id} is a self-loop on node {p.from_node}")
    if not any(n.kind == "supply" for n in nodes):
        problems.append("no supply node")
    if problems or not ids:
        return problems or ["no nodes"]
    # connectivity by union-find
    parent = {i: i for i in ids}

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for p in pipes:
        parent[find(p.from_node)] = find(p.to_node)
    roots = {find(i) for i in ids}
    if len(roots) > 1:
        problems.append(f"network is disconnected ({len(roots)} components)")
    return problems


@dataclass(frozen=True)
class GasProperties:
    """Single-component gas description.

    ``eos`` selects ``"cnga"`` (default) or ``"ideal"`` (Z == 1, for analytic checks).
    """

    gravity: float = 0.6
    temperature: float = 288.15
    energy_density: float = 52.0  # MJ/kg
    eos: str = "cnga"
    p_atm: float = P_ATM
    gas_constant: float = field(init=False)

    def __post_init__(self):
        if not self.temperature > 0 or not self.gravity > 0:
            raise ValidationError("temperature and gravity must be positive")
        if self.eos not in ("cnga", "ideal"):
            raise ValidationError(f"unknown eos mode {self.eos!r}")
        if not self.energy_density > 0:
            raise ValidationError("energy_density must be positive")
        object.__setattr__(self, "gas_constant", R_UNIVERSAL / (self.gravity * M_AIR))

    @classmethod
    def from_gas_constant(cls, R: float, **kw) -> "GasProperties":
        """Properties whose specific gas constant equals ``R``."""
        return cls(gravity=R_UNIVERSAL / (R * M_AIR), **kw)

    def replace(self, **kw) -> "GasProperties":
        args = dict(gravity=self.gravity, temperature=self.temperature,
                    energy_density=self.energy_density, eos=self.eos, p_atm=self.p_atm)
        args.update(kw)
        return GasProperties(**args)

    @property
    def RT(self) -> float:
        return self.gas_constant * self.temperature

    @property
    def cnga_b(self) -> float:
        """CNGA coefficient in 1/Pa (zero in ideal mode)."""
        if self.eos == "ideal":
            return 0.0
        t_rankine = self.temperature * 1.8
        b_psi = 344400.0 * 10.0 ** (1.785 * self.gravity) / t_rankine ** 3.825
        return b_psi / PSI


def cnga_z(p, props: GasProperties):
    """Compressibility factor at absolute pressure ``p`` [Pa].

    Gauge pressure enters the correlation, so Z == 1 at atmospheric pressure.
    Below atmospheric the gauge term is negative and Z exceeds 1 slightly.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise DomainError("pressure must be finite and non-negative")
    z = 1.0 / (1.0 + props.cnga_b * (p - props.p_atm))
    return z if z.ndim else float(z)


def pressure_from_density(rho, props: GasProperties):
    """Absolute pressure solving ``p = Z(p) R T rho``.

    With ``Z = 1/(1 + b (p - p_atm))`` this is the quadratic
    ``b p**2 + (1 - b p_atm) p - R T rho = 0``; the positive root is taken in
    the cancellation-free form.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0) or not np.all(np.isfinite(rho)):
        raise DomainError("density must be finite and non-negative")
    b = props.cnga_b
    c1 = 1.0 - b * props.p_atm
    rt_rho = props.RT * rho
    p = 2.0 * rt_rho / (c1 + np.sqrt(c1 * c1 + 4.0 * b * rt_rho))
    return p if p.ndim else float(p)


def density_from_pressure(p, props: GasProperties):
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise DomainError("pressure must be finite and non-negative")
    rho = p * (1.0 + props.cnga_b * (p - props.p_atm)) / props.RT
    return rho if rho.ndim else float(rho)


def sound_speed(rho, props: GasProperties):
    """Isothermal wave speed ``sqrt(p/rho)`` used for the CFL bound.

    For CNGA this bounds the tangent speed ``sqrt(dp/drho)`` from above.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0) or not np.all(np.isfinite(rho)):
        raise DomainError("density must be positive")
    a = np.sqrt(pressure_from_density(rho, props) / rho)
    return a if a.ndim else float(a)


def pressure_potential(p, props: GasProperties):
    """Integral of rho(p) * R T over pressure, used by steady pipe relations.

    ``int_0^p p'/Z(p') dp' = (1 - b p_atm) p**2 / 2 + b p**3 / 3``.
    """
    p = np.asarray(p, dtype=float)
    b = props.cnga_b
    return (1.0 - b * props.p_atm) * p * p / 2.0 + b * p ** 3 / 3.0


def pressure_from_potential(pi, props: GasProperties, p_guess=None):
    """Invert :func:`pressure_potential` (monotone for p >= 0)."""
    pi = np.asarray(pi, dtype=float)
    if np.any(pi < 0):
        raise DomainError("negative pressure potential: pressure would be imaginary")
    b = props.cnga_b
    c1 = 1.0 - b * props.p_atm
    p = np.sqrt(2.0 * pi / c1) if p_guess is None else np.asarray(p_guess, float).copy()
    if b == 0.0:
        return np.sqrt(2.0 * pi)
    for _ in range(60):
        f = c1 * p * p / 2.0 + b * p ** 3 / 3.0 - pi
        fp = c1 * p + b * p * p
        step = np.where(fp > 0, f / np.where(fp > 0, fp, 1.0), 0.0)
        p = np.maximum(p - step, 0.5 * p)
        if np.all(np.abs(step) <= 1e-14 * np.maximum(p, 1.0)):
            break
    return p


# ---------------------------------------------------------------------------
# network file


_LENGTH_UNITS = {"m": 1.0, "km": 1e3}
_DIAM_UNITS = {"m": 1.0, "mm": 1e-3, "in": 0.0254}
_PRESSURE_UNITS = {"Pa": 1.0, "bar": BAR, "psi": PSI, "MPa": 1e6}


def network_from_dict(data: dict) -> Network:
    units = data.get("units", {})
    try:
        lu = _LENGTH_UNITS[units.get("length", "m")]
        du = _DIAM_UNITS[units.get("diameter", "m")]
        pu = _PRESSURE_UNITS[units.get("pressure", "Pa")]
        eu = _LENGTH_UNITS[units.get("elevation", "m")]
    except KeyError as exc:
        raise ValidationError(f"unsupported unit {exc.args[0]!r}") from None
    default_friction = float(data.get("default_friction", 0.01))

    problems = []
    nodes = []
    for rec in data.get("nodes", []):
        try:
            nodes.append(Node(
                id=int(rec["id"]),
                name=str(rec.get("name", rec["id"])),
                kind=rec.get("kind", "junction"),
                p_min=float(rec["p_min"]) * pu,
                p_max=float(rec["p_max"]) * pu,
                elevation=float(rec.get("elevation", 0.0)) * eu,
            ))
        except (KeyError, TypeError, ValueError) as exc:
            problems.append(f"node record {rec!r}: {exc}")
    pipes = []
    for rec in data.get("pipes", []):
        try:
            pipes.append(Pipe(
                id=int(rec["id"]),
                from_node=int(rec["from"]),
                to_node=int(rec["to"]),
                length=float(rec["length"]) * lu,
                diameter=float(rec["diameter"]) * du,
                friction=float(rec.get("friction", default_friction)),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            problems.append(f"pipe record {rec!r}: {exc}")
    if problems:
        raise ValidationError("invalid network: " + "; ".join(problems))
    return Network(tuple(nodes), tuple(pipes), name=str(data.get("name", "")))


def network_to_dict(network: Network) -> dict:
    """SI-unit record form accepted by :func:`network_from_dict`."""
    return {
        "name": network.name,
        "units": {"length": "m", "diameter": "m", "pressure": "Pa", "elevation": "m"},
        "nodes": [{"id": n.id, "name": n.name, "kind": n.kind, "p_min": n.p_min,
                   "p_max": n.p_max, "elevation": n.elevation} for n in network.nodes],
        "pipes": [{"id": p.id, "from": p.from_node, "to": p.to_node, "length": p.length,
                   "diameter": p.diameter, "friction": p.friction} for p in network.pipes],
    }


def load_network(path) -> Network:
    """Read and validate a JSON network file (km/mm accepted, stored in SI)."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from None
    return network_from_dict(data)


def data_path(*parts: str) -> Path:
    return Path(__file__).parent.joinpath("data", *parts)


def israel_network() -> Network:
    return load_network(data_path("israel_11node.json"))
