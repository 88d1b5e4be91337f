from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import GasfluxError, ValidationError
from .grid import Layout


class InstabilityError(GasfluxError, RuntimeError):
    def __init__(self, message, time=None, pipe_id=None, node_id=None):
        super().__init__(message)
        self.time = time
        self.pipe_id = pipe_id
        self.node_id = node_id


@dataclass(frozen=True)
class PipeField:
    rho: np.ndarray  # cell centers [kg/m3]
    phi: np.ndarray  # edges [kg/(m2 s)]


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SystemState:
    """Snapshot of the network at time ``t``.

    ``phi`` is defined at ``flux_time`` (half a step after ``t`` while a run is
    in progress, equal to ``t`` for initial states).
    """

    t: float
    layout: Layout
    rho: np.ndarray
    phi: np.ndarray
    rho_node: np.ndarray
    p_node: np.ndarray
    flux_time: float

    def __post_init__(self):
        for name in ("rho", "phi", "rho_node", "p_node"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        lay = self.layout
        if self.rho.shape != (lay.n_cells,) or self.phi.shape != (lay.n_edges,):
            raise ValidationError("field arrays do not match the grid layout")
        if self.rho_node.shape != (lay.n_nodes,) or self.p_node.shape != (lay.n_nodes,):
            raise ValidationError("nodal arrays do not match the network")

    @property
    def fields(self) -> dict[int, PipeField]:
        lay = self.layout
        return {g.pipe_id: PipeField(self.rho[lay.cell_slice(k)], self.phi[lay.edge_slice(k)])
                for k, g in enumerate(lay.grids)}

    def total_mass(self) -> float:
        return float(np.dot(self.layout.cell_volume(), self.rho))

    def end_outflows(self) -> np.ndarray:
        """Mass flow [kg/s] leaving each node into its pipes."""
        lay = self.layout
        flow = lay.inc_sign * lay.area[lay.inc_pipe] * self.phi[lay.inc_edge]
        return np.bincount(lay.inc_node, flow, minlength=lay.n_nodes)


@dataclass(frozen=True, eq=False)
class BoundarySet:
    """Nodal withdrawals ``d_n(t)`` [kg/s] on a uniform time table.

    Positive values withdraw gas, negative values inject it. ``linear`` selects
    linear interpolation between table points, otherwise each value holds on
    ``[t_k, t_k + dt)``.
    """

    node_ids: tuple
    t0: float
    dt: float
    values: np.ndarray
    linear: bool = False

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != len(self.node_ids):
            raise ValidationError("boundary values must be (n_nodes, n_times)")
        if not self.dt > 0:
            raise ValidationError("boundary table spacing must be positive")
        if not np.all(np.isfinite(v)):
            raise ValidationError("boundary values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "node_ids", tuple(self.node_ids))

    @classmethod
    def constant(cls, node_ids, withdrawals, horizon: float, dt: float = 3600.0):
        n_t = int(np.ceil(max(horizon, 0.0) / dt)) + 2
        vals = np.repeat(np.asarray(withdrawals, float)[:, None], n_t, axis=1)
        return cls(tuple(node_ids), 0.0, dt, vals)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.shape[1])

    @property
    def t_end(self) -> float:
        """Last instant the table defines (the final value holds one interval)."""
        n = self.values.shape[1]
        return self.t0 + self.dt * (n - 1 if self.linear else n)

    def at(self, t: float) -> np.ndarray:
        if t < self.t0 or t > self.t_end:
            raise ValidationError(f"boundary profile undefined at t={t} s")
        s = (t - self.t0) / self.dt
        i = min(int(np.floor(s)), self.values.shape[1] - 1)
        if self.linear and i < self.values.shape[1] - 1:
            w = s - i
            return (1.0 - w) * self.values[:, i] + w * self.values[:, i + 1]
        return self.values[:, i].copy()

    def net_injection(self, t: float) -> float:
        return float(-self.at(t).sum())
