from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .core import ValidationError


@dataclass(eq=False)
class Trajectory:
    """Sampled output of one simulation run."""

    times: np.ndarray  # [s], shape (n_samples,)
    node_ids: tuple
    pressures: np.ndarray  # [Pa], shape (n_samples, n_nodes)
    pipe_ids: tuple
    linepack: np.ndarray  # [kg], shape (n_samples, n_pipes)
    injected_mass: Optional[np.ndarray] = None  # cumulative net injection [kg]
    kirchhoff_residual: Optional[np.ndarray] = None  # max |sum S phi + d| per sample [kg/s]
    metadata: dict = field(default_factory=dict)
    final_state: Any = None

    def __post_init__(self):
        self.times = np.asarray(self.times, float)
        self.pressures = np.asarray(self.pressures, float).reshape(len(self.times), -1)
        self.linepack = np.asarray(self.linepack, float).reshape(len(self.times), -1)
        self.node_ids = tuple(self.node_ids)
        self.pipe_ids = tuple(self.pipe_ids)
        if np.any(np.diff(self.times) <= 0):
            raise ValidationError("trajectory times must be strictly increasing")
        if not np.all(np.isfinite(self.pressures)):
            raise ValidationError("trajectory pressures must be finite")
        if self.pressures.shape[1] != len(self.node_ids):
            raise ValidationError("pressure columns do not match node ids")

    @property
    def total_linepack(self) -> np.ndarray:
        return self.linepack.sum(axis=1)

    def pressure_of(self, node_id) -> np.ndarray:
        return self.pressures[:, self.node_ids.index(node_id)]

    def window(self, t0: float, t1: float) -> "Trajectory":
        m = (self.times >= t0) & (self.times <= t1)
        return Trajectory(self.times[m], self.node_ids, self.pressures[m], self.pipe_ids,
                          self.linepack[m],
                          None if self.injected_mass is None else self.injected_mass[m],
                          None if self.kirchhoff_residual is None else self.kirchhoff_residual[m],
                          dict(self.metadata))
