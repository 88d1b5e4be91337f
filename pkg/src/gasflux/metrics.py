"""Linepack, pressure crossings, survival time and monotonicity checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import BAR, ValidationError
from .solver.state import BoundarySet, SystemState
from .trajectory import Trajectory

DEFAULT_THRESHOLD = 50.0 * BAR


def linepack(state: SystemState) -> tuple[np.ndarray, float]:
    """Gas mass per pipe [kg] and the network total."""
    lay = state.layout
    per_pipe = np.bincount(lay.cell_pipe, state.rho * lay.dx[lay.cell_pipe],
                           minlength=lay.n_pipes) * lay.area
    return per_pipe, float(per_pipe.sum())


@dataclass(frozen=True, order=True)
class CrossingEvent:
    time: float  # [s]
    node_id: int
    pressure: float = field(compare=False)  # [Pa] at the event sample
    direction: str = field(default="below_min", compare=False)


@dataclass(frozen=True)
class SurvivalResult:
    tau: Optional[float]  # [s]; None when nothing crosses before the run ends
    node_id: Optional[int] = None

    @property
    def tau_hours(self) -> Optional[float]:
        return None if self.tau is None else self.tau / 3600.0


def detect_crossings(traj: Trajectory, threshold: float = DEFAULT_THRESHOLD) -> list[CrossingEvent]:
    """One event per downward passage, at the first sample strictly below ``threshold``.

    A node already below the threshold at the first sample does not count as
    a passage. Events are ordered by time, then node id.
    """
    if not threshold > 0:
        raise ValidationError("threshold must be positive")
    below = traj.pressures < threshold
    enter = below[1:] & ~below[:-1]
    k, j = np.nonzero(enter)
    events = [CrossingEvent(float(traj.times[a + 1]), traj.node_ids[b], float(traj.pressures[a + 1, b]))
              for a, b in zip(k, j)]
    return sorted(events)


def survival_time(traj: Trajectory, insult_time: float,
                  threshold: float = DEFAULT_THRESHOLD) -> SurvivalResult:
    """Time from ``insult_time`` to the first crossing at any node after it."""
    if not traj.times[0] <= insult_time <= traj.times[-1]:
        raise ValidationError("insult time lies outside the trajectory")
    for ev in detect_crossings(traj, threshold):
        if ev.time >= insult_time:
            return SurvivalResult(ev.time - insult_time, ev.node_id)
    return SurvivalResult(None)


# ---------------------------------------------------------------------------
# monotonicity


@dataclass
class MonotonicityReport:
    max_violation: float  # [Pa], max of p_severe - p_mild (<= 0 means ordered)
    location: Optional[tuple]  # (time [s], node id) of the max difference
    n_violations: int
    tau_mild: Optional[float]
    tau_severe: Optional[float]
    tolerance: float

    @property
    def tau_ordered(self) -> bool:
        if self.tau_severe is None:
            return self.tau_mild is None
        return self.tau_mild is None or self.tau_severe <= self.tau_mild

    @property
    def ok(self) -> bool:
        return self.n_violations == 0 and self.tau_ordered

    def summary(self) -> str:
        where = "" if self.location is None else \
            f" at t={self.location[0] / 3600:.2f} h node {self.location[1]}"
        return (f"max(p_severe - p_mild) = {self.max_violation / BAR:.3e} bar{where}, "
                f"violations={self.n_violations}, tau mild/severe = {self.tau_mild}/{self.tau_severe}")


def check_boundary_order(mild: BoundarySet, severe: BoundarySet) -> None:
    """The severe case must withdraw at least as much everywhere, at all times."""
    if mild.node_ids != severe.node_ids or mild.values.shape != severe.values.shape \
            or mild.dt != severe.dt or mild.t0 != severe.t0:
        raise ValidationError("boundary sets are not on the same nodes and time table")
    if np.any(severe.values < mild.values):
        k = np.argwhere(severe.values < mild.values)[0]
        raise ValidationError(
            f"severe case withdraws less than the mild case at node {mild.node_ids[k[0]]}, "
            f"t={mild.times[k[1]]:.0f} s")


def check_monotonicity(traj_mild: Trajectory, traj_severe: Trajectory, insult_time: Optional[float] = None,
                       tolerance: float = 1e-6 * BAR, threshold: float = DEFAULT_THRESHOLD,
                       bc_mild: Optional[BoundarySet] = None,
                       bc_severe: Optional[BoundarySet] = None) -> MonotonicityReport:
    """Pointwise ``p_severe <= p_mild + tolerance`` and ``tau_severe <= tau_mild``.

    Pass the boundary sets to have the severity ordering checked first.
    Trajectories of unequal length (a run stopped early) are compared on
    their common samples.
    """
    if bc_mild is not None and bc_severe is not None:
        check_boundary_order(bc_mild, bc_severe)
    if traj_mild.node_ids != traj_severe.node_ids:
        raise ValidationError("trajectories cover different nodes")
    n = min(len(traj_mild.times), len(traj_severe.times))
    if not np.array_equal(traj_mild.times[:n], traj_severe.times[:n]):
        raise ValidationError("trajectories are sampled at different times")
    diff = traj_severe.pressures[:n] - traj_mild.pressures[:n]
    k, j = np.unravel_index(int(np.argmax(diff)), diff.shape)
    taus = [None, None]
    if insult_time is not None:
        taus = [survival_time(t, insult_time, threshold).tau for t in (traj_mild, traj_severe)]
    return MonotonicityReport(
        max_violation=float(diff[k, j]),
        location=(float(traj_mild.times[k]), traj_mild.node_ids[j]),
        n_violations=int(np.count_nonzero(diff > tolerance)),
        tau_mild=taus[0], tau_severe=taus[1], tolerance=tolerance,
    )
