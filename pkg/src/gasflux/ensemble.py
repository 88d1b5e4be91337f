"""Monte-Carlo ensembles over demand-noise seeds."""

from __future__ import annotations

import logging
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import GasfluxError, GasProperties, Network, ValidationError
from .metrics import DEFAULT_THRESHOLD, survival_time
from .solver.simulate import SolverConfig, initial_state_for, resolve_props, simulate
from .trajectory import Trajectory

log = logging.getLogger(__name__)

# central 75% and 25% bands around the median
QUANTILES = (12.5, 37.5, 50.0, 62.5, 87.5)
QUANTILE_COLUMNS = ("q125", "q375", "median", "q625", "q875")


class ReplicaError(GasfluxError, RuntimeError):
    def __init__(self, seed: int, cause: BaseException):
        super().__init__(f"replica with seed {seed} failed: {type(cause).__name__}: {cause}")
        self.seed = seed
        self.cause = cause


@dataclass
class Bands:
    """Pointwise quantile curves, rows ordered as :data:`QUANTILES`."""
    values: np.ndarray  # (5, n_samples)

    @property
    def median(self):
        return self.values[2]

    @property
    def band_25(self):
        return self.values[1], self.values[3]

    @property
    def band_75(self):
        return self.values[0], self.values[4]


@dataclass
class EnsembleStats:
    scenario_id: str
    seeds: list
    times: np.ndarray
    bands: dict  # quantity name -> Bands
    tau_samples: list  # [s] or None per seed, in seed order
    first_nodes: list  # first-crossing node per seed (None if no crossing)
    threshold: float
    insult_time: Optional[float]
    clip_flags: list = field(default_factory=list)
    terminated: dict = field(default_factory=dict)  # seed -> stop time [s]

    @property
    def crossed(self) -> np.ndarray:
        return np.array([t for t in self.tau_samples if t is not None], float)

    @property
    def tau_mean(self) -> Optional[float]:
        c = self.crossed
        return float(c.mean()) if c.size else None

    @property
    def tau_std(self) -> Optional[float]:
        c = self.crossed
        return float(c.std()) if c.size else None

    @property
    def tau_median(self) -> Optional[float]:
        """Median over all replicas, counting non-crossing ones as +inf."""
        if self.insult_time is None:
            return None
        t = np.array([np.inf if x is None else x for x in self.tau_samples])
        m = float(np.median(t))
        return m if np.isfinite(m) else None

    @property
    def crossing_histogram(self) -> dict:
        hist: dict = {}
        for n in self.first_nodes:
            if n is not None:
                hist[n] = hist.get(n, 0) + 1
        return dict(sorted(hist.items()))

    @property
    def n_crossed(self) -> int:
        return int(self.crossed.size)


def quantile_bands(stack: np.ndarray) -> Bands:
    """Quantiles over axis 0, linear interpolation between order statistics.

    NaN marks samples after a replica stopped early; those replicas drop out
    of the later quantiles.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return Bands(np.nanpercentile(stack, QUANTILES, axis=0))


def _run_replica(args):
    network, scenario, config, seed, props, state = args
    try:
        return seed, simulate(network, scenario, config, seed, props, initial_state=state)
    except Exception as exc:  # noqa: BLE001 - re-raised with the seed attached
        return seed, exc


def _padded(trajs: list[Trajectory], attr) -> tuple[np.ndarray, np.ndarray]:
    longest = max(trajs, key=lambda t: len(t.times))
    n = len(longest.times)
    out = []
    for t in trajs:
        a = np.asarray(attr(t), float)
        pad = np.full((n - a.shape[0],) + a.shape[1:], np.nan)
        out.append(np.concatenate([a, pad]))
    return longest.times, np.stack(out)


def aggregate(scenario_id: str, seeds: list, trajs: list[Trajectory], insult_time: Optional[float],
              threshold: float = DEFAULT_THRESHOLD) -> EnsembleStats:
    order = np.argsort(seeds, kind="stable")
    seeds = [int(seeds[i]) for i in order]
    trajs = [trajs[i] for i in order]
    times, p = _padded(trajs, lambda t: t.pressures)
    _, lp = _padded(trajs, lambda t: t.total_linepack)
    node_ids = trajs[0].node_ids
    bands = {f"pressure_node_{nid}": quantile_bands(p[:, :, j]) for j, nid in enumerate(node_ids)}
    bands["linepack_total"] = quantile_bands(lp)
    taus, nodes = [], []
    for t in trajs:
        if insult_time is None:
            taus.append(None)
            nodes.append(None)
            continue
        r = survival_time(t, insult_time, threshold)
        taus.append(r.tau)
        nodes.append(r.node_id)
    flags = sorted({f for t in trajs for f in t.metadata.get("clip_flags", [])})
    term = {s: t.metadata["terminated_at_s"] for s, t in zip(seeds, trajs)
            if "terminated_at_s" in t.metadata}
    return EnsembleStats(scenario_id, seeds, times, bands, taus, nodes, threshold,
                         insult_time, flags, term)


def run_ensemble(network: Network, scenario, n_replicas: int, base_seed: int = 0,
                 config: SolverConfig = SolverConfig(), workers: Optional[int] = 1,
                 props: Optional[GasProperties] = None,
                 threshold: float = DEFAULT_THRESHOLD, return_trajectories: bool = False):
    """Run replicas with seeds ``base_seed .. base_seed + n - 1``.

    Replicas share the steady initial state (noise starts at zero deviation)
    and run in up to ``workers`` processes (None: one per CPU). The reduction
    is over seed-sorted results, so statistics do not depend on scheduling.
    """
    if n_replicas < 1:
        raise ValidationError("n_replicas must be at least 1")
    props = resolve_props(props, config)
    state = initial_state_for(network, scenario, config, props)
    seeds = [base_seed + i for i in range(n_replicas)]
    jobs = [(network, scenario, config, s, props, state) for s in seeds]
    workers = (os.cpu_count() or 1) if workers is None else max(1, int(workers))
    if workers == 1 or n_replicas == 1:
        results = [_run_replica(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, n_replicas)) as pool:
            results = list(pool.map(_run_replica, jobs))
    results.sort(key=lambda r: r[0])
    for seed, res in results:
        if isinstance(res, BaseException):
            raise ReplicaError(seed, res) from res
    trajs = [r for _, r in results]
    stats = aggregate(scenario.id, seeds, trajs, scenario.insult_time, threshold)
    return (stats, trajs) if return_trajectories else stats
