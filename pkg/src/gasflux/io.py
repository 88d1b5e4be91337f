"""File output: trajectories, crossings, ensemble summaries, run manifests, states.

Numbers are written with ``repr(float)`` so files are locale independent and
round-trip exactly; column headers carry SI unit names.
"""

from __future__ import annotations

import csv
import hashlib
import json
import platform
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .core import ValidationError, network_from_dict, network_to_dict
from .ensemble import QUANTILE_COLUMNS, EnsembleStats
from .metrics import CrossingEvent
from .solver.grid import Layout, PipeGrid
from .solver.state import SystemState
from .trajectory import Trajectory


def _f(x) -> str:
    return repr(float(x))


def _writer(path):
    fh = open(path, "w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def write_pressures_csv(traj: Trajectory, path) -> Path:
    """Long format: ``time_s,node_id,pressure_Pa``."""
    fh, w = _writer(path)
    with fh:
        w.writerow(["time_s", "node_id", "pressure_Pa"])
        for k, t in enumerate(traj.times):
            for j, nid in enumerate(traj.node_ids):
                w.writerow([_f(t), nid, _f(traj.pressures[k, j])])
    return Path(path)


def write_linepack_csv(traj: Trajectory, path) -> Path:
    """Wide format: one ``linepack_kg_pipe_<id>`` column per pipe plus the total."""
    fh, w = _writer(path)
    with fh:
        w.writerow(["time_s"] + [f"linepack_kg_pipe_{pid}" for pid in traj.pipe_ids]
                   + ["linepack_kg_total"])
        total = traj.total_linepack
        for k, t in enumerate(traj.times):
            w.writerow([_f(t)] + [_f(v) for v in traj.linepack[k]] + [_f(total[k])])
    return Path(path)


def write_crossings_csv(events: Iterable[CrossingEvent], path) -> Path:
    fh, w = _writer(path)
    with fh:
        w.writerow(["time_s", "node_id", "pressure_Pa", "direction"])
        for ev in events:
            w.writerow([_f(ev.time), ev.node_id, _f(ev.pressure), ev.direction])
    return Path(path)


def write_trajectory(traj: Trajectory, out_dir, prefix: str = "") -> list[Path]:
    out_dir = Path(out_dir)
    return [write_pressures_csv(traj, out_dir / f"{prefix}pressures.csv"),
            write_linepack_csv(traj, out_dir / f"{prefix}linepack.csv")]


def read_pressures_csv(path) -> tuple[np.ndarray, tuple, np.ndarray]:
    """Inverse of :func:`write_pressures_csv`: (times, node ids, pressures)."""
    rows: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            rows.setdefault(float(r["time_s"]), {})[int(r["node_id"])] = float(r["pressure_Pa"])
    times = np.array(sorted(rows))
    ids = tuple(rows[times[0]])
    return times, ids, np.array([[rows[t][n] for n in ids] for t in times])


# ---------------------------------------------------------------------------
# ensembles


def _hours(x):
    return None if x is None else x / 3600.0


def ensemble_summary(stats: EnsembleStats, files: dict) -> dict:
    return {
        "scenario_id": stats.scenario_id,
        "n_replicas": len(stats.seeds),
        "seeds": stats.seeds,
        "threshold_Pa": stats.threshold,
        "insult_time_s": stats.insult_time,
        "tau_stats": {
            "n_crossed": stats.n_crossed,
            "mean_h": _hours(stats.tau_mean),
            "std_h": _hours(stats.tau_std),
            "median_h": _hours(stats.tau_median),
            "samples_s": stats.tau_samples,
        },
        "crossing_histogram": {str(k): v for k, v in stats.crossing_histogram.items()},
        "first_crossing_nodes": stats.first_nodes,
        "clip_flags": stats.clip_flags,
        "terminated_at_s": {str(k): v for k, v in stats.terminated.items()},
        "quantile_files": files,
    }


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n"


def write_ensemble(stats: EnsembleStats, out_dir) -> list[Path]:
    """``ensemble_summary.json`` plus one quantile CSV per quantity under ``quantiles/``."""
    out_dir = Path(out_dir)
    qdir = out_dir / "quantiles"
    qdir.mkdir(parents=True, exist_ok=True)
    written, files = [], {}
    for name in sorted(stats.bands):
        path = qdir / f"{name}.csv"
        vals = stats.bands[name].values
        unit = "Pa" if name.startswith("pressure") else "kg"
        fh, w = _writer(path)
        with fh:
            w.writerow(["time_s"] + [f"{c}_{unit}" for c in QUANTILE_COLUMNS])
            for k, t in enumerate(stats.times):
                w.writerow([_f(t)] + ["" if np.isnan(v) else _f(v) for v in vals[:, k]])
        files[name] = f"quantiles/{name}.csv"
        written.append(path)
    summary = out_dir / "ensemble_summary.json"
    summary.write_text(_dump(ensemble_summary(stats, files)), encoding="utf-8")
    return [summary] + written


# ---------------------------------------------------------------------------
# manifests


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True, default=str).encode()).hexdigest()


@dataclass
class RunManifest:
    version: str
    command: str
    config: dict
    config_hash: str
    seeds: list
    wall_clock_s: float
    files: dict = field(default_factory=dict)  # relative path -> sha256
    python: str = field(default_factory=platform.python_version)

    @classmethod
    def build(cls, out_dir, command: str, config: dict, seeds, wall_clock_s: float,
              paths: Iterable) -> "RunManifest":
        from . import __version__
        out_dir = Path(out_dir)
        files = {Path(p).relative_to(out_dir).as_posix(): sha256_file(p) for p in paths}
        return cls(__version__, command, config, config_hash(config), list(seeds),
                   float(wall_clock_s), dict(sorted(files.items())))

    def write(self, out_dir) -> Path:
        path = Path(out_dir) / "manifest.json"
        path.write_text(_dump(asdict(self)), encoding="utf-8")
        return path

    def mismatches(self, out_dir) -> list[str]:
        out_dir = Path(out_dir)
        bad = []
        for rel, digest in self.files.items():
            p = out_dir / rel
            if not p.exists() or sha256_file(p) != digest:
                bad.append(rel)
        return bad

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# states


def save_state(state: SystemState, path) -> Path:
    """Write a state with its network and grid so it reloads standalone (npz)."""
    lay = state.layout
    meta = {"network": network_to_dict(lay.network),
            "grids": [[g.pipe_id, g.n_cells, g.dx] for g in lay.grids],
            "t": state.t, "flux_time": state.flux_time}
    path = Path(path)
    with open(path, "wb") as fh:
        np.savez(fh, rho=state.rho, phi=state.phi, rho_node=state.rho_node,
                 p_node=state.p_node, meta=np.array(json.dumps(meta)))
    return path


def load_state(path, layout: Optional[Layout] = None) -> SystemState:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if layout is None:
            net = network_from_dict(meta["network"])
            layout = Layout(net, [PipeGrid(int(i), int(n), float(dx)) for i, n, dx in meta["grids"]])
        try:
            return SystemState(meta["t"], layout, data["rho"], data["phi"], data["rho_node"],
                               data["p_node"], meta["flux_time"])
        except ValidationError as exc:
            raise ValidationError(f"{path}: state does not fit the layout ({exc})") from None
