"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 numerical instability or failed
verification, 3 file I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .core import GasfluxError, ValidationError, data_path, load_network
from .ensemble import ReplicaError, run_ensemble
from .io import (RunManifest, load_state, save_state, write_crossings_csv, write_ensemble,
                 write_trajectory)
from .metrics import detect_crossings, survival_time
from .scenario import EfficiencyCurve, ingest_power, load_scenario, read_unit_map, write_profiles_csv
from .solver.simulate import SolverConfig, initial_state_for, simulate
from .solver.state import InstabilityError
from .solver.steady import SteadyStateError

log = logging.getLogger("gasflux")

EXIT_OK, EXIT_INVALID, EXIT_UNSTABLE, EXIT_IO = 0, 1, 2, 3


class _InputMissing(Exception):
    pass


def _network(args):
    path = Path(args.network) if args.network else data_path("israel_11node.json")
    if not path.exists():
        raise _InputMissing(f"network file not found: {path}")
    return load_network(path)


def _scenario_path(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    shipped = data_path("scenarios", f"{name}.json")
    if shipped.exists():
        return shipped
    raise _InputMissing(f"scenario file not found: {name}")


def _config(args) -> SolverConfig:
    data = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise _InputMissing(f"solver config not found: {path}")
        data = json.loads(path.read_text())
    for key, attr in (("target_dx_m", "dx_m"), ("cfl", "cfl"), ("eos_mode", "eos")):
        val = getattr(args, attr, None)
        if val is not None:
            data[key] = val
    return SolverConfig.from_dict(data)


def _scenario(args, network):
    sc = load_scenario(_scenario_path(args.scenario), network)
    if getattr(args, "horizon_h", None) is not None:
        sc = sc.with_(horizon=args.horizon_h * 3600.0)
    return sc


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_config(args, config: SolverConfig, scenario) -> dict:
    return {"network": str(args.network or "israel_11node"), "scenario": scenario.id,
            "horizon_s": scenario.horizon, "solver": config.to_dict()}


# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    net = _network(args)
    config = _config(args)
    sc = _scenario(args, net)
    t0 = time.perf_counter()
    traj = simulate(net, sc, config, seed=args.seed)
    wall = time.perf_counter() - t0
    out = _out_dir(args)
    paths = write_trajectory(traj, out)
    events = detect_crossings(traj)
    paths.append(write_crossings_csv(events, out / "crossings.csv"))
    summary = {"scenario_id": sc.id, "seed": args.seed, "n_crossings": len(events),
               "clip_flags": traj.metadata.get("clip_flags", []),
               "terminated_at_s": traj.metadata.get("terminated_at_s")}
    if sc.insult_time is not None and traj.times[-1] >= sc.insult_time:
        r = survival_time(traj, sc.insult_time)
        summary.update(tau_s=r.tau, first_crossing_node=r.node_id)
    (out / "run_summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    paths.append(out / "run_summary.json")
    cfg = _run_config(args, config, sc)
    RunManifest.build(out, "run", cfg, [args.seed], wall, paths).write(out)
    print(f"{sc.id}: {len(traj.times)} samples, {len(events)} crossings -> {out}")
    return EXIT_OK


def cmd_ensemble(args) -> int:
    net = _network(args)
    config = _config(args)
    sc = _scenario(args, net)
    t0 = time.perf_counter()
    stats = run_ensemble(net, sc, args.replicas, args.seed, config, workers=args.workers)
    wall = time.perf_counter() - t0
    out = _out_dir(args)
    paths = write_ensemble(stats, out)
    cfg = dict(_run_config(args, config, sc), replicas=args.replicas, base_seed=args.seed)
    RunManifest.build(out, "ensemble", cfg, stats.seeds, wall, paths).write(out)
    if stats.insult_time is not None and stats.n_crossed:
        print(f"{sc.id}: tau = {stats.tau_mean / 3600:.2f} +/- {stats.tau_std / 3600:.2f} h "
              f"({stats.n_crossed}/{len(stats.seeds)} replicas crossed) -> {out}")
    else:
        print(f"{sc.id}: {len(stats.seeds)} replicas, no post-insult crossings -> {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_battery
    results = run_battery(quick=args.quick)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"verification failed: {', '.join(r.name for r in failed)}", file=sys.stderr)
        return EXIT_UNSTABLE
    return EXIT_OK


def cmd_init_steady(args) -> int:
    net = _network(args)
    config = _config(args)
    sc = _scenario(args, net)
    state = initial_state_for(net, sc, config)
    out = Path(args.out)
    if out.suffix != ".npz":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "initial_state.npz"
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
    save_state(state, out)
    load_state(out)  # round-trip check
    print(f"steady state for {sc.id} written to {out}")
    return EXIT_OK


def cmd_ingest_power(args) -> int:
    for p in (args.power, args.units):
        if not Path(p).exists():
            raise _InputMissing(f"input file not found: {p}")
    curve_path = Path(args.curve) if args.curve else data_path("turbine_efficiency.csv")
    if not curve_path.exists():
        raise _InputMissing(f"efficiency curve not found: {curve_path}")
    profiles = ingest_power(args.power, read_unit_map(args.units), EfficiencyCurve.from_csv(curve_path))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_profiles_csv(out, profiles, column="withdrawal_kg_s")
    print(f"{len(profiles)} node profiles written to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gasflux", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        p.add_argument("--network", help="network JSON (default: shipped 11-node network)")
        if scenario:
            p.add_argument("--scenario", required=True,
                           help="scenario JSON path or shipped name such as scenario3")
        p.add_argument("--config", help="solver config JSON")
        p.add_argument("--dx-m", type=float, dest="dx_m", help="target cell size [m]")
        p.add_argument("--cfl", type=float)
        p.add_argument("--eos", choices=("cnga", "ideal"))
        p.add_argument("--horizon-h", type=float, dest="horizon_h", help="override the horizon")
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("run", help="single simulation")
    common(p)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ensemble", help="Monte-Carlo ensemble with quantile bands")
    common(p)
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--replicas", type=int, default=50)
    p.add_argument("--workers", type=int, default=None, help="process cap (default: CPU count)")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("verify", help="run the verification battery")
    p.add_argument("--quick", action="store_true", help="skip the monotonicity simulations")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("init-steady", help="write the relaxed initial state of a scenario")
    common(p)
    p.set_defaults(func=cmd_init_steady)

    p = sub.add_parser("ingest-power", help="power CSV -> gas demand profile CSV")
    p.add_argument("--power", required=True, help="CSV timestamp,unit_id,power_MW")
    p.add_argument("--units", required=True, help="CSV unit_id,node_id[,capacity_MW]")
    p.add_argument("--curve", help="CSV load_fraction,efficiency (default: shipped curve)")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_ingest_power)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _InputMissing as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InstabilityError, SteadyStateError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except ReplicaError as exc:
        code = EXIT_INVALID if isinstance(exc.cause, ValidationError) else EXIT_UNSTABLE
        print(f"error: {exc}", file=sys.stderr)
        return code
    except (ValidationError, json.JSONDecodeError, KeyError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except GasfluxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
