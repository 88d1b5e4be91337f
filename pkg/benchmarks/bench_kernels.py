"""Compare the numba and numpy time-stepping kernels on the shipped network.

    python3 benchmarks/bench_kernels.py --hours 24 --repeat 3

Both backends integrate the same nominal scenario from the same initial
state; the script reports wall time per simulated day and the largest
pressure difference between the two runs.
"""

import argparse
import time

import numpy as np

from gasflux import israel_network
from gasflux.core import BAR, GasProperties, data_path
from gasflux.scenario import compose, load_scenario
from gasflux.solver.kernels import backend_name
from gasflux.solver.simulate import SolverConfig, initial_state_for, integrate


def bench(backend, state, bc, hours, props, repeat):
    cfg = SolverConfig(backend=backend)
    integrate(state, bc, 600.0, props, cfg)  # warm-up / JIT
    best, traj = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        traj = integrate(state, bc, hours * 3600.0, props, cfg)
        best = min(best, time.perf_counter() - t0)
    return best, traj


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--hours", type=float, default=24.0)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--dx-m", type=float, default=1000.0)
    args = ap.parse_args()

    net = israel_network()
    props = GasProperties()
    sc = load_scenario(data_path("scenarios", "scenario1.json"), net)
    cfg = SolverConfig(target_dx_m=args.dx_m)
    state = initial_state_for(net, sc, cfg, props)
    bc = compose(sc, net)
    print(f"cells: {state.layout.n_cells}, simulated: {args.hours:g} h, default backend: {backend_name()}")

    results = {}
    backends = ["numpy"] + (["numba"] if backend_name() == "numba" else [])
    for b in backends:
        secs, traj = bench(b, state, bc, args.hours, props, args.repeat)
        results[b] = (secs, traj)
        print(f"{b:>6}: {secs:8.3f} s  ({secs / (args.hours / 24.0):.3f} s per simulated day)")

    if len(results) == 2:
        t_np, tr_np = results["numpy"]
        t_nb, tr_nb = results["numba"]
        diff = np.max(np.abs(tr_np.pressures - tr_nb.pressures)) / BAR
        print(f"speedup: {t_np / t_nb:.1f}x, max pressure difference {diff:.2e} bar")


if __name__ == "__main__":
    main()
