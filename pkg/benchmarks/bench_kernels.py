"""Compiled vs pure-Python kernels on the 33-bus fixture.

    python benchmarks/bench_kernels.py [--repeat N] [--skip-solve]

Each kernel runs on the same inputs under both backends; the last rows time
a full branch-and-bound reconfiguration end to end.
"""

from __future__ import annotations

import argparse
import time
from importlib.resources import files

import numpy as np

from radiality import kernels
from radiality.network import load_network
from radiality.optimizer import Propagator, _Evaluator, _search_model, reconfigure
from radiality.oracle import _forest_arrays


def _best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_cases(net):
    ev = _Evaluator(net, check_limits=True, pickup=False)
    ev.set_bound_loads(True)
    n_line = net.n_lines
    tie_open = np.array([1 if l.id <= 32 else 0 for l in net.lines], dtype=np.uint8)
    parent = np.full(net.n_buses, -1, dtype=np.int64)
    lf, lt = ev.line_from, ev.line_to
    for k in range(32):
        parent[lt[k]] = lf[k]
    # sweep_tree wants buses in BFS order with the root first; case33 ids are already ordered
    r = np.zeros(net.n_buses)
    x = np.zeros(net.n_buses)
    for k in range(32):
        r[lt[k]] = ev.r[k]
        x[lt[k]] = ev.x[k]

    model = _search_model(net, "scf-st")
    prop = Propagator(net, model, structural=True)
    lb0, ub0 = prop.initial()
    flf, flt, allowed, is_root = _forest_arrays(net)
    avail = np.ones(n_line, dtype=np.uint8)
    closed = np.zeros(n_line, dtype=np.uint8)
    sel = (avail.astype(bool) & ev._bound_line_ok).astype(np.uint8)
    m = ev._n_nonroot

    return {
        "sweep_tree": lambda: kernels.sweep_tree(parent, r, x, ev.p, ev.q, 1.0, 1e-10, 100),
        "forest_sweep": lambda: ev._sweep(tie_open, ev.p_serve, ev.q_serve, ev.roots),
        "propagate_bounds": lambda: kernels.propagate_bounds(
            prop.indptr, prop.indices, prop.coefs, prop.row_lo, prop.row_hi, prop.col_ptr, prop.col_rows,
            lb0.copy(), ub0.copy(), prop.is_int, prop.max_visits),
        "forced_closures": lambda: kernels.forced_closures(
            prop._inc_ptr, prop._inc_lines, prop._line_from, prop._line_to, avail, closed, prop._is_root),
        "flow_energy": lambda: kernels.flow_energy(
            m, ev._pos_from, ev._pos_to, ev._g, sel, ev._bound_rhs_p, ev._bound_rhs_q),
        "flow_resistance_diag": lambda: kernels.flow_resistance_diag(m, ev._pos_from, ev._pos_to, ev._g, sel),
        "enumerate_forests": lambda: kernels.enumerate_forests(net.n_buses, flf, flt, allowed, is_root, 10**6),
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-solve", action="store_true")
    args = ap.parse_args(argv)

    net = load_network(files("radiality") / "data" / "case33.json")
    backends = [b for b in ("python", "cython") if b in kernels.BACKENDS]
    initial = kernels.BACKEND
    results: dict[str, dict[str, float]] = {}
    for backend in backends:
        kernels.use(backend)
        for name, fn in kernel_cases(net).items():
            # forest enumeration is slow in pure Python; one run is enough
            reps = 1 if name == "enumerate_forests" else args.repeat
            results.setdefault(name, {})[backend] = _best_of(fn, reps)
        if not args.skip_solve:
            results.setdefault("reconfigure scf-st bnb", {})[backend] = _best_of(
                lambda: reconfigure(net, "scf-st", "bnb", keep_log=False), 1)
    kernels.use(initial)

    print(f"{'kernel':<24}" + "".join(f"{b + ' [s]':>16}" for b in backends) + f"{'speed-up':>12}")
    for name, t in results.items():
        line = f"{name:<24}" + "".join(f"{t[b]:>16.6f}" for b in backends)
        if len(backends) == 2:
            line += f"{t['python'] / t['cython']:>11.1f}x"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
