"""Command-line harness.

    radiality verify NETWORK ASSIGNMENT
    radiality counterexample NETWORK
    radiality solve {reconfig,restore} NETWORK [--constraints SET]... [--strategy S]
    radiality scenarios NETWORK [--count N] [--seed N] [--out DIR]
    radiality sizes NETWORK...
    radiality propagate NETWORK --fix LINE=VALUE...
    radiality export NETWORK --format {lp,mps} --output PATH

NETWORK is a JSON file or the name of a bundled fixture (fig1, fig2,
fig1_fault, random10, case33). Tables go to stdout; ``--csv PATH`` also
writes the rows as CSV.
"""

from __future__ import annotations

import argparse
import csv
import sys
from importlib.resources import files
from pathlib import Path

from . import kernels
from .constraints import CONSTRAINT_SETS, build_constraint_set, model_size
from .export import ExportError, build_export_model, export_lp, export_mps
from .network import NetworkError, load_assignment, load_network, save_network
from .optimizer import STRATEGIES, OptimizationError, propagation_demo, reconfigure, restore
from .oracle import EnumerationError, find_st_counterexample
from .scenarios import DEFAULT_MAX_NODES, generate_scenarios, run_batch
from .verify import check_radial, st_feasible

FIXTURES = ("fig1", "fig2", "fig1_fault", "random10", "case33")


def _network_path(arg: str) -> Path:
    p = Path(arg)
    if p.exists():
        return p
    if arg in FIXTURES:
        return Path(str(files("radiality") / "data" / f"{arg}.json"))
    raise FileNotFoundError(arg)


def _table(headers: list[str], rows: list[list]) -> str:
    cells = [[_cell(v) for v in r] for r in rows]
    widths = [len(h) for h in headers]
    for r in cells:
        widths = [max(w, len(c)) for w, c in zip(widths, r)]
    out = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    out.append("  ".join("-" * w for w in widths))
    for r in cells:
        out.append("  ".join(c.rjust(w) if _numeric(c) else c.ljust(w) for c, w in zip(r, widths)))
    return "\n".join(out)


def _cell(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, (list, tuple)):
        return " ".join(map(str, v))
    return str(v)


def _numeric(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _write_csv(path, headers, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(headers)
        for r in rows:
            w.writerow([_cell(v) if isinstance(v, (list, tuple, bool)) else v for v in r])


# -- commands ----------------------------------------------------------------


def cmd_verify(args) -> int:
    net = load_network(args.network)
    assignment = load_assignment(args.assignment, net)
    rep = check_radial(net, assignment.a)
    print(f"network {net.name}: {rep.n_closed} closed lines, {rep.n_required} required")
    print(f"condition 1 (every bus reaches a root): {'ok' if rep.condition1_ok else 'violated'}")
    print(f"condition 2 (edge count): {'ok' if rep.condition2_ok else 'violated'}")
    rows = []
    for k, c in enumerate(rep.components):
        kind = "pseudo-root" if k in rep.pseudo_root_components else ("tree" if c.roots and not c.cycle else "other")
        rows.append([k, sorted(c.buses), sorted(c.roots), sorted(c.cycle), kind])
    print(_table(["component", "buses", "roots", "cycle", "kind"], rows))
    print("radial" if rep.is_radial else "not radial")
    return 0 if rep.is_radial else 1


def cmd_counterexample(args) -> int:
    net = load_network(args.network)
    vec = find_st_counterexample(net)
    if vec is None:
        print("none")
        return 0
    closed = [lid for lid, v in zip(net.line_ids, vec) if v]
    ok, b = st_feasible(net, vec)
    rep = check_radial(net, vec)
    print(f"closed lines: {' '.join(map(str, closed))}")
    print(f"sum a = {sum(vec)} (|N| - |R| = {net.n_buses - net.n_roots})")
    print(f"parent-child feasible: {'yes' if ok else 'no'}")
    rows = [[lid, child, net.line(lid).other(child)] for (lid, child), v in sorted(b.items()) if v]
    print(_table(["line", "child", "parent"], rows))
    for k in rep.pseudo_root_components:
        c = rep.components[k]
        print(f"pseudo-root: buses {sorted(c.buses)}, cycle lines {sorted(c.cycle)}")
    return 0


SOLVE_HEADERS = ["problem", "constraints", "strategy", "objective", "loss", "nodes", "stage_nodes",
                 "proof", "radial", "open_lines", "shed_buses", "closed_lines"]


def cmd_solve(args) -> int:
    net = load_network(args.network)
    sets = args.constraints or ["scf0", "scf-st"]
    rows = []
    for cs in sets:
        kw = dict(check_limits=not args.no_limits, max_nodes=args.max_nodes, keep_log=False)
        if args.problem == "reconfig":
            out = reconfigure(net, cs, args.strategy, **kw)
        else:
            out = restore(net, cs, args.strategy, **kw)
        d = out.to_dict()
        rows.append([d["problem"], d["constraint_set"], d["strategy"], d["objective"], d["loss"],
                     d["nodes_explored"], d["stage_nodes"], d["proof"], d["is_radial"], d["open_lines"],
                     d["shed_buses"], d["closed_lines"]])
    # closed lines only go to the CSV; the open ones are the short list on large networks
    print(_table(SOLVE_HEADERS[:-1], [r[:-1] for r in rows]))
    if args.csv:
        _write_csv(args.csv, SOLVE_HEADERS, rows)
    return 0


def cmd_scenarios(args) -> int:
    base = load_network(args.network)
    scns = generate_scenarios(base, args.count, args.seed)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for s in scns:
            save_network(s.network, out / f"{s.network.name}.json")
    sets = tuple(args.constraints or ("scf0", "scf-st"))
    results = run_batch(scns, workers=args.workers, strategy=args.strategy, check_limits=not args.no_limits,
                        max_nodes=args.max_nodes, constraint_sets=sets)
    rows = [r.row() for r in results]
    headers = list(rows[0]) if rows else ["scenario"]
    shown = ["scenario", "faulted", "dg_buses"] + [f"{cs}_{k}" for cs in sets for k in ("weight", "nodes", "radial")]
    shown += ["st_nonradial", "error"]
    shown = [h for h in shown if not rows or h in rows[0]]
    print(_table(shown, [[r[h] for h in shown] for r in rows]))
    n = len(results)
    print()
    print(f"scenarios: {n}")
    for cs in sets:
        radial = sum(1 for r in results if cs in r.outcomes and r.outcomes[cs].is_radial)
        capped = sum(1 for r in results if cs in r.outcomes and r.outcomes[cs].proof == "node-capped")
        print(f"{cs}: radial {radial}/{n}, node-capped {capped}")
    print(f"st-only non-radial optimum: {sum(r.st_failure for r in results)}/{n}")
    errors = sum(1 for r in results if r.error)
    if errors:
        print(f"errors: {errors}")
    if args.csv:
        _write_csv(args.csv, headers, [[r[h] for h in headers] for r in rows])
    return 0


def cmd_sizes(args) -> int:
    rows = []
    for path in args.networks:
        net = load_network(_network_path(path))
        for cs in ("scf0", "scf-st", "st"):
            size = model_size(build_constraint_set(net, cs))
            rows.append([net.name, cs, *size.as_tuple()])
    print(_table(["network", "constraints", "variables", "inequations", "equations"], rows))
    return 0


def cmd_propagate(args) -> int:
    net = load_network(args.network)
    fixings = {}
    for item in args.fix or []:
        lid, _, val = item.partition("=")
        try:
            fixings[int(lid)] = int(val)
        except ValueError:
            raise SystemExit(f"bad --fix {item!r}, expected LINE=0 or LINE=1")
    sets = args.constraints or ["scf0", "scf-st"]
    res = propagation_demo(net, fixings, constraint_sets=sets)
    rows = []
    for cs, r in res.items():
        if not r.feasible:
            rows.append([cs, "infeasible", ""])
            continue
        doms = " ".join(f"a_{lid}={lo}" if lo == hi else f"a_{lid}∈[0,1]" for lid, (lo, hi) in sorted(r.domains.items()))
        rows.append([cs, doms, r.residual_text()])
    print(_table(["constraints", "domains", "residual"], rows))
    return 0


def cmd_export(args) -> int:
    net = load_network(args.network)
    cs = (args.constraints or ["scf-st"])[0]
    model = build_export_model(net, cs, args.problem, with_power_flow=not args.radiality_only)
    (export_lp if args.format == "lp" else export_mps)(model, args.output)
    print(f"wrote {args.output}: {model.n_variables} columns, {len(model.constraints)} records")
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="radiality", description="Radiality constraint sets for distribution networks")
    p.add_argument("--backend", action="store_true", help="print the kernel backend and exit")
    sub = p.add_subparsers(dest="command")

    def common(sp, *, constraints=True, solver=True):
        if constraints:
            sp.add_argument("--constraints", action="append", choices=CONSTRAINT_SETS,
                            help="constraint set; repeat for several (default scf0 and scf-st)")
        if solver:
            sp.add_argument("--strategy", choices=STRATEGIES, default="bnb")
            sp.add_argument("--max-nodes", type=int, default=None, help="node cap per search stage")
            sp.add_argument("--no-limits", action="store_true", help="ignore voltage, current and capacity limits")
            sp.add_argument("--csv", metavar="PATH")

    sp = sub.add_parser("verify", help="check radiality of an assignment")
    sp.add_argument("network")
    sp.add_argument("assignment")
    sp.set_defaults(func=cmd_verify, paths=("network", "assignment"))

    sp = sub.add_parser("counterexample", help="parent-child feasible but non-radial assignment")
    sp.add_argument("network")
    sp.set_defaults(func=cmd_counterexample, paths=("network",))

    sp = sub.add_parser("solve", help="optimal reconfiguration or restoration")
    sp.add_argument("problem", choices=("reconfig", "restore"))
    sp.add_argument("network")
    common(sp)
    sp.set_defaults(func=cmd_solve, paths=("network",))

    sp = sub.add_parser("scenarios", help="seeded multi-source restoration batch")
    sp.add_argument("network")
    sp.add_argument("--count", type=int, default=300)
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--out", metavar="DIR", help="write each scenario network here")
    sp.add_argument("--workers", type=int, default=1)
    common(sp)
    sp.set_defaults(func=cmd_scenarios, paths=("network",), max_nodes=DEFAULT_MAX_NODES)

    sp = sub.add_parser("sizes", help="variable and row counts per constraint set")
    sp.add_argument("networks", nargs="+")
    sp.set_defaults(func=cmd_sizes, paths=())

    sp = sub.add_parser("propagate", help="domains after fixing line statuses")
    sp.add_argument("network")
    sp.add_argument("--fix", action="append", metavar="LINE=VALUE")
    common(sp, solver=False)
    sp.set_defaults(func=cmd_propagate, paths=("network",))

    sp = sub.add_parser("export", help="write the model as LP or MPS")
    sp.add_argument("network")
    sp.add_argument("--problem", choices=("reconfig", "restore"), default="reconfig")
    sp.add_argument("--format", choices=("lp", "mps"), default="lp")
    sp.add_argument("--output", required=True)
    sp.add_argument("--radiality-only", action="store_true", help="leave out power flow and objective")
    common(sp, solver=False)
    sp.set_defaults(func=cmd_export, paths=("network",))
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.backend:
        print(kernels.BACKEND)
        return 0
    if args.command is None:
        parser.print_usage()
        return 2
    try:
        for name in args.paths:
            setattr(args, name, _network_path(getattr(args, name)) if name == "network" else Path(getattr(args, name)))
            if not Path(getattr(args, name)).exists():
                raise FileNotFoundError(getattr(args, name))
    except FileNotFoundError as exc:
        parser.error(f"no such file: {exc.args[0]}")
    try:
        return args.func(args)
    except (NetworkError, OptimizationError, EnumerationError, ExportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
