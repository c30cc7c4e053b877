"""Seeded multi-source restoration scenarios and the ST-only failure check.

A scenario adds distributed generators at random non-root buses (the first
one becomes an extra root, the rest stay non-root sources), draws a priority
weight for every load, and faults one to three lines.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field, replace

import numpy as np

from .network import Network
from .optimizer import (
    NODE_CAPPED,
    WEIGHT_TOL,
    OptimizationError,
    SolveOutcome,
    _Evaluator,
    energized_subnetwork,
    restore,
)
from .oracle import EnumerationError, pseudo_root_assignment, rootless_cycles

__all__ = [
    "DEFAULT_MAX_NODES",
    "DG_CAPACITIES",
    "PRIORITY_WEIGHTS",
    "PRIORITY_PROBS",
    "Scenario",
    "Witness",
    "ScenarioResult",
    "generate_scenarios",
    "st_failure_witness",
    "run_scenario",
    "run_batch",
]

DG_CAPACITIES = (0.05, 0.1, 0.2)
PRIORITY_WEIGHTS = (1.0, 10.0, 100.0)
PRIORITY_PROBS = (0.6, 0.3, 0.1)
DG_COUNTS = (2, 3)
FAULT_COUNTS = (1, 2, 3)
# per restoration solve; islands fed only by small generators can otherwise take minutes
DEFAULT_MAX_NODES = 2000


@dataclass(frozen=True)
class Scenario:
    index: int
    network: Network
    dg_buses: tuple[int, ...]
    root_dg: int
    faulted: tuple[int, ...]


def generate_scenarios(base: Network, count: int, seed: int) -> list[Scenario]:
    """``count`` scenarios from one ``random.Random(seed)`` stream.

    Scenario ``i`` does not depend on ``count``, so a longer batch extends a
    shorter one.
    """
    rng = random.Random(seed)
    candidates = [b for b in base.non_roots]
    out = []
    for i in range(count):
        k = rng.choice(DG_COUNTS)
        dgs = tuple(rng.sample(candidates, k))
        caps = [rng.choice(DG_CAPACITIES) for _ in dgs]
        weights = {b.id: rng.choices(PRIORITY_WEIGHTS, PRIORITY_PROBS)[0] for b in base.buses if b.has_load}
        n_fault = rng.choice(FAULT_COUNTS)
        faulted = tuple(sorted(rng.sample(list(base.line_ids), n_fault)))

        cap_of = dict(zip(dgs, caps))
        buses = []
        for b in base.buses:
            changes = {}
            if b.id in weights:
                changes["weight"] = weights[b.id]
            if b.id in cap_of:
                changes.update(is_source=True, p_gen_max=cap_of[b.id], q_gen_max=cap_of[b.id])
            buses.append(replace(b, **changes) if changes else b)
        net = Network(
            tuple(buses),
            base.lines,
            frozenset(base.roots) | {dgs[0]},
            frozenset(faulted),
            name=f"{base.name}_s{i:03d}",
        )
        out.append(Scenario(i, net, dgs, dgs[0], faulted))
    return out


@dataclass(frozen=True)
class Witness:
    cycle: tuple[int, ...]
    closed: tuple[int, ...]
    weight: float
    loss: float


def _rest_forest(sub: Network, rest: set[int], preferred: set[int]) -> set[int]:
    """Forest over ``rest`` grown from the roots, preferring ``preferred`` lines."""
    dist = {r: 0 for r in sub.roots}
    heap = [(0, r, r, -1) for r in sorted(sub.roots)]
    chosen: set[int] = set()
    done: set[int] = set()
    while heap:
        d, _, u, via = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if via >= 0:
            chosen.add(via)
        for lid in sub.adjacency[u]:
            if lid in sub.faulted_lines:
                continue
            v = sub.line(lid).other(u)
            if v not in rest or v in done:
                continue
            nd = d + (0 if lid in preferred else 1)
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v, v, lid))
    return chosen


def st_failure_witness(network: Network, radial: SolveOutcome, *, check_limits: bool = True) -> Witness | None:
    """A parent-child-feasible, non-radial topology at least as good as the
    radial restoration optimum, if one is found.

    Candidates close a rootless cycle plus every bus it cuts off from the
    roots (a pseudo-root); the rest of the network keeps as much of the
    radial optimum as possible. Rootless components may only serve load up
    to the capacity of their own sources, without losses. At equal weight
    the witness must not exceed the proven lower bound on the radial loss,
    which is the loss itself when the second stage closed.
    """
    sub, _ = energized_subnetwork(network)
    usable = set(sub.line_ids) - set(sub.faulted_lines)
    try:
        cycles = rootless_cycles(sub, usable=usable)
    except EnumerationError:
        return None
    if not cycles:
        return None
    ev = _Evaluator(sub, check_limits=check_limits, pickup=True)
    opt_closed = {lid for lid in sub.line_ids if radial.best_assignment.a.get(lid, 0)}
    best: Witness | None = None
    for cycle in cycles:
        base = pseudo_root_assignment(sub, cycle, usable=usable)
        if base is None:
            continue
        closed_base = {lid for lid, v in zip(sub.line_ids, base) if v}
        pseudo_buses = _component_of(sub, closed_base, sub.line(cycle[0]).from_bus)
        rest = set(sub.bus_ids) - pseudo_buses
        pseudo_lines = {lid for lid in closed_base if sub.line(lid).from_bus in pseudo_buses}
        options = [closed_base, pseudo_lines | _rest_forest(sub, rest, opt_closed)]
        for closed in options:
            mask = np.array([lid in closed for lid in sub.line_ids], dtype=np.uint8)
            try:
                res = ev.evaluate(mask)
            except OptimizationError:
                continue
            if res is None:
                continue
            w, loss, _ = res
            cand = Witness(tuple(cycle), tuple(sorted(closed)), w, loss)
            if best is None or _lex_better(cand.weight, cand.loss, best.weight, best.loss):
                best = cand
    if best is None:
        return None
    if best.weight > radial.objective + WEIGHT_TOL:
        return best
    floor = radial.loss if radial.loss_lower_bound is None else radial.loss_lower_bound
    if abs(best.weight - radial.objective) <= WEIGHT_TOL and best.loss <= floor:
        return best
    return None


def _lex_better(w1, l1, w2, l2) -> bool:
    return w1 > w2 + WEIGHT_TOL or (abs(w1 - w2) <= WEIGHT_TOL and l1 < l2)


def _component_of(network: Network, closed: set[int], start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for lid in network.adjacency[u]:
            if lid in closed:
                v = network.line(lid).other(u)
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
    return seen


@dataclass
class ScenarioResult:
    index: int
    name: str
    dg_buses: tuple[int, ...]
    root_dg: int
    faulted: tuple[int, ...]
    n_dark: int
    outcomes: dict[str, SolveOutcome] = field(default_factory=dict)
    witness: Witness | None = None
    error: str = ""

    @property
    def st_failure(self) -> bool:
        return self.witness is not None

    def row(self) -> dict:
        out = {
            "scenario": self.index,
            "name": self.name,
            "dg_buses": " ".join(map(str, self.dg_buses)),
            "root_dg": self.root_dg,
            "faulted": " ".join(map(str, self.faulted)),
            "dark_buses": self.n_dark,
        }
        for cs in self.outcomes or ("scf0", "scf-st"):
            o = self.outcomes.get(cs)
            out[f"{cs}_weight"] = "" if o is None else o.objective
            out[f"{cs}_loss"] = "" if o is None else o.loss
            out[f"{cs}_nodes"] = "" if o is None else o.nodes_explored
            out[f"{cs}_radial"] = "" if o is None else int(o.is_radial)
            out[f"{cs}_proof"] = "" if o is None else o.proof
        out["st_nonradial"] = int(self.st_failure)
        out["st_cycle"] = "" if self.witness is None else " ".join(map(str, self.witness.cycle))
        out["st_weight"] = "" if self.witness is None else self.witness.weight
        out["st_loss"] = "" if self.witness is None else self.witness.loss
        out["error"] = self.error
        return out


def run_scenario(scn: Scenario, *, strategy: str = "bnb", check_limits: bool = True,
                 max_nodes: int | None = DEFAULT_MAX_NODES, constraint_sets=("scf0", "scf-st")) -> ScenarioResult:
    """Solve one scenario under each set, then look for an ST-only witness.

    The witness is only searched when the reference solve proved its
    first stage, and its loss is compared with the proven lower bound, so a
    capped (possibly suboptimal) reference never yields a false failure.
    """
    _, dark = energized_subnetwork(scn.network)
    res = ScenarioResult(scn.index, scn.network.name, scn.dg_buses, scn.root_dg, scn.faulted, len(dark))
    try:
        for cs in constraint_sets:
            res.outcomes[cs] = restore(
                scn.network, cs, strategy, check_limits=check_limits, max_nodes=max_nodes, keep_log=False
            )
        ref = res.outcomes[constraint_sets[0]]
        capped = ref.stage_capped or (ref.proof == NODE_CAPPED,)
        if not capped[0]:
            res.witness = st_failure_witness(scn.network, ref, check_limits=check_limits)
    except OptimizationError as exc:
        res.error = str(exc)
    return res


def _run_one(args):
    scn, kw = args
    return run_scenario(scn, **kw)


def run_batch(scenarios: list[Scenario], *, workers: int = 1, **kw) -> list[ScenarioResult]:
    """Solve every scenario; results come back in scenario order."""
    if workers <= 1:
        return [run_scenario(s, **kw) for s in scenarios]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, [(s, kw) for s in scenarios], chunksize=4))
