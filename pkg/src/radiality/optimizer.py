"""Desk-scale reconfiguration and restoration.

Two strategies share one leaf evaluator: ``enumerate`` sweeps every rooted
spanning forest, ``bnb`` is a depth-first search over line statuses
(ascending line id, closed branch first) with integer bound propagation on
the radiality rows and an admissible loss bound.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .constraints import LinearModel, a_name, build_constraint_set, build_edge_count, merge, normalize_set_name
from .network import Bus, Network, NetworkError, TopologyAssignment
from .oracle import MAX_FORESTS, enumerate_feasible, forest_matrix
from .powerflow import MAX_ITER, TOL
from .verify import check_radial, st_feasible

__all__ = [
    "OptimizationError",
    "NodeRecord",
    "SolveOutcome",
    "PropagationResult",
    "SearchEffort",
    "reconfigure",
    "restore",
    "propagation_demo",
    "compare_search_effort",
    "energized_subnetwork",
    "Propagator",
]

STRATEGIES = ("enumerate", "bnb")
PROBLEMS = ("reconfig", "restore")

EXHAUSTIVE = "exhaustive"
BOUND_CLOSED = "bound-closed"
NODE_CAPPED = "node-capped"

TIE_RTOL = 1e-12
WEIGHT_TOL = 1e-9
CAP_EPS = 1e-9
MAX_PICKUP_CHECKS = 200_000


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class NodeRecord:
    depth: int
    n_fixed: int
    n_propagated: int
    bound: float
    status: str  # branched | infeasible | bound | leaf | leaf-rejected


@dataclass
class SolveOutcome:
    best_assignment: TopologyAssignment
    objective: float
    nodes_explored: int
    proof: str
    log: list[NodeRecord] = field(default_factory=list)
    problem: str = "reconfig"
    constraint_set: str = "scf0"
    strategy: str = "bnb"
    loss: float = 0.0
    restored_weight: float | None = None
    is_radial: bool = True
    stage_nodes: tuple[int, ...] = ()
    evaluated: int = 0
    stage_capped: tuple[bool, ...] = ()
    loss_lower_bound: float | None = None

    def to_dict(self) -> dict:
        a = self.best_assignment
        return {
            "problem": self.problem,
            "constraint_set": self.constraint_set,
            "strategy": self.strategy,
            "objective": self.objective,
            "loss": self.loss,
            "restored_weight": self.restored_weight,
            "nodes_explored": self.nodes_explored,
            "stage_nodes": list(self.stage_nodes),
            "proof": self.proof,
            "is_radial": self.is_radial,
            "closed_lines": a.closed(),
            "open_lines": sorted(lid for lid, v in a.a.items() if not v),
            "shed_buses": sorted(b for b, v in (a.load_pickup or {}).items() if not v),
        }


def _loss_floor(bb, capped: bool, best_loss: float) -> float:
    """Proven lower bound on the optimal loss after a search."""
    if not capped:
        return best_loss
    if any(b is None for b in bb.open_bounds):
        return 0.0
    return max(0.0, min([best_loss] + bb.open_bounds))


def _better_loss(loss: float, vec, best_loss: float, best_vec) -> bool:
    """Strictly lower loss, or a tie broken by the lexicographically smallest vector."""
    if best_vec is None:
        return True
    tol = TIE_RTOL * max(abs(loss), abs(best_loss), 1e-300)
    if loss < best_loss - tol:
        return True
    return abs(loss - best_loss) <= tol and tuple(vec) < tuple(best_vec)


# ---------------------------------------------------------------------------
# energized part of a faulted network


def energized_subnetwork(network: Network) -> tuple[Network, tuple[int, ...]]:
    """Buses reachable from a root over healthy lines, and the buses left dark.

    The returned network keeps faulted lines between energized buses (their
    status stays fixed open) and skips the connectivity check.
    """
    adj: dict[int, list[int]] = {b: [] for b in network.bus_ids}
    for l in network.lines:
        if l.id not in network.faulted_lines:
            adj[l.from_bus].append(l.to_bus)
            adj[l.to_bus].append(l.from_bus)
    seen = set(network.roots)
    queue = deque(sorted(network.roots))
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    dark = tuple(b for b in network.bus_ids if b not in seen)
    if not dark:
        return network, ()
    buses = tuple(b for b in network.buses if b.id in seen)
    lines = tuple(l for l in network.lines if l.from_bus in seen and l.to_bus in seen)
    faulted = frozenset(l.id for l in lines if l.id in network.faulted_lines)
    sub = Network(buses, lines, network.roots, faulted, name=network.name, check_connected=False)
    return sub, dark


def _seed_forest(network: Network) -> tuple[int, ...]:
    """Shortest-path forest from the roots by resistance, over healthy lines."""
    adj: dict[int, list[tuple[float, int, int]]] = {b: [] for b in network.bus_ids}
    for k, l in enumerate(network.lines):
        if l.id not in network.faulted_lines:
            adj[l.from_bus].append((l.r, l.to_bus, k))
            adj[l.to_bus].append((l.r, l.from_bus, k))
    vec = [0] * network.n_lines
    dist = {r: 0.0 for r in network.roots}
    heap = [(0.0, r, -1) for r in sorted(network.roots)]
    done: set[int] = set()
    while heap:
        d, u, k = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if k >= 0:
            vec[k] = 1
        for r, v, kk in adj[u]:
            if v not in done and d + r < dist.get(v, math.inf):
                dist[v] = d + r
                heapq.heappush(heap, (d + r, v, kk))
    return tuple(vec)


# ---------------------------------------------------------------------------
# bound propagation


class Propagator:
    """Integer bound propagation over a model's rows plus, for flow-based
    sets, root reachability and bridge forcing on the line graph."""

    def __init__(self, network: Network, model: LinearModel, *, structural: bool):
        self.network = network
        self.model = model
        self.structural = structural
        (self.indptr, self.indices, self.coefs, self.row_lo, self.row_hi,
         self.lb0, self.ub0, self.is_int) = model.row_arrays()
        n_var = model.n_variables
        order = np.argsort(self.indices, kind="stable")
        rows_of_entry = np.repeat(np.arange(len(self.row_lo), dtype=np.int64), np.diff(self.indptr))
        self.col_rows = np.ascontiguousarray(rows_of_entry[order])
        counts = np.bincount(self.indices, minlength=n_var)
        self.col_ptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
        self.max_visits = max(1000, 50 * len(self.row_lo))
        index = model.var_index
        self.a_idx = np.array([index[a_name(lid)] for lid in network.line_ids], dtype=np.int64)

        bi = network.bus_index
        self._line_from = np.array([bi[l.from_bus] for l in network.lines], dtype=np.int64)
        self._line_to = np.array([bi[l.to_bus] for l in network.lines], dtype=np.int64)
        self._is_root = np.array([b in network.roots for b in network.bus_ids], dtype=np.uint8)
        # bus -> incident lines in CSR form
        ends = np.concatenate((self._line_from, self._line_to))
        order = np.argsort(ends, kind="stable")
        self._inc_lines = (order % network.n_lines).astype(np.int64)
        counts = np.bincount(ends, minlength=network.n_buses)
        self._inc_ptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)

    def initial(self) -> tuple[np.ndarray, np.ndarray]:
        return self.lb0.copy(), self.ub0.copy()

    def run(self, lb: np.ndarray, ub: np.ndarray) -> bool:
        """Tighten ``lb``/``ub`` in place to a fixpoint; False if infeasible."""
        while True:
            ok = kernels.propagate_bounds(
                self.indptr, self.indices, self.coefs, self.row_lo, self.row_hi,
                self.col_ptr, self.col_rows, lb, ub, self.is_int, self.max_visits,
            )
            if not ok:
                return False
            if not self.structural:
                return True
            forced = self._forced_lines(ub[self.a_idx] > 0.5, lb[self.a_idx] > 0.5)
            if forced is None:
                return False
            if len(forced) == 0:
                return True
            for k in forced:
                lb[self.a_idx[k]] = 1.0

    def _forced_lines(self, avail, closed):
        """Lines that every completion must close (bridges cutting off a
        rootless side); None when some bus cannot reach a root."""
        ok, forced = kernels.forced_closures(
            self._inc_ptr, self._inc_lines, self._line_from, self._line_to,
            avail.astype(np.uint8), closed.astype(np.uint8), self._is_root,
        )
        return forced if ok else None


def _search_model(network: Network, constraint_set: str) -> LinearModel:
    model = build_constraint_set(network, constraint_set)
    if constraint_set == "scf-st" or constraint_set == "st":
        # the parent-child rows imply the edge count, so adding it is sound
        model = merge(model.name, [model, build_edge_count(network)], formulation=model.formulation)
    return model


# ---------------------------------------------------------------------------
# topology evaluation


class _Evaluator:
    """Scores complete line assignments: power flow on rooted trees, a
    lossless capacity surrogate on rootless unicyclic components, and
    max-weight load pickup per component when pickups are free."""

    def __init__(self, network: Network, *, check_limits: bool, pickup: bool):
        net = network
        self.network = net
        self.pickup = pickup
        self.check_limits = check_limits
        bi = net.bus_index
        n_bus, n_line = net.n_buses, net.n_lines
        self.line_from = np.array([bi[l.from_bus] for l in net.lines], dtype=np.int64)
        self.line_to = np.array([bi[l.to_bus] for l in net.lines], dtype=np.int64)
        self.r = np.array([l.r for l in net.lines], dtype=np.float64)
        self.x = np.array([l.x for l in net.lines], dtype=np.float64)
        self.imax = np.array([l.i_max for l in net.lines], dtype=np.float64)
        buses: list[Bus] = list(net.buses)
        self.p = np.array([b.p_load for b in buses], dtype=np.float64)
        self.q = np.array([b.q_load for b in buses], dtype=np.float64)
        self.weight = np.array([b.weight for b in buses], dtype=np.float64)
        self.vmin = np.array([b.v_min for b in buses], dtype=np.float64)
        self.vmax = np.array([b.v_max for b in buses], dtype=np.float64)
        self.pcap = np.array([b.p_gen_max for b in buses], dtype=np.float64)
        self.qcap = np.array([b.q_gen_max for b in buses], dtype=np.float64)
        self.is_root = np.array([b.id in net.roots for b in buses], dtype=bool)
        self.roots = np.array(sorted(bi[r] for r in net.roots), dtype=np.int64)
        inc: list[list[int]] = [[] for _ in range(n_bus)]
        for k in range(n_line):
            inc[int(self.line_from[k])].append(k)
            inc[int(self.line_to[k])].append(k)
        self.inc = inc
        self.bus_lines_ptr = np.array([0] + list(np.cumsum([len(v) for v in inc])), dtype=np.int64)
        self.bus_lines = np.array([k for v in inc for k in v], dtype=np.int64)

        has_load = (self.p != 0) | (self.q != 0)
        if pickup:
            self.mandatory = has_load & (self.weight > 0)
        else:
            self.mandatory = has_load
        self.p_serve = np.where(self.mandatory, self.p, 0.0)
        self.q_serve = np.where(self.mandatory, self.q, 0.0)
        self.total_weight = float(self.weight[self.mandatory].sum()) if pickup else 0.0
        self.monotone = bool((self.q >= 0).all())
        self._tree_memo: dict = {}
        self._pickup_memo: dict = {}
        self._leaf_memo: dict = {}
        self.evaluations = 0
        self.set_bound_loads(False)

    def _sweep(self, mask, p, q, roots):
        self.evaluations += 1
        return kernels.forest_sweep(
            mask, self.bus_lines_ptr, self.bus_lines, self.line_from, self.line_to, self.r, self.x,
            p, q, roots, self.vmin, self.vmax, self.imax, self.pcap, self.qcap,
            bool(self.check_limits), TOL, MAX_ITER,
        )

    def evaluate(self, mask, floor: float | None = None):
        """``(weight, loss, served bus indices)`` or None if infeasible.

        With pickups free, ``floor`` is the least total weight of interest;
        topologies that cannot reach it return None early.
        """
        mask = np.ascontiguousarray(mask, dtype=np.uint8)
        if not self.pickup:
            return self._evaluate(mask, floor)
        # a result is exact whatever the floor; a rejection holds for any higher floor
        key = mask.tobytes()
        hit = self._leaf_memo.get(key)
        if hit is not None:
            res, seen_floor = hit
            if res is not None:
                return res if floor is None or res[0] >= floor - WEIGHT_TOL else None
            if floor is not None and seen_floor is not None and floor >= seen_floor:
                return None
        res = self._evaluate(mask, floor)
        self._leaf_memo[key] = (res, floor)
        return res

    def _evaluate(self, mask, floor):
        loss, n_viol, conv, reached = self._sweep(mask, self.p_serve, self.q_serve, self.roots)
        n_bus = len(self.p)
        if conv and n_viol == 0 and reached == n_bus:
            served = tuple(int(i) for i in np.flatnonzero(self.mandatory))
            return self.total_weight, float(loss), served
        if not self.pickup:
            if reached == n_bus:
                return None
            parts = []
            for comp in self._components(mask):
                res = self._component_full(comp)
                if res is None:
                    return None
                parts.append(res)
            return 0.0, sum(p[1] for p in parts), tuple(sorted(b for p in parts for b in p[2]))

        comps = self._components(mask)
        full = [self._component_full(c) for c in comps]
        ubs = []
        for comp, res in zip(comps, full):
            w_all = float(sum(self.weight[b] for b in comp[1] if self.mandatory[b]))
            if res is not None:
                ubs.append(w_all)
            else:
                ws = [self.weight[b] for b in comp[1] if self.mandatory[b]]
                ubs.append(w_all - float(min(ws)) if ws else 0.0)
        if floor is not None and sum(ubs) < floor - WEIGHT_TOL:
            return None
        total_w = 0.0
        total_loss = 0.0
        served: list[int] = []
        for k, (comp, res) in enumerate(zip(comps, full)):
            if res is None:
                need = None if floor is None else floor - (sum(ubs) - ubs[k])
                res = self._component_best(comp, need)
                if res is None:
                    return None
                ubs[k] = res[0]
            w, l, s = res
            total_w += w
            total_loss += l
            served.extend(s)
        if floor is not None and total_w < floor - WEIGHT_TOL:
            return None
        return total_w, total_loss, tuple(sorted(served))

    def _components(self, mask):
        n = len(self.p)
        seen = [False] * n
        out = []
        starts = list(self.roots) + list(range(n))
        for s in starts:
            s = int(s)
            if seen[s]:
                continue
            seen[s] = True
            buses = [s]
            lines: set[int] = set()
            head = 0
            while head < len(buses):
                u = buses[head]
                head += 1
                for k in self.inc[u]:
                    if mask[k]:
                        lines.add(k)
                        w = int(self.line_to[k]) if int(self.line_from[k]) == u else int(self.line_from[k])
                        if not seen[w]:
                            seen[w] = True
                            buses.append(w)
            roots = [b for b in buses if self.is_root[b]]
            if len(roots) > 1 or (len(roots) == 1 and len(lines) != len(buses) - 1):
                raise OptimizationError("evaluated assignment is not a forest of rooted trees and pseudo-roots")
            out.append((roots[0] if roots else None, tuple(sorted(buses)), tuple(sorted(lines))))
        return out

    def _checker(self, comp):
        root, buses, lines = comp
        if root is None:
            idx = list(buses)
            cap_p = float(self.pcap[idx].sum())
            cap_q = float(self.qcap[idx].sum())

            def check(chosen):
                ch = list(chosen)
                ok = self.p[ch].sum() <= cap_p + CAP_EPS and abs(self.q[ch].sum()) <= cap_q + CAP_EPS
                return 0.0 if ok else None

            return check
        mask = np.zeros(len(self.r), dtype=np.uint8)
        mask[list(lines)] = 1
        roots = np.array([root], dtype=np.int64)
        p = np.zeros(len(self.p))
        q = np.zeros(len(self.p))

        def check(chosen):
            p[:] = 0.0
            q[:] = 0.0
            idx = list(chosen)
            p[idx] = self.p[idx]
            q[idx] = self.q[idx]
            loss, n_viol, conv, _ = self._sweep(mask, p, q, roots)
            return float(loss) if conv and n_viol == 0 else None

        return check

    def _component_full(self, comp):
        """Serve every load of the component, or None."""
        key = ("full", comp[0], comp[2] if comp[0] is not None else comp[1])
        if key not in self._tree_memo:
            items = tuple(b for b in comp[1] if self.mandatory[b])
            loss = self._checker(comp)(items)
            w = float(sum(self.weight[b] for b in items)) if self.pickup else 0.0
            self._tree_memo[key] = None if loss is None else (w, loss, items)
        return self._tree_memo[key]

    def _component_best(self, comp, need):
        """Lexicographic best pickup of one component reaching weight ``need``."""
        key = ("best", comp[0], comp[2] if comp[0] is not None else comp[1])
        memo = self._tree_memo.get(key)
        if memo is not None:
            kind, val = memo
            if kind == "found":
                return val if need is None or val[0] >= need - WEIGHT_TOL else None
            if need is not None and need >= val - WEIGHT_TOL:
                return None
        items = [b for b in comp[1] if self.mandatory[b]]
        if comp[0] is None or self.check_limits:
            cap = float(self.pcap[list(comp[1])].sum())
        else:
            cap = math.inf
        res = self._best_subset(items, self._checker(comp), need, cap)
        if res is not None:
            self._tree_memo[key] = ("found", res)
        elif need is not None:
            self._tree_memo[key] = ("below", need)
        return res

    def _best_subset(self, items, check, floor=None, cap=math.inf):
        """Max total weight, then min loss, over feasible load subsets of at
        least ``floor`` weight.

        Feasibility and loss are monotone (dropping load never hurts) when
        reactive loads are non-negative, which lets both prune the search.
        Served load plus losses cannot exceed the active generation ``cap``,
        so a fractional knapsack over the undecided loads bounds the weight.
        """
        if math.isfinite(cap):
            items = sorted(items, key=lambda b: (-self.weight[b] / self.p[b] if self.p[b] > 0 else -math.inf,
                                                 -self.weight[b], b))
        else:
            items = sorted(items, key=lambda b: (-self.weight[b], b))
        w = [float(self.weight[b]) for b in items]
        if not self.monotone:
            return self._all_subsets(items, w, check, floor)
        size = [float(self.p[b]) for b in items]
        n = len(items)
        suffix = [0.0] * (n + 1)
        for k in range(n - 1, -1, -1):
            suffix[k] = suffix[k + 1] + w[k]
        best_w = -math.inf if floor is None else floor - WEIGHT_TOL
        best = [best_w, math.inf, None]
        checks = [0]

        def upper(k, weight, used):
            if not math.isfinite(cap):
                return weight + suffix[k]
            room = cap - used + CAP_EPS
            ub = weight
            for j in range(k, n):
                if size[j] <= room:
                    room -= size[j]
                    ub += w[j]
                else:
                    ub += w[j] * room / size[j]
                    break
            return ub

        def consider(weight, loss, chosen):
            if best[2] is None and weight >= best[0]:
                best[0], best[1], best[2] = weight, loss, tuple(chosen)
            elif weight > best[0] + WEIGHT_TOL or (abs(weight - best[0]) <= WEIGHT_TOL and loss < best[1]):
                best[0], best[1], best[2] = weight, loss, tuple(chosen)

        def run_check(chosen):
            checks[0] += 1
            if checks[0] > MAX_PICKUP_CHECKS:
                raise OptimizationError("load pickup search exceeded its evaluation budget")
            return check(chosen)

        empty_loss = run_check(())
        if empty_loss is None:
            return None
        stack = [(0, (), 0.0, 0.0, empty_loss)]
        while stack:
            k, chosen, weight, served_p, loss = stack.pop()
            reach = upper(k, weight, served_p + loss)
            if reach < best[0] - WEIGHT_TOL:
                continue
            if best[2] is not None and reach <= best[0] + WEIGHT_TOL and loss >= best[1]:
                continue
            if k == n:
                consider(weight, loss, chosen)
                continue
            if weight + suffix[k] - min(w[k:]) < best[0] - WEIGHT_TOL:
                # only the take-everything completion can still reach the incumbent
                rest = chosen + tuple(items[k:])
                lr = run_check(rest)
                if lr is not None:
                    consider(weight + suffix[k], lr, rest)
                continue
            stack.append((k + 1, chosen, weight, served_p, loss))
            cand = chosen + (items[k],)
            lc = run_check(cand)
            if lc is not None:
                stack.append((k + 1, cand, weight + w[k], served_p + size[k], lc))
        if best[2] is None:
            return None
        return best[0], best[1], best[2]

    def _all_subsets(self, items, w, check, floor):
        if len(items) > 16:
            raise OptimizationError("load pickup search without monotone feasibility is limited to 16 loads")
        best = None
        for mask in range(1 << len(items)):
            chosen = tuple(b for k, b in enumerate(items) if mask >> k & 1)
            weight = sum(wk for k, wk in enumerate(w) if mask >> k & 1)
            if floor is not None and weight < floor - WEIGHT_TOL:
                continue
            loss = check(chosen)
            if loss is None:
                continue
            if best is None or weight > best[0] + WEIGHT_TOL or (abs(weight - best[0]) <= WEIGHT_TOL and loss < best[1]):
                best = (weight, loss, chosen)
        return best

    def pickup_bound(self, avail) -> float:
        """Upper bound on picked-up weight over the available lines.

        Every closed component lies inside one component of the available
        lines, and its served load plus losses is drawn from the sources in
        it, so a fractional knapsack per available component bounds the
        weight. Loads without active demand are free.
        """
        key = np.asarray(avail, dtype=np.uint8).tobytes()
        hit = self._pickup_memo.get(key)
        if hit is not None:
            return hit
        n = len(self.p)
        parent = list(range(n))

        def find(u):
            while parent[u] != u:
                parent[u] = parent[parent[u]]
                u = parent[u]
            return u

        for k in np.flatnonzero(np.asarray(avail, dtype=bool)):
            a, b = find(int(self.line_from[k])), find(int(self.line_to[k]))
            if a != b:
                parent[a] = b
        groups: dict[int, list[int]] = {}
        for u in range(n):
            groups.setdefault(find(u), []).append(u)
        total = 0.0
        for members in groups.values():
            rooted = bool(self.is_root[members].any())
            cap = math.inf if rooted and not self.check_limits else float(self.pcap[members].sum())
            items = []
            for b in members:
                if not self.mandatory[b]:
                    continue
                if self.p[b] <= 0.0 or not math.isfinite(cap):
                    total += self.weight[b]
                else:
                    items.append((-self.weight[b] / self.p[b], b))
            room = cap + CAP_EPS
            for _, b in sorted(items):
                if self.p[b] <= room:
                    room -= self.p[b]
                    total += self.weight[b]
                else:
                    total += self.weight[b] * room / self.p[b]
                    break
        total = float(total) * (1.0 + 1e-12)
        self._pickup_memo[key] = total
        return total

    def loss_bound(self, avail) -> float:
        """Admissible loss bound: least dissipation of any flow that delivers
        the loads over the available lines.

        Every radial completion is one such flow, and its real loss is no
        smaller because losses add to line flows and voltages stay at or
        below 1 pu with non-negative loads. The minimum is the electrical
        energy of the resistive network with all roots grounded.
        """
        if not self.bound_enabled:
            return 0.0
        m = self._n_nonroot
        if m == 0:
            return 0.0
        sel = (np.asarray(avail, dtype=bool) & self._bound_line_ok).astype(np.uint8)
        if self._shed_target is not None:
            diag = kernels.flow_resistance_diag(m, self._pos_from, self._pos_to, self._g, sel)
            return self._covering_bound(diag) if len(diag) else 0.0
        energy = kernels.flow_energy(
            m, self._pos_from, self._pos_to, self._g, sel, self._bound_rhs_p, self._bound_rhs_q
        )
        if not math.isfinite(energy) or energy < 0.0:
            return 0.0
        return energy * (1.0 - 1e-9)

    def _covering_bound(self, resistance_diag) -> float:
        """Loss bound when only some loads are picked up.

        Serving a set S costs at least the sum over S of each load's
        stand-alone loss ``|s_i|^2 R_ii`` (the cross terms are non-negative),
        and S must carry the target weight: a fractional covering problem.
        """
        cost = self._bound_s2 * resistance_diag[self._bound_items]
        w = self._bound_w
        order = np.lexsort((np.arange(len(w)), cost / w))
        need = self._shed_target
        total = 0.0
        for j in order:
            if need <= WEIGHT_TOL:
                break
            take = min(1.0, need / w[j])
            total += take * cost[j]
            need -= take * w[j]
        return max(0.0, total * (1.0 - 1e-9))

    def set_bound_loads(self, enabled: bool, shed_target: float | None = None) -> None:
        """Enable the loss bound; ``shed_target`` is the weight that must be
        picked up when not every priority load can be."""
        ok = enabled and bool((self.p >= 0).all()) and self.monotone
        self.bound_enabled = ok
        self._shed_target = shed_target
        if not hasattr(self, "_pos"):
            pos = np.full(len(self.p), -1, dtype=np.int64)
            nonroot = np.flatnonzero(~self.is_root)
            pos[nonroot] = np.arange(len(nonroot))
            self._pos = pos
            self._nonroot = nonroot
            self._n_nonroot = len(nonroot)
            self._pos_from = pos[self.line_from]
            self._pos_to = pos[self.line_to]
            # zero resistance would be infinite conductance; a huge finite one keeps the bound valid
            self._g = 1.0 / np.maximum(self.r, 1e-9)
            self._bound_line_ok = (self._pos_from >= 0) | (self._pos_to >= 0)
        self._bound_rhs_p = np.ascontiguousarray(self.p_serve[self._nonroot], dtype=np.float64)
        self._bound_rhs_q = np.ascontiguousarray(self.q_serve[self._nonroot], dtype=np.float64)
        if shed_target is not None:
            served_root = float(self.weight[self.mandatory & self.is_root].sum())
            self._shed_target = shed_target - served_root
            nr_mand = self.mandatory[self._nonroot] & (self.weight[self._nonroot] > 0)
            self._bound_items = np.flatnonzero(nr_mand)
            idx = self._nonroot[self._bound_items]
            self._bound_s2 = self.p[idx] ** 2 + self.q[idx] ** 2
            self._bound_w = self.weight[idx]


# ---------------------------------------------------------------------------
# branch and bound


class _BranchAndBound:
    def __init__(self, network: Network, constraint_set: str, evaluator: _Evaluator, *,
                 max_nodes: int | None, keep_log: bool):
        self.network = network
        self.constraint_set = constraint_set
        self.ev = evaluator
        self.prop = Propagator(network, _search_model(network, constraint_set), structural=constraint_set != "st")
        self.max_nodes = max_nodes
        self.keep_log = keep_log

    def search(self, *, leaf_value, bound, prune):
        """Depth-first search; ``leaf_value(vec)`` returns a comparable score or
        None, ``bound(avail)`` an optimistic score, ``prune(bound)`` decides.

        After a capped search ``open_bounds`` holds the parent bound of every
        unexplored node (None for the root), so callers can still state how
        far the incumbent may be from optimal.
        """
        a_idx = self.prop.a_idx
        log: list[NodeRecord] = []
        nodes = 0
        capped = False
        lb, ub = self.prop.initial()
        stack = [(lb, ub, 0, None, None)]
        self.open_bounds: list[float | None] = []
        while stack:
            if self.max_nodes is not None and nodes >= self.max_nodes:
                capped = True
                self.open_bounds = [entry[4] for entry in stack]
                break
            lb, ub, depth, branch, _ = stack.pop()
            nodes += 1
            if branch is not None:
                k, val = branch
                j = a_idx[k]
                if val:
                    lb[j] = 1.0
                else:
                    ub[j] = 0.0
            fixed_before = int(np.count_nonzero(lb[a_idx] == ub[a_idx]))
            ok = self.prop.run(lb, ub)
            a_lb = lb[a_idx]
            a_ub = ub[a_idx]
            n_fixed = int(np.count_nonzero(a_lb == a_ub))
            n_prop = n_fixed - fixed_before
            if not ok:
                if self.keep_log:
                    log.append(NodeRecord(depth, n_fixed, n_prop, math.nan, "infeasible"))
                continue
            bnd = bound(a_ub > 0.5)
            if prune(bnd):
                if self.keep_log:
                    log.append(NodeRecord(depth, n_fixed, n_prop, bnd, "bound"))
                continue
            free = np.flatnonzero(a_lb != a_ub)
            if len(free) == 0:
                vec = tuple(int(v) for v in a_lb)
                accepted = leaf_value(vec)
                if self.keep_log:
                    log.append(NodeRecord(depth, n_fixed, n_prop, bnd, "leaf" if accepted else "leaf-rejected"))
                continue
            if self.keep_log:
                log.append(NodeRecord(depth, n_fixed, n_prop, bnd, "branched"))
            k = int(free[0])
            stack.append((lb.copy(), ub.copy(), depth + 1, (k, 0), bnd))
            stack.append((lb, ub, depth + 1, (k, 1), bnd))
        return nodes, capped, log

    def leaf_structure_ok(self, vec) -> bool:
        # flow-based leaves are radial by construction: every bus reaches a
        # root and the edge count holds
        if self.constraint_set == "st":
            return st_feasible(self.network, vec)[0]
        return True


# ---------------------------------------------------------------------------
# public solvers


def _assignment(full: Network, sub: Network, vec, served_idx, *, pickup: bool) -> TopologyAssignment:
    status = {lid: 0 for lid in full.line_ids}
    for lid, v in zip(sub.line_ids, vec):
        status[lid] = int(v)
    load_pickup = None
    if pickup:
        served_ids = {sub.bus_ids[i] for i in served_idx}
        load_pickup = {b.id: int(b.id in served_ids) for b in full.buses if b.has_load}
    return TopologyAssignment(status, load_pickup=load_pickup)


def _is_radial(network: Network, a: TopologyAssignment, dark) -> bool:
    if dark:
        sub, _ = energized_subnetwork(network)
        return check_radial(sub, {lid: a.a[lid] for lid in sub.line_ids}).is_radial
    return check_radial(network, a.a).is_radial


def reconfigure(network: Network, constraint_set: str = "scf-st", strategy: str = "bnb", *,
                check_limits: bool = True, max_nodes: int | None = None, keep_log: bool = True,
                forest_cap: int = MAX_FORESTS) -> SolveOutcome:
    """Minimum-loss radial topology.

    The ``st`` set may return a non-radial optimum whose rootless
    components are scored by the lossless capacity surrogate.
    """
    cs = normalize_set_name(constraint_set)
    if strategy not in STRATEGIES:
        raise OptimizationError(f"unknown strategy {strategy!r}")
    if network.faulted_lines:
        raise OptimizationError("reconfiguration expects a network without faults; use restore")
    ev = _Evaluator(network, check_limits=check_limits, pickup=False)
    ev.set_bound_loads(cs != "st")
    best = {"loss": math.inf, "vec": None, "served": ()}

    def offer(vec, res):
        if res is None:
            return False
        _, loss, served = res
        if _better_loss(loss, vec, best["loss"], best["vec"]):
            best.update(loss=loss, vec=tuple(vec), served=served)
        return True

    if strategy == "enumerate":
        candidates = _candidates(network, cs, forest_cap)
        for vec in candidates:
            offer(vec, ev.evaluate(np.asarray(vec, dtype=np.uint8)))
        nodes, proof, log = len(candidates), EXHAUSTIVE, []
        floor = best["loss"]
    else:
        bb = _BranchAndBound(network, cs, ev, max_nodes=max_nodes, keep_log=keep_log)

        def leaf(vec):
            if not bb.leaf_structure_ok(vec):
                return False
            return offer(vec, ev.evaluate(np.asarray(vec, dtype=np.uint8)))

        def prune(bnd):
            if best["vec"] is None:
                return False
            return bnd > best["loss"] + TIE_RTOL * max(abs(best["loss"]), 1e-300)

        leaf(_seed_forest(network))
        nodes, capped, log = bb.search(leaf_value=leaf, bound=ev.loss_bound, prune=prune)
        proof = NODE_CAPPED if capped else BOUND_CLOSED
        floor = _loss_floor(bb, capped, best["loss"])
    if best["vec"] is None:
        raise OptimizationError("no feasible radial topology within limits")
    assignment = _assignment(network, network, best["vec"], best["served"], pickup=False)
    return SolveOutcome(
        best_assignment=assignment,
        objective=best["loss"],
        nodes_explored=nodes,
        proof=proof,
        log=log,
        problem="reconfig",
        constraint_set=cs,
        strategy=strategy,
        loss=best["loss"],
        is_radial=check_radial(network, assignment.a).is_radial,
        stage_nodes=(nodes,),
        evaluated=ev.evaluations,
        stage_capped=(proof == NODE_CAPPED,),
        loss_lower_bound=floor,
    )


def _candidates(network: Network, cs: str, cap: int) -> list[tuple[int, ...]]:
    if cs == "st":
        return enumerate_feasible(network, "st")
    return [tuple(int(v) for v in row) for row in forest_matrix(network, cap=cap)]


def restore(network: Network, constraint_set: str = "scf-st", strategy: str = "bnb", *,
            check_limits: bool = True, max_nodes: int | None = None, keep_log: bool = True,
            forest_cap: int = MAX_FORESTS) -> SolveOutcome:
    """Maximize weighted picked-up load, then minimize loss among those optima.

    Buses with no healthy path to any root are dark and left out of the
    search. ``objective`` is the first-stage weight and ``loss`` the second
    stage. ``max_nodes`` caps each stage separately.
    """
    cs = normalize_set_name(constraint_set)
    if strategy not in STRATEGIES:
        raise OptimizationError(f"unknown strategy {strategy!r}")
    sub, dark = energized_subnetwork(network)
    ev = _Evaluator(sub, check_limits=check_limits, pickup=True)

    if strategy == "enumerate":
        candidates = _candidates(sub, cs, forest_cap)
        scored = []
        w_star = -math.inf
        for vec in candidates:
            floor = None if w_star == -math.inf else w_star
            res = ev.evaluate(np.asarray(vec, dtype=np.uint8), floor)
            if res is not None:
                scored.append((vec, res))
                w_star = max(w_star, res[0])
        if not scored:
            raise OptimizationError("no feasible topology")
        best_loss, best_vec, best_served = math.inf, None, ()
        for vec, (w, loss, served) in scored:
            if w >= w_star - WEIGHT_TOL and _better_loss(loss, vec, best_loss, best_vec):
                best_loss, best_vec, best_served = loss, vec, served
        stage_nodes = (len(candidates), len(candidates))
        stage_capped = (False, False)
        floor = best_loss
        nodes, proof, log = len(candidates), EXHAUSTIVE, []
    else:
        bb = _BranchAndBound(sub, cs, ev, max_nodes=max_nodes, keep_log=keep_log)
        inc = {"w": -math.inf, "loss": math.inf, "vec": None, "served": ()}

        def leaf1(vec):
            if not bb.leaf_structure_ok(vec):
                return False
            # floor at the incumbent itself so ties are scored once and reused by stage 2
            floor = None if inc["w"] == -math.inf else inc["w"]
            res = ev.evaluate(np.asarray(vec, dtype=np.uint8), floor)
            if res is None:
                return False
            w, loss, served = res
            if w > inc["w"] + WEIGHT_TOL or inc["w"] == -math.inf:
                inc.update(w=w, loss=loss, vec=tuple(vec), served=served)
            elif w >= inc["w"] - WEIGHT_TOL and _better_loss(loss, vec, inc["loss"], inc["vec"]):
                inc.update(loss=loss, vec=tuple(vec), served=served)
            return True

        # a cheap feasible start lets stage 1 prune from the first node
        leaf1(_seed_forest(sub))
        upper = ev.total_weight
        n1, capped1, log1 = bb.search(
            leaf_value=leaf1, bound=ev.pickup_bound, prune=lambda ub: ub <= inc["w"] + WEIGHT_TOL
        )
        if inc["w"] == -math.inf:
            raise OptimizationError("no feasible topology")
        w_star = inc["w"]
        if w_star >= upper - WEIGHT_TOL:
            ev.set_bound_loads(cs != "st")
        else:
            ev.set_bound_loads(cs != "st", shed_target=w_star)
        # the stage-1 topology is a valid stage-2 incumbent, which also keeps capped runs feasible
        best = {"loss": inc["loss"], "vec": inc["vec"], "served": inc["served"]}

        def leaf2(vec):
            if not bb.leaf_structure_ok(vec):
                return False
            res = ev.evaluate(np.asarray(vec, dtype=np.uint8), w_star)
            if res is None or res[0] < w_star - WEIGHT_TOL:
                return False
            if _better_loss(res[1], vec, best["loss"], best["vec"]):
                best.update(loss=res[1], vec=tuple(vec), served=res[2])
            return True

        def prune2(bnd):
            if best["vec"] is None:
                return False
            return bnd > best["loss"] + TIE_RTOL * max(abs(best["loss"]), 1e-300)

        n2, capped2, log2 = bb.search(leaf_value=leaf2, bound=ev.loss_bound, prune=prune2)
        best_loss, best_vec, best_served = best["loss"], best["vec"], best["served"]
        stage_nodes = (n1, n2)
        stage_capped = (capped1, capped2)
        floor = _loss_floor(bb, capped2, best_loss)
        nodes = n1 + n2
        proof = NODE_CAPPED if (capped1 or capped2) else BOUND_CLOSED
        log = log1 + log2
    if best_vec is None:
        raise OptimizationError("no feasible topology reaches the first-stage optimum")
    assignment = _assignment(network, sub, best_vec, best_served, pickup=True)
    return SolveOutcome(
        best_assignment=assignment,
        objective=w_star,
        nodes_explored=nodes,
        proof=proof,
        log=log,
        problem="restore",
        constraint_set=cs,
        strategy=strategy,
        loss=best_loss,
        restored_weight=w_star,
        is_radial=_is_radial(network, assignment, dark),
        stage_nodes=stage_nodes,
        stage_capped=stage_capped,
        loss_lower_bound=floor,
        evaluated=ev.evaluations,
    )


# ---------------------------------------------------------------------------
# propagation demo and search effort


@dataclass(frozen=True)
class PropagationResult:
    constraint_set: str
    feasible: bool
    domains: dict[int, tuple[int, int]]
    residual_lines: tuple[int, ...]
    residual_rhs: int

    def residual_text(self) -> str:
        if not self.residual_lines:
            return f"0 = {self.residual_rhs}"
        return " + ".join(f"a_{lid}" for lid in self.residual_lines) + f" = {self.residual_rhs}"


def propagation_demo(network: Network, fixings: dict[int, int],
                     constraint_sets=("scf0", "scf-st")) -> dict[str, PropagationResult]:
    """Domains of the unfixed line statuses after propagating the fixings
    through each set's own rows.

    The residual is the edge count restricted to lines still free, which
    holds under every set because the parent-child rows imply it.
    """
    out = {}
    for name in constraint_sets:
        cs = normalize_set_name(name)
        model = build_constraint_set(network, cs)
        prop = Propagator(network, model, structural=False)
        lb, ub = prop.initial()
        for lid, val in fixings.items():
            j = prop.a_idx[network.line_index[lid]]
            lb[j] = ub[j] = float(val)
        ok = prop.run(lb, ub)
        domains = {}
        free_lines = []
        fixed_closed = 0
        for k, lid in enumerate(network.line_ids):
            lo, hi = int(round(lb[prop.a_idx[k]])), int(round(ub[prop.a_idx[k]]))
            if lid in fixings:
                fixed_closed += int(fixings[lid])
                continue
            domains[lid] = (lo, hi)
            if lo == hi:
                fixed_closed += lo
            else:
                free_lines.append(lid)
        rhs = network.n_buses - network.n_roots - fixed_closed
        out[cs] = PropagationResult(cs, bool(ok), domains if ok else {}, tuple(free_lines) if ok else (), rhs)
    return out


@dataclass
class SearchEffort:
    problem: str
    nodes_scf0: int
    nodes_scf_st: int
    outcome_scf0: SolveOutcome
    outcome_scf_st: SolveOutcome

    @property
    def objectives_agree(self) -> bool:
        a, b = self.outcome_scf0, self.outcome_scf_st
        return math.isclose(a.objective, b.objective, rel_tol=1e-9, abs_tol=1e-12) and math.isclose(
            a.loss, b.loss, rel_tol=1e-9, abs_tol=1e-12
        )


def compare_search_effort(network: Network, problem: str = "reconfig", **kw) -> SearchEffort:
    """Explored-node counts of the flow-based sets under the same branching order."""
    if problem not in PROBLEMS:
        raise OptimizationError(f"unknown problem {problem!r}")
    solve = reconfigure if problem == "reconfig" else restore
    o0 = solve(network, "scf0", "bnb", **kw)
    o1 = solve(network, "scf-st", "bnb", **kw)
    return SearchEffort(problem, o0.nodes_explored, o1.nodes_explored, o0, o1)
