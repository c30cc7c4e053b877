"""Radiality checks: forest structure, pseudo-roots, and constraint-set feasibility."""

from __future__ import annotations

from collections import deque
from dataclasses import asdict, dataclass, field

from .network import Network, NetworkError, TopologyAssignment

__all__ = [
    "UnionFind",
    "Component",
    "ForestReport",
    "check_radial",
    "st_feasible",
    "scf_feasible",
    "check_conditions_3_4",
    "st_structural",
]


class UnionFind:
    def __init__(self, items):
        self.parent = {i: i for i in items}
        self.size = {i: 1 for i in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y) -> bool:
        """Merge the sets of x and y; False if they were already joined."""
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        if self.size[rx] < self.size[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        self.size[rx] += self.size[ry]
        return True


@dataclass(frozen=True)
class Component:
    buses: tuple[int, ...]
    lines: tuple[int, ...]
    roots: tuple[int, ...]
    cycle: tuple[int, ...] = ()

    @property
    def is_tree(self) -> bool:
        return len(self.lines) == len(self.buses) - 1


@dataclass(frozen=True)
class ForestReport:
    components: tuple[Component, ...]
    condition1_ok: bool
    condition2_ok: bool
    is_radial: bool
    pseudo_root_components: tuple[int, ...]
    n_closed: int = 0
    n_required: int = 0
    unreached: tuple[int, ...] = field(default=())

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["components"] = [
            {"buses": list(c.buses), "lines": list(c.lines), "roots": list(c.roots), "cycle": list(c.cycle)}
            for c in self.components
        ]
        doc["pseudo_root_components"] = list(self.pseudo_root_components)
        doc["unreached"] = list(self.unreached)
        return doc


def _check_faults(network: Network, vec) -> None:
    for lid, v in zip(network.line_ids, vec):
        if v and lid in network.faulted_lines:
            raise NetworkError(f"faulted line {lid} is closed")


def _split_components(network: Network, closed: list[int]) -> list[Component]:
    uf = UnionFind(network.bus_ids)
    tree_adj: dict[int, list[tuple[int, int]]] = {b: [] for b in network.bus_ids}
    cycle_of: dict[int, tuple[int, ...]] = {}
    for lid in closed:
        l = network.line(lid)
        ru, rv = uf.find(l.from_bus), uf.find(l.to_bus)
        if ru == rv:
            # first fundamental cycle per component is kept as the witness
            if ru not in cycle_of:
                cycle_of[ru] = tuple(sorted(_tree_path(tree_adj, l.from_bus, l.to_bus) + [lid]))
            continue
        uf.union(l.from_bus, l.to_bus)
        new_root = uf.find(l.from_bus)
        for old in (ru, rv):
            if old in cycle_of and old != new_root:
                cycle_of.setdefault(new_root, cycle_of.pop(old))
        tree_adj[l.from_bus].append((l.to_bus, lid))
        tree_adj[l.to_bus].append((l.from_bus, lid))

    groups: dict[int, list[int]] = {}
    for b in network.bus_ids:
        groups.setdefault(uf.find(b), []).append(b)
    lines_of: dict[int, list[int]] = {}
    for lid in closed:
        lines_of.setdefault(uf.find(network.line(lid).from_bus), []).append(lid)
    comps = []
    for rep, members in sorted(groups.items(), key=lambda kv: min(kv[1])):
        comps.append(
            Component(
                buses=tuple(sorted(members)),
                lines=tuple(sorted(lines_of.get(rep, []))),
                roots=tuple(sorted(b for b in members if b in network.roots)),
                cycle=cycle_of.get(rep, ()),
            )
        )
    return comps


def _tree_path(tree_adj, src: int, dst: int) -> list[int]:
    prev: dict[int, tuple[int, int] | None] = {src: None}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        if u == dst:
            break
        for v, lid in tree_adj[u]:
            if v not in prev:
                prev[v] = (u, lid)
                queue.append(v)
    path = []
    node = dst
    while prev[node] is not None:
        u, lid = prev[node]
        path.append(lid)
        node = u
    return path


def _reachable_from_roots(network: Network, closed: list[int]) -> set[int]:
    adj: dict[int, list[int]] = {b: [] for b in network.bus_ids}
    for lid in closed:
        l = network.line(lid)
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
    return seen


def check_radial(network: Network, assignment) -> ForestReport:
    """Diagnose an assignment against the connectivity and edge-count conditions.

    Condition 1 holds when every non-root bus reaches some root over closed
    lines; condition 2 when exactly ``|N| - |R|`` lines are closed. Together
    they are equivalent to a forest with one root per tree.
    """
    vec = network.a_vector(assignment)
    _check_faults(network, vec)
    closed = [lid for lid, v in zip(network.line_ids, vec) if v]
    comps = _split_components(network, closed)
    reached = _reachable_from_roots(network, closed)
    unreached = tuple(b for b in network.bus_ids if b not in reached)
    required = network.n_buses - network.n_roots
    cond1 = not unreached
    cond2 = len(closed) == required
    radial = cond1 and cond2
    pseudo = tuple(i for i, c in enumerate(comps) if c.cycle and not c.roots)
    if radial:
        assert len(comps) == network.n_roots
        assert all(len(c.roots) == 1 and c.is_tree for c in comps)
    return ForestReport(
        components=tuple(comps),
        condition1_ok=cond1,
        condition2_ok=cond2,
        is_radial=radial,
        pseudo_root_components=pseudo,
        n_closed=len(closed),
        n_required=required,
        unreached=unreached,
    )


def st_structural(network: Network, a) -> bool:
    """Each closed-line component is a rooted tree or a rootless unicyclic graph."""
    closed = network.closed_lines(a)
    for c in _split_components(network, closed):
        n, e, r = len(c.buses), len(c.lines), len(c.roots)
        if not ((r == 1 and e == n - 1) or (r == 0 and e == n)):
            return False
    return True


def st_feasible(network: Network, a) -> tuple[bool, dict[tuple[int, int], int] | None]:
    """Decide whether parent variables ``b`` exist for the line statuses ``a``.

    Returns ``(True, b)`` with ``b`` keyed by ``(line id, child bus)``, or
    ``(False, None)``. Trees are oriented toward their root; a rootless
    unicyclic component orients its cycle circularly and hangs the rest off it.
    """
    vec = network.a_vector(a)
    if any(v and lid in network.faulted_lines for lid, v in zip(network.line_ids, vec)):
        return False, None
    closed = [lid for lid, v in zip(network.line_ids, vec) if v]
    comps = _split_components(network, closed)
    for c in comps:
        n, e, r = len(c.buses), len(c.lines), len(c.roots)
        if not ((r == 1 and e == n - 1) or (r == 0 and e == n)):
            return False, None

    b: dict[tuple[int, int], int] = {}
    for l in network.lines:
        b[(l.id, l.from_bus)] = 0
        b[(l.id, l.to_bus)] = 0
    for c in comps:
        comp_lines = set(c.lines)
        if c.roots:
            seeds = list(c.roots)
            done: set[int] = set()
        else:
            cyc = sorted(c.cycle)
            # walk the cycle from its smallest line so each cycle bus gets one parent
            order = _cycle_order(network, cyc)
            for lid, child in order:
                b[(lid, child)] = 1
            seeds = sorted({bus for lid in cyc for bus in (network.line(lid).from_bus, network.line(lid).to_bus)})
            done = set(cyc)
        seen = set(seeds)
        queue = deque(seeds)
        while queue:
            u = queue.popleft()
            for lid in network.adjacency[u]:
                if lid not in comp_lines or lid in done:
                    continue
                v = network.line(lid).other(u)
                if v in seen:
                    continue
                seen.add(v)
                done.add(lid)
                b[(lid, v)] = 1
                queue.append(v)
    return True, b


def _cycle_order(network: Network, cycle_lines: list[int]) -> list[tuple[int, int]]:
    """Orient a simple cycle: returns (line, child) pairs, child follows the walk."""
    remaining = set(cycle_lines)
    first = network.line(cycle_lines[0])
    start, cur = first.from_bus, first.to_bus
    out = [(first.id, cur)]
    remaining.discard(first.id)
    while remaining:
        nxt = next(l for l in sorted(remaining) if cur in (network.line(l).from_bus, network.line(l).to_bus))
        cur = network.line(nxt).other(cur)
        out.append((nxt, cur))
        remaining.discard(nxt)
    assert cur == start
    return out


def scf_feasible(
    network: Network, a, *, demand: float = 1.0, big_m: float | None = None
) -> tuple[bool, dict[int, float] | None]:
    """Decide the fictitious-flow constraints for fixed line statuses.

    Feasible iff every non-root bus reaches a root over closed lines. The
    witness routes each bus's unit demand along a breadth-first tree grown
    from all roots at once; ``F > 0`` means flow along the line's reference
    direction. Closed lines off the tree carry zero flow.
    """
    big_m = float(network.n_buses) if big_m is None else big_m
    vec = network.a_vector(a)
    if any(v and lid in network.faulted_lines for lid, v in zip(network.line_ids, vec)):
        return False, None
    closed = {lid for lid, v in zip(network.line_ids, vec) if v}

    parent: dict[int, tuple[int, int]] = {}
    order = sorted(network.roots)
    seen = set(order)
    queue = deque(order)
    while queue:
        u = queue.popleft()
        for lid in network.adjacency[u]:
            if lid not in closed:
                continue
            v = network.line(lid).other(u)
            if v not in seen:
                seen.add(v)
                parent[v] = (u, lid)
                order.append(v)
                queue.append(v)
    if len(seen) != network.n_buses:
        return False, None

    sub = {b: (0.0 if b in network.roots else demand) for b in network.bus_ids}
    flow = {lid: 0.0 for lid in network.line_ids}
    for v in reversed(order):
        if v not in parent:
            continue
        u, lid = parent[v]
        line = network.line(lid)
        flow[lid] = sub[v] if line.from_bus == u else -sub[v]
        sub[u] += sub[v]
    if any(abs(f) > big_m for f in flow.values()):
        return False, None
    return True, flow


def check_conditions_3_4(network: Network) -> tuple[bool, bool]:
    """(|S| == |R|, every bus has positive active load)."""
    return len(network.sources) == network.n_roots, all(b.p_load > 0 for b in network.buses)


def as_assignment(network: Network, a) -> TopologyAssignment:
    vec = network.a_vector(a)
    return TopologyAssignment(a=dict(zip(network.line_ids, vec)))
