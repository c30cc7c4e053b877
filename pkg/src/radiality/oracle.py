"""Brute-force ground truth on small networks.

Assignments are enumerated as integers with line ``k`` (ascending id) on bit
``k``; "ascending order" below means ascending integer value.
"""

from __future__ import annotations

import itertools
from collections import deque

import numpy as np

from . import kernels
from .constraints import normalize_set_name
from .network import Network
from .verify import UnionFind, check_radial, scf_feasible, st_feasible

__all__ = [
    "EnumerationError",
    "MAX_ENUM_LINES",
    "MAX_FORESTS",
    "iterate_assignments",
    "enumerate_feasible",
    "enumerate_rooted_spanning_forests",
    "find_st_counterexample",
    "st_feasible_bruteforce",
    "is_feasible",
    "assignment_key",
]

MAX_ENUM_LINES = 24
MAX_FORESTS = 10**6


class EnumerationError(RuntimeError):
    pass


def assignment_key(vec) -> int:
    return sum(1 << k for k, v in enumerate(vec) if v)


def iterate_assignments(n_lines: int):
    for code in range(1 << n_lines):
        yield tuple((code >> k) & 1 for k in range(n_lines))


def is_feasible(network: Network, vec, constraint_set: str) -> bool:
    """Integral feasibility of line statuses under a constraint set."""
    cs = normalize_set_name(constraint_set)
    if cs == "st":
        return st_feasible(network, vec)[0]
    edge_ok = sum(vec) == network.n_buses - network.n_roots
    if cs == "scf0":
        return edge_ok and scf_feasible(network, vec)[0]
    return st_feasible(network, vec)[0] and scf_feasible(network, vec)[0]


def enumerate_feasible(network: Network, constraint_set: str, *, max_lines: int = MAX_ENUM_LINES) -> list[tuple[int, ...]]:
    """Every 0/1 line assignment feasible for the set, in ascending order."""
    if network.n_lines > max_lines:
        raise EnumerationError(f"{network.n_lines} lines exceed the enumeration guard of {max_lines}")
    faulted = [k for k, lid in enumerate(network.line_ids) if lid in network.faulted_lines]
    out = []
    for vec in iterate_assignments(network.n_lines):
        if any(vec[k] for k in faulted):
            continue
        if is_feasible(network, vec, constraint_set):
            out.append(vec)
    return out


def _forest_arrays(network: Network):
    bi = network.bus_index
    lf = np.array([bi[l.from_bus] for l in network.lines], dtype=np.int64)
    lt = np.array([bi[l.to_bus] for l in network.lines], dtype=np.int64)
    allowed = np.array([l.id not in network.faulted_lines for l in network.lines], dtype=np.uint8)
    is_root = np.array([b in network.roots for b in network.bus_ids], dtype=np.uint8)
    return lf, lt, allowed, is_root


def forest_matrix(network: Network, *, cap: int = MAX_FORESTS) -> np.ndarray:
    """Rooted spanning forests as a ``(count, n_lines)`` uint8 matrix, backtracking order."""
    lf, lt, allowed, is_root = _forest_arrays(network)
    forests, complete = kernels.enumerate_forests(network.n_buses, lf, lt, allowed, is_root, cap)
    if not complete:
        raise EnumerationError(f"more than {cap} rooted spanning forests")
    return forests


def enumerate_rooted_spanning_forests(network: Network, *, cap: int = MAX_FORESTS) -> list[tuple[int, ...]]:
    """All line assignments that are forests with exactly one root per tree.

    Generated by include/exclude backtracking with union-find, never by
    scanning all ``2^|E|`` assignments. Returned in ascending order.
    """
    forests = forest_matrix(network, cap=cap)
    rows = [tuple(int(v) for v in row) for row in forests]
    rows.sort(key=assignment_key)
    return rows


def st_feasible_bruteforce(network: Network, vec, *, max_closed: int = 16) -> bool:
    """Search all parent orientations of the closed lines directly."""
    closed = [lid for lid, v in zip(network.line_ids, vec) if v]
    if any(lid in network.faulted_lines for lid in closed):
        return False
    if len(closed) > max_closed:
        raise EnumerationError("too many closed lines for brute force over parent variables")
    lines = [network.line(lid) for lid in closed]
    for bits in itertools.product((0, 1), repeat=len(lines)):
        parents = {b: 0 for b in network.bus_ids}
        for l, bit in zip(lines, bits):
            child = l.to_bus if bit else l.from_bus
            parents[child] += 1
        if all(parents[r] == 0 for r in network.roots) and all(parents[i] == 1 for i in network.non_roots):
            return True
    return False


def find_st_counterexample(network: Network, *, max_lines: int = MAX_ENUM_LINES) -> tuple[int, ...] | None:
    """An assignment satisfying the parent-child constraints that is not radial.

    Small networks are scanned exhaustively in ascending order. Larger ones
    are searched structurally: for each rootless simple cycle (in ascending
    order of its sorted line ids) the cycle plus the buses it cuts off from
    every root form a pseudo-root, and the rest is covered by a
    breadth-first forest grown from the roots.
    """
    if network.n_lines <= max_lines:
        faulted = [k for k, lid in enumerate(network.line_ids) if lid in network.faulted_lines]
        for vec in iterate_assignments(network.n_lines):
            if any(vec[k] for k in faulted):
                continue
            if sum(vec) != network.n_buses - network.n_roots:
                continue
            if st_feasible(network, vec)[0] and not check_radial(network, vec).is_radial:
                return vec
        return None
    for cycle in rootless_cycles(network):
        vec = pseudo_root_assignment(network, cycle)
        if vec is not None:
            return vec
    return None


def rootless_cycles(network: Network, *, usable=None, max_basis: int = 16) -> list[tuple[int, ...]]:
    """Simple cycles avoiding root buses, as sorted line-id tuples in ascending order.

    Built from symmetric differences of a fundamental cycle basis, so the
    count is bounded by ``2^rank``.
    """
    usable = set(network.line_ids) - set(network.faulted_lines) if usable is None else set(usable)
    lines = [network.line(lid) for lid in sorted(usable)]
    lines = [l for l in lines if l.from_bus not in network.roots and l.to_bus not in network.roots]
    uf = UnionFind(network.bus_ids)
    tree_adj: dict[int, list[tuple[int, int]]] = {b: [] for b in network.bus_ids}
    chords = []
    for l in lines:
        if uf.union(l.from_bus, l.to_bus):
            tree_adj[l.from_bus].append((l.to_bus, l.id))
            tree_adj[l.to_bus].append((l.from_bus, l.id))
        else:
            chords.append(l)
    if len(chords) > max_basis:
        raise EnumerationError(f"cycle space of rank {len(chords)} is too large to scan")
    basis = []
    for l in chords:
        path = _path(tree_adj, l.from_bus, l.to_bus)
        basis.append(frozenset(path + [l.id]))
    cycles = set()
    for mask in range(1, 1 << len(basis)):
        edge_set: frozenset[int] = frozenset()
        for k, cyc in enumerate(basis):
            if mask >> k & 1:
                edge_set = edge_set ^ cyc
        if _is_simple_cycle(network, edge_set):
            cycles.add(tuple(sorted(edge_set)))
    return sorted(cycles)


def _path(tree_adj, src, dst) -> list[int]:
    prev = {src: None}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v, lid in tree_adj[u]:
            if v not in prev:
                prev[v] = (u, lid)
                queue.append(v)
    out = []
    node = dst
    while prev[node] is not None:
        u, lid = prev[node]
        out.append(lid)
        node = u
    return out


def _is_simple_cycle(network: Network, edges) -> bool:
    if not edges:
        return False
    deg: dict[int, int] = {}
    for lid in edges:
        l = network.line(lid)
        deg[l.from_bus] = deg.get(l.from_bus, 0) + 1
        deg[l.to_bus] = deg.get(l.to_bus, 0) + 1
    if any(d != 2 for d in deg.values()):
        return False
    return len(edges) == len(deg)  # connected 2-regular graph has |E| == |V|


def pseudo_root_assignment(network: Network, cycle, *, usable=None) -> tuple[int, ...] | None:
    """ST-feasible, non-radial assignment whose only pseudo-root contains ``cycle``.

    Buses that lose every root path once the cycle's buses are removed hang
    off the cycle; the remaining buses get a breadth-first forest from the
    roots. Returns None when that construction does not cover every bus.
    """
    usable = set(network.line_ids) - set(network.faulted_lines) if usable is None else set(usable)
    cyc_buses = {b for lid in cycle for b in (network.line(lid).from_bus, network.line(lid).to_bus)}
    if cyc_buses & network.roots:
        return None
    adj: dict[int, list[tuple[int, int]]] = {b: [] for b in network.bus_ids}
    for lid in sorted(usable):
        l = network.line(lid)
        adj[l.from_bus].append((l.to_bus, lid))
        adj[l.to_bus].append((l.from_bus, lid))

    closed = set(cycle)
    # forest from roots that never enters the cycle's buses
    seen = set(network.roots)
    queue = deque(sorted(network.roots))
    while queue:
        u = queue.popleft()
        for v, lid in adj[u]:
            if v not in seen and v not in cyc_buses:
                seen.add(v)
                closed.add(lid)
                queue.append(v)
    # everything else hangs off the cycle
    seen |= cyc_buses
    queue = deque(sorted(cyc_buses))
    while queue:
        u = queue.popleft()
        for v, lid in adj[u]:
            if v not in seen:
                seen.add(v)
                closed.add(lid)
                queue.append(v)
    if len(seen) != network.n_buses:
        return None
    vec = tuple(int(lid in closed) for lid in network.line_ids)
    if not st_feasible(network, vec)[0] or check_radial(network, vec).is_radial:
        return None
    return vec
