"""Distribution network data model and the JSON network format."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

__all__ = [
    "Bus",
    "Line",
    "Network",
    "TopologyAssignment",
    "NetworkError",
    "NetworkFormatError",
    "load_network",
    "save_network",
    "network_from_dict",
    "network_to_dict",
    "load_assignment",
    "save_assignment",
    "degree",
    "incident_lines",
    "components_under",
]

BUS_FIELDS = ("id", "p_load", "q_load", "weight", "is_source", "p_gen_max", "q_gen_max", "v_min", "v_max")
LINE_FIELDS = ("id", "from_bus", "to_bus", "r", "x", "i_max")


class NetworkError(ValueError):
    """A network violates one of its structural invariants."""


class NetworkFormatError(NetworkError):
    """A network or assignment document could not be parsed."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


@dataclass(frozen=True)
class Bus:
    id: int
    p_load: float = 0.0
    q_load: float = 0.0
    weight: float = 1.0
    is_source: bool = False
    p_gen_max: float = 0.0
    q_gen_max: float = 0.0
    v_min: float = 0.9
    v_max: float = 1.1

    def __post_init__(self):
        if not isinstance(self.id, int) or isinstance(self.id, bool) or self.id <= 0:
            raise NetworkError(f"bus id must be a positive integer, got {self.id!r}")
        if self.p_load < 0:
            raise NetworkError(f"bus {self.id}: p_load must be >= 0")
        if self.weight < 0:
            raise NetworkError(f"bus {self.id}: weight must be >= 0")
        if not self.v_min < self.v_max:
            raise NetworkError(f"bus {self.id}: v_min must be < v_max")
        if not self.is_source and (self.p_gen_max != 0 or self.q_gen_max != 0):
            raise NetworkError(f"bus {self.id}: non-source bus has generation capacity")

    @property
    def has_load(self) -> bool:
        return self.p_load > 0 or self.q_load != 0


@dataclass(frozen=True)
class Line:
    """A switchable line. ``(from_bus, to_bus)`` is the reference direction."""

    id: int
    from_bus: int
    to_bus: int
    r: float = 0.0
    x: float = 0.0
    i_max: float = math.inf

    def __post_init__(self):
        if not isinstance(self.id, int) or isinstance(self.id, bool) or self.id <= 0:
            raise NetworkError(f"line id must be a positive integer, got {self.id!r}")
        if self.from_bus == self.to_bus:
            raise NetworkError(f"line {self.id}: from_bus == to_bus")
        if self.r < 0 or self.x < 0:
            raise NetworkError(f"line {self.id}: impedance must be >= 0")

    def other(self, bus_id: int) -> int:
        if bus_id == self.from_bus:
            return self.to_bus
        if bus_id == self.to_bus:
            return self.from_bus
        raise NetworkError(f"bus {bus_id} is not an endpoint of line {self.id}")


@dataclass(frozen=True)
class Network:
    """Immutable distribution network ``<N, E>`` with sources and designated roots.

    Buses and lines are stored sorted by id. Faulted lines stay in the line set
    and are forced open by every consumer.
    """

    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    roots: frozenset[int]
    faulted_lines: frozenset[int] = frozenset()
    name: str = ""
    check_connected: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(sorted(self.buses, key=lambda b: b.id)))
        object.__setattr__(self, "lines", tuple(sorted(self.lines, key=lambda l: l.id)))
        object.__setattr__(self, "roots", frozenset(self.roots))
        object.__setattr__(self, "faulted_lines", frozenset(self.faulted_lines))
        self._validate()

    def _validate(self):
        seen: set[int] = set()
        for b in self.buses:
            if b.id in seen:
                raise NetworkError(f"duplicate bus id {b.id}")
            seen.add(b.id)
        if not self.buses:
            raise NetworkError("network has no buses")
        line_ids: set[int] = set()
        for l in self.lines:
            if l.id in line_ids:
                raise NetworkError(f"duplicate line id {l.id}")
            line_ids.add(l.id)
            for end in (l.from_bus, l.to_bus):
                if end not in seen:
                    raise NetworkError(f"line {l.id}: unknown endpoint bus {end}")
        if not self.roots:
            raise NetworkError("root set is empty")
        for r in sorted(self.roots):
            if r not in seen:
                raise NetworkError(f"root {r} is not a bus")
            if not self.bus(r).is_source:
                raise NetworkError(f"root {r} is not a source (roots must be a subset of sources)")
        for f in sorted(self.faulted_lines):
            if f not in line_ids:
                raise NetworkError(f"faulted line {f} is not a line")
        if self.check_connected and len(_components(self, [l.id for l in self.lines])) != 1:
            raise NetworkError("underlying graph is not connected")

    # -- lookups -----------------------------------------------------------

    @cached_property
    def _bus_map(self) -> dict[int, Bus]:
        return {b.id: b for b in self.buses}

    @cached_property
    def _line_map(self) -> dict[int, Line]:
        return {l.id: l for l in self.lines}

    @cached_property
    def bus_ids(self) -> tuple[int, ...]:
        return tuple(b.id for b in self.buses)

    @cached_property
    def line_ids(self) -> tuple[int, ...]:
        return tuple(l.id for l in self.lines)

    @cached_property
    def bus_index(self) -> dict[int, int]:
        return {b: i for i, b in enumerate(self.bus_ids)}

    @cached_property
    def line_index(self) -> dict[int, int]:
        return {l: i for i, l in enumerate(self.line_ids)}

    @cached_property
    def adjacency(self) -> dict[int, tuple[int, ...]]:
        """bus id -> incident line ids, ascending."""
        adj: dict[int, list[int]] = {b: [] for b in self.bus_ids}
        for l in self.lines:
            adj[l.from_bus].append(l.id)
            adj[l.to_bus].append(l.id)
        return {b: tuple(sorted(v)) for b, v in adj.items()}

    @cached_property
    def sources(self) -> frozenset[int]:
        return frozenset(b.id for b in self.buses if b.is_source)

    @cached_property
    def non_roots(self) -> tuple[int, ...]:
        return tuple(b for b in self.bus_ids if b not in self.roots)

    def bus(self, bus_id: int) -> Bus:
        try:
            return self._bus_map[bus_id]
        except KeyError:
            raise NetworkError(f"unknown bus id {bus_id}") from None

    def line(self, line_id: int) -> Line:
        try:
            return self._line_map[line_id]
        except KeyError:
            raise NetworkError(f"unknown line id {line_id}") from None

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_lines(self) -> int:
        return len(self.lines)

    @property
    def n_roots(self) -> int:
        return len(self.roots)

    # -- assignment helpers ------------------------------------------------

    def a_vector(self, a) -> tuple[int, ...]:
        """Normalize an assignment to a 0/1 tuple aligned with ``self.lines``.

        Accepts a :class:`TopologyAssignment`, a mapping line id -> 0/1, or an
        already aligned sequence.
        """
        if isinstance(a, TopologyAssignment):
            a = a.a
        if isinstance(a, Mapping):
            missing = [lid for lid in self.line_ids if lid not in a]
            if missing:
                raise NetworkError(f"assignment is missing line(s) {missing}")
            extra = sorted(set(a) - set(self.line_ids))
            if extra:
                raise NetworkError(f"assignment names unknown line(s) {extra}")
            vec = tuple(int(a[lid]) for lid in self.line_ids)
        else:
            vec = tuple(int(v) for v in a)
            if len(vec) != self.n_lines:
                raise NetworkError(f"assignment has {len(vec)} entries, network has {self.n_lines} lines")
        if any(v not in (0, 1) for v in vec):
            raise NetworkError("line statuses must be 0 or 1")
        return vec

    def closed_lines(self, a) -> list[int]:
        vec = self.a_vector(a)
        return [lid for lid, v in zip(self.line_ids, vec) if v]

    def assignment(self, closed: Iterable[int]) -> dict[int, int]:
        closed = set(closed)
        unknown = closed - set(self.line_ids)
        if unknown:
            raise NetworkError(f"unknown line(s) {sorted(unknown)}")
        return {lid: int(lid in closed) for lid in self.line_ids}

    def with_changes(self, **changes) -> "Network":
        kwargs = dict(
            buses=self.buses,
            lines=self.lines,
            roots=self.roots,
            faulted_lines=self.faulted_lines,
            name=self.name,
            check_connected=self.check_connected,
        )
        kwargs.update(changes)
        return Network(**kwargs)


@dataclass(frozen=True)
class TopologyAssignment:
    """Line statuses plus optional parent orientation, fictitious flows and pickups.

    ``b`` is keyed by ``(line id, child bus)``: ``b[(l, i)] == 1`` when the far
    end of line ``l`` is the parent of bus ``i``.
    """

    a: Mapping[int, int]
    b: Mapping[tuple[int, int], int] | None = None
    f: Mapping[int, float] | None = None
    load_pickup: Mapping[int, int] | None = None

    def closed(self) -> list[int]:
        return sorted(l for l, v in self.a.items() if v)


def _components(network: Network, closed: Sequence[int]) -> list[list[int]]:
    adj: dict[int, list[int]] = {b: [] for b in network.bus_ids}
    for lid in closed:
        l = network.line(lid)
        adj[l.from_bus].append(l.to_bus)
        adj[l.to_bus].append(l.from_bus)
    seen: set[int] = set()
    comps = []
    for start in network.bus_ids:
        if start in seen:
            continue
        seen.add(start)
        comp = [start]
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    comp.append(v)
                    queue.append(v)
        comps.append(sorted(comp))
    return comps


def degree(network: Network, bus_id: int) -> int:
    network.bus(bus_id)
    return len(network.adjacency[bus_id])


def incident_lines(network: Network, bus_id: int) -> list[int]:
    network.bus(bus_id)
    return list(network.adjacency[bus_id])


def components_under(network: Network, assignment) -> list[list[int]]:
    """Partition of the buses induced by the closed lines, ordered by smallest bus id."""
    return _components(network, network.closed_lines(assignment))


# -- file format -----------------------------------------------------------


def _num(value, location: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise NetworkFormatError(f"expected a number, got {value!r}", location)
    return float(value)


def _int(value, location: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise NetworkFormatError(f"expected an integer, got {value!r}", location)
    return value


def network_from_dict(doc: Mapping, *, check_connected: bool = True) -> Network:
    if not isinstance(doc, Mapping):
        raise NetworkFormatError("top level must be an object")
    for key in ("buses", "lines", "roots"):
        if key not in doc:
            raise NetworkFormatError(f"missing key {key!r}")
    unknown = set(doc) - {"name", "buses", "lines", "roots", "faulted_lines"}
    if unknown:
        raise NetworkFormatError(f"unknown top-level key(s) {sorted(unknown)}")

    buses = []
    for i, raw in enumerate(doc["buses"]):
        loc = f"buses[{i}]"
        if not isinstance(raw, Mapping):
            raise NetworkFormatError("expected an object", loc)
        bad = set(raw) - set(BUS_FIELDS)
        if bad:
            raise NetworkFormatError(f"unknown field(s) {sorted(bad)}", loc)
        if "id" not in raw:
            raise NetworkFormatError("missing field 'id'", loc)
        kw = {"id": _int(raw["id"], f"{loc}.id")}
        for name in BUS_FIELDS[1:]:
            if name in raw:
                if name == "is_source":
                    if not isinstance(raw[name], bool):
                        raise NetworkFormatError("expected a boolean", f"{loc}.is_source")
                    kw[name] = raw[name]
                else:
                    kw[name] = _num(raw[name], f"{loc}.{name}")
        try:
            buses.append(Bus(**kw))
        except NetworkError as exc:
            raise NetworkError(f"{loc}: {exc}") from None

    lines = []
    for i, raw in enumerate(doc["lines"]):
        loc = f"lines[{i}]"
        if not isinstance(raw, Mapping):
            raise NetworkFormatError("expected an object", loc)
        bad = set(raw) - set(LINE_FIELDS)
        if bad:
            raise NetworkFormatError(f"unknown field(s) {sorted(bad)}", loc)
        for req in ("id", "from_bus", "to_bus"):
            if req not in raw:
                raise NetworkFormatError(f"missing field {req!r}", loc)
        kw = {k: _int(raw[k], f"{loc}.{k}") for k in ("id", "from_bus", "to_bus")}
        for name in ("r", "x"):
            if name in raw:
                kw[name] = _num(raw[name], f"{loc}.{name}")
        if raw.get("i_max") is not None:
            kw["i_max"] = _num(raw["i_max"], f"{loc}.i_max")
        try:
            lines.append(Line(**kw))
        except NetworkError as exc:
            raise NetworkError(f"{loc}: {exc}") from None

    roots = [_int(r, f"roots[{i}]") for i, r in enumerate(doc["roots"])]
    faulted = [_int(f, f"faulted_lines[{i}]") for i, f in enumerate(doc.get("faulted_lines", []))]
    return Network(
        buses=tuple(buses),
        lines=tuple(lines),
        roots=frozenset(roots),
        faulted_lines=frozenset(faulted),
        name=str(doc.get("name", "")),
        check_connected=check_connected,
    )


def network_to_dict(network: Network) -> dict:
    """Canonical document: fixed field order, defaults written out."""
    buses = []
    for b in network.buses:
        buses.append({name: getattr(b, name) for name in BUS_FIELDS})
    lines = []
    for l in network.lines:
        row = {name: getattr(l, name) for name in LINE_FIELDS}
        if math.isinf(row["i_max"]):
            row["i_max"] = None
        lines.append(row)
    return {
        "name": network.name,
        "buses": buses,
        "lines": lines,
        "roots": sorted(network.roots),
        "faulted_lines": sorted(network.faulted_lines),
    }


def dumps_network(network: Network) -> str:
    return json.dumps(network_to_dict(network), indent=2) + "\n"


def load_network(path, *, check_connected: bool = True) -> Network:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from None
    return network_from_dict(doc, check_connected=check_connected)


def save_network(network: Network, path) -> None:
    Path(path).write_text(dumps_network(network))


# -- assignment documents ----------------------------------------------------


def load_assignment(path, network: Network | None = None) -> TopologyAssignment:
    """Read ``{"a": {"<line>": 0|1, ...}, "load_pickup": {...}}``.

    ``"closed": [line ids]`` is accepted in place of ``"a"`` when ``network``
    is given to complete it.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from None
    if not isinstance(doc, Mapping):
        raise NetworkFormatError("top level must be an object", str(path))
    if "a" in doc:
        a = {int(k): _int(v, f"a[{k}]") for k, v in doc["a"].items()}
    elif "closed" in doc:
        if network is None:
            raise NetworkFormatError("'closed' form needs the network", str(path))
        a = network.assignment(_int(l, "closed[]") for l in doc["closed"])
    else:
        raise NetworkFormatError("assignment needs 'a' or 'closed'", str(path))
    pickup = doc.get("load_pickup")
    if pickup is not None:
        pickup = {int(k): _int(v, f"load_pickup[{k}]") for k, v in pickup.items()}
    return TopologyAssignment(a=a, load_pickup=pickup)


def save_assignment(assignment: TopologyAssignment, path) -> None:
    doc: dict = {"a": {str(k): int(v) for k, v in sorted(assignment.a.items())}}
    if assignment.load_pickup is not None:
        doc["load_pickup"] = {str(k): int(v) for k, v in sorted(assignment.load_pickup.items())}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
