"""Radiality constraint sets as a solver-agnostic mixed-integer linear model.

Variable names are stable across builders so models compose by union:
``a_{line}`` line status, ``b_{line}_{child}`` parent indicator (the far end
of the line is the parent of ``child``), ``F_{line}`` fictitious flow along the
line's reference direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .network import Network

__all__ = [
    "Variable",
    "Constraint",
    "Objective",
    "LinearModel",
    "ModelSize",
    "ModelError",
    "CONSTRAINT_SETS",
    "build_st",
    "build_edge_count",
    "build_scf",
    "build_scf0",
    "build_scf_st",
    "build_constraint_set",
    "model_size",
    "a_name",
    "b_name",
    "f_name",
]

# Table I counting: which variable roles and row groups belong to radiality.
AUX_ROLES = ("parent", "flow")
EQUATION_GROUPS = ("orient", "one_parent", "edge_count", "flow_balance")
INEQUATION_GROUPS = ("flow_cap",)

CONSTRAINT_SETS = ("st", "scf0", "scf-st")
KNOWN_FORMULATIONS = ("st", "edge_count", "scf", "scf0", "scf-st")


class ModelError(ValueError):
    pass


def a_name(line_id: int) -> str:
    return f"a_{line_id}"


def b_name(line_id: int, child: int) -> str:
    return f"b_{line_id}_{child}"


def f_name(line_id: int) -> str:
    return f"F_{line_id}"


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # "binary" | "continuous"
    lb: float
    ub: float
    role: str = ""

    @property
    def is_integer(self) -> bool:
        return self.kind == "binary"


@dataclass(frozen=True)
class Constraint:
    """One constraint record.

    sense is one of ``=``, ``<=``, ``>=`` (``terms  sense  rhs``), ``range``
    (``lo <= terms <= rhs``) or ``abs`` (``|terms| <= bound_terms + rhs``).
    ``abs`` and ``range`` records are single records here and are expanded
    only where a target format requires it.
    """

    name: str
    terms: tuple[tuple[str, float], ...]
    sense: str
    rhs: float
    lo: float | None = None
    bound_terms: tuple[tuple[str, float], ...] = ()
    group: str = ""

    def expanded(self) -> list[tuple[str, dict[str, float], str, float]]:
        """Rows of the form ``(name, coefs, sense, rhs)`` with sense in =, <=, >=."""
        if self.sense in ("=", "<=", ">="):
            return [(self.name, dict(self.terms), self.sense, self.rhs)]
        if self.sense == "range":
            return [(self.name + "_lo", dict(self.terms), ">=", self.lo), (self.name + "_hi", dict(self.terms), "<=", self.rhs)]
        if self.sense == "abs":
            up: dict[str, float] = {}
            dn: dict[str, float] = {}
            for v, c in self.terms:
                up[v] = up.get(v, 0.0) + c
                dn[v] = dn.get(v, 0.0) - c
            for v, c in self.bound_terms:
                up[v] = up.get(v, 0.0) - c
                dn[v] = dn.get(v, 0.0) - c
            return [(self.name + "_up", up, "<=", self.rhs), (self.name + "_dn", dn, "<=", self.rhs)]
        raise ModelError(f"unknown sense {self.sense!r}")


@dataclass(frozen=True)
class Objective:
    sense: str  # "min" | "max"
    terms: tuple[tuple[str, float], ...] = ()
    constant: float = 0.0


@dataclass(frozen=True)
class LinearModel:
    name: str
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objective: Objective | None = None
    formulation: str | None = None
    constants: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise ModelError(f"duplicate variable name(s) {dup}")
        declared = set(names)
        for c in self.constraints:
            for v, _ in c.terms + c.bound_terms:
                if v not in declared:
                    raise ModelError(f"constraint {c.name} references undeclared variable {v}")
        if self.objective is not None:
            for v, _ in self.objective.terms:
                if v not in declared:
                    raise ModelError(f"objective references undeclared variable {v}")
        cnames = [c.name for c in self.constraints]
        if len(set(cnames)) != len(cnames):
            raise ModelError("duplicate constraint names")

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def var_index(self) -> dict[str, int]:
        return {v.name: i for i, v in enumerate(self.variables)}

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def count(self, sense: str | None = None, group: str | None = None) -> int:
        return sum(
            1 for c in self.constraints if (sense is None or c.sense == sense) and (group is None or c.group == group)
        )

    def with_objective(self, objective: Objective | None) -> "LinearModel":
        return LinearModel(self.name, self.variables, self.constraints, objective, self.formulation, dict(self.constants))

    def row_arrays(self):
        """Expanded rows as CSR arrays for bound propagation.

        Returns ``(indptr, indices, coefs, row_lo, row_hi, var_lb, var_ub, is_int)``.
        """
        index = self.var_index
        indptr = [0]
        indices: list[int] = []
        coefs: list[float] = []
        lo: list[float] = []
        hi: list[float] = []
        for c in self.constraints:
            for _, row, sense, rhs in c.expanded():
                for v, coef in row.items():
                    if coef != 0.0:
                        indices.append(index[v])
                        coefs.append(coef)
                indptr.append(len(indices))
                lo.append(rhs if sense in ("=", ">=") else -math.inf)
                hi.append(rhs if sense in ("=", "<=") else math.inf)
        return (
            np.asarray(indptr, dtype=np.int64),
            np.asarray(indices, dtype=np.int64),
            np.asarray(coefs, dtype=np.float64),
            np.asarray(lo, dtype=np.float64),
            np.asarray(hi, dtype=np.float64),
            np.asarray([v.lb for v in self.variables], dtype=np.float64),
            np.asarray([v.ub for v in self.variables], dtype=np.float64),
            np.asarray([v.is_integer for v in self.variables], dtype=np.uint8),
        )


def merge(name: str, models: Iterable[LinearModel], formulation: str | None = None) -> LinearModel:
    """Union of models; shared variables must agree and keep their tightest bounds."""
    variables: dict[str, Variable] = {}
    constraints: list[Constraint] = []
    seen_rows: set[str] = set()
    constants: dict[str, float] = {}
    for m in models:
        constants.update(m.constants)
        for v in m.variables:
            old = variables.get(v.name)
            if old is None:
                variables[v.name] = v
            else:
                if old.kind != v.kind:
                    raise ModelError(f"variable {v.name} declared with kinds {old.kind} and {v.kind}")
                variables[v.name] = Variable(v.name, v.kind, max(old.lb, v.lb), min(old.ub, v.ub), old.role or v.role)
        for c in m.constraints:
            if c.name in seen_rows:
                raise ModelError(f"constraint name collision: {c.name}")
            seen_rows.add(c.name)
            constraints.append(c)
    return LinearModel(name, tuple(variables.values()), tuple(constraints), None, formulation, constants)


def _status_vars(network: Network) -> list[Variable]:
    return [
        Variable(a_name(l.id), "binary", 0.0, 0.0 if l.id in network.faulted_lines else 1.0, "status")
        for l in network.lines
    ]


def build_st(network: Network) -> LinearModel:
    """Parent-child constraints: each closed line has one parent end, every
    non-root bus exactly one parent, roots none.

    Roots' parent indicators are fixed through bounds rather than rows.
    """
    variables = _status_vars(network)
    constraints = []
    for l in network.lines:
        for child in (l.from_bus, l.to_bus):
            ub = 0.0 if child in network.roots else 1.0
            variables.append(Variable(b_name(l.id, child), "binary", 0.0, ub, "parent"))
        constraints.append(
            Constraint(
                f"orient_{l.id}",
                ((b_name(l.id, l.from_bus), 1.0), (b_name(l.id, l.to_bus), 1.0), (a_name(l.id), -1.0)),
                "=",
                0.0,
                group="orient",
            )
        )
    for i in network.non_roots:
        terms = tuple((b_name(lid, i), 1.0) for lid in network.adjacency[i])
        constraints.append(Constraint(f"one_parent_{i}", terms, "=", 1.0, group="one_parent"))
    return LinearModel(f"{network.name}_st", tuple(variables), tuple(constraints), formulation="st")


def build_edge_count(network: Network) -> LinearModel:
    terms = tuple((a_name(l.id), 1.0) for l in network.lines)
    rhs = float(network.n_buses - network.n_roots)
    return LinearModel(
        f"{network.name}_edge_count",
        tuple(_status_vars(network)),
        (Constraint("edge_count", terms, "=", rhs, group="edge_count"),),
        formulation="edge_count",
    )


def build_scf(network: Network, *, big_m: float | None = None, demand: float = 1.0) -> LinearModel:
    """Single-commodity flow: unit fictitious demand at every non-root bus,
    roots as sources, flow only on closed lines (``|F| <= M a``)."""
    big_m = float(network.n_buses) if big_m is None else float(big_m)
    variables = _status_vars(network)
    constraints = []
    for l in network.lines:
        variables.append(Variable(f_name(l.id), "continuous", -math.inf, math.inf, "flow"))
    for i in network.non_roots:
        terms = []
        for lid in network.adjacency[i]:
            l = network.line(lid)
            terms.append((f_name(lid), 1.0 if l.to_bus == i else -1.0))
        constraints.append(Constraint(f"flow_balance_{i}", tuple(terms), "=", float(demand), group="flow_balance"))
    for l in network.lines:
        constraints.append(
            Constraint(
                f"flow_cap_{l.id}",
                ((f_name(l.id), 1.0),),
                "abs",
                0.0,
                bound_terms=((a_name(l.id), big_m),),
                group="flow_cap",
            )
        )
    return LinearModel(
        f"{network.name}_scf",
        tuple(variables),
        tuple(constraints),
        formulation="scf",
        constants={"big_m": big_m, "demand": float(demand)},
    )


def build_scf0(network: Network, *, big_m: float | None = None, demand: float = 1.0) -> LinearModel:
    parts = [build_scf(network, big_m=big_m, demand=demand), build_edge_count(network)]
    return merge(f"{network.name}_scf0", parts, formulation="scf0")


def build_scf_st(network: Network, *, big_m: float | None = None, demand: float = 1.0) -> LinearModel:
    parts = [build_st(network), build_scf(network, big_m=big_m, demand=demand)]
    return merge(f"{network.name}_scf_st", parts, formulation="scf-st")


def build_constraint_set(network: Network, name: str, **kw) -> LinearModel:
    name = normalize_set_name(name)
    if name == "st":
        return build_st(network)
    if name == "scf0":
        return build_scf0(network, **kw)
    return build_scf_st(network, **kw)


def normalize_set_name(name: str) -> str:
    key = name.strip().lower().replace("+", "-").replace("_", "-")
    if key not in CONSTRAINT_SETS:
        raise ModelError(f"unknown constraint set {name!r}; expected one of {', '.join(CONSTRAINT_SETS)}")
    return key


@dataclass(frozen=True)
class ModelSize:
    n_vars: int
    n_inequations: int
    n_equations: int

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.n_vars, self.n_inequations, self.n_equations)


def model_size(model: LinearModel) -> ModelSize:
    """Radiality model size with the counting used in the comparison table.

    Variables: parent indicators and fictitious flows; the line-status
    binaries are shared by every set and not counted. Each ``|F| <= M a``
    record is one inequation. Root fixings are bounds and add no rows.
    """
    if model.formulation not in KNOWN_FORMULATIONS:
        raise ModelError(f"model {model.name!r} was not produced by a radiality builder")
    n_vars = sum(1 for v in model.variables if v.role in AUX_ROLES)
    n_ineq = sum(1 for c in model.constraints if c.group in INEQUATION_GROUPS)
    n_eq = sum(1 for c in model.constraints if c.group in EQUATION_GROUPS)
    return ModelSize(n_vars, n_ineq, n_eq)
