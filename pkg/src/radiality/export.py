"""Write mixed-integer linear models as CPLEX-style LP or free MPS text.

Output is a pure function of the model: variables and rows keep model order
and numbers use the shortest round-trip form, so two exports of the same
model are byte-identical.

Record expansion differs by format. ``abs`` records always become two rows
(``_up``/``_dn``). ``range`` records become two rows (``_lo``/``_hi``) in LP,
which has no range syntax, and stay one row with a RANGES entry in MPS.
"""

from __future__ import annotations

import math
import re
from pathlib import Path

from .constraints import (
    Constraint,
    LinearModel,
    Objective,
    Variable,
    build_constraint_set,
    merge,
    normalize_set_name,
)
from .network import Network
from .powerflow import lindistflow_rows

__all__ = [
    "ExportError",
    "lp_text",
    "mps_text",
    "export_lp",
    "export_mps",
    "build_export_model",
    "format_number",
]

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")


class ExportError(ValueError):
    pass


def format_number(x: float) -> str:
    """Shortest text that parses back to the same double; integers without a point."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        raise ExportError("NaN coefficient")
    if x == 0.0:
        return "0"
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _rows(model: LinearModel, *, keep_ranges: bool):
    """``(name, coefs, sense, rhs, range_lo)`` in model order.

    ``range_lo`` is set only for range records kept whole.
    """
    out = []
    for c in model.constraints:
        if keep_ranges and c.sense == "range":
            out.append((c.name, dict(c.terms), "range", c.rhs, c.lo))
            continue
        for name, coefs, sense, rhs in c.expanded():
            out.append((name, coefs, sense, rhs, None))
    return out


def _check_names(model: LinearModel, rows) -> None:
    names = [v.name for v in model.variables]
    row_names = [r[0] for r in rows] + ["obj"]
    for n in names + row_names:
        if not _NAME_RE.match(n):
            raise ExportError(f"name {n!r} is not representable in LP/MPS")
    if len(set(row_names)) != len(row_names):
        seen: set[str] = set()
        dup = sorted({n for n in row_names if n in seen or seen.add(n)})
        raise ExportError(f"row name collision after expansion: {dup}")
    if set(names) & set(row_names):
        raise ExportError(f"names used for both rows and columns: {sorted(set(names) & set(row_names))}")


def _objective(model: LinearModel) -> Objective:
    return model.objective if model.objective is not None else Objective("min")


def _linear_expr(pairs) -> str:
    parts = []
    for name, coef in pairs:
        if coef == 0.0 and parts:
            parts.append(f"+ 0 {name}")
            continue
        sign = "-" if coef < 0 else "+"
        mag = format_number(abs(coef))
        term = name if mag == "1" else f"{mag} {name}"
        parts.append(term if not parts and sign == "+" else f"{sign} {term}")
    return " ".join(parts)


def _wrap(head: str, expr: str, width: int = 240) -> list[str]:
    # LP readers accept continuation lines; keep them short for diffs
    words = expr.split(" ")
    lines, cur = [], head
    for w in words:
        if len(cur) + 1 + len(w) > width and cur.strip():
            lines.append(cur)
            cur = "   "
        cur = f"{cur} {w}" if cur else w
    lines.append(cur)
    return lines


def lp_text(model: LinearModel) -> str:
    rows = _rows(model, keep_ranges=False)
    _check_names(model, rows)
    obj = _objective(model)
    used = {v for _, coefs, _, _, _ in rows for v, c in coefs.items() if c != 0.0}
    used |= {v for v, _ in obj.terms}
    # columns absent from every row still have to be declared somewhere
    obj_terms = list(obj.terms) + [(v.name, 0.0) for v in model.variables if v.name not in used]

    out = [f"\\ {model.name}"]
    out.append("Minimize" if obj.sense == "min" else "Maximize")
    expr = _linear_expr(obj_terms)
    if obj.constant:
        const = format_number(obj.constant)
        expr = f"{expr} + {const}" if obj.constant > 0 and expr else (f"{expr} - {format_number(-obj.constant)}" if expr else const)
    out.extend(_wrap(" obj:", expr or "0"))
    out.append("Subject To")
    first_var = model.variables[0].name if model.variables else None
    for name, coefs, sense, rhs, _ in rows:
        pairs = [(v, c) for v, c in coefs.items() if c != 0.0]
        if not pairs:
            if first_var is None:
                raise ExportError(f"row {name} has no terms and the model has no columns")
            pairs = [(first_var, 0.0)]
        expr = _linear_expr(pairs)
        out.extend(_wrap(f" {name}:", f"{expr} {sense} {format_number(rhs)}"))
    out.append("Bounds")
    generals = []
    binaries = []
    for v in model.variables:
        if v.is_integer and v.lb == 0.0 and v.ub == 1.0:
            binaries.append(v.name)
            continue
        if v.is_integer:
            generals.append(v.name)
        bound = _lp_bound(v)
        if bound is not None:
            out.append(bound)
    if generals:
        out.append("Generals")
        out.extend(f" {n}" for n in generals)
    if binaries:
        out.append("Binaries")
        out.extend(f" {n}" for n in binaries)
    out.append("End")
    return "\n".join(out) + "\n"


def _lp_bound(v: Variable) -> str | None:
    lo, hi = v.lb, v.ub
    if lo == hi:
        return f" {v.name} = {format_number(lo)}"
    if math.isinf(lo) and lo < 0 and math.isinf(hi):
        return f" {v.name} free"
    if lo == 0.0 and math.isinf(hi):
        return None
    return f" {format_number(lo)} <= {v.name} <= {format_number(hi)}"


def mps_text(model: LinearModel) -> str:
    rows = _rows(model, keep_ranges=True)
    _check_names(model, rows)
    obj = _objective(model)
    kind = {"=": "E", "<=": "L", ">=": "G", "range": "L"}

    out = [f"NAME {model.name}"]
    if obj.sense == "max":
        out.extend(["OBJSENSE", "    MAX"])
    out.append("ROWS")
    out.append(" N obj")
    for name, _, sense, _, _ in rows:
        out.append(f" {kind[sense]} {name}")

    column_entries: dict[str, list[tuple[str, float]]] = {v.name: [] for v in model.variables}
    for v, c in obj.terms:
        if c != 0.0:
            column_entries[v].append(("obj", c))
    for name, coefs, _, _, _ in rows:
        for v, c in coefs.items():
            if c != 0.0:
                column_entries[v].append((name, c))

    out.append("COLUMNS")
    in_int = False
    n_marker = 0
    for v in model.variables:
        if v.is_integer != in_int:
            tag = "INTORG" if v.is_integer else "INTEND"
            out.append(f" MARKER{n_marker} 'MARKER' '{tag}'")
            n_marker += 1
            in_int = v.is_integer
        entries = column_entries[v.name] or [("obj", 0.0)]
        for row, c in entries:
            out.append(f" {v.name} {row} {format_number(c)}")
    if in_int:
        out.append(f" MARKER{n_marker} 'MARKER' 'INTEND'")

    out.append("RHS")
    if obj.constant:
        out.append(f" RHS obj {format_number(-obj.constant)}")
    for name, _, _, rhs, _ in rows:
        if rhs != 0.0:
            out.append(f" RHS {name} {format_number(rhs)}")
    ranges = [(name, rhs - lo) for name, _, sense, rhs, lo in rows if sense == "range"]
    if ranges:
        out.append("RANGES")
        for name, width in ranges:
            out.append(f" RNG {name} {format_number(width)}")

    out.append("BOUNDS")
    for v in model.variables:
        out.extend(_mps_bounds(v))
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def _mps_bounds(v: Variable) -> list[str]:
    lo, hi = v.lb, v.ub
    n = v.name
    if v.is_integer and lo == 0.0 and hi == 1.0:
        return [f" BV BND {n}"]
    if lo == hi:
        return [f" FX BND {n} {format_number(lo)}"]
    if math.isinf(lo) and math.isinf(hi):
        return [f" FR BND {n}"]
    out = []
    if math.isinf(lo):
        out.append(f" MI BND {n}")
    elif lo != 0.0 or v.is_integer:
        out.append(f" LO BND {n} {format_number(lo)}")
    if math.isfinite(hi):
        out.append(f" UP BND {n} {format_number(hi)}")
    elif v.is_integer:
        out.append(f" PL BND {n}")
    return out


def _write(text: str, path) -> Path:
    path = Path(path)
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc
    return path


def export_lp(model: LinearModel, path) -> Path:
    return _write(lp_text(model), path)


def export_mps(model: LinearModel, path) -> Path:
    return _write(mps_text(model), path)


def build_export_model(network: Network, constraint_set: str = "scf-st", problem: str = "reconfig", *,
                       with_power_flow: bool = True) -> LinearModel:
    """Radiality set, optional LinDistFlow rows, and an objective.

    Reconfiguration minimizes ``sum r_l t_l`` with ``t_l >= |P_l|``, a linear
    stand-in for losses since LinDistFlow itself is loss-less. Restoration
    maximizes ``sum weight_i pickup_i``. Without power flow the objective is
    empty.
    """
    cs = normalize_set_name(constraint_set)
    if problem not in ("reconfig", "restore"):
        raise ExportError(f"unknown problem {problem!r}")
    radial = build_constraint_set(network, cs)
    if not with_power_flow:
        return LinearModel(radial.name, radial.variables, radial.constraints, Objective("min"), cs,
                           dict(radial.constants))
    pf = lindistflow_rows(network, pickup=problem == "restore")
    parts = [radial, pf]
    if problem == "reconfig":
        variables = tuple(Variable(f"t_{l.id}", "continuous", 0.0, math.inf, "loss") for l in network.lines)
        rows = tuple(
            Constraint(f"tabs_{l.id}", ((f"P_{l.id}", 1.0),), "abs", 0.0, bound_terms=((f"t_{l.id}", 1.0),),
                       group="loss_proxy")
            for l in network.lines
        )
        # P columns are repeated so the block is a well-formed model on its own
        status = tuple(v for v in pf.variables if v.name.startswith("P_"))
        parts.append(LinearModel("loss_proxy", status + variables, rows))
        objective = Objective("min", tuple((f"t_{l.id}", l.r) for l in network.lines if l.r))
    else:
        # loads on root buses are always served and enter as a constant
        objective = Objective(
            "max",
            tuple((f"pickup_{b.id}", b.weight) for b in network.buses
                  if b.has_load and b.id not in network.roots and b.weight),
            float(sum(b.weight for b in network.buses if b.has_load and b.id in network.roots)),
        )
    model = merge(f"{network.name}_{cs}_{problem}", parts, formulation=cs)
    return model.with_objective(objective)

