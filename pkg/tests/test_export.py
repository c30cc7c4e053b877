import math

import pytest

from radiality.constraints import Constraint, LinearModel, Objective, Variable, build_constraint_set
from radiality.export import (
    ExportError,
    build_export_model,
    export_lp,
    export_mps,
    format_number,
    lp_text,
    mps_text,
)
from radiality.oracle import iterate_assignments
from radiality.verify import check_radial

from conftest import net

highspy = pytest.importorskip("highspy")


def read(path):
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    status = h.readModel(str(path))
    assert status != highspy.HighsStatus.kError
    return h


def counts(h):
    lp = h.getLp()
    n_int = sum(1 for t in lp.integrality_ if t == highspy.HighsVarType.kInteger)
    return lp.num_col_, lp.num_row_, n_int


def expected(model, fmt):
    rows = sum(len(c.expanded()) for c in model.constraints)
    if fmt == "mps":
        rows -= model.count(sense="range")
    return len(model.variables), rows, sum(v.is_integer for v in model.variables)


@pytest.mark.parametrize("fmt", ["lp", "mps"])
@pytest.mark.parametrize("name, cs, problem, pf", [
    ("fig2", "scf0", "reconfig", False),
    ("fig2", "scf0", "reconfig", True),
    ("fig2", "scf-st", "reconfig", True),
    ("fig1_fault", "st", "restore", True),
    ("case33", "scf-st", "reconfig", True),
])
def test_reparse_counts(tmp_path, fmt, name, cs, problem, pf):
    model = build_export_model(net(name), cs, problem, with_power_flow=pf)
    path = tmp_path / f"m.{fmt}"
    (export_lp if fmt == "lp" else export_mps)(model, path)
    assert counts(read(path)) == expected(model, fmt)


def test_fig2_scf0_radiality_counts(tmp_path):
    model = build_export_model(net("fig2"), "scf0", with_power_flow=False)
    export_lp(model, tmp_path / "m.lp")
    export_mps(model, tmp_path / "m.mps")
    # 4 statuses + 4 flows; 2 balances + 4 two-sided caps + edge count
    assert counts(read(tmp_path / "m.lp")) == (8, 11, 4)
    assert counts(read(tmp_path / "m.mps")) == (8, 11, 4)
    assert "\n obj: 0" in (tmp_path / "m.lp").read_text()


def test_case33_integer_columns(tmp_path):
    model = build_export_model(net("case33"), "scf-st", with_power_flow=False)
    export_mps(model, tmp_path / "m.mps")
    # 74 parent indicators plus 37 statuses; fictitious flows are continuous
    assert counts(read(tmp_path / "m.mps"))[2] == 111


@pytest.mark.parametrize("fmt", ["lp", "mps"])
def test_byte_identical_runs(tmp_path, fmt):
    write = export_lp if fmt == "lp" else export_mps
    a = write(build_export_model(net("fig2"), "scf0"), tmp_path / f"a.{fmt}")
    b = write(build_export_model(net("fig2"), "scf0"), tmp_path / f"b.{fmt}")
    assert a.read_bytes() == b.read_bytes()


def test_solver_agrees_with_radiality_check(tmp_path):
    n = net("fig1")
    model = build_export_model(n, "scf0", with_power_flow=False)
    export_mps(model, tmp_path / "m.mps")
    h = read(tmp_path / "m.mps")
    names = [h.getLp().col_names_[j] for j in range(h.getLp().num_col_)]
    col = {name: j for j, name in enumerate(names)}
    for vec in iterate_assignments(n.n_lines):
        for lid, v in zip(n.line_ids, vec):
            h.changeColBounds(col[f"a_{lid}"], float(v), float(v))
        h.run()
        feasible = h.getModelStatus() == highspy.HighsModelStatus.kOptimal
        assert feasible == check_radial(n, vec).is_radial
        h.clearSolver()


def test_restore_export_optimum(tmp_path):
    model = build_export_model(net("fig1_fault"), "scf-st", "restore")
    export_lp(model, tmp_path / "m.lp")
    h = read(tmp_path / "m.lp")
    h.run()
    assert h.getModelStatus() == highspy.HighsModelStatus.kOptimal
    assert h.getInfo().objective_function_value == pytest.approx(113.0)


def test_lp_and_mps_optima_agree(tmp_path):
    model = build_export_model(net("fig2"), "scf-st", "reconfig")
    export_lp(model, tmp_path / "m.lp")
    export_mps(model, tmp_path / "m.mps")
    vals = []
    for p in ("m.lp", "m.mps"):
        h = read(tmp_path / p)
        h.run()
        vals.append(h.getInfo().objective_function_value)
    assert vals[0] == pytest.approx(vals[1], rel=1e-9)


@pytest.mark.parametrize("x, text", [
    (0.0, "0"), (-0.0, "0"), (3.0, "3"), (-2.0, "-2"), (0.1, "0.1"), (1e-7, "1e-07"),
    (math.inf, "inf"), (-math.inf, "-inf"), (1e20, "1e+20"),
])
def test_format_number(x, text):
    assert format_number(x) == text


def test_format_number_round_trips():
    for x in (1 / 3, 0.124785057738, 2.0 ** -40, 123456.789):
        assert float(format_number(x)) == x
    with pytest.raises(ExportError, match="NaN"):
        format_number(math.nan)


def _tiny(**kw):
    x = Variable("x", "continuous", -math.inf, math.inf)
    y = Variable("y", "binary", 0.0, 0.0)
    z = Variable("z", "binary", 0.0, 3.0)
    rows = (
        Constraint("r", (("x", 1.0), ("y", -2.5)), "range", 4.0, lo=-1.0),
        Constraint("c", (("x", 1.0),), "abs", 0.5, bound_terms=(("z", 1.0),)),
    )
    return LinearModel("tiny", (x, y, z), rows, Objective("max", (("x", 1.0),), 7.0), **kw)


def test_lp_layout():
    text = lp_text(_tiny())
    assert text.splitlines()[:3] == ["\\ tiny", "Maximize", " obj: x + 7"]
    assert " r_lo: x - 2.5 y >= -1" in text and " r_hi: x - 2.5 y <= 4" in text
    assert " c_up: x - z <= 0.5" in text and " c_dn: - x - z <= 0.5" in text
    assert " x free" in text and " y = 0" in text and " 0 <= z <= 3" in text
    assert text.index("Generals") < text.index(" z\n") and "Binaries" not in text
    assert text.endswith("End\n")


def test_mps_layout():
    text = mps_text(_tiny())
    lines = text.splitlines()
    assert lines[:3] == ["NAME tiny", "OBJSENSE", "    MAX"]
    assert " L r" in lines and " RNG r 5" in lines and " RHS obj -7" in lines
    assert " FR BND x" in lines and " FX BND y 0" in lines and " UP BND z 3" in lines
    assert text.count("'MARKER'") == 2 and lines[-1] == "ENDATA"


def test_mps_range_semantics(tmp_path):
    (tmp_path / "t.mps").write_text(mps_text(_tiny()))
    lp = read(tmp_path / "t.mps").getLp()
    assert list(lp.row_lower_)[0] == -1.0 and list(lp.row_upper_)[0] == 4.0


def test_bad_names_rejected():
    m = LinearModel("m", (Variable("bad name", "continuous", 0, 1),), ())
    with pytest.raises(ExportError, match="not representable"):
        lp_text(m)
    clash = LinearModel("m", (Variable("r_lo", "continuous", 0, 1), Variable("x", "continuous", 0, 1)),
                        (Constraint("r", (("x", 1.0),), "range", 1.0, lo=0.0),))
    with pytest.raises(ExportError, match="both rows and columns"):
        lp_text(clash)


def test_unknown_problem():
    with pytest.raises(ExportError, match="problem"):
        build_export_model(net("fig2"), "scf0", "planning")


def test_write_error(tmp_path):
    with pytest.raises(ExportError, match="cannot write"):
        export_lp(build_constraint_set(net("fig2"), "scf0"), tmp_path / "missing" / "m.lp")
