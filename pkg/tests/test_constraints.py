import pytest
from hypothesis import given, settings, strategies as st

from radiality.constraints import (
    Constraint,
    LinearModel,
    ModelError,
    Variable,
    build_constraint_set,
    build_edge_count,
    build_scf,
    merge,
    model_size,
    normalize_set_name,
)

from conftest import FIXTURE_NAMES, net, random_network


def _expected(n, cs):
    e, nr = n.n_lines, n.n_buses - n.n_roots
    return {
        "st": (2 * e, 0, e + nr),
        "scf0": (e, e, nr + 1),
        "scf-st": (3 * e, e, 2 * nr + e),
    }[cs]


@pytest.mark.parametrize("name", FIXTURE_NAMES)
@pytest.mark.parametrize("cs", ["st", "scf0", "scf-st"])
def test_model_size_formula(name, cs):
    n = net(name)
    assert model_size(build_constraint_set(n, cs)).as_tuple() == _expected(n, cs)


def test_case33_sizes():
    n = net("case33")
    assert model_size(build_constraint_set(n, "scf0")).as_tuple() == (37, 37, 33)
    assert model_size(build_constraint_set(n, "scf-st")).as_tuple() == (111, 37, 101)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), n_bus=st.integers(2, 12), extra=st.integers(0, 6), n_roots=st.integers(1, 3))
def test_model_size_formula_random(seed, n_bus, extra, n_roots):
    n = random_network(seed, n_bus, extra, min(n_roots, n_bus))
    for cs in ("st", "scf0", "scf-st"):
        assert model_size(build_constraint_set(n, cs)).as_tuple() == _expected(n, cs)


def test_root_parent_indicators_fixed_by_bounds():
    n = net("fig2")
    m = build_constraint_set(n, "st")
    assert m.variable("b_1_1").ub == 0.0 and m.variable("b_3_4").ub == 0.0
    assert m.variable("b_1_2").ub == 1.0
    assert not any(c.name.startswith("one_parent_1") for c in m.constraints)


def test_faulted_status_fixed_open():
    m = build_constraint_set(net("fig1_fault"), "scf0")
    assert m.variable("a_2").ub == 0.0 and m.variable("a_3").ub == 1.0


def test_scf_flow_rows():
    n = net("fig2")
    m = build_scf(n, big_m=7.0, demand=2.0)
    cap = next(c for c in m.constraints if c.name == "flow_cap_1")
    assert cap.sense == "abs" and cap.bound_terms == (("a_1", 7.0),)
    bal = next(c for c in m.constraints if c.name == "flow_balance_2")
    assert dict(bal.terms) == {"F_1": 1.0, "F_3": -1.0} and bal.rhs == 2.0
    assert m.constants == {"big_m": 7.0, "demand": 2.0}


def test_abs_and_range_expansion():
    c = Constraint("c", (("x", 2.0),), "abs", 1.0, bound_terms=(("y", 3.0),))
    assert c.expanded() == [("c_up", {"x": 2.0, "y": -3.0}, "<=", 1.0), ("c_dn", {"x": -2.0, "y": -3.0}, "<=", 1.0)]
    r = Constraint("r", (("x", 1.0),), "range", 4.0, lo=-1.0)
    assert [row[2:] for row in r.expanded()] == [(">=", -1.0), ("<=", 4.0)]


@pytest.mark.parametrize("alias, canon", [("SCF+ST", "scf-st"), ("scf_st", "scf-st"), (" ST ", "st"), ("scf0", "scf0")])
def test_set_name_aliases(alias, canon):
    assert normalize_set_name(alias) == canon


def test_unknown_set_name():
    with pytest.raises(ModelError, match="unknown constraint set"):
        normalize_set_name("mtz")


def test_model_validation():
    x = Variable("x", "continuous", 0.0, 1.0)
    with pytest.raises(ModelError, match="duplicate variable"):
        LinearModel("m", (x, x), ())
    with pytest.raises(ModelError, match="undeclared"):
        LinearModel("m", (x,), (Constraint("c", (("y", 1.0),), "=", 0.0),))
    with pytest.raises(ModelError, match="radiality builder"):
        model_size(LinearModel("m", (x,), ()))


def test_merge_keeps_tightest_bounds_and_rejects_kind_clash():
    a = LinearModel("a", (Variable("x", "continuous", 0.0, 5.0),), ())
    b = LinearModel("b", (Variable("x", "continuous", -1.0, 2.0),), ())
    assert merge("m", [a, b]).variable("x").ub == 2.0
    c = LinearModel("c", (Variable("x", "binary", 0.0, 1.0),), ())
    with pytest.raises(ModelError, match="kinds"):
        merge("m", [a, c])


def test_edge_count_row():
    n = net("fig1")
    (row,) = build_edge_count(n).constraints
    assert row.rhs == 5.0 and len(row.terms) == 6
