import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from radiality.network import Bus, Line, Network
from radiality.optimizer import (
    BOUND_CLOSED,
    EXHAUSTIVE,
    NODE_CAPPED,
    OptimizationError,
    Propagator,
    _Evaluator,
    _search_model,
    compare_search_effort,
    energized_subnetwork,
    propagation_demo,
    reconfigure,
    restore,
)
from radiality.oracle import enumerate_feasible, forest_matrix
from radiality.verify import check_radial

from conftest import net, random_network

REL = 1e-9


def _same(a, b):
    return math.isclose(a, b, rel_tol=REL, abs_tol=1e-15)


@pytest.mark.parametrize("name", ["fig1", "fig2", "random10"])
@pytest.mark.parametrize("cs", ["st", "scf0", "scf-st"])
def test_reconfig_bnb_equals_enumerate_small(name, cs):
    n = net(name)
    e = reconfigure(n, cs, "enumerate")
    b = reconfigure(n, cs, "bnb")
    assert e.proof == EXHAUSTIVE and b.proof == BOUND_CLOSED
    assert _same(e.objective, b.objective)
    assert e.best_assignment.a == b.best_assignment.a
    if cs != "st":
        assert b.is_radial


@pytest.mark.parametrize("cs", ["scf0", "scf-st"])
def test_reconfig_bnb_equals_enumerate_case33(cs):
    n = net("case33")
    e = reconfigure(n, cs, "enumerate", keep_log=False)
    b = reconfigure(n, cs, "bnb", keep_log=False)
    assert _same(e.objective, b.objective)
    assert b.to_dict()["open_lines"] == [7, 9, 14, 32, 37]
    assert b.objective * 10_000 == pytest.approx(139.55, abs=0.01)


@pytest.mark.parametrize("cs", ["st", "scf0", "scf-st"])
def test_restore_bnb_equals_enumerate_fig1_fault(cs):
    n = net("fig1_fault")
    e = restore(n, cs, "enumerate")
    b = restore(n, cs, "bnb")
    assert e.objective == b.objective == 113.0
    assert _same(e.loss, b.loss)
    assert b.best_assignment.closed() == [1, 3, 4, 5]
    assert b.is_radial


def test_st_reconfig_prefers_pseudo_root_on_fig1():
    o = reconfigure(net("fig1"), "st", "bnb")
    assert not o.is_radial and o.objective == 0.0
    rep = check_radial(net("fig1"), o.best_assignment.a)
    assert rep.components[rep.pseudo_root_components[0]].cycle == (4, 5, 6)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), n_bus=st.integers(3, 8), extra=st.integers(1, 4), n_roots=st.integers(1, 2),
       cs=st.sampled_from(["scf0", "scf-st"]))
def test_reconfig_bnb_equals_enumerate_random(seed, n_bus, extra, n_roots, cs):
    n = random_network(seed, n_bus, extra, n_roots)
    e = reconfigure(n, cs, "enumerate")
    b = reconfigure(n, cs, "bnb")
    assert _same(e.objective, b.objective)
    assert e.best_assignment.a == b.best_assignment.a


def _with_faults(n, faulted, caps):
    buses = tuple(
        Bus(b.id, b.p_load, b.q_load, b.weight, True, caps[b.id], caps[b.id]) if b.id in caps else b
        for b in n.buses
    )
    return n.with_changes(buses=buses, faulted_lines=frozenset(faulted))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), n_bus=st.integers(4, 8), extra=st.integers(1, 4),
       fault=st.integers(0, 20), cap=st.sampled_from([0.01, 0.03, 10.0]), cs=st.sampled_from(["scf0", "scf-st"]))
def test_restore_bnb_equals_enumerate_random(seed, n_bus, extra, fault, cap, cs):
    n = random_network(seed, n_bus, extra, 1)
    root = next(iter(n.roots))
    n = _with_faults(n, [n.line_ids[fault % n.n_lines]], {root: cap})
    try:
        e = restore(n, cs, "enumerate")
    except OptimizationError:
        with pytest.raises(OptimizationError):
            restore(n, cs, "bnb")
        return
    b = restore(n, cs, "bnb")
    assert e.objective == pytest.approx(b.objective, abs=1e-9)
    assert _same(e.loss, b.loss)
    assert b.is_radial


def test_energized_subnetwork():
    n = net("case33").with_changes(faulted_lines=frozenset({1}))
    sub, dark = energized_subnetwork(n)
    assert dark == tuple(range(2, 34)) and sub.bus_ids == (1,)
    full, none = energized_subnetwork(net("fig1_fault"))
    assert none == () and full is net("fig1_fault")


def test_fig2_propagation():
    res = propagation_demo(net("fig2"), {1: 1})
    st_ = res["scf-st"]
    assert st_.feasible and st_.domains[3] == (0, 0)
    assert set(st_.residual_lines) == {2, 4} and st_.residual_rhs == 1
    scf0 = res["scf0"]
    assert scf0.domains[3] == (0, 1)
    assert set(scf0.residual_lines) == {2, 3, 4} and scf0.residual_rhs == 1
    assert scf0.residual_text() == "a_2 + a_3 + a_4 = 1"


@pytest.mark.parametrize("name", ["fig1", "fig2", "random10", "fig1_fault"])
@pytest.mark.parametrize("cs", ["st", "scf0", "scf-st"])
@pytest.mark.parametrize("structural", [False, True])
def test_propagation_never_cuts_a_feasible_assignment(name, cs, structural):
    n = net(name)
    if structural and cs == "st":
        return
    feasible = enumerate_feasible(n, cs)
    prop = Propagator(n, _search_model(n, cs), structural=structural)
    rng = np.random.default_rng(7)
    for _ in range(60):
        lb, ub = prop.initial()
        fixed = {}
        for k in rng.choice(n.n_lines, size=rng.integers(1, 4), replace=False):
            fixed[int(k)] = int(rng.integers(0, 2))
            lb[prop.a_idx[k]] = ub[prop.a_idx[k]] = float(fixed[int(k)])
        ok = prop.run(lb, ub)
        matching = [v for v in feasible if all(v[k] == x for k, x in fixed.items())]
        if not ok:
            assert matching == []
            continue
        for v in matching:
            for k in range(n.n_lines):
                assert lb[prop.a_idx[k]] - 1e-9 <= v[k] <= ub[prop.a_idx[k]] + 1e-9


@pytest.mark.parametrize("name", ["fig1", "fig2", "random10", "case33"])
def test_loss_bound_is_admissible(name):
    n = net(name)
    ev = _Evaluator(n, check_limits=False, pickup=False)
    ev.set_bound_loads(True)
    forests = forest_matrix(n)
    rng = np.random.default_rng(3)
    rows = forests if len(forests) < 300 else forests[rng.choice(len(forests), 300, replace=False)]
    full = ev.loss_bound(np.ones(n.n_lines, dtype=np.uint8))
    assert full > 0
    scored = 0
    for row in rows:
        res = ev.evaluate(row)
        if res is None:
            # voltage collapse on a long chain: no loss to compare with
            continue
        scored += 1
        assert full <= res[1]
        # a superset of the forest's lines gives a weaker bound than the forest itself
        assert ev.loss_bound(row) <= res[1] * (1 + 1e-12)
    assert scored > len(rows) // 2


def test_pickup_bound_is_admissible():
    n = _with_faults(net("fig1"), [2], {1: 0.03, 5: 0.02})
    n = n.with_changes(roots=frozenset({1, 5}))
    sub, _ = energized_subnetwork(n)
    ev = _Evaluator(sub, check_limits=True, pickup=True)
    bound = ev.pickup_bound(np.array([l.id not in sub.faulted_lines for l in sub.lines], dtype=np.uint8))
    for row in forest_matrix(sub):
        res = ev.evaluate(row)
        if res is not None:
            assert res[0] <= bound


def test_case33_search_effort_ordering():
    eff = compare_search_effort(net("case33"), keep_log=False)
    assert eff.objectives_agree
    assert eff.nodes_scf_st <= eff.nodes_scf0


def test_node_cap_still_returns_a_topology():
    o = reconfigure(net("case33"), "scf0", "bnb", max_nodes=50, keep_log=False)
    assert o.proof == NODE_CAPPED and o.nodes_explored <= 50 and o.is_radial
    r = restore(net("fig1_fault"), "scf0", "bnb", max_nodes=1)
    # the seeded first stage closes at its root node; the second hits the cap
    assert r.proof == NODE_CAPPED and r.is_radial and r.stage_capped == (False, True)
    assert r.objective == 113.0


def test_log_records_nodes():
    o = reconfigure(net("fig2"), "scf-st", "bnb")
    assert len(o.log) == o.nodes_explored
    assert {rec.status for rec in o.log} <= {"branched", "infeasible", "bound", "leaf", "leaf-rejected"}


def test_errors():
    with pytest.raises(OptimizationError, match="strategy"):
        reconfigure(net("fig2"), "scf0", "dfs")
    with pytest.raises(OptimizationError, match="restore"):
        reconfigure(net("fig1_fault"), "scf0", "bnb")
    with pytest.raises(OptimizationError, match="problem"):
        compare_search_effort(net("fig2"), "planning")


def test_limits_can_make_reconfiguration_infeasible():
    n = net("fig2")
    tight = n.with_changes(buses=tuple(b if b.is_source else Bus(b.id, b.p_load, b.q_load, v_min=0.9999999)
                                       for b in n.buses))
    with pytest.raises(OptimizationError, match="no feasible"):
        reconfigure(tight, "scf0", "bnb")
    assert reconfigure(tight, "scf0", "bnb", check_limits=False).is_radial


def test_zero_weight_loads_are_shed_only_when_needed():
    n = net("fig1_fault")
    o = restore(n, "scf-st", "bnb")
    assert o.to_dict()["shed_buses"] == []
    d = o.to_dict()
    assert d["problem"] == "restore" and d["restored_weight"] == 113.0
