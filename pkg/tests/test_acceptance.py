"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that is repeated in the terminal summary.
Tolerances are pinned here.
"""

import os
import time

import pytest

from radiality.constraints import build_constraint_set, build_st, model_size
from radiality.export import build_export_model, export_lp, export_mps
from radiality.optimizer import compare_search_effort, propagation_demo, reconfigure, restore
from radiality.oracle import enumerate_feasible, enumerate_rooted_spanning_forests, find_st_counterexample
from radiality.powerflow import sweep
from radiality.scenarios import DEFAULT_MAX_NODES, generate_scenarios, run_batch
from radiality.verify import check_radial, st_feasible

from conftest import net, record_criterion, st_values, violated_rows
from oracles import ladder_oracle, two_bus_closed_form
from test_powerflow import balance_errors, two_bus

REL_OPT = 1e-9
TWO_BUS_TOL = 1e-10
BALANCE_TOL = 1e-9
LADDER_TOL = 1e-8
SCENARIO_COUNT = 300
SCENARIO_SEED = 1


def test_criterion_01_st_counterexample():
    n = net("fig1")
    t0 = time.perf_counter()
    vec = find_st_counterexample(n)
    elapsed = time.perf_counter() - t0
    ok_st, b = st_feasible(n, vec)
    bad = violated_rows(build_st(n), st_values(n, vec, b)) if ok_st else ["no witness"]
    rep = check_radial(n, vec)
    cycles = [rep.components[k] for k in rep.pseudo_root_components]
    ok = (sum(vec) == 5 and ok_st and not bad and not rep.is_radial and elapsed < 1.0
          and any(set(c.buses) == {4, 5, 6} and not c.roots for c in cycles))
    record_criterion(1, ok, f"sum a = {sum(vec)}, witness rows violated = {len(bad)}, "
                            f"rootless cycle buses = {[list(c.buses) for c in cycles]}, {elapsed:.3f} s < 1 s")


def test_criterion_02_exact_sets_equal_forests():
    t0 = time.perf_counter()
    mismatches = 0
    st_strict = False
    for name in ("fig1", "fig2", "random10"):
        n = net(name)
        forests = set(enumerate_rooted_spanning_forests(n))
        for cs in ("scf0", "scf-st"):
            mismatches += len(set(enumerate_feasible(n, cs)) ^ forests)
        if name == "fig1":
            st_strict = set(enumerate_feasible(n, "st")) > forests
    elapsed = time.perf_counter() - t0
    record_criterion(2, mismatches == 0 and st_strict and elapsed < 10.0,
                     f"mismatches = {mismatches}, ST strictly larger on fig1 = {st_strict}, {elapsed:.2f} s < 10 s")


def test_criterion_03_st_implies_edge_count():
    checked = 0
    wrong = 0
    for name in ("fig1", "fig2", "random10", "fig1_fault"):
        n = net(name)
        for vec in enumerate_feasible(n, "st"):
            checked += 1
            wrong += sum(vec) != n.n_buses - n.n_roots
    record_criterion(3, wrong == 0 and checked > 0, f"{checked} ST-feasible assignments, {wrong} with sum a != |N| - |R|")


def test_criterion_04_model_sizes():
    bad = []
    for name in ("fig1", "fig2", "random10", "fig1_fault", "case33"):
        n = net(name)
        e, nr = n.n_lines, n.n_buses - n.n_roots
        want = {"scf0": (e, e, nr + 1), "scf-st": (3 * e, e, 2 * nr + e)}
        for cs, size in want.items():
            got = model_size(build_constraint_set(n, cs)).as_tuple()
            if got != size:
                bad.append((name, cs, got, size))
    c33 = net("case33")
    c0 = model_size(build_constraint_set(c33, "scf0")).as_tuple()
    c1 = model_size(build_constraint_set(c33, "scf-st")).as_tuple()
    ok = not bad and c0 == (37, 37, 33) and c1 == (111, 37, 101)
    record_criterion(4, ok, f"case33 scf0 {c0}, scf-st {c1}, formula mismatches {bad}")


def test_criterion_05_fig2_propagation():
    res = propagation_demo(net("fig2"), {1: 1})
    s, z = res["scf-st"], res["scf0"]
    ok_st = s.feasible and s.domains[3] == (0, 0) and set(s.residual_lines) == {2, 4} and s.residual_rhs == 1
    ok_0 = z.feasible and z.domains[3] == (0, 1) and set(z.residual_lines) == {2, 3, 4} and z.residual_rhs == 1
    record_criterion(5, ok_st and ok_0,
                     f"scf-st: a_3 in {list(s.domains[3])}, {s.residual_text()}; "
                     f"scf0: a_3 in {list(z.domains[3])}, {z.residual_text()}")


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def test_criterion_06_bnb_matches_enumeration():
    worst = 0.0
    for name in ("fig1", "fig2", "case33"):
        for cs in ("scf0", "scf-st"):
            e = reconfigure(net(name), cs, "enumerate", keep_log=False)
            b = reconfigure(net(name), cs, "bnb", keep_log=False)
            worst = max(worst, _rel(e.objective, b.objective))
    stage1_exact = True
    worst_stage2 = 0.0
    for cs in ("st", "scf0", "scf-st"):
        e = restore(net("fig1_fault"), cs, "enumerate")
        b = restore(net("fig1_fault"), cs, "bnb")
        stage1_exact &= e.objective == b.objective
        worst_stage2 = max(worst_stage2, _rel(e.loss, b.loss))
    ok = worst <= REL_OPT and stage1_exact and worst_stage2 <= REL_OPT
    record_criterion(6, ok, f"reconfig max rel gap {worst:.1e}, restore stage 1 exact = {stage1_exact}, "
                            f"stage 2 max rel gap {worst_stage2:.1e} (tol {REL_OPT:g})")


def test_criterion_07_search_effort():
    eff = compare_search_effort(net("case33"), keep_log=False)
    ok = eff.nodes_scf_st <= eff.nodes_scf0 and eff.objectives_agree
    record_criterion(7, ok, f"case33 nodes scf-st {eff.nodes_scf_st} <= scf0 {eff.nodes_scf0}, "
                            f"same optimum = {eff.objectives_agree}")


def test_criterion_08_scenarios():
    scenarios = generate_scenarios(net("case33"), SCENARIO_COUNT, SCENARIO_SEED)
    t0 = time.perf_counter()
    results = run_batch(scenarios, workers=os.cpu_count() or 1, max_nodes=DEFAULT_MAX_NODES)
    elapsed = time.perf_counter() - t0
    errors = [r.index for r in results if r.error]
    radial = {cs: sum(1 for r in results if cs in r.outcomes and r.outcomes[cs].is_radial) for cs in ("scf0", "scf-st")}
    failures = sum(r.st_failure for r in results)
    ok = failures >= 1 and all(v == SCENARIO_COUNT for v in radial.values()) and not errors
    record_criterion(8, ok, f"ST-only non-radial optimum in {failures}/{SCENARIO_COUNT}, scf0 radial "
                            f"{radial['scf0']}/{SCENARIO_COUNT}, scf-st radial {radial['scf-st']}/{SCENARIO_COUNT}, "
                            f"errors {errors}, {elapsed:.0f} s")


def test_criterion_09_power_flow():
    two_bus_err = 0.0
    for p, q, r, x in [(0.1, 0.05, 0.01, 0.02), (0.5, 0.2, 0.05, 0.05), (0.0, 0.3, 0.02, 0.1), (1.0, 0.0, 0.1, 0.0)]:
        res = sweep(two_bus(p, q, r, x, v_min=0.1), {1: 1})
        v2, loss = two_bus_closed_form(p, q, r, x)
        two_bus_err = max(two_bus_err, abs(res.v[2] - v2), abs(res.total_loss - loss))
    n = net("case33")
    closed = list(range(1, 33))
    res = sweep(n, n.assignment(closed))
    balance = max(abs(e) for e in balance_errors(n, set(closed), res))
    volts, loss = ladder_oracle(n, closed)
    ladder = max([abs(res.v[b] - volts[b]) for b in n.bus_ids] + [_rel(res.total_loss, loss)])
    ok = two_bus_err <= TWO_BUS_TOL and balance <= BALANCE_TOL and ladder <= LADDER_TOL
    record_criterion(9, ok, f"two-bus {two_bus_err:.1e} <= {TWO_BUS_TOL:g}, balance {balance:.1e} <= "
                            f"{BALANCE_TOL:g}, 33-bus vs ladder {ladder:.1e} <= {LADDER_TOL:g}")


def test_criterion_10_export(tmp_path):
    highspy = pytest.importorskip("highspy")
    model = build_export_model(net("fig2"), "scf0", with_power_flow=False)
    want_rows = sum(len(c.expanded()) for c in model.constraints)
    got = {}
    same_bytes = True
    for fmt, write in (("lp", export_lp), ("mps", export_mps)):
        a = write(model, tmp_path / f"a.{fmt}")
        b = write(build_export_model(net("fig2"), "scf0", with_power_flow=False), tmp_path / f"b.{fmt}")
        same_bytes &= a.read_bytes() == b.read_bytes()
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.readModel(str(a))
        lp = h.getLp()
        n_int = sum(1 for t in lp.integrality_ if t == highspy.HighsVarType.kInteger)
        got[fmt] = (lp.num_col_, lp.num_row_, n_int)
    want = (len(model.variables), want_rows, sum(v.is_integer for v in model.variables))
    ok = got["lp"] == got["mps"] == want and same_bytes
    record_criterion(10, ok, f"LP {got['lp']}, MPS {got['mps']}, model {want} (cols, rows, integers), "
                             f"byte-identical = {same_bytes}")
