"""Radial power flow by backward/forward sweep, limit checks, and LinDistFlow rows."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .constraints import Constraint, LinearModel, Variable, a_name
from .network import Network, NetworkError
from .verify import check_radial

__all__ = ["SweepResult", "Violation", "RadialEvaluator", "sweep", "lindistflow_rows"]

TOL = 1e-10
MAX_ITER = 100
LIMIT_EPS = 1e-9


@dataclass(frozen=True)
class Violation:
    kind: str  # v_min | v_max | i_max | gen_capacity
    element: int
    magnitude: float


@dataclass
class SweepResult:
    v: dict[int, float]
    p_flow: dict[int, float]
    q_flow: dict[int, float]
    total_loss: float
    violations: list[Violation] = field(default_factory=list)
    converged: bool = True
    iterations: int = 0
    generation: dict[int, tuple[float, float]] = field(default_factory=dict)
    served_load: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.converged and not self.violations


class RadialEvaluator:
    """Sweeps many radial topologies of one network with per-network caches.

    The caller guarantees radiality (closed lines form a forest with one root
    per tree); :func:`sweep` is the checked entry point.
    """

    def __init__(self, network: Network, *, check_limits: bool = True, tol: float = TOL, max_iter: int = MAX_ITER):
        self.network = network
        self.check_limits = check_limits
        self.tol = tol
        self.max_iter = max_iter
        self._ends = {l.id: (l.from_bus, l.to_bus) for l in network.lines}
        self._rx = {l.id: (l.r, l.x) for l in network.lines}
        self._imax = {l.id: l.i_max for l in network.lines}
        self._load = {b.id: (b.p_load, b.q_load) for b in network.buses}
        self._vlim = {b.id: (b.v_min, b.v_max) for b in network.buses}
        self._cap = {b.id: (b.p_gen_max, b.q_gen_max) for b in network.buses}

    def evaluate(self, closed, pickup=None) -> SweepResult:
        net = self.network
        closed = set(closed)
        adj: dict[int, list[tuple[int, int]]] = {b: [] for b in net.bus_ids}
        for lid in sorted(closed):
            f, t = self._ends[lid]
            adj[f].append((t, lid))
            adj[t].append((f, lid))

        v_out: dict[int, float] = {}
        p_flow = {lid: 0.0 for lid in net.line_ids}
        q_flow = {lid: 0.0 for lid in net.line_ids}
        generation: dict[int, tuple[float, float]] = {}
        violations: list[Violation] = []
        total_loss = 0.0
        served = 0.0
        converged = True
        iterations = 0

        for root in sorted(net.roots):
            order = [root]
            parent_pos = [0]
            via = [0]
            pos = {root: 0}
            queue = deque([root])
            while queue:
                u = queue.popleft()
                for v, lid in adj[u]:
                    if v not in pos:
                        pos[v] = len(order)
                        order.append(v)
                        parent_pos.append(pos[u])
                        via.append(lid)
                        queue.append(v)
            n = len(order)
            r = np.zeros(n)
            x = np.zeros(n)
            p = np.zeros(n)
            q = np.zeros(n)
            for k, bus in enumerate(order):
                pl, ql = self._load[bus]
                if pickup is not None and not pickup.get(bus, 1):
                    pl = ql = 0.0
                p[k] = pl
                q[k] = ql
                if k:
                    r[k], x[k] = self._rx[via[k]]
            served += float(p.sum())
            v, ps, qs, ell, it, ok = kernels.sweep_tree(
                np.asarray(parent_pos, dtype=np.int64), r, x, p, q, 1.0, self.tol, self.max_iter
            )
            iterations = max(iterations, int(it))
            converged = converged and bool(ok)
            total_loss += float(np.dot(r, ell))
            generation[root] = (float(ps[0]), float(qs[0]))
            for k, bus in enumerate(order):
                v_out[bus] = float(v[k])
                if k:
                    lid = via[k]
                    sign = 1.0 if self._ends[lid][0] == order[parent_pos[k]] else -1.0
                    p_flow[lid] = sign * float(ps[k])
                    q_flow[lid] = sign * float(qs[k])

            if self.check_limits:
                for k, bus in enumerate(order):
                    vmin, vmax = self._vlim[bus]
                    if v[k] < vmin - LIMIT_EPS:
                        violations.append(Violation("v_min", bus, float(vmin - v[k])))
                    elif v[k] > vmax + LIMIT_EPS:
                        violations.append(Violation("v_max", bus, float(v[k] - vmax)))
                    if k:
                        imax = self._imax[via[k]]
                        if not math.isinf(imax):
                            current = math.hypot(ps[k], qs[k]) / v[parent_pos[k]]
                            if current > imax + LIMIT_EPS:
                                violations.append(Violation("i_max", via[k], float(current - imax)))
                pcap = sum(self._cap[b][0] for b in order)
                qcap = sum(self._cap[b][1] for b in order)
                excess = max(ps[0] - pcap, abs(qs[0]) - qcap)
                if excess > LIMIT_EPS:
                    violations.append(Violation("gen_capacity", root, float(excess)))

        if len(v_out) != net.n_buses:
            missing = sorted(set(net.bus_ids) - set(v_out))
            raise NetworkError(f"buses {missing} are not connected to a root")
        violations.sort(key=lambda vi: (vi.kind, vi.element))
        return SweepResult(
            v=dict(sorted(v_out.items())),
            p_flow=p_flow,
            q_flow=q_flow,
            total_loss=total_loss,
            violations=violations,
            converged=converged,
            iterations=iterations,
            generation=generation,
            served_load=served,
        )


def sweep(network: Network, radial_assignment, pickup=None, *, check_limits: bool = True, tol: float = TOL,
          max_iter: int = MAX_ITER) -> SweepResult:
    """Exact radial power flow with each component's root as a 1.0 pu slack.

    ``pickup`` maps bus id -> 0/1; buses mapped to 0 have their load shed.
    Non-convergence is reported through ``converged`` rather than raised.
    """
    report = check_radial(network, radial_assignment)
    if not report.is_radial:
        raise NetworkError("sweep needs a radial assignment")
    closed = network.closed_lines(radial_assignment)
    return RadialEvaluator(network, check_limits=check_limits, tol=tol, max_iter=max_iter).evaluate(closed, pickup)


def lindistflow_rows(network: Network, *, pickup: bool = False) -> LinearModel:
    """Loss-less DistFlow over the shared status binaries.

    Squared voltages ``w_i``, reference-direction flows ``P_l, Q_l``; each
    voltage-drop equality is one ``abs`` record relaxed by big-M when the line
    is open, and flows are boxed to zero on open lines. Roots are slacks with
    ``w = 1`` and no balance rows.
    """
    net = network
    variables: list[Variable] = []
    constraints: list[Constraint] = []
    total_s = sum(abs(b.p_load) + abs(b.q_load) for b in net.buses) + sum(b.p_gen_max + b.q_gen_max for b in net.buses)
    s_cap = max(total_s, 1e-3)

    for l in net.lines:
        variables.append(Variable(a_name(l.id), "binary", 0.0, 0.0 if l.id in net.faulted_lines else 1.0, "status"))
    for l in net.lines:
        variables.append(Variable(f"P_{l.id}", "continuous", -math.inf, math.inf, "power"))
        variables.append(Variable(f"Q_{l.id}", "continuous", -math.inf, math.inf, "power"))
    for b in net.buses:
        if b.id in net.roots:
            variables.append(Variable(f"w_{b.id}", "continuous", 1.0, 1.0, "voltage"))
        else:
            variables.append(Variable(f"w_{b.id}", "continuous", b.v_min**2, b.v_max**2, "voltage"))
    if pickup:
        for b in net.buses:
            if b.has_load and b.id not in net.roots:
                variables.append(Variable(f"pickup_{b.id}", "binary", 0.0, 1.0, "pickup"))

    for i in net.non_roots:
        b = net.bus(i)
        p_terms, q_terms = [], []
        for lid in net.adjacency[i]:
            sign = 1.0 if net.line(lid).to_bus == i else -1.0
            p_terms.append((f"P_{lid}", sign))
            q_terms.append((f"Q_{lid}", sign))
        if pickup and b.has_load:
            p_terms.append((f"pickup_{i}", -b.p_load))
            q_terms.append((f"pickup_{i}", -b.q_load))
            p_rhs = q_rhs = 0.0
        else:
            p_rhs, q_rhs = b.p_load, b.q_load
        constraints.append(Constraint(f"p_balance_{i}", tuple(p_terms), "=", p_rhs, group="pf_balance"))
        constraints.append(Constraint(f"q_balance_{i}", tuple(q_terms), "=", q_rhs, group="pf_balance"))

    for root in sorted(net.roots):
        b = net.bus(root)
        terms = []
        for lid in net.adjacency[root]:
            sign = 1.0 if net.line(lid).from_bus == root else -1.0
            terms.append((f"P_{lid}", sign))
        if terms:
            constraints.append(
                Constraint(f"gen_cap_{root}", tuple(terms), "<=", b.p_gen_max - b.p_load, group="pf_gen")
            )

    for l in net.lines:
        fb, tb = net.bus(l.from_bus), net.bus(l.to_bus)
        wf_max = 1.0 if fb.id in net.roots else fb.v_max**2
        wf_min = 1.0 if fb.id in net.roots else fb.v_min**2
        wt_max = 1.0 if tb.id in net.roots else tb.v_max**2
        wt_min = 1.0 if tb.id in net.roots else tb.v_min**2
        big_m = max(wf_max - wt_min, wt_max - wf_min, 0.0)
        terms = [(f"w_{l.from_bus}", 1.0), (f"w_{l.to_bus}", -1.0)]
        if l.r:
            terms.append((f"P_{l.id}", -2.0 * l.r))
        if l.x:
            terms.append((f"Q_{l.id}", -2.0 * l.x))
        constraints.append(
            Constraint(
                f"vdrop_{l.id}", tuple(terms), "abs", big_m, bound_terms=((a_name(l.id), -big_m),), group="pf_vdrop"
            )
        )
        cap = s_cap if math.isinf(l.i_max) else min(s_cap, l.i_max * max(fb.v_max, tb.v_max))
        for kind in ("P", "Q"):
            constraints.append(
                Constraint(
                    f"{kind.lower()}cap_{l.id}",
                    ((f"{kind}_{l.id}", 1.0),),
                    "abs",
                    0.0,
                    bound_terms=((a_name(l.id), cap),),
                    group="pf_box",
                )
            )
    return LinearModel(f"{net.name}_lindistflow", tuple(variables), tuple(constraints), formulation="lindistflow")
