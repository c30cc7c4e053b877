"""Pure-Python hot kernels. Same signatures and results as ``_ckernels``."""

from __future__ import annotations

import math

import numpy as np

EPS = 1e-9


def sweep_tree(parent, r, x, p, q, v_root, tol, max_iter):
    """Backward/forward sweep on one radial component in topological order.

    Node 0 is the slack; ``parent[k] < k`` for k >= 1 and ``r[k], x[k]``
    belong to the line from ``parent[k]`` to ``k``. Loads ``p, q`` are
    per-unit consumption.

    Returns ``(v, p_send, q_send, ell, iterations, converged)`` where ``v`` is
    voltage magnitude and ``ell`` squared current magnitude per line.
    """
    parent = list(parent)
    r = list(r)
    x = list(x)
    p = list(p)
    q = list(q)
    n = len(parent)
    v2 = [v_root * v_root] * n
    ps = [0.0] * n
    qs = [0.0] * n
    ell = [0.0] * n
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        acc_p = p[:]
        acc_q = q[:]
        for k in range(n - 1, 0, -1):
            pr = acc_p[k]
            qr = acc_q[k]
            lk = (pr * pr + qr * qr) / v2[k]
            ell[k] = lk
            ps[k] = pr + r[k] * lk
            qs[k] = qr + x[k] * lk
            j = parent[k]
            acc_p[j] += ps[k]
            acc_q[j] += qs[k]
        ps[0] = acc_p[0]
        qs[0] = acc_q[0]
        diff = 0.0
        collapsed = False
        for k in range(1, n):
            j = parent[k]
            rk = r[k]
            xk = x[k]
            new = v2[j] - 2.0 * (rk * ps[k] + xk * qs[k]) + (rk * rk + xk * xk) * ell[k]
            if not (0.0 < new < math.inf):
                collapsed = True
                new = 1e-6
            d = abs(math.sqrt(new) - math.sqrt(v2[k]))
            if d > diff:
                diff = d
            v2[k] = new
        if collapsed:
            break
        if diff < tol:
            converged = True
            break
    v = np.sqrt(np.asarray(v2, dtype=np.float64))
    return (
        v,
        np.asarray(ps, dtype=np.float64),
        np.asarray(qs, dtype=np.float64),
        np.asarray(ell, dtype=np.float64),
        it,
        converged,
    )


def propagate_bounds(indptr, indices, coefs, row_lo, row_hi, col_ptr, col_rows, lb, ub, is_int, max_visits):
    """Activity-based bound propagation to a fixpoint, tightening ``lb``/``ub`` in place.

    Returns False when some row or domain is proven empty.
    """
    indptr = indptr.tolist()
    indices = indices.tolist()
    coefs = coefs.tolist()
    row_lo = row_lo.tolist()
    row_hi = row_hi.tolist()
    col_ptr = col_ptr.tolist()
    col_rows = col_rows.tolist()
    lbl = lb.tolist()
    ubl = ub.tolist()
    integer = is_int.tolist()
    n_rows = len(row_lo)
    queued = [True] * n_rows
    work = list(range(n_rows))
    head = 0
    visits = 0
    feasible = True
    inf = math.inf
    while head < len(work):
        row = work[head]
        head += 1
        queued[row] = False
        visits += 1
        if visits > max_visits:
            break
        start, stop = indptr[row], indptr[row + 1]
        min_act = 0.0
        max_act = 0.0
        min_inf = 0
        max_inf = 0
        for k in range(start, stop):
            c = coefs[k]
            j = indices[k]
            if c > 0:
                lo_c = c * lbl[j]
                hi_c = c * ubl[j]
            else:
                lo_c = c * ubl[j]
                hi_c = c * lbl[j]
            if lo_c == -inf:
                min_inf += 1
            else:
                min_act += lo_c
            if hi_c == inf:
                max_inf += 1
            else:
                max_act += hi_c
        lo = row_lo[row]
        hi = row_hi[row]
        if min_inf == 0 and min_act > hi + EPS * max(1.0, abs(hi)):
            feasible = False
            break
        if max_inf == 0 and max_act < lo - EPS * max(1.0, abs(lo)):
            feasible = False
            break
        for k in range(start, stop):
            c = coefs[k]
            j = indices[k]
            if c > 0:
                lo_c = c * lbl[j]
                hi_c = c * ubl[j]
            else:
                lo_c = c * ubl[j]
                hi_c = c * lbl[j]
            new_lb = lbl[j]
            new_ub = ubl[j]
            if hi != inf:
                if lo_c == -inf:
                    res = min_act if min_inf == 1 else -inf
                else:
                    res = min_act - lo_c if min_inf == 0 else -inf
                if res != -inf:
                    bound = (hi - res) / c
                    if c > 0:
                        new_ub = min(new_ub, bound)
                    else:
                        new_lb = max(new_lb, bound)
            if lo != -inf:
                if hi_c == inf:
                    res = max_act if max_inf == 1 else inf
                else:
                    res = max_act - hi_c if max_inf == 0 else inf
                if res != inf:
                    bound = (lo - res) / c
                    if c > 0:
                        new_lb = max(new_lb, bound)
                    else:
                        new_ub = min(new_ub, bound)
            if integer[j]:
                if new_ub != inf:
                    new_ub = math.floor(new_ub + 1e-6)
                if new_lb != -inf:
                    new_lb = math.ceil(new_lb - 1e-6)
            changed = False
            old_lb = lbl[j]
            old_ub = ubl[j]
            if new_lb > old_lb + 1e-7 * max(1.0, abs(old_lb) if old_lb != -inf else 1.0):
                lbl[j] = new_lb
                changed = True
            if new_ub < old_ub - 1e-7 * max(1.0, abs(old_ub) if old_ub != inf else 1.0):
                ubl[j] = new_ub
                changed = True
            if changed:
                if lbl[j] > ubl[j] + 1e-7:
                    feasible = False
                    break
                if lbl[j] > ubl[j]:
                    ubl[j] = lbl[j]
                for t in range(col_ptr[j], col_ptr[j + 1]):
                    other = col_rows[t]
                    if not queued[other]:
                        queued[other] = True
                        work.append(other)
                # recompute activities after a change in this row
                min_act = 0.0
                max_act = 0.0
                min_inf = 0
                max_inf = 0
                for kk in range(start, stop):
                    cc = coefs[kk]
                    jj = indices[kk]
                    if cc > 0:
                        a1 = cc * lbl[jj]
                        a2 = cc * ubl[jj]
                    else:
                        a1 = cc * ubl[jj]
                        a2 = cc * lbl[jj]
                    if a1 == -inf:
                        min_inf += 1
                    else:
                        min_act += a1
                    if a2 == inf:
                        max_inf += 1
                    else:
                        max_act += a2
        if not feasible:
            break
    lb[:] = lbl
    ub[:] = ubl
    return feasible


def enumerate_forests(n_bus, line_from, line_to, allowed, is_root, cap):
    """All rooted spanning forests, by depth-first include/exclude over lines.

    Lines are decided in index order, include first. A line may close only if
    it joins two components that are not both rooted; branches that cannot
    reach ``n_bus - n_roots`` closed lines, or that leave a bus with no way to
    be connected, are cut. Returns ``(forests, complete)`` where ``forests``
    is a ``(count, n_lines)`` uint8 array; ``complete`` is False when ``cap``
    stopped the search.
    """
    line_from = list(line_from)
    line_to = list(line_to)
    allowed = list(allowed)
    is_root = list(is_root)
    n_lines = len(line_from)
    target = n_bus - sum(1 for v in is_root if v)
    parent = list(range(n_bus))
    size = [1] * n_bus
    rooted = [bool(v) for v in is_root]
    # undecided allowed lines touching each bus, and closed lines touching it
    open_deg = [0] * n_bus
    for k in range(n_lines):
        if allowed[k]:
            open_deg[line_from[k]] += 1
            open_deg[line_to[k]] += 1
    closed_deg = [0] * n_bus
    remaining = [0] * (n_lines + 1)
    for k in range(n_lines - 1, -1, -1):
        remaining[k] = remaining[k + 1] + (1 if allowed[k] else 0)
    chosen = [0] * n_lines
    out: list[list[int]] = []
    history: list[tuple[int, int, bool]] = []

    def find(u):
        while parent[u] != u:
            u = parent[u]
        return u

    def stranded(u):
        return not rooted[find(u)] and closed_deg[u] == 0 and open_deg[u] == 0

    complete = True
    # explicit stack of (line index, phase); phase 0 = try include, 1 = try exclude, 2 = undo exclude
    stack = [(0, 0, 0)]
    n_closed = 0
    while stack:
        k, phase, _ = stack.pop()
        if phase == 0:
            if n_closed + remaining[k] < target:
                continue
            if n_closed == target:
                # |N| - |R| lines, acyclic, no two roots joined: a rooted forest
                if len(out) >= cap:
                    complete = False
                    break
                out.append(chosen[:])
                continue
            stack.append((k, 1, 0))
            if allowed[k]:
                u, v = line_from[k], line_to[k]
                ru, rv = find(u), find(v)
                if ru != rv and not (rooted[ru] and rooted[rv]):
                    if size[ru] < size[rv]:
                        ru, rv = rv, ru
                    history.append((rv, ru, rooted[ru]))
                    parent[rv] = ru
                    size[ru] += size[rv]
                    rooted[ru] = rooted[ru] or rooted[rv]
                    chosen[k] = 1
                    n_closed += 1
                    open_deg[u] -= 1
                    open_deg[v] -= 1
                    closed_deg[u] += 1
                    closed_deg[v] += 1
                    stack.append((k, 3, 0))
                    stack.append((k + 1, 0, 0))
        elif phase == 3:
            # undo include
            rv, ru, was_rooted = history.pop()
            parent[rv] = rv
            size[ru] -= size[rv]
            rooted[ru] = was_rooted
            chosen[k] = 0
            n_closed -= 1
            u, v = line_from[k], line_to[k]
            open_deg[u] += 1
            open_deg[v] += 1
            closed_deg[u] -= 1
            closed_deg[v] -= 1
        elif phase == 1:
            # exclude
            if allowed[k]:
                u, v = line_from[k], line_to[k]
                open_deg[u] -= 1
                open_deg[v] -= 1
                stack.append((k, 2, 0))
                if stranded(u) or stranded(v):
                    continue
            stack.append((k + 1, 0, 0))
        else:
            u, v = line_from[k], line_to[k]
            open_deg[u] += 1
            open_deg[v] += 1
    arr = np.asarray(out, dtype=np.uint8).reshape(len(out), n_lines)
    return arr, complete


def forest_sweep(closed, bus_lines_ptr, bus_lines, line_from, line_to, r, x, p, q, roots,
                 vmin, vmax, imax, pcap, qcap, check_limits, tol, max_iter):
    """Sweep every rooted tree of a radial topology given as a line mask.

    Returns ``(loss, n_violations, converged, n_reached)``; a non-radial mask
    shows up as ``n_reached < n_bus``.
    """
    n_bus = len(p)
    closed = list(closed)
    ptr = list(bus_lines_ptr)
    bl = list(bus_lines)
    lf = list(line_from)
    lt = list(line_to)
    seen = [False] * n_bus
    loss = 0.0
    n_viol = 0
    converged = True
    reached = 0
    for root in list(roots):
        order = [root]
        par = [0]
        via = [-1]
        seen[root] = True
        head = 0
        while head < len(order):
            u = order[head]
            for t in range(ptr[u], ptr[u + 1]):
                k = bl[t]
                if not closed[k]:
                    continue
                w = lt[k] if lf[k] == u else lf[k]
                if not seen[w]:
                    seen[w] = True
                    order.append(w)
                    par.append(head)
                    via.append(k)
            head += 1
        reached += len(order)
        n = len(order)
        rr = [0.0] * n
        xx = [0.0] * n
        pp = [0.0] * n
        qq = [0.0] * n
        for i in range(n):
            pp[i] = p[order[i]]
            qq[i] = q[order[i]]
            if i:
                rr[i] = r[via[i]]
                xx[i] = x[via[i]]
        v, ps, qs, ell, it, ok = sweep_tree(par, rr, xx, pp, qq, 1.0, tol, max_iter)
        converged = converged and ok
        for i in range(1, n):
            loss += rr[i] * ell[i]
        if check_limits:
            pc = 0.0
            qc = 0.0
            for i in range(n):
                b = order[i]
                pc += pcap[b]
                qc += qcap[b]
                if v[i] < vmin[b] - 1e-9 or v[i] > vmax[b] + 1e-9:
                    n_viol += 1
                if i and imax[via[i]] != math.inf:
                    if math.hypot(ps[i], qs[i]) / v[par[i]] > imax[via[i]] + 1e-9:
                        n_viol += 1
            if max(ps[0] - pc, abs(qs[0]) - qc) > 1e-9:
                n_viol += 1
    return loss, n_viol, converged, reached


def forced_closures(bus_lines_ptr, bus_lines, line_from, line_to, avail, closed, is_root):
    """Root reachability and bridge forcing over the available lines.

    Returns ``(ok, forced)``: ``ok`` is False when some bus cannot reach a
    root; ``forced`` lists open-able lines that are bridges cutting off a
    rootless side, so every completion must close them.
    """
    ptr = list(bus_lines_ptr)
    bl = list(bus_lines)
    lf = list(line_from)
    lt = list(line_to)
    av = list(avail)
    cl = list(closed)
    rt = list(is_root)
    n = len(rt)
    seen = [False] * n
    queue = [u for u in range(n) if rt[u]]
    for u in queue:
        seen[u] = True
    head = 0
    while head < len(queue):
        u = queue[head]
        head += 1
        for t in range(ptr[u], ptr[u + 1]):
            k = bl[t]
            if av[k]:
                w = lt[k] if lf[k] == u else lf[k]
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)
    if not all(seen):
        return False, np.zeros(0, dtype=np.int64)

    disc = [-1] * n
    low = [0] * n
    sub_roots = [0] * n
    forced = []
    timer = 0
    for start in range(n):
        if disc[start] >= 0:
            continue
        bridges = []
        disc[start] = low[start] = timer
        timer += 1
        sub_roots[start] = int(rt[start])
        stack = [[start, -1, ptr[start]]]
        while stack:
            frame = stack[-1]
            u, via = frame[0], frame[1]
            descended = False
            while frame[2] < ptr[u + 1]:
                k = bl[frame[2]]
                frame[2] += 1
                if not av[k] or k == via:
                    continue
                w = lt[k] if lf[k] == u else lf[k]
                if disc[w] < 0:
                    disc[w] = low[w] = timer
                    timer += 1
                    sub_roots[w] = int(rt[w])
                    stack.append([w, k, ptr[w]])
                    descended = True
                    break
                if disc[w] < low[u]:
                    low[u] = disc[w]
            if descended:
                continue
            stack.pop()
            if stack:
                p = stack[-1][0]
                sub_roots[p] += sub_roots[u]
                if low[u] < low[p]:
                    low[p] = low[u]
                if low[u] > disc[p]:
                    bridges.append((via, u))
        total = sub_roots[start]
        for k, child in bridges:
            if not cl[k] and (sub_roots[child] == 0 or sub_roots[child] == total):
                forced.append(k)
    return True, np.asarray(sorted(forced), dtype=np.int64)


def _grounded_laplacian(m, pos_from, pos_to, g, avail):
    lap = np.zeros((m, m))
    for k in range(len(g)):
        if not avail[k]:
            continue
        a, b = pos_from[k], pos_to[k]
        if a >= 0:
            lap[a, a] += g[k]
        if b >= 0:
            lap[b, b] += g[k]
        if a >= 0 and b >= 0:
            lap[a, b] -= g[k]
            lap[b, a] -= g[k]
    return lap


PIVOT_RTOL = 1e-10


def _grounded_cholesky(m, pos_from, pos_to, g, avail):
    # a pivot this small relative to its diagonal means a bus without a root path
    lap = _grounded_laplacian(m, pos_from, pos_to, g, avail)
    try:
        c = np.linalg.cholesky(lap)
    except np.linalg.LinAlgError:
        return None
    if m and np.any(np.diag(c) ** 2 <= PIVOT_RTOL * np.diag(lap)):
        return None
    return c


def flow_energy(m, pos_from, pos_to, g, avail, rhs_p, rhs_q):
    """``p' L^-1 p + q' L^-1 q`` for the root-grounded conductance Laplacian,
    or -1 when it is singular."""
    c = _grounded_cholesky(m, pos_from, pos_to, g, avail)
    if c is None:
        return -1.0
    total = 0.0
    for rhs in (rhs_p, rhs_q):
        y = np.linalg.solve(c, np.asarray(rhs, dtype=np.float64))
        total += float(y @ y)
    return total


def flow_resistance_diag(m, pos_from, pos_to, g, avail):
    """Diagonal of the inverse grounded Laplacian (effective resistance of
    each bus to the roots), or an empty array when singular."""
    c = _grounded_cholesky(m, pos_from, pos_to, g, avail)
    if c is None:
        return np.zeros(0)
    cinv = np.linalg.inv(c)
    return np.einsum("ij,ij->j", cinv, cinv)
