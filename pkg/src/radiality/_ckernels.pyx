# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Semantics mirror ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, floor, ceil, INFINITY

cnp.import_array()

cdef double EPS = 1e-9


def sweep_tree(parent, r, x, p, q, double v_root, double tol, int max_iter):
    cdef long[::1] par = np.ascontiguousarray(parent, dtype=np.int64)
    cdef double[::1] rr = np.ascontiguousarray(r, dtype=np.float64)
    cdef double[::1] xx = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] pp = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[::1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef Py_ssize_t n = par.shape[0]
    cdef cnp.ndarray[double, ndim=1] v2_a = np.full(n, v_root * v_root)
    cdef cnp.ndarray[double, ndim=1] ps_a = np.zeros(n)
    cdef cnp.ndarray[double, ndim=1] qs_a = np.zeros(n)
    cdef cnp.ndarray[double, ndim=1] ell_a = np.zeros(n)
    cdef double[::1] v2 = v2_a
    cdef double[::1] ps = ps_a
    cdef double[::1] qs = qs_a
    cdef double[::1] ell = ell_a
    cdef double[::1] acc_p = np.zeros(n)
    cdef double[::1] acc_q = np.zeros(n)
    cdef Py_ssize_t k, j
    cdef int it = 0
    cdef bint converged = False
    cdef bint collapsed
    cdef double pr, qr, lk, diff, d, new, rk, xk
    for it in range(1, max_iter + 1):
        for k in range(n):
            acc_p[k] = pp[k]
            acc_q[k] = qq[k]
        for k in range(n - 1, 0, -1):
            pr = acc_p[k]
            qr = acc_q[k]
            lk = (pr * pr + qr * qr) / v2[k]
            ell[k] = lk
            ps[k] = pr + rr[k] * lk
            qs[k] = qr + xx[k] * lk
            j = par[k]
            acc_p[j] += ps[k]
            acc_q[j] += qs[k]
        ps[0] = acc_p[0]
        qs[0] = acc_q[0]
        diff = 0.0
        collapsed = False
        for k in range(1, n):
            j = par[k]
            rk = rr[k]
            xk = xx[k]
            new = v2[j] - 2.0 * (rk * ps[k] + xk * qs[k]) + (rk * rk + xk * xk) * ell[k]
            if not (new > 0.0) or new == INFINITY:
                collapsed = True
                new = 1e-6
            d = fabs(sqrt(new) - sqrt(v2[k]))
            if d > diff:
                diff = d
            v2[k] = new
        if collapsed:
            break
        if diff < tol:
            converged = True
            break
    return np.sqrt(v2_a), ps_a, qs_a, ell_a, it, bool(converged)


cdef inline void _activity(Py_ssize_t start, Py_ssize_t stop, long[::1] indices, double[::1] coefs,
                           double[::1] lb, double[::1] ub, double* min_act, double* max_act,
                           int* min_inf, int* max_inf) nogil:
    cdef Py_ssize_t k
    cdef long j
    cdef double c, a1, a2
    min_act[0] = 0.0
    max_act[0] = 0.0
    min_inf[0] = 0
    max_inf[0] = 0
    for k in range(start, stop):
        c = coefs[k]
        j = indices[k]
        if c > 0:
            a1 = c * lb[j]
            a2 = c * ub[j]
        else:
            a1 = c * ub[j]
            a2 = c * lb[j]
        if a1 == -INFINITY:
            min_inf[0] += 1
        else:
            min_act[0] += a1
        if a2 == INFINITY:
            max_inf[0] += 1
        else:
            max_act[0] += a2


cdef inline double _absmax1(double v) nogil:
    if v == INFINITY or v == -INFINITY:
        return 1.0
    v = fabs(v)
    return v if v > 1.0 else 1.0


def propagate_bounds(indptr_, indices_, coefs_, row_lo_, row_hi_, col_ptr_, col_rows_, lb_, ub_, is_int_, long max_visits):
    cdef long[::1] indptr = np.ascontiguousarray(indptr_, dtype=np.int64)
    cdef long[::1] indices = np.ascontiguousarray(indices_, dtype=np.int64)
    cdef double[::1] coefs = np.ascontiguousarray(coefs_, dtype=np.float64)
    cdef double[::1] row_lo = np.ascontiguousarray(row_lo_, dtype=np.float64)
    cdef double[::1] row_hi = np.ascontiguousarray(row_hi_, dtype=np.float64)
    cdef long[::1] col_ptr = np.ascontiguousarray(col_ptr_, dtype=np.int64)
    cdef long[::1] col_rows = np.ascontiguousarray(col_rows_, dtype=np.int64)
    cdef double[::1] lb = lb_
    cdef double[::1] ub = ub_
    cdef unsigned char[::1] integer = np.ascontiguousarray(is_int_, dtype=np.uint8)
    cdef Py_ssize_t n_rows = row_lo.shape[0]
    cdef unsigned char[::1] queued = np.ones(n_rows, dtype=np.uint8)
    cdef long cap = n_rows + 64
    work_a = np.empty(cap, dtype=np.int64)
    cdef long[::1] work = work_a
    cdef long head = 0, tail = n_rows, size = n_rows
    cdef long visits = 0
    cdef Py_ssize_t k, t, start, stop
    cdef long row, j, other
    cdef double lo, hi, c, lo_c, hi_c, res, bound, new_lb, new_ub, old_lb, old_ub
    cdef double min_act, max_act
    cdef int min_inf, max_inf
    cdef bint feasible = True, changed
    for k in range(n_rows):
        work[k] = k
    # ring buffer: each row is queued at most once, so n_rows slots suffice
    while size > 0:
        row = work[head]
        head += 1
        if head == cap:
            head = 0
        size -= 1
        queued[row] = 0
        visits += 1
        if visits > max_visits:
            break
        start = indptr[row]
        stop = indptr[row + 1]
        _activity(start, stop, indices, coefs, lb, ub, &min_act, &max_act, &min_inf, &max_inf)
        lo = row_lo[row]
        hi = row_hi[row]
        if min_inf == 0 and min_act > hi + EPS * _absmax1(hi):
            feasible = False
            break
        if max_inf == 0 and max_act < lo - EPS * _absmax1(lo):
            feasible = False
            break
        for k in range(start, stop):
            c = coefs[k]
            j = indices[k]
            if c > 0:
                lo_c = c * lb[j]
                hi_c = c * ub[j]
            else:
                lo_c = c * ub[j]
                hi_c = c * lb[j]
            new_lb = lb[j]
            new_ub = ub[j]
            if hi != INFINITY:
                if lo_c == -INFINITY:
                    res = min_act if min_inf == 1 else -INFINITY
                else:
                    res = min_act - lo_c if min_inf == 0 else -INFINITY
                if res != -INFINITY:
                    bound = (hi - res) / c
                    if c > 0:
                        if bound < new_ub:
                            new_ub = bound
                    else:
                        if bound > new_lb:
                            new_lb = bound
            if lo != -INFINITY:
                if hi_c == INFINITY:
                    res = max_act if max_inf == 1 else INFINITY
                else:
                    res = max_act - hi_c if max_inf == 0 else INFINITY
                if res != INFINITY:
                    bound = (lo - res) / c
                    if c > 0:
                        if bound > new_lb:
                            new_lb = bound
                    else:
                        if bound < new_ub:
                            new_ub = bound
            if integer[j]:
                if new_ub != INFINITY:
                    new_ub = floor(new_ub + 1e-6)
                if new_lb != -INFINITY:
                    new_lb = ceil(new_lb - 1e-6)
            changed = False
            old_lb = lb[j]
            old_ub = ub[j]
            if new_lb > old_lb + 1e-7 * _absmax1(old_lb):
                lb[j] = new_lb
                changed = True
            if new_ub < old_ub - 1e-7 * _absmax1(old_ub):
                ub[j] = new_ub
                changed = True
            if changed:
                if lb[j] > ub[j] + 1e-7:
                    feasible = False
                    break
                if lb[j] > ub[j]:
                    ub[j] = lb[j]
                for t in range(col_ptr[j], col_ptr[j + 1]):
                    other = col_rows[t]
                    if not queued[other]:
                        queued[other] = 1
                        work[tail] = other
                        tail += 1
                        if tail == cap:
                            tail = 0
                        size += 1
                _activity(start, stop, indices, coefs, lb, ub, &min_act, &max_act, &min_inf, &max_inf)
        if not feasible:
            break
    return bool(feasible)


cdef inline long _find(long[::1] parent, long u) nogil:
    while parent[u] != u:
        u = parent[u]
    return u


def enumerate_forests(long n_bus, line_from_, line_to_, allowed_, is_root_, long cap):
    cdef long[::1] lf = np.ascontiguousarray(line_from_, dtype=np.int64)
    cdef long[::1] lt = np.ascontiguousarray(line_to_, dtype=np.int64)
    cdef unsigned char[::1] allowed = np.ascontiguousarray(allowed_, dtype=np.uint8)
    cdef unsigned char[::1] root_flag = np.ascontiguousarray(is_root_, dtype=np.uint8)
    cdef Py_ssize_t n_lines = lf.shape[0]
    cdef long target = n_bus
    cdef long b, k, u, v, ru, rv, tmp
    for b in range(n_bus):
        if root_flag[b]:
            target -= 1
    cdef long[::1] parent = np.arange(n_bus, dtype=np.int64)
    cdef long[::1] size = np.ones(n_bus, dtype=np.int64)
    cdef unsigned char[::1] rooted = np.array(root_flag, dtype=np.uint8)
    cdef long[::1] open_deg = np.zeros(n_bus, dtype=np.int64)
    cdef long[::1] closed_deg = np.zeros(n_bus, dtype=np.int64)
    cdef long[::1] remaining = np.zeros(n_lines + 1, dtype=np.int64)
    cdef unsigned char[::1] chosen = np.zeros(n_lines, dtype=np.uint8)
    for k in range(n_lines):
        if allowed[k]:
            open_deg[lf[k]] += 1
            open_deg[lt[k]] += 1
    for k in range(n_lines - 1, -1, -1):
        remaining[k] = remaining[k + 1] + (1 if allowed[k] else 0)
    # history of unions: (absorbed root, surviving root, surviving was rooted)
    cdef long[::1] h_rv = np.zeros(n_lines + 1, dtype=np.int64)
    cdef long[::1] h_ru = np.zeros(n_lines + 1, dtype=np.int64)
    cdef unsigned char[::1] h_was = np.zeros(n_lines + 1, dtype=np.uint8)
    cdef long h_top = 0
    # explicit stack of (line index, phase)
    cdef long stack_cap = 4 * (n_lines + 2)
    cdef long[::1] st_k = np.zeros(stack_cap, dtype=np.int64)
    cdef long[::1] st_ph = np.zeros(stack_cap, dtype=np.int64)
    cdef long sp = 0
    cdef long n_closed = 0
    cdef long phase
    cdef bint complete = True
    cdef bint dead
    out_cap = 1024
    out = np.zeros((out_cap, n_lines), dtype=np.uint8)
    cdef unsigned char[:, ::1] outv = out
    cdef long n_out = 0
    st_k[0] = 0
    st_ph[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        k = st_k[sp]
        phase = st_ph[sp]
        if phase == 0:
            if n_closed + remaining[k] < target:
                continue
            if n_closed == target:
                if n_out >= cap:
                    complete = False
                    break
                if n_out == out_cap:
                    out_cap *= 2
                    bigger = np.zeros((out_cap, n_lines), dtype=np.uint8)
                    bigger[:n_out] = out[:n_out]
                    out = bigger
                    outv = out
                outv[n_out, :] = chosen
                n_out += 1
                continue
            st_k[sp] = k
            st_ph[sp] = 1
            sp += 1
            if allowed[k]:
                u = lf[k]
                v = lt[k]
                ru = _find(parent, u)
                rv = _find(parent, v)
                if ru != rv and not (rooted[ru] and rooted[rv]):
                    if size[ru] < size[rv]:
                        tmp = ru
                        ru = rv
                        rv = tmp
                    h_rv[h_top] = rv
                    h_ru[h_top] = ru
                    h_was[h_top] = rooted[ru]
                    h_top += 1
                    parent[rv] = ru
                    size[ru] += size[rv]
                    if rooted[rv]:
                        rooted[ru] = 1
                    chosen[k] = 1
                    n_closed += 1
                    open_deg[u] -= 1
                    open_deg[v] -= 1
                    closed_deg[u] += 1
                    closed_deg[v] += 1
                    st_k[sp] = k
                    st_ph[sp] = 3
                    sp += 1
                    st_k[sp] = k + 1
                    st_ph[sp] = 0
                    sp += 1
        elif phase == 3:
            h_top -= 1
            rv = h_rv[h_top]
            ru = h_ru[h_top]
            parent[rv] = rv
            size[ru] -= size[rv]
            rooted[ru] = h_was[h_top]
            chosen[k] = 0
            n_closed -= 1
            u = lf[k]
            v = lt[k]
            open_deg[u] += 1
            open_deg[v] += 1
            closed_deg[u] -= 1
            closed_deg[v] -= 1
        elif phase == 1:
            if allowed[k]:
                u = lf[k]
                v = lt[k]
                open_deg[u] -= 1
                open_deg[v] -= 1
                st_k[sp] = k
                st_ph[sp] = 2
                sp += 1
                dead = False
                if not rooted[_find(parent, u)] and closed_deg[u] == 0 and open_deg[u] == 0:
                    dead = True
                if not rooted[_find(parent, v)] and closed_deg[v] == 0 and open_deg[v] == 0:
                    dead = True
                if dead:
                    continue
            st_k[sp] = k + 1
            st_ph[sp] = 0
            sp += 1
        else:
            u = lf[k]
            v = lt[k]
            open_deg[u] += 1
            open_deg[v] += 1
    return np.array(out[:n_out]), bool(complete)


def forest_sweep(closed_, bus_lines_ptr_, bus_lines_, line_from_, line_to_, r_, x_, p_, q_, roots_,
                 vmin_, vmax_, imax_, pcap_, qcap_, bint check_limits, double tol, int max_iter):
    cdef unsigned char[::1] closed = np.ascontiguousarray(closed_, dtype=np.uint8)
    cdef long[::1] ptr = np.ascontiguousarray(bus_lines_ptr_, dtype=np.int64)
    cdef long[::1] bl = np.ascontiguousarray(bus_lines_, dtype=np.int64)
    cdef long[::1] lf = np.ascontiguousarray(line_from_, dtype=np.int64)
    cdef long[::1] lt = np.ascontiguousarray(line_to_, dtype=np.int64)
    cdef double[::1] r = np.ascontiguousarray(r_, dtype=np.float64)
    cdef double[::1] x = np.ascontiguousarray(x_, dtype=np.float64)
    cdef double[::1] p = np.ascontiguousarray(p_, dtype=np.float64)
    cdef double[::1] q = np.ascontiguousarray(q_, dtype=np.float64)
    cdef long[::1] roots = np.ascontiguousarray(roots_, dtype=np.int64)
    cdef double[::1] vmin = np.ascontiguousarray(vmin_, dtype=np.float64)
    cdef double[::1] vmax = np.ascontiguousarray(vmax_, dtype=np.float64)
    cdef double[::1] imax = np.ascontiguousarray(imax_, dtype=np.float64)
    cdef double[::1] pcap = np.ascontiguousarray(pcap_, dtype=np.float64)
    cdef double[::1] qcap = np.ascontiguousarray(qcap_, dtype=np.float64)
    cdef Py_ssize_t n_bus = p.shape[0]
    cdef unsigned char[::1] seen = np.zeros(n_bus, dtype=np.uint8)
    cdef long[::1] order = np.zeros(n_bus, dtype=np.int64)
    cdef long[::1] par = np.zeros(n_bus, dtype=np.int64)
    cdef long[::1] via = np.zeros(n_bus, dtype=np.int64)
    cdef double[::1] v2 = np.zeros(n_bus)
    cdef double[::1] ps = np.zeros(n_bus)
    cdef double[::1] qs = np.zeros(n_bus)
    cdef double[::1] ell = np.zeros(n_bus)
    cdef double[::1] acc_p = np.zeros(n_bus)
    cdef double[::1] acc_q = np.zeros(n_bus)
    cdef double loss = 0.0
    cdef long n_viol = 0
    cdef bint converged = True
    cdef long reached = 0
    cdef Py_ssize_t ri, head, n, t, i, j, kk
    cdef long root, u, w, k
    cdef int it
    cdef bint ok, collapsed
    cdef double pr, qr, lk, diff, d, new, rk, xk, pc, qc, vi
    with nogil:
        for ri in range(roots.shape[0]):
            root = roots[ri]
            order[0] = root
            par[0] = 0
            via[0] = -1
            seen[root] = 1
            n = 1
            head = 0
            while head < n:
                u = order[head]
                for t in range(ptr[u], ptr[u + 1]):
                    k = bl[t]
                    if not closed[k]:
                        continue
                    w = lt[k] if lf[k] == u else lf[k]
                    if not seen[w]:
                        seen[w] = 1
                        order[n] = w
                        par[n] = head
                        via[n] = k
                        n += 1
                head += 1
            reached += n
            for i in range(n):
                v2[i] = 1.0
                ps[i] = 0.0
                qs[i] = 0.0
                ell[i] = 0.0
            ok = False
            for it in range(1, max_iter + 1):
                for i in range(n):
                    acc_p[i] = p[order[i]]
                    acc_q[i] = q[order[i]]
                for i in range(n - 1, 0, -1):
                    pr = acc_p[i]
                    qr = acc_q[i]
                    lk = (pr * pr + qr * qr) / v2[i]
                    ell[i] = lk
                    ps[i] = pr + r[via[i]] * lk
                    qs[i] = qr + x[via[i]] * lk
                    j = par[i]
                    acc_p[j] += ps[i]
                    acc_q[j] += qs[i]
                ps[0] = acc_p[0]
                qs[0] = acc_q[0]
                diff = 0.0
                collapsed = False
                for i in range(1, n):
                    j = par[i]
                    rk = r[via[i]]
                    xk = x[via[i]]
                    new = v2[j] - 2.0 * (rk * ps[i] + xk * qs[i]) + (rk * rk + xk * xk) * ell[i]
                    if not (new > 0.0) or new == INFINITY:
                        collapsed = True
                        new = 1e-6
                    d = fabs(sqrt(new) - sqrt(v2[i]))
                    if d > diff:
                        diff = d
                    v2[i] = new
                if collapsed:
                    break
                if diff < tol:
                    ok = True
                    break
            if not ok:
                converged = False
            for i in range(1, n):
                loss += r[via[i]] * ell[i]
            if check_limits:
                pc = 0.0
                qc = 0.0
                for i in range(n):
                    u = order[i]
                    pc += pcap[u]
                    qc += qcap[u]
                    vi = sqrt(v2[i])
                    if vi < vmin[u] - 1e-9 or vi > vmax[u] + 1e-9:
                        n_viol += 1
                    if i > 0 and imax[via[i]] != INFINITY:
                        if sqrt(ps[i] * ps[i] + qs[i] * qs[i]) / sqrt(v2[par[i]]) > imax[via[i]] + 1e-9:
                            n_viol += 1
                if ps[0] - pc > 1e-9 or fabs(qs[0]) - qc > 1e-9:
                    n_viol += 1
    return loss, n_viol, bool(converged), reached


def forced_closures(bus_lines_ptr_, bus_lines_, line_from_, line_to_, avail_, closed_, is_root_):
    cdef long[::1] ptr = np.ascontiguousarray(bus_lines_ptr_, dtype=np.int64)
    cdef long[::1] bl = np.ascontiguousarray(bus_lines_, dtype=np.int64)
    cdef long[::1] lf = np.ascontiguousarray(line_from_, dtype=np.int64)
    cdef long[::1] lt = np.ascontiguousarray(line_to_, dtype=np.int64)
    cdef unsigned char[::1] av = np.ascontiguousarray(avail_, dtype=np.uint8)
    cdef unsigned char[::1] cl = np.ascontiguousarray(closed_, dtype=np.uint8)
    cdef unsigned char[::1] rt = np.ascontiguousarray(is_root_, dtype=np.uint8)
    cdef Py_ssize_t n = rt.shape[0]
    cdef long[::1] queue = np.empty(n, dtype=np.int64)
    cdef unsigned char[::1] seen = np.zeros(n, dtype=np.uint8)
    cdef long head = 0, tail = 0, u, w, k, t, p, start, total
    cdef long timer = 0, top, n_br, n_forced = 0
    for u in range(n):
        if rt[u]:
            seen[u] = 1
            queue[tail] = u
            tail += 1
    while head < tail:
        u = queue[head]
        head += 1
        for t in range(ptr[u], ptr[u + 1]):
            k = bl[t]
            if av[k]:
                w = lt[k] if lf[k] == u else lf[k]
                if not seen[w]:
                    seen[w] = 1
                    queue[tail] = w
                    tail += 1
    if tail < n:
        return False, np.zeros(0, dtype=np.int64)

    cdef long[::1] disc = np.full(n, -1, dtype=np.int64)
    cdef long[::1] low = np.zeros(n, dtype=np.int64)
    cdef long[::1] sub_roots = np.zeros(n, dtype=np.int64)
    cdef long[::1] st_node = np.empty(n, dtype=np.int64)
    cdef long[::1] st_via = np.empty(n, dtype=np.int64)
    cdef long[::1] st_pos = np.empty(n, dtype=np.int64)
    cdef long[::1] br_line = np.empty(n, dtype=np.int64)
    cdef long[::1] br_child = np.empty(n, dtype=np.int64)
    cdef long n_lines = lf.shape[0]
    cdef cnp.ndarray[long, ndim=1] forced_a = np.empty(n_lines, dtype=np.int64)
    cdef long[::1] forced = forced_a
    cdef bint descended
    for start in range(n):
        if disc[start] >= 0:
            continue
        n_br = 0
        disc[start] = timer
        low[start] = timer
        timer += 1
        sub_roots[start] = rt[start]
        top = 0
        st_node[0] = start
        st_via[0] = -1
        st_pos[0] = ptr[start]
        while top >= 0:
            u = st_node[top]
            descended = False
            while st_pos[top] < ptr[u + 1]:
                k = bl[st_pos[top]]
                st_pos[top] += 1
                if not av[k] or k == st_via[top]:
                    continue
                w = lt[k] if lf[k] == u else lf[k]
                if disc[w] < 0:
                    disc[w] = timer
                    low[w] = timer
                    timer += 1
                    sub_roots[w] = rt[w]
                    top += 1
                    st_node[top] = w
                    st_via[top] = k
                    st_pos[top] = ptr[w]
                    descended = True
                    break
                if disc[w] < low[u]:
                    low[u] = disc[w]
            if descended:
                continue
            top -= 1
            if top >= 0:
                p = st_node[top]
                sub_roots[p] += sub_roots[u]
                if low[u] < low[p]:
                    low[p] = low[u]
                if low[u] > disc[p]:
                    br_line[n_br] = st_via[top + 1]
                    br_child[n_br] = u
                    n_br += 1
        total = sub_roots[start]
        for t in range(n_br):
            k = br_line[t]
            if not cl[k] and (sub_roots[br_child[t]] == 0 or sub_roots[br_child[t]] == total):
                forced[n_forced] = k
                n_forced += 1
    out = np.sort(forced_a[:n_forced])
    return True, out


cdef double PIVOT_RTOL = 1e-10


cdef bint _cholesky_grounded(long m, long[::1] pf, long[::1] pt, double[::1] g, unsigned char[::1] av,
                             double[:, ::1] c):
    cdef long i, j, k, a, b
    cdef double s, d
    for i in range(m):
        for j in range(m):
            c[i, j] = 0.0
    for k in range(g.shape[0]):
        if not av[k]:
            continue
        a = pf[k]
        b = pt[k]
        if a >= 0:
            c[a, a] += g[k]
        if b >= 0:
            c[b, b] += g[k]
        if a >= 0 and b >= 0:
            c[a, b] -= g[k]
            c[b, a] -= g[k]
    # in-place lower Cholesky; a tiny relative pivot means a bus without a root path
    for j in range(m):
        s = c[j, j]
        d = s
        for k in range(j):
            s -= c[j, k] * c[j, k]
        if s <= PIVOT_RTOL * d:
            return False
        c[j, j] = sqrt(s)
        for i in range(j + 1, m):
            s = c[i, j]
            for k in range(j):
                s -= c[i, k] * c[j, k]
            c[i, j] = s / c[j, j]
        for i in range(j):
            c[i, j] = 0.0
    return True


def flow_energy(long m, pos_from_, pos_to_, g_, avail_, rhs_p_, rhs_q_):
    cdef long[::1] pf = np.ascontiguousarray(pos_from_, dtype=np.int64)
    cdef long[::1] pt = np.ascontiguousarray(pos_to_, dtype=np.int64)
    cdef double[::1] g = np.ascontiguousarray(g_, dtype=np.float64)
    cdef unsigned char[::1] av = np.ascontiguousarray(avail_, dtype=np.uint8)
    cdef double[::1] rp = np.ascontiguousarray(rhs_p_, dtype=np.float64)
    cdef double[::1] rq = np.ascontiguousarray(rhs_q_, dtype=np.float64)
    cdef double[:, ::1] c = np.empty((m, m))
    cdef double[::1] y = np.empty(m)
    cdef long i, k, which
    cdef double s, total = 0.0
    if not _cholesky_grounded(m, pf, pt, g, av, c):
        return -1.0
    for which in range(2):
        for i in range(m):
            s = rp[i] if which == 0 else rq[i]
            for k in range(i):
                s -= c[i, k] * y[k]
            y[i] = s / c[i, i]
            total += y[i] * y[i]
    return total


def flow_resistance_diag(long m, pos_from_, pos_to_, g_, avail_):
    cdef long[::1] pf = np.ascontiguousarray(pos_from_, dtype=np.int64)
    cdef long[::1] pt = np.ascontiguousarray(pos_to_, dtype=np.int64)
    cdef double[::1] g = np.ascontiguousarray(g_, dtype=np.float64)
    cdef unsigned char[::1] av = np.ascontiguousarray(avail_, dtype=np.uint8)
    cdef double[:, ::1] c = np.empty((m, m))
    cdef double[::1] y = np.empty(m)
    cdef cnp.ndarray[double, ndim=1] out_a = np.zeros(m)
    cdef double[::1] out = out_a
    cdef long i, j, k
    cdef double s
    if not _cholesky_grounded(m, pf, pt, g, av, c):
        return np.zeros(0)
    # column j of C^-1 by forward substitution on e_j; its squared norm is (L^-1)_jj
    for j in range(m):
        for i in range(j):
            y[i] = 0.0
        for i in range(j, m):
            s = 1.0 if i == j else 0.0
            for k in range(j, i):
                s -= c[i, k] * y[k]
            y[i] = s / c[i, i]
            out[j] += y[i] * y[i]
    return out_a
