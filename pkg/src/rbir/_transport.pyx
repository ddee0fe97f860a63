# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled balanced-transportation simplex.

Pivot-for-pivot identical to rbir._transport_py.solve_balanced: row-minimum
start, BFS duals from row 0, Dantzig entering rule with a Bland fallback
after degenerate stalling, lexicographic leaving rule. emd_cost() runs the
whole earth-mover evaluation (zero-line reduction, slack padding, solve,
normalize) without leaving C.
"""

from libc.math cimport INFINITY
from libc.stdlib cimport free, malloc

cdef double _TOL = 1e-9


cdef double _core(Py_ssize_t a, Py_ssize_t b, double *supply, double *demand,
                  double *cost, double *flow) except? -1.0:
    """Minimize sum(cost * flow) with exact row/column sums; cost and flow
    are row-major a x b. Returns the optimal cost, fills flow."""
    cdef Py_ssize_t nb = a + b - 1
    cdef Py_ssize_t nn = a + b
    cdef Py_ssize_t i, j, e, k, ne, node, other, head, tail, i0, j0
    cdef Py_ssize_t flat, leave, li, lj, target, plen, it, max_iter
    cdef Py_ssize_t stall, stall_limit, rows_open, cols_open
    cdef double q, theta, f, rc, best, total

    cdef double *rem_s = <double *> malloc(a * sizeof(double))
    cdef double *rem_d = <double *> malloc(b * sizeof(double))
    cdef double *ef = <double *> malloc(nb * sizeof(double))
    cdef double *u = <double *> malloc(a * sizeof(double))
    cdef double *v = <double *> malloc(b * sizeof(double))
    cdef Py_ssize_t *ei = <Py_ssize_t *> malloc(nb * sizeof(Py_ssize_t))
    cdef Py_ssize_t *ej = <Py_ssize_t *> malloc(nb * sizeof(Py_ssize_t))
    cdef char *is_basic = <char *> malloc(a * b * sizeof(char))
    cdef Py_ssize_t *deg = <Py_ssize_t *> malloc((nn + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t *adj = <Py_ssize_t *> malloc(2 * nb * sizeof(Py_ssize_t))
    cdef Py_ssize_t *pos = <Py_ssize_t *> malloc(nn * sizeof(Py_ssize_t))
    cdef char *known = <char *> malloc(nn * sizeof(char))
    cdef Py_ssize_t *queue = <Py_ssize_t *> malloc(nn * sizeof(Py_ssize_t))
    cdef Py_ssize_t *parent_node = <Py_ssize_t *> malloc(nn * sizeof(Py_ssize_t))
    cdef Py_ssize_t *parent_edge = <Py_ssize_t *> malloc(nn * sizeof(Py_ssize_t))
    cdef Py_ssize_t *path = <Py_ssize_t *> malloc(nb * sizeof(Py_ssize_t))
    cdef char *open_line = <char *> malloc(nn * sizeof(char))
    if (rem_s == NULL or rem_d == NULL or ef == NULL or u == NULL or v == NULL
            or ei == NULL or ej == NULL or is_basic == NULL or deg == NULL
            or adj == NULL or pos == NULL or known == NULL or queue == NULL
            or parent_node == NULL or parent_edge == NULL or path == NULL
            or open_line == NULL):
        free(rem_s); free(rem_d); free(ef); free(u); free(v); free(ei)
        free(ej); free(is_basic); free(deg); free(adj); free(pos)
        free(known); free(queue); free(parent_node); free(parent_edge)
        free(path); free(open_line)
        raise MemoryError()

    try:
        for i in range(a):
            rem_s[i] = supply[i]
        for j in range(b):
            rem_d[j] = demand[j]
        for i in range(a * b):
            is_basic[i] = 0

        # row-minimum start: lowest open row ships to its cheapest open
        # column; each allocation closes exactly one line (last closes both),
        # so the a + b - 1 cells form a spanning tree
        for node in range(nn):
            open_line[node] = 1
        rows_open = a
        cols_open = b
        i = 0
        ne = 0
        while True:
            if ne >= nb and not (rows_open == 1 and cols_open == 1):
                raise ArithmeticError("initial-solution construction overflow")
            while not open_line[i]:
                i += 1
            if rows_open == 1 and cols_open == 1:
                j = 0
                while not open_line[a + j]:
                    j += 1
                q = rem_s[i] if rem_s[i] <= rem_d[j] else rem_d[j]
                ei[ne] = i
                ej[ne] = j
                ef[ne] = q
                is_basic[i * b + j] = 1
                ne += 1
                break
            j = -1
            best = 0.0
            for k in range(b):
                if open_line[a + k] and (j < 0 or cost[i * b + k] < best):
                    best = cost[i * b + k]
                    j = k
            q = rem_s[i] if rem_s[i] <= rem_d[j] else rem_d[j]
            ei[ne] = i
            ej[ne] = j
            ef[ne] = q
            is_basic[i * b + j] = 1
            ne += 1
            rem_s[i] -= q
            rem_d[j] -= q
            # close exactly one line; never the last row or the last column
            # (rounding of a near-balanced instance could otherwise strand
            # the leftover mass and close every line of one kind early)
            if rows_open > 1 and (rem_s[i] == 0.0 or cols_open == 1):
                open_line[i] = 0
                rows_open -= 1
            else:
                open_line[a + j] = 0
                cols_open -= 1

        max_iter = 200 * (a * b + 10)
        stall_limit = 4 * (a + b)
        stall = 0
        it = 0
        while it < max_iter:
            it += 1
            # CSR adjacency of the basis tree, edges in slot order per node
            for node in range(nn + 1):
                deg[node] = 0
            for e in range(nb):
                deg[ei[e] + 1] += 1
                deg[a + ej[e] + 1] += 1
            for node in range(nn):
                deg[node + 1] += deg[node]
            for node in range(nn):
                pos[node] = deg[node]
            for e in range(nb):
                adj[pos[ei[e]]] = e
                pos[ei[e]] += 1
                adj[pos[a + ej[e]]] = e
                pos[a + ej[e]] += 1

            # duals via BFS from row 0
            for node in range(nn):
                known[node] = 0
            known[0] = 1
            u[0] = 0.0
            queue[0] = 0
            head = 0
            tail = 1
            while head < tail:
                node = queue[head]
                head += 1
                for k in range(deg[node], deg[node + 1]):
                    e = adj[k]
                    other = a + ej[e] if node < a else ei[e]
                    if not known[other]:
                        if node < a:
                            v[ej[e]] = cost[ei[e] * b + ej[e]] - u[ei[e]]
                        else:
                            u[ei[e]] = cost[ei[e] * b + ej[e]] - v[ej[e]]
                        known[other] = 1
                        queue[tail] = other
                        tail += 1
            if tail != nn:
                raise ArithmeticError("transportation basis is not a spanning tree")

            # entering cell: most negative reduced cost (Dantzig), falling
            # back to first-negative (Bland) once pivots stall degenerately
            flat = -1
            if stall <= stall_limit:
                best = 0.0
                for i in range(a):
                    for j in range(b):
                        if not is_basic[i * b + j]:
                            rc = (cost[i * b + j] - u[i]) - v[j]
                            if rc < best:
                                best = rc
                                flat = i * b + j
                if flat >= 0 and best >= -_TOL:
                    flat = -1
            else:
                for i in range(a):
                    for j in range(b):
                        if not is_basic[i * b + j]:
                            rc = (cost[i * b + j] - u[i]) - v[j]
                            if rc < -_TOL:
                                flat = i * b + j
                                break
                    if flat >= 0:
                        break
            if flat < 0:
                break
            i0 = flat // b
            j0 = flat % b

            # unique tree path from row i0 to col j0
            for node in range(nn):
                known[node] = 0
                parent_node[node] = -1
                parent_edge[node] = -1
            known[i0] = 1
            queue[0] = i0
            head = 0
            tail = 1
            target = a + j0
            while head < tail:
                node = queue[head]
                head += 1
                if node == target:
                    break
                for k in range(deg[node], deg[node + 1]):
                    e = adj[k]
                    other = a + ej[e] if node < a else ei[e]
                    if not known[other]:
                        known[other] = 1
                        parent_node[other] = node
                        parent_edge[other] = e
                        queue[tail] = other
                        tail += 1
            plen = 0
            node = target
            while node != i0:
                path[plen] = parent_edge[node]
                node = parent_node[node]
                plen += 1
            # reverse into forward order from i0
            for k in range(plen // 2):
                e = path[k]
                path[k] = path[plen - 1 - k]
                path[plen - 1 - k] = e

            # even positions (0-based) lose theta
            theta = -1.0
            for k in range(0, plen, 2):
                f = ef[path[k]]
                if theta < 0.0 or f < theta:
                    theta = f
            leave = -1
            li = -1
            lj = -1
            for k in range(0, plen, 2):
                e = path[k]
                if ef[e] == theta:
                    if leave < 0 or ei[e] < li or (ei[e] == li and ej[e] < lj):
                        leave = e
                        li = ei[e]
                        lj = ej[e]
            for k in range(plen):
                if k % 2 == 0:
                    ef[path[k]] -= theta
                else:
                    ef[path[k]] += theta

            is_basic[li * b + lj] = 0
            is_basic[flat] = 1
            ei[leave] = i0
            ej[leave] = j0
            ef[leave] = theta
            stall = stall + 1 if theta == 0.0 else 0
        else:
            raise ArithmeticError("transportation simplex failed to converge")

        for i in range(a * b):
            flow[i] = 0.0
        total = 0.0
        for e in range(nb):
            flow[ei[e] * b + ej[e]] += ef[e]
            total += ef[e] * cost[ei[e] * b + ej[e]]
        return total
    finally:
        free(rem_s); free(rem_d); free(ef); free(u); free(v); free(ei)
        free(ej); free(is_basic); free(deg); free(adj); free(pos)
        free(known); free(queue); free(parent_node); free(parent_edge)
        free(path); free(open_line)


def solve_balanced(double[::1] supply, double[::1] demand,
                   double[:, ::1] cost, double[:, ::1] flow):
    """Same contract as the pure kernel: fills `flow`, returns the cost."""
    cdef Py_ssize_t a = supply.shape[0]
    cdef Py_ssize_t b = demand.shape[0]
    cdef Py_ssize_t i, j
    cdef double total
    cdef double *c = <double *> malloc(a * b * sizeof(double))
    cdef double *f = <double *> malloc(a * b * sizeof(double))
    if c == NULL or f == NULL:
        free(c); free(f)
        raise MemoryError()
    try:
        for i in range(a):
            for j in range(b):
                c[i * b + j] = cost[i, j]
        total = _core(a, b, &supply[0], &demand[0], c, f)
        for i in range(a):
            for j in range(b):
                flow[i, j] = f[i * b + j]
        return total
    finally:
        free(c)
        free(f)


def emd_cost(double[::1] w_i, double[::1] w_j, double[:, ::1] ground):
    """Earth-mover cost between two non-negative weight vectors over a shared
    ground-distance matrix: optimal transport cost divided by the smaller
    total mass. Zero masses on both sides give 0.0, on one side infinity."""
    cdef Py_ssize_t n = w_i.shape[0]
    cdef Py_ssize_t i, j, a, b, aa, bb, ii, jj
    cdef double tx = 0.0
    cdef double ty = 0.0
    cdef double wm, total
    for i in range(n):
        tx += w_i[i]
    for j in range(n):
        ty += w_j[j]
    wm = tx if tx <= ty else ty
    if wm == 0.0:
        return 0.0 if tx == ty else INFINITY

    a = 0
    b = 0
    for i in range(n):
        if w_i[i] > 0.0:
            a += 1
        if w_j[i] > 0.0:
            b += 1
    aa = a + 1 if ty > tx else a
    bb = b + 1 if tx > ty else b

    cdef double *xs = <double *> malloc(aa * sizeof(double))
    cdef double *ys = <double *> malloc(bb * sizeof(double))
    cdef double *cs = <double *> malloc(aa * bb * sizeof(double))
    cdef double *fs = <double *> malloc(aa * bb * sizeof(double))
    cdef Py_ssize_t *ridx = <Py_ssize_t *> malloc(a * sizeof(Py_ssize_t))
    cdef Py_ssize_t *cidx = <Py_ssize_t *> malloc(b * sizeof(Py_ssize_t))
    if (xs == NULL or ys == NULL or cs == NULL or fs == NULL
            or ridx == NULL or cidx == NULL):
        free(xs); free(ys); free(cs); free(fs); free(ridx); free(cidx)
        raise MemoryError()
    try:
        ii = 0
        for i in range(n):
            if w_i[i] > 0.0:
                xs[ii] = w_i[i]
                ridx[ii] = i
                ii += 1
        jj = 0
        for j in range(n):
            if w_j[j] > 0.0:
                ys[jj] = w_j[j]
                cidx[jj] = j
                jj += 1
        if ty > tx:
            xs[a] = ty - tx
        if tx > ty:
            ys[b] = tx - ty
        for i in range(aa):
            for j in range(bb):
                if i < a and j < b:
                    cs[i * bb + j] = ground[ridx[i], cidx[j]]
                else:
                    cs[i * bb + j] = 0.0
        total = _core(aa, bb, xs, ys, cs, fs)
        return total / wm
    finally:
        free(xs); free(ys); free(cs); free(fs); free(ridx); free(cidx)
