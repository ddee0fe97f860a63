"""Pure-Python balanced-transportation simplex (fallback kernel).

Row-minimum initial solution (one line closed per allocation, so the basis
is a spanning tree), dual (u, v) pricing over the basis tree, Dantzig
entering rule (most negative reduced cost, first in row-major order on ties)
with a Bland first-negative fallback after prolonged degenerate stalling,
and a lexicographic leaving rule. Pivots are deterministic and match the
compiled kernel step for step.
"""

from __future__ import annotations

import numpy as np

_TOL = 1e-9


def solve_balanced(supply, demand, cost, flow):
    """Minimize sum(cost * flow) with exact row sums `supply` and column sums
    `demand` (sum(supply) == sum(demand)). Fills `flow` and returns the cost."""
    a = supply.shape[0]
    b = demand.shape[0]
    nb = a + b - 1
    rem_s = supply.astype(np.float64).copy()
    rem_d = demand.astype(np.float64).copy()
    ei = np.zeros(nb, dtype=np.intp)
    ej = np.zeros(nb, dtype=np.intp)
    ef = np.zeros(nb, dtype=np.float64)
    is_basic = np.zeros((a, b), dtype=bool)

    # row-minimum start: lowest open row ships to its cheapest open column;
    # every allocation closes exactly one line, the last closes both, which
    # yields a + b - 1 cells forming a spanning tree
    open_row = np.ones(a, dtype=bool)
    open_col = np.ones(b, dtype=bool)
    rows_open = a
    cols_open = b
    i = 0
    ne = 0
    while True:
        if ne >= nb and not (rows_open == 1 and cols_open == 1):
            raise ArithmeticError("initial-solution construction overflow")
        while not open_row[i]:
            i += 1
        if rows_open == 1 and cols_open == 1:
            j = int(np.argmax(open_col))
            q = rem_s[i] if rem_s[i] <= rem_d[j] else rem_d[j]
            ei[ne] = i
            ej[ne] = j
            ef[ne] = q
            is_basic[i, j] = True
            ne += 1
            break
        j = int(np.argmin(np.where(open_col, cost[i], np.inf)))
        q = rem_s[i] if rem_s[i] <= rem_d[j] else rem_d[j]
        ei[ne] = i
        ej[ne] = j
        ef[ne] = q
        is_basic[i, j] = True
        ne += 1
        rem_s[i] -= q
        rem_d[j] -= q
        # close exactly one line; never the last row or the last column
        # (rounding of a near-balanced instance could otherwise strand the
        # leftover mass and close every line of one kind early)
        if rows_open > 1 and (rem_s[i] == 0.0 or cols_open == 1):
            open_row[i] = False
            rows_open -= 1
        else:
            open_col[j] = False
            cols_open -= 1

    u = np.zeros(a, dtype=np.float64)
    v = np.zeros(b, dtype=np.float64)
    max_iter = 200 * (a * b + 10)
    stall_limit = 4 * (a + b)
    stall = 0
    for _ in range(max_iter):
        # adjacency of the basis tree: node ids 0..a-1 rows, a..a+b-1 cols
        adj = [[] for _ in range(a + b)]
        for e in range(nb):
            adj[ei[e]].append(e)
            adj[a + ej[e]].append(e)

        # duals via BFS from row 0 (u[0] = 0)
        known = np.zeros(a + b, dtype=bool)
        known[0] = True
        u[0] = 0.0
        queue = [0]
        head = 0
        while head < len(queue):
            node = queue[head]
            head += 1
            for e in adj[node]:
                other = a + ej[e] if node < a else ei[e]
                if not known[other]:
                    if node < a:
                        v[ej[e]] = cost[ei[e], ej[e]] - u[ei[e]]
                    else:
                        u[ei[e]] = cost[ei[e], ej[e]] - v[ej[e]]
                    known[other] = True
                    queue.append(other)
        if len(queue) != a + b:
            raise ArithmeticError("transportation basis is not a spanning tree")

        # entering variable: most negative reduced cost (Dantzig), falling
        # back to first-negative (Bland) once pivots stall degenerately
        rc = (cost - u[:, None]) - v[None, :]
        open_rc = np.where(is_basic, 0.0, rc)
        if stall <= stall_limit:
            flat = int(np.argmin(open_rc))
            if open_rc.flat[flat] >= -_TOL:
                break
        else:
            candidates = (open_rc < -_TOL).reshape(-1)
            if not candidates.any():
                break
            flat = int(np.argmax(candidates))
        i0, j0 = divmod(flat, b)

        # unique tree path from row i0 to col j0
        parent_node = np.full(a + b, -1, dtype=np.intp)
        parent_edge = np.full(a + b, -1, dtype=np.intp)
        seen = np.zeros(a + b, dtype=bool)
        seen[i0] = True
        queue = [i0]
        head = 0
        target = a + j0
        while head < len(queue):
            node = queue[head]
            head += 1
            if node == target:
                break
            for e in adj[node]:
                other = a + ej[e] if node < a else ei[e]
                if not seen[other]:
                    seen[other] = True
                    parent_node[other] = node
                    parent_edge[other] = e
                    queue.append(other)
        path = []
        node = target
        while node != i0:
            path.append(parent_edge[node])
            node = parent_node[node]
        path.reverse()

        # odd path positions (0-based even indices) lose theta
        theta = None
        for k in range(0, len(path), 2):
            f = ef[path[k]]
            if theta is None or f < theta:
                theta = f
        leave = -1
        li = lj = -1
        for k in range(0, len(path), 2):
            e = path[k]
            if ef[e] == theta:
                if leave < 0 or (ei[e], ej[e]) < (li, lj):
                    leave, li, lj = e, ei[e], ej[e]
        for k, e in enumerate(path):
            if k % 2 == 0:
                ef[e] -= theta
            else:
                ef[e] += theta

        is_basic[li, lj] = False
        is_basic[i0, j0] = True
        ei[leave] = i0
        ej[leave] = j0
        ef[leave] = theta
        stall = stall + 1 if theta == 0.0 else 0
    else:
        raise ArithmeticError("transportation simplex failed to converge")

    flow[:, :] = 0.0
    total = 0.0
    for e in range(nb):
        flow[ei[e], ej[e]] += ef[e]
        total += ef[e] * cost[ei[e], ej[e]]
    return total


def emd_cost(w_i, w_j, ground):
    """Earth-mover cost between two non-negative weight vectors: optimal
    transport cost divided by the smaller total mass (0.0 when both masses
    are zero, +inf when exactly one is)."""
    tx = float(np.sum(w_i))
    ty = float(np.sum(w_j))
    wm = min(tx, ty)
    if wm == 0.0:
        return 0.0 if tx == ty else float("inf")
    ri = np.nonzero(w_i > 0.0)[0]
    rj = np.nonzero(w_j > 0.0)[0]
    a, b = ri.size, rj.size
    aa = a + 1 if ty > tx else a
    bb = b + 1 if tx > ty else b
    xs = np.zeros(aa, dtype=np.float64)
    ys = np.zeros(bb, dtype=np.float64)
    xs[:a] = np.asarray(w_i, dtype=np.float64)[ri]
    ys[:b] = np.asarray(w_j, dtype=np.float64)[rj]
    if ty > tx:
        xs[a] = ty - tx
    if tx > ty:
        ys[b] = tx - ty
    cs = np.zeros((aa, bb), dtype=np.float64)
    cs[:a, :b] = np.asarray(ground, dtype=np.float64)[np.ix_(ri, rj)]
    fs = np.empty((aa, bb), dtype=np.float64)
    total = solve_balanced(xs, ys, cs, fs)
    return total / wm
