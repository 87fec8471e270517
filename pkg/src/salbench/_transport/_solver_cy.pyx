# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# cython: language_level=3
"""Exact balanced-transportation solver (network simplex), compiled backend.

Mirrors ``_solver_py.py`` operation for operation (same initial basis, same
pivot rules, same floating-point evaluation order), so the two backends
produce bit-identical results; see that module for the algorithm notes.
"""

import numpy as np

from libc.math cimport INFINITY, sqrt

_BALANCE_TOL = 1e-9


cdef inline Py_ssize_t _entry_node(Py_ssize_t e, Py_ssize_t m,
                                   Py_ssize_t[::1] arc_i, Py_ssize_t[::1] arc_j) nogil:
    cdef Py_ssize_t k = e >> 1
    if (e & 1) == 0:
        return arc_i[k]
    return m + arc_j[k]


cdef inline void _link(Py_ssize_t e, Py_ssize_t m,
                       Py_ssize_t[::1] arc_i, Py_ssize_t[::1] arc_j,
                       Py_ssize_t[::1] adj_head, Py_ssize_t[::1] ent_next,
                       Py_ssize_t[::1] ent_prev) nogil:
    cdef Py_ssize_t node = _entry_node(e, m, arc_i, arc_j)
    cdef Py_ssize_t head = adj_head[node]
    ent_next[e] = head
    ent_prev[e] = -1
    if head != -1:
        ent_prev[head] = e
    adj_head[node] = e


cdef inline void _unlink(Py_ssize_t e, Py_ssize_t m,
                         Py_ssize_t[::1] arc_i, Py_ssize_t[::1] arc_j,
                         Py_ssize_t[::1] adj_head, Py_ssize_t[::1] ent_next,
                         Py_ssize_t[::1] ent_prev) nogil:
    cdef Py_ssize_t node = _entry_node(e, m, arc_i, arc_j)
    cdef Py_ssize_t nxt = ent_next[e]
    cdef Py_ssize_t prv = ent_prev[e]
    if prv != -1:
        ent_next[prv] = nxt
    else:
        adj_head[node] = nxt
    if nxt != -1:
        ent_prev[nxt] = prv


cdef void _northwest_corner(double[::1] a_rem, double[::1] b_rem,
                            Py_ssize_t[::1] arc_i, Py_ssize_t[::1] arc_j,
                            double[::1] arc_flow) nogil:
    cdef Py_ssize_t m = a_rem.shape[0]
    cdef Py_ssize_t n = b_rem.shape[0]
    cdef Py_ssize_t i = 0, j = 0, k
    cdef double f
    for k in range(m + n - 1):
        f = a_rem[i] if a_rem[i] < b_rem[j] else b_rem[j]
        arc_i[k] = i
        arc_j[k] = j
        arc_flow[k] = f
        a_rem[i] -= f
        b_rem[j] -= f
        if i < m - 1 and a_rem[i] <= 0.0:
            i += 1
        elif j < n - 1:
            j += 1
        elif i < m - 1:
            i += 1


cdef int _build_tree(Py_ssize_t m, Py_ssize_t n_nodes,
                     Py_ssize_t[::1] arc_i, Py_ssize_t[::1] arc_j,
                     double[:, ::1] C,
                     Py_ssize_t[::1] parent, Py_ssize_t[::1] parent_arc,
                     Py_ssize_t[::1] depth, double[::1] potential,
                     Py_ssize_t[::1] adj_head, Py_ssize_t[::1] ent_next,
                     Py_ssize_t[::1] ent_prev, Py_ssize_t[::1] queue) nogil:
    cdef Py_ssize_t n_arcs = arc_i.shape[0]
    cdef Py_ssize_t k, node, other, e, head, tail
    for k in range(n_arcs):
        _link(2 * k, m, arc_i, arc_j, adj_head, ent_next, ent_prev)
        _link(2 * k + 1, m, arc_i, arc_j, adj_head, ent_next, ent_prev)
    parent[0] = -1
    parent_arc[0] = -1
    depth[0] = 0
    potential[0] = 0.0
    queue[0] = 0
    head = 0
    tail = 1
    while head < tail:
        node = queue[head]
        head += 1
        e = adj_head[node]
        while e != -1:
            k = e >> 1
            other = (m + arc_j[k]) if node == arc_i[k] else arc_i[k]
            if other != parent[node]:
                parent[other] = node
                parent_arc[other] = k
                depth[other] = depth[node] + 1
                potential[other] = C[arc_i[k], arc_j[k]] - potential[node]
                queue[tail] = other
                tail += 1
            e = ent_next[e]
    return 0 if tail == n_nodes else -1


cdef Py_ssize_t _find_entering(double[::1] flat, double[::1] potential,
                               Py_ssize_t m, Py_ssize_t n, Py_ssize_t mn,
                               Py_ssize_t block, Py_ssize_t n_blocks,
                               Py_ssize_t start_block, double tol,
                               bint bland) nogil:
    cdef Py_ssize_t q, lo, hi, t, i, j, best_idx, it
    cdef double red, best
    if bland:
        for t in range(mn):
            i = t // n
            j = t - i * n
            red = flat[t] - potential[i] - potential[m + j]
            if red < -tol:
                return t
        return -1
    q = start_block
    for it in range(n_blocks):
        lo = q * block
        hi = lo + block
        if hi > mn:
            hi = mn
        best = INFINITY
        best_idx = -1
        for t in range(lo, hi):
            i = t // n
            j = t - i * n
            red = flat[t] - potential[i] - potential[m + j]
            if red < best:
                best = red
                best_idx = t
        if best < -tol:
            return best_idx
        q += 1
        if q >= n_blocks:
            q = 0
    return -1


cdef int _pivot(Py_ssize_t ei, Py_ssize_t ej, Py_ssize_t m, Py_ssize_t n,
                double[:, ::1] C,
                Py_ssize_t[::1] arc_i, Py_ssize_t[::1] arc_j, double[::1] arc_flow,
                Py_ssize_t[::1] parent, Py_ssize_t[::1] parent_arc,
                Py_ssize_t[::1] depth, double[::1] potential,
                Py_ssize_t[::1] adj_head, Py_ssize_t[::1] ent_next,
                Py_ssize_t[::1] ent_prev, Py_ssize_t[::1] queue,
                Py_ssize_t[::1] path1, Py_ssize_t[::1] path2,
                bint bland) nogil:
    cdef Py_ssize_t row_end = ei
    cdef Py_ssize_t col_end = m + ej
    cdef double red = C[ei, ej] - potential[row_end] - potential[col_end]
    cdef Py_ssize_t x = row_end, y = col_end
    cdef Py_ssize_t len1 = 0, len2 = 0
    cdef Py_ssize_t pos, k, leaving, other, e, lu, lw, child_end
    cdef Py_ssize_t q, p, node, size, head, tail, best_id, kid
    cdef double theta, row_shift
    cdef bint on_path1

    while depth[x] > depth[y]:
        path1[len1] = parent_arc[x]
        len1 += 1
        x = parent[x]
    while depth[y] > depth[x]:
        path2[len2] = parent_arc[y]
        len2 += 1
        y = parent[y]
    while x != y:
        path1[len1] = parent_arc[x]
        len1 += 1
        x = parent[x]
        path2[len2] = parent_arc[y]
        len2 += 1
        y = parent[y]

    theta = INFINITY
    leaving = -1
    on_path1 = True
    for pos in range(0, len1, 2):
        k = path1[pos]
        if arc_flow[k] < theta:
            theta = arc_flow[k]
            leaving = k
    for pos in range(0, len2, 2):
        k = path2[pos]
        if arc_flow[k] < theta:
            theta = arc_flow[k]
            leaving = k
            on_path1 = False
    if leaving < 0:
        return -1
    if bland:
        best_id = arc_i[leaving] * n + arc_j[leaving]
        for pos in range(0, len1, 2):
            k = path1[pos]
            if arc_flow[k] == theta:
                kid = arc_i[k] * n + arc_j[k]
                if kid < best_id:
                    best_id = kid
                    leaving = k
                    on_path1 = True
        for pos in range(0, len2, 2):
            k = path2[pos]
            if arc_flow[k] == theta:
                kid = arc_i[k] * n + arc_j[k]
                if kid < best_id:
                    best_id = kid
                    leaving = k
                    on_path1 = False

    for pos in range(len1):
        if pos % 2 == 1:
            arc_flow[path1[pos]] += theta
        else:
            arc_flow[path1[pos]] -= theta
    for pos in range(len2):
        if pos % 2 == 1:
            arc_flow[path2[pos]] += theta
        else:
            arc_flow[path2[pos]] -= theta

    q = row_end if on_path1 else col_end
    p = col_end if on_path1 else row_end

    lu = arc_i[leaving]
    lw = m + arc_j[leaving]
    child_end = lu if parent_arc[lu] == leaving else lw
    queue[0] = child_end
    size = 1
    head = 0
    while head < size:
        node = queue[head]
        head += 1
        e = adj_head[node]
        while e != -1:
            k = e >> 1
            if k != leaving:
                other = (m + arc_j[k]) if node == arc_i[k] else arc_i[k]
                if other != parent[node]:
                    queue[size] = other
                    size += 1
            e = ent_next[e]

    row_shift = red if q == row_end else -red
    for pos in range(size):
        node = queue[pos]
        if node < m:
            potential[node] += row_shift
        else:
            potential[node] -= row_shift

    _unlink(2 * leaving, m, arc_i, arc_j, adj_head, ent_next, ent_prev)
    _unlink(2 * leaving + 1, m, arc_i, arc_j, adj_head, ent_next, ent_prev)
    arc_i[leaving] = ei
    arc_j[leaving] = ej
    arc_flow[leaving] = theta
    _link(2 * leaving, m, arc_i, arc_j, adj_head, ent_next, ent_prev)
    _link(2 * leaving + 1, m, arc_i, arc_j, adj_head, ent_next, ent_prev)

    parent[q] = p
    parent_arc[q] = leaving
    depth[q] = depth[p] + 1
    queue[0] = q
    head = 0
    tail = 1
    while head < tail:
        node = queue[head]
        head += 1
        e = adj_head[node]
        while e != -1:
            k = e >> 1
            if k != parent_arc[node]:
                other = (m + arc_j[k]) if node == arc_i[k] else arc_i[k]
                parent[other] = node
                parent_arc[other] = k
                depth[other] = depth[node] + 1
                queue[tail] = other
                tail += 1
            e = ent_next[e]
    return 0


def solve_transportation(supplies, demands, costs, double tol=1e-12):
    """Minimize sum(f_ij * costs_ij) with row sums = supplies, col sums = demands.

    Same contract as the pure-Python backend: balanced inputs, returns
    ``(cost, flows)`` with flows as (i, j, flow) triples of the final basis.
    """
    a = np.ascontiguousarray(supplies, dtype=np.float64)
    b = np.ascontiguousarray(demands, dtype=np.float64)
    C = np.ascontiguousarray(costs, dtype=np.float64)
    if C.ndim != 2:
        raise ValueError("costs must be a 2-D matrix")
    cdef Py_ssize_t m = C.shape[0]
    cdef Py_ssize_t n = C.shape[1]
    if a.shape != (m,) or b.shape != (n,):
        raise ValueError("costs shape does not match supplies/demands")
    if m == 0 or n == 0:
        raise ValueError("empty transportation instance")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("negative supply or demand")
    total = a.sum()
    if abs(total - b.sum()) > _BALANCE_TOL * max(1.0, total):
        raise ValueError(f"unbalanced instance: supply {total} vs demand {b.sum()}")

    cdef Py_ssize_t n_arcs = m + n - 1
    cdef Py_ssize_t n_nodes = m + n
    arc_i_np = np.zeros(n_arcs, dtype=np.intp)
    arc_j_np = np.zeros(n_arcs, dtype=np.intp)
    arc_flow_np = np.zeros(n_arcs, dtype=np.float64)
    cdef Py_ssize_t[::1] arc_i = arc_i_np
    cdef Py_ssize_t[::1] arc_j = arc_j_np
    cdef double[::1] arc_flow = arc_flow_np
    cdef Py_ssize_t[::1] parent = np.full(n_nodes, -1, dtype=np.intp)
    cdef Py_ssize_t[::1] parent_arc = np.full(n_nodes, -1, dtype=np.intp)
    cdef Py_ssize_t[::1] depth = np.zeros(n_nodes, dtype=np.intp)
    cdef double[::1] potential = np.zeros(n_nodes, dtype=np.float64)
    cdef Py_ssize_t[::1] adj_head = np.full(n_nodes, -1, dtype=np.intp)
    cdef Py_ssize_t[::1] ent_next = np.full(2 * n_arcs, -1, dtype=np.intp)
    cdef Py_ssize_t[::1] ent_prev = np.full(2 * n_arcs, -1, dtype=np.intp)
    cdef Py_ssize_t[::1] queue = np.zeros(n_nodes, dtype=np.intp)
    cdef Py_ssize_t[::1] path1 = np.zeros(n_nodes, dtype=np.intp)
    cdef Py_ssize_t[::1] path2 = np.zeros(n_nodes, dtype=np.intp)
    cdef double[::1] a_rem = a.copy()
    cdef double[::1] b_rem = b.copy()
    cdef double[:, ::1] Cv = C
    flat_np = C.reshape(-1)
    cdef double[::1] flat = flat_np

    _northwest_corner(a_rem, b_rem, arc_i, arc_j, arc_flow)
    if _build_tree(m, n_nodes, arc_i, arc_j, Cv, parent, parent_arc, depth,
                   potential, adj_head, ent_next, ent_prev, queue) != 0:
        raise RuntimeError("initial basis is not a spanning tree")

    cdef Py_ssize_t mn = m * n
    cdef Py_ssize_t block = max(64, <Py_ssize_t>sqrt(<double>mn))
    cdef Py_ssize_t n_blocks = (mn + block - 1) // block
    cdef Py_ssize_t start_block = 0
    cdef Py_ssize_t bland_after = 50 * (m + n) + 1000
    cdef Py_ssize_t hard_limit = 2000 * (m + n) + 200_000
    cdef Py_ssize_t pivots = 0
    cdef Py_ssize_t entering
    cdef bint bland

    while True:
        bland = pivots >= bland_after
        entering = _find_entering(flat, potential, m, n, mn, block, n_blocks,
                                  start_block, tol, bland)
        if entering < 0:
            break
        start_block = entering // block
        if _pivot(entering // n, entering % n, m, n, Cv,
                  arc_i, arc_j, arc_flow, parent, parent_arc, depth, potential,
                  adj_head, ent_next, ent_prev, queue, path1, path2, bland) != 0:
            raise RuntimeError("unbounded pivot in balanced transportation problem")
        pivots += 1
        if pivots > hard_limit:
            raise RuntimeError("transportation simplex failed to terminate")

    np.maximum(arc_flow_np, 0.0, out=arc_flow_np)
    cost = float(np.dot(arc_flow_np, C[arc_i_np, arc_j_np]))
    flows = np.column_stack([
        arc_i_np.astype(np.float64),
        arc_j_np.astype(np.float64),
        arc_flow_np,
    ])
    return cost, flows
