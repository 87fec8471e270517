"""Exact balanced-transportation solver (network simplex), pure-Python backend.

This is the reference implementation of the compiled kernel in
``_solver_cy.pyx``; both run the identical pivot sequence, so results match
bit-for-bit.  The algorithm is the classical transportation simplex:

* northwest-corner initial basis (always a spanning tree of m + n - 1 arcs),
* incremental basis-tree maintenance: each pivot re-roots only the subtree
  cut off by the leaving arc and shifts its duals by the entering arc's
  reduced cost (an exact constant-shift update),
* entering arc chosen by cyclic block search over reduced costs
  (most negative within the first violating block, blocks aligned and fixed),
* leaving arc = first minimum-flow backward arc along the basis cycle,
* Bland's rule fallback after an iteration cap to rule out degenerate cycling.

The stopping tolerance bounds suboptimality by tol * total_flow, far inside
the 1e-9 exactness budget of the metric layer.
"""

from __future__ import annotations

import math

import numpy as np

_BALANCE_TOL = 1e-9


def solve_transportation(supplies, demands, costs, tol=1e-12):
    """Minimize sum(f_ij * costs_ij) with row sums = supplies, col sums = demands.

    Supplies and demands must balance to within 1e-9 (relative).  Returns
    ``(cost, flows)`` where flows is a float64 array of (i, j, flow) triples
    for the final basis (zero-flow degenerate entries included).
    """
    a = np.ascontiguousarray(supplies, dtype=np.float64)
    b = np.ascontiguousarray(demands, dtype=np.float64)
    C = np.ascontiguousarray(costs, dtype=np.float64)
    if C.ndim != 2:
        raise ValueError("costs must be a 2-D matrix")
    m, n = C.shape
    if a.shape != (m,) or b.shape != (n,):
        raise ValueError("costs shape does not match supplies/demands")
    if m == 0 or n == 0:
        raise ValueError("empty transportation instance")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("negative supply or demand")
    total = a.sum()
    if abs(total - b.sum()) > _BALANCE_TOL * max(1.0, total):
        raise ValueError(f"unbalanced instance: supply {total} vs demand {b.sum()}")

    state = _State(m, n, C)
    _northwest_corner(a, b, state)
    _build_tree(state)

    mn = m * n
    block = max(64, int(math.sqrt(mn)))
    n_blocks = (mn + block - 1) // block
    start_block = 0
    bland_after = 50 * (m + n) + 1000
    hard_limit = 2000 * (m + n) + 200_000

    pivots = 0
    while True:
        bland = pivots >= bland_after
        entering = _find_entering(state, block, n_blocks, start_block, tol, bland)
        if entering < 0:
            break
        start_block = entering // block
        _pivot(state, entering // n, entering % n, bland)
        pivots += 1
        if pivots > hard_limit:
            raise RuntimeError("transportation simplex failed to terminate")

    np.maximum(state.arc_flow, 0.0, out=state.arc_flow)
    cost = float(np.dot(state.arc_flow, C[state.arc_i, state.arc_j]))
    flows = np.column_stack([
        state.arc_i.astype(np.float64),
        state.arc_j.astype(np.float64),
        state.arc_flow,
    ])
    return cost, flows


class _State:
    """Basis tree of the transportation simplex.

    Arc slot k keeps adjacency entries 2k (row endpoint) and 2k + 1 (column
    endpoint) in per-node doubly-linked lists, so a pivot can relink the
    reused slot in O(1).
    """

    def __init__(self, m, n, C):
        self.m = m
        self.n = n
        self.C = C
        self.flat_costs = C.reshape(-1)
        n_arcs = m + n - 1
        n_nodes = m + n
        self.n_arcs = n_arcs
        self.n_nodes = n_nodes
        self.arc_i = np.zeros(n_arcs, dtype=np.intp)
        self.arc_j = np.zeros(n_arcs, dtype=np.intp)
        self.arc_flow = np.zeros(n_arcs, dtype=np.float64)
        self.parent = np.full(n_nodes, -1, dtype=np.intp)
        self.parent_arc = np.full(n_nodes, -1, dtype=np.intp)
        self.depth = np.zeros(n_nodes, dtype=np.intp)
        self.potential = np.zeros(n_nodes, dtype=np.float64)
        self.adj_head = np.full(n_nodes, -1, dtype=np.intp)
        self.ent_next = np.full(2 * n_arcs, -1, dtype=np.intp)
        self.ent_prev = np.full(2 * n_arcs, -1, dtype=np.intp)
        self.queue = np.zeros(n_nodes, dtype=np.intp)

    def entry_node(self, e):
        k = e >> 1
        return self.arc_i[k] if (e & 1) == 0 else self.m + self.arc_j[k]

    def link(self, e):
        node = self.entry_node(e)
        head = self.adj_head[node]
        self.ent_next[e] = head
        self.ent_prev[e] = -1
        if head != -1:
            self.ent_prev[head] = e
        self.adj_head[node] = e

    def unlink(self, e):
        node = self.entry_node(e)
        nxt = self.ent_next[e]
        prv = self.ent_prev[e]
        if prv != -1:
            self.ent_next[prv] = nxt
        else:
            self.adj_head[node] = nxt
        if nxt != -1:
            self.ent_prev[nxt] = prv


def _northwest_corner(a, b, state):
    m = state.m
    n = state.n
    a_rem = a.copy()
    b_rem = b.copy()
    i = 0
    j = 0
    for k in range(m + n - 1):
        f = a_rem[i] if a_rem[i] < b_rem[j] else b_rem[j]
        state.arc_i[k] = i
        state.arc_j[k] = j
        state.arc_flow[k] = f
        a_rem[i] -= f
        b_rem[j] -= f
        if i < m - 1 and a_rem[i] <= 0.0:
            i += 1
        elif j < n - 1:
            j += 1
        elif i < m - 1:
            i += 1


def _build_tree(state):
    """Link all adjacency entries, then root the tree at node 0 and solve duals."""
    for k in range(state.n_arcs):
        state.link(2 * k)
        state.link(2 * k + 1)
    state.parent[0] = -1
    state.parent_arc[0] = -1
    state.depth[0] = 0
    state.potential[0] = 0.0
    queue = state.queue
    queue[0] = 0
    head = 0
    tail = 1
    while head < tail:
        node = queue[head]
        head += 1
        e = state.adj_head[node]
        while e != -1:
            k = e >> 1
            other = state.m + state.arc_j[k] if node == state.arc_i[k] else state.arc_i[k]
            if other != state.parent[node]:
                state.parent[other] = node
                state.parent_arc[other] = k
                state.depth[other] = state.depth[node] + 1
                state.potential[other] = (
                    state.C[state.arc_i[k], state.arc_j[k]] - state.potential[node]
                )
                queue[tail] = other
                tail += 1
            e = state.ent_next[e]
    if tail != state.n_nodes:
        raise RuntimeError("initial basis is not a spanning tree")


def _find_entering(state, block, n_blocks, start_block, tol, bland):
    """Flattened index of the entering arc, or -1 if the basis is optimal."""
    m, n, mn = state.m, state.n, state.m * state.n
    u = state.potential[:m]
    v = state.potential[m:]
    flat = state.flat_costs
    if bland:
        red = flat - np.repeat(u, n) - np.tile(v, m)
        hits = red < -tol
        if not hits.any():
            return -1
        return int(np.argmax(hits))
    q = start_block
    for _ in range(n_blocks):
        lo = q * block
        hi = min(lo + block, mn)
        idx = np.arange(lo, hi)
        red = flat[lo:hi] - u[idx // n] - v[idx % n]
        k = int(np.argmin(red))
        if red[k] < -tol:
            return lo + k
        q += 1
        if q >= n_blocks:
            q = 0
    return -1


def _pivot(state, ei, ej, bland):
    """Bring arc (ei, ej) into the basis along its unique tree cycle.

    Walking up from both endpoints to their lowest common ancestor yields the
    cycle; arcs at even positions from either endpoint lose theta, the rest
    gain it.  The entering arc reuses the leaving arc's slot, and the subtree
    cut off by the leaving arc is re-rooted at the entering endpoint with a
    constant dual shift.
    """
    m = state.m
    n = state.n
    parent = state.parent
    parent_arc = state.parent_arc
    depth = state.depth
    arc_flow = state.arc_flow
    arc_i = state.arc_i
    arc_j = state.arc_j

    row_end = ei
    col_end = m + ej
    red = state.C[ei, ej] - state.potential[row_end] - state.potential[col_end]

    x = row_end
    y = col_end
    path1 = []
    path2 = []
    while depth[x] > depth[y]:
        path1.append(parent_arc[x])
        x = parent[x]
    while depth[y] > depth[x]:
        path2.append(parent_arc[y])
        y = parent[y]
    while x != y:
        path1.append(parent_arc[x])
        x = parent[x]
        path2.append(parent_arc[y])
        y = parent[y]

    theta = math.inf
    leaving = -1
    on_path1 = True
    for pos, k in enumerate(path1):
        if pos % 2 == 0 and arc_flow[k] < theta:
            theta = arc_flow[k]
            leaving = k
    for pos, k in enumerate(path2):
        if pos % 2 == 0 and arc_flow[k] < theta:
            theta = arc_flow[k]
            leaving = k
            on_path1 = False
    if leaving < 0:
        raise RuntimeError("unbounded pivot in balanced transportation problem")
    if bland:
        best_id = arc_i[leaving] * n + arc_j[leaving]
        for pos, k in enumerate(path1):
            if pos % 2 == 0 and arc_flow[k] == theta:
                kid = arc_i[k] * n + arc_j[k]
                if kid < best_id:
                    best_id = kid
                    leaving = k
                    on_path1 = True
        for pos, k in enumerate(path2):
            if pos % 2 == 0 and arc_flow[k] == theta:
                kid = arc_i[k] * n + arc_j[k]
                if kid < best_id:
                    best_id = kid
                    leaving = k
                    on_path1 = False

    for pos, k in enumerate(path1):
        arc_flow[k] += theta if pos % 2 == 1 else -theta
    for pos, k in enumerate(path2):
        arc_flow[k] += theta if pos % 2 == 1 else -theta

    # The leaving arc cuts off the subtree holding exactly one entering
    # endpoint: the row end if the leaving arc sat on its path, else the
    # column end.
    q = row_end if on_path1 else col_end
    p = col_end if on_path1 else row_end

    # Collect the cut subtree before touching adjacency: BFS from the child
    # endpoint of the leaving arc, never crossing the leaving arc itself.
    lu = arc_i[leaving]
    lw = m + arc_j[leaving]
    child_end = lu if parent_arc[lu] == leaving else lw
    queue = state.queue
    queue[0] = child_end
    size = 1
    head = 0
    while head < size:
        node = queue[head]
        head += 1
        e = state.adj_head[node]
        while e != -1:
            k = e >> 1
            if k != leaving:
                other = m + arc_j[k] if node == arc_i[k] else arc_i[k]
                if other != parent[node]:
                    queue[size] = other
                    size += 1
            e = state.ent_next[e]

    # Exact dual update: every node in the cut subtree shifts by the entering
    # arc's reduced cost, rows and columns in opposite directions.
    row_shift = red if q == row_end else -red
    for t in range(size):
        node = queue[t]
        state.potential[node] += row_shift if node < m else -row_shift

    # Reuse the leaving slot for the entering arc and fix adjacency.
    state.unlink(2 * leaving)
    state.unlink(2 * leaving + 1)
    arc_i[leaving] = ei
    arc_j[leaving] = ej
    arc_flow[leaving] = theta
    state.link(2 * leaving)
    state.link(2 * leaving + 1)

    # Re-root the cut subtree at q: its parent is now p over the reused slot.
    parent[q] = p
    parent_arc[q] = leaving
    depth[q] = depth[p] + 1
    queue[0] = q
    head = 0
    tail = 1
    while head < tail:
        node = queue[head]
        head += 1
        e = state.adj_head[node]
        while e != -1:
            k = e >> 1
            if k != parent_arc[node]:
                other = m + arc_j[k] if node == arc_i[k] else arc_i[k]
                parent[other] = node
                parent_arc[other] = k
                depth[other] = depth[node] + 1
                queue[tail] = other
                tail += 1
            e = state.ent_next[e]
