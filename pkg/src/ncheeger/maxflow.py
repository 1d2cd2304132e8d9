"""Exact minimum s-t cut on grid-shaped networks.

Augmenting-path solver in the search-tree style: two BFS trees grown from
the terminals, bridged paths augmented, orphaned subtrees re-adopted
instead of rebuilt. This family wins on shallow grid graphs, and the ratio
iteration in the single-set solver re-solves near-identical networks, so
tree reuse per solve is what matters.

The instances here have supply spread over every interior pixel, which is
the worst case for one-path-at-a-time augmentation (each pixel's terminal
arc drains separately over a path as long as its depth). A feasible-flow
warm start routes the bulk of that supply toward the sink-linked rim in two
linear sweeps before the tree phase begins; any feasible flow leaves the
max flow and the min cut unchanged, so the trees only finish the remainder.

Terminal links are folded: a node with source capacity s and sink capacity
t carries the single signed residual tr = s - t, and min(s, t) joins the
flow constant. Capacities stay in floating point; residual tests use a
relative slack of 1e-9 (the perimeter weights are irrational, so integer
scaling is not an option).

The returned source side is always the MAXIMAL minimum cut: the complement
of the nodes that still reach the sink in the residual network. Minimum
cuts are closed under union, so that complement is itself a minimizer and
contains every other one.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from numba import njit

_NONE = -1
_TERMINAL = -2


@dataclasses.dataclass(frozen=True, eq=False)
class FlowNetwork:
    """n nodes plus implicit source/sink.

    u, v, cap define symmetric n-links (each unordered pair once);
    cap_src/cap_snk are per-node terminal capacities. All capacities must
    be finite and non-negative.
    """

    n: int
    u: np.ndarray
    v: np.ndarray
    cap: np.ndarray
    cap_src: np.ndarray
    cap_snk: np.ndarray

    def __post_init__(self):
        if self.u.shape != self.v.shape or self.u.shape != self.cap.shape:
            raise ValueError("edge arrays must share a shape")
        if self.cap_src.shape != (self.n,) or self.cap_snk.shape != (self.n,):
            raise ValueError("terminal capacity arrays must have one entry per node")
        for c in (self.cap, self.cap_src, self.cap_snk):
            if c.size and (not np.isfinite(c).all() or c.min() < 0):
                raise ValueError("capacities must be finite and non-negative")
        if self.u.size:
            lo = min(int(self.u.min()), int(self.v.min()))
            hi = max(int(self.u.max()), int(self.v.max()))
            if lo < 0 or hi >= self.n:
                raise ValueError("edge endpoint out of range")
            if (self.u == self.v).any():
                raise ValueError("self-loops are not allowed")


@dataclasses.dataclass(frozen=True, eq=False)
class CutResult:
    value: float
    source_side: np.ndarray  # bool per node


def build_csr(n: int, u: np.ndarray, v: np.ndarray):
    """Adjacency in CSR form with paired directed arcs.

    Arc 2e runs u[e] -> v[e], arc 2e+1 runs v[e] -> u[e]; the reverse of
    arc a is a ^ 1. Returns (first, adj_to, adj_arc): the arcs leaving
    node p are adj_arc[first[p]:first[p+1]] toward adj_to[...].
    """
    m = u.size
    nodes = np.concatenate([u, v])
    to = np.concatenate([v, u])
    arcs = np.concatenate([2 * np.arange(m, dtype=np.int64), 2 * np.arange(m, dtype=np.int64) + 1])
    order = np.argsort(nodes, kind="stable")
    first = np.zeros(n + 1, np.int64)
    np.cumsum(np.bincount(nodes, minlength=n), out=first[1:])
    return first, to[order], arcs[order]


@njit(cache=True, nogil=True)
def _origin_dist(q, parent_arc, parent_node, ts, dist, time):
    """Distance from q to its tree's terminal, or -1 if the path upward
    dead-ends in an orphan. Caches results along the walked path."""
    steps = 0
    i = q
    dq = np.int64(-1)
    while True:
        if ts[i] == time:
            dq = steps + dist[i]
            break
        pa = parent_arc[i]
        if pa == _TERMINAL:
            dq = steps + 1
            break
        if pa == _NONE:
            return np.int64(-1)
        steps += 1
        i = parent_node[i]
    i = q
    dd = dq
    while ts[i] != time:
        ts[i] = time
        dist[i] = dd
        if parent_arc[i] == _TERMINAL:
            break
        dd -= 1
        i = parent_node[i]
    return dq


@njit(cache=True, nogil=True)
def _drain_init(first, adj_to, adj_arc, alen, rcap, tr, eps):
    """Feasible-flow warm start. Routes source supply toward sink-linked
    nodes along a BFS distance field: one far-to-near sweep pushes, one
    near-to-far sweep refunds whatever the rim or saturated links refused.
    Mutates rcap/tr into the residual of a feasible flow and returns the
    amount absorbed at the sink. Requires symmetric n-link base capacities
    (refunds recover per-arc flow as half the residual imbalance).

    Levels are grown over unit-length arcs only, so every layer is one
    pixel thick and the long stencil arcs span layers instead of running
    inside one; pushes may descend any number of levels at once.
    """
    n = first.size - 1
    d = np.full(n, -1, np.int64)
    bfs = np.empty(n, np.int64)
    qt = 0
    for i in range(n):
        if tr[i] < -eps:
            d[i] = 0
            bfs[qt] = i
            qt += 1
    if qt == 0:
        return 0.0
    qh = 0
    while qh < qt:
        q = bfs[qh]
        qh += 1
        for a in range(first[q], first[q + 1]):
            i = adj_to[a]
            # i drains through the arc i -> q, the pair of the listed one
            if d[i] < 0 and alen[adj_arc[a]] == 1 and rcap[adj_arc[a] ^ 1] > eps:
                d[i] = d[q] + 1
                bfs[qt] = i
                qt += 1
    reached = qt

    flow = 0.0
    carry = np.zeros(n)  # arrived but not yet disposed of
    draw = np.zeros(n)  # own supply pulled from tr, restorable
    # bfs is ordered by nondecreasing depth; run it backwards so every
    # node pushes before its targets do
    for k in range(reached - 1, -1, -1):
        i = bfs[k]
        di = d[i]
        if di == 0:
            take = carry[i] if carry[i] < -tr[i] else -tr[i]
            if take > 0.0:
                tr[i] += take
                carry[i] -= take
                flow += take
            continue
        own = tr[i] if tr[i] > eps else 0.0
        e = carry[i] + own
        if e <= eps:
            continue
        # split proportionally to downhill capacity; an even flux field
        # strands far less than greedy fill on smooth interiors
        cap_out = 0.0
        for a in range(first[i], first[i + 1]):
            q = adj_to[a]
            if 0 <= d[q] < di:
                cap_out += rcap[adj_arc[a]]
        if cap_out <= eps:
            continue
        if e > cap_out:
            e = cap_out
        pushed = 0.0
        for a in range(first[i], first[i + 1]):
            q = adj_to[a]
            if not 0 <= d[q] < di:
                continue
            arc = adj_arc[a]
            m = e * (rcap[arc] / cap_out)
            if m > rcap[arc]:
                m = rcap[arc]
            if m <= 0.0:
                continue
            rcap[arc] -= m
            rcap[arc ^ 1] += m
            carry[q] += m
            pushed += m
        if pushed >= carry[i]:
            got = pushed - carry[i]
            if got > tr[i]:
                got = tr[i]
            tr[i] -= got
            draw[i] = got
            carry[i] = 0.0
        else:
            # stranded inflow, returned upstream by the refund sweep
            carry[i] -= pushed

    # refunds move strictly toward larger depth, so forward BFS order
    # settles every node in one pass
    for k in range(reached):
        i = bfs[k]
        back = carry[i]
        if back <= eps:
            continue
        di = d[i]
        for a in range(first[i], first[i + 1]):
            q = adj_to[a]
            if d[q] <= di:
                continue
            arc = adj_arc[a]
            f = 0.5 * (rcap[arc] - rcap[arc ^ 1])
            if f <= 0.0:
                continue
            m = back if back < f else f
            rcap[arc] -= m
            rcap[arc ^ 1] += m
            give = m if m < draw[q] else draw[q]
            if give > 0.0:
                # the target's own supply went through first; hand it back
                tr[q] += give
                draw[q] -= give
            if m > give:
                carry[q] += m - give
            back -= m
            if back <= eps:
                break
        carry[i] = 0.0
    return flow


@njit(cache=True, nogil=True)
def _bk_maxflow(first, adj_to, adj_arc, rcap, tr, eps):
    """Max flow over the folded-terminal network; rcap and tr are mutated
    into the residual network. Returns the flow routed (terminal constant
    excluded)."""
    n = first.size - 1
    tree = np.zeros(n, np.int8)  # 0 free, 1 source tree, 2 sink tree
    parent_arc = np.full(n, _NONE, np.int64)
    parent_node = np.full(n, _NONE, np.int64)
    dist = np.zeros(n, np.int64)
    ts = np.zeros(n, np.int64)
    in_queue = np.zeros(n, np.bool_)
    is_orphan = np.zeros(n, np.bool_)
    qcap = n + 1
    queue = np.empty(qcap, np.int64)
    qhead = 0
    qtail = 0
    orphans = np.empty(n, np.int64)
    n_orph = 0
    flow = 0.0
    time = np.int64(1)

    for i in range(n):
        if tr[i] > eps:
            tree[i] = 1
        elif tr[i] < -eps:
            tree[i] = 2
        else:
            continue
        parent_arc[i] = _TERMINAL
        dist[i] = 1
        queue[qtail] = i
        qtail = (qtail + 1) % qcap
        in_queue[i] = True

    while qhead != qtail:
        p = queue[qhead]
        qhead = (qhead + 1) % qcap
        in_queue[p] = False
        tp = tree[p]
        if tp == 0:
            continue
        a = first[p]
        while a < first[p + 1]:
            arc = adj_arc[a]
            q = adj_to[a]
            augmented = False
            # growth capacity: S-tree pushes p -> q, T-tree pulls q -> p
            ok = rcap[arc] > eps if tp == 1 else rcap[arc ^ 1] > eps
            if ok:
                tq = tree[q]
                if tq == 0:
                    tree[q] = tp
                    parent_node[q] = p
                    # stored arc always carries capacity terminal-ward:
                    # parent->child for the S tree, child->parent for T
                    parent_arc[q] = arc if tp == 1 else arc ^ 1
                    dist[q] = dist[p] + 1
                    ts[q] = ts[p]
                    if not in_queue[q]:
                        queue[qtail] = q
                        qtail = (qtail + 1) % qcap
                        in_queue[q] = True
                elif tq != tp:
                    # trees meet: augment along s ~> p -(arc)- q ~> t
                    augmented = True
                    if tp == 1:
                        ps, pt, bridge = p, q, arc
                    else:
                        ps, pt, bridge = q, p, arc ^ 1

                    b = rcap[bridge]
                    i = ps
                    while parent_arc[i] != _TERMINAL:
                        if rcap[parent_arc[i]] < b:
                            b = rcap[parent_arc[i]]
                        i = parent_node[i]
                    if tr[i] < b:
                        b = tr[i]
                    i = pt
                    while parent_arc[i] != _TERMINAL:
                        if rcap[parent_arc[i]] < b:
                            b = rcap[parent_arc[i]]
                        i = parent_node[i]
                    if -tr[i] < b:
                        b = -tr[i]

                    rcap[bridge] -= b
                    rcap[bridge ^ 1] += b
                    i = ps
                    while parent_arc[i] != _TERMINAL:
                        pa = parent_arc[i]
                        rcap[pa] -= b
                        rcap[pa ^ 1] += b
                        nxt = parent_node[i]
                        if rcap[pa] <= eps and not is_orphan[i]:
                            parent_arc[i] = _NONE
                            parent_node[i] = _NONE
                            is_orphan[i] = True
                            orphans[n_orph] = i
                            n_orph += 1
                        i = nxt
                    tr[i] -= b
                    if tr[i] <= eps and not is_orphan[i]:
                        parent_arc[i] = _NONE
                        parent_node[i] = _NONE
                        is_orphan[i] = True
                        orphans[n_orph] = i
                        n_orph += 1
                    i = pt
                    while parent_arc[i] != _TERMINAL:
                        pa = parent_arc[i]
                        rcap[pa] -= b
                        rcap[pa ^ 1] += b
                        nxt = parent_node[i]
                        if rcap[pa] <= eps and not is_orphan[i]:
                            parent_arc[i] = _NONE
                            parent_node[i] = _NONE
                            is_orphan[i] = True
                            orphans[n_orph] = i
                            n_orph += 1
                        i = nxt
                    tr[i] += b
                    if tr[i] >= -eps and not is_orphan[i]:
                        parent_arc[i] = _NONE
                        parent_node[i] = _NONE
                        is_orphan[i] = True
                        orphans[n_orph] = i
                        n_orph += 1
                    flow += b

                    # adoption: re-anchor orphaned subtrees or free them
                    while n_orph > 0:
                        n_orph -= 1
                        o = orphans[n_orph]
                        is_orphan[o] = False
                        to = tree[o]
                        time += 1
                        best_d = np.int64(1 << 60)
                        best_q = np.int64(_NONE)
                        best_feed = np.int64(_NONE)
                        for aa in range(first[o], first[o + 1]):
                            oq = adj_to[aa]
                            if tree[oq] != to:
                                continue
                            oarc = adj_arc[aa]
                            feed = oarc ^ 1 if to == 1 else oarc
                            if rcap[feed] <= eps:
                                continue
                            d = _origin_dist(oq, parent_arc, parent_node, ts, dist, time)
                            if d >= 0 and d < best_d:
                                best_d = d
                                best_q = oq
                                best_feed = feed
                        if best_q != _NONE:
                            parent_node[o] = best_q
                            parent_arc[o] = best_feed
                            dist[o] = best_d + 1
                            ts[o] = time
                        else:
                            for aa in range(first[o], first[o + 1]):
                                oq = adj_to[aa]
                                if tree[oq] != to:
                                    continue
                                oarc = adj_arc[aa]
                                feed = oarc ^ 1 if to == 1 else oarc
                                if rcap[feed] > eps and not in_queue[oq]:
                                    queue[qtail] = oq
                                    qtail = (qtail + 1) % qcap
                                    in_queue[oq] = True
                                if parent_node[oq] == o and parent_arc[oq] >= 0:
                                    parent_arc[oq] = _NONE
                                    parent_node[oq] = _NONE
                                    if not is_orphan[oq]:
                                        is_orphan[oq] = True
                                        orphans[n_orph] = oq
                                        n_orph += 1
                            tree[o] = 0

                    if tree[p] != tp:
                        break
            if not augmented:
                a += 1
            # else: re-test the same arc; adoption can restore a path
            # through it, and every augmentation pushes > eps, so the
            # re-test loop is finite

    return flow


@njit(cache=True, nogil=True)
def _reach_sink(first, adj_to, adj_arc, rcap, tr, eps):
    """Nodes with a residual path to the sink. Their complement is the
    maximal minimum-cut source side."""
    n = first.size - 1
    vis = np.zeros(n, np.bool_)
    queue = np.empty(n, np.int64)
    qt = 0
    for i in range(n):
        if tr[i] < -eps:
            vis[i] = True
            queue[qt] = i
            qt += 1
    qh = 0
    while qh < qt:
        x = queue[qh]
        qh += 1
        for a in range(first[x], first[x + 1]):
            r = adj_to[a]
            if not vis[r] and rcap[adj_arc[a] ^ 1] > eps:
                vis[r] = True
                queue[qt] = r
                qt += 1
    return vis


def solve_csr(first, adj_to, adj_arc, alen, rcap, tr, eps, fresh=True) -> tuple[float, np.ndarray]:
    """Run max flow on a prebuilt CSR network, mutating rcap/tr into the
    residual. Returns (routed flow, maximal source side). alen holds the
    per-arc lengths that shape the cascade's level field; pass ones for
    networks without geometry.

    fresh=False skips the drain cascade: its refund pass reads per-arc flow
    off the residual asymmetry, which only identifies the cascade's own
    pushes when rcap starts at the symmetric base. On a reused residual the
    asymmetry includes prior flow, and unwinding that breaks conservation.
    """
    flow = _drain_init(first, adj_to, adj_arc, alen, rcap, tr, eps) if fresh else 0.0
    flow += _bk_maxflow(first, adj_to, adj_arc, rcap, tr, eps)
    vis = _reach_sink(first, adj_to, adj_arc, rcap, tr, eps)
    return float(flow), ~vis


def min_cut(net: FlowNetwork) -> CutResult:
    """Minimum s-t cut value and the maximal minimizing source side."""
    if net.n == 0:
        return CutResult(0.0, np.zeros(0, bool))
    tr = net.cap_src.astype(np.float64) - net.cap_snk.astype(np.float64)
    fold = float(np.minimum(net.cap_src, net.cap_snk).sum())
    first, adj_to, adj_arc = build_csr(net.n, net.u.astype(np.int64), net.v.astype(np.int64))
    rcap = np.repeat(net.cap.astype(np.float64), 2)
    alen = np.ones(rcap.size, np.int8)
    scale = max(
        float(rcap.max(initial=0.0)),
        float(np.abs(tr).max(initial=0.0)),
    )
    eps = 1e-9 * scale if scale > 0 else 1e-300
    flow, side = solve_csr(first, adj_to, adj_arc, alen, rcap, tr, eps)
    return CutResult(flow + fold, side)
