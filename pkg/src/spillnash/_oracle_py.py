"""Pure-Python packet simulation kernel (fallback for the compiled one).

Edges are given as parallel lists.  ``gate_in[e]`` and ``gate_out[e]`` are
the times one packet occupies the inflow and outflow capacity
(``vol / cap``, 0 for unbounded), ``slots[e]`` the number of packets that fit
(-1 for unbounded storage).  Returns per-packet earliest arrival times at
every vertex, row-major ``n_packets x n_vertices``.
"""
from __future__ import annotations

import math

INF = math.inf


def simulate(n_vertices, source, sink, tails, heads, transit, gate_in, gate_out, slots,
             releases, vertex_fifo):
    m = len(tails)
    n_packets = len(releases)
    out_adj = [[] for _ in range(n_vertices)]
    for e in range(m):
        out_adj[tails[e]].append(e)
    entries = [[] for _ in range(m)]
    exits = [[] for _ in range(m)]
    vfifo = [-INF] * n_vertices
    labels = [0.0] * (n_packets * n_vertices)

    for k in range(n_packets):
        arrive = [INF] * n_vertices
        pred = [-1] * n_vertices
        done = [False] * n_vertices
        arrive[source] = releases[k]
        for _ in range(n_vertices):
            u, best = -1, INF
            for w in range(n_vertices):
                if not done[w] and arrive[w] < best:
                    u, best = w, arrive[w]
            if u < 0:
                break
            done[u] = True
            for e in out_adj[u]:
                enter = _entry(e, best, u, vfifo, entries, exits, gate_in, slots, vertex_fifo)
                ready = enter + transit[e]
                if exits[e]:
                    ready = max(ready, exits[e][-1] + gate_out[e])
                v = heads[e]
                if ready < arrive[v]:
                    arrive[v] = ready
                    pred[v] = e
        row = k * n_vertices
        for v in range(n_vertices):
            labels[row + v] = arrive[v]

        path = []
        v = sink
        while v != source:
            e = pred[v]
            path.append(e)
            v = tails[e]
        path.reverse()
        t = releases[k]
        last = None
        for e in path:
            enter = _entry(e, t, tails[e], vfifo, entries, exits, gate_in, slots, vertex_fifo)
            if last is not None:
                exits[last].append(enter)
            entries[e].append(enter)
            vfifo[tails[e]] = enter
            ready = enter + transit[e]
            if exits[e]:
                ready = max(ready, exits[e][-1] + gate_out[e])
            t = ready
            last = e
        exits[last].append(t)
    return labels


def _entry(e, t, u, vfifo, entries, exits, gate_in, slots, vertex_fifo):
    enter = t
    if vertex_fifo and vfifo[u] > enter:
        enter = vfifo[u]
    if entries[e]:
        enter = max(enter, entries[e][-1] + gate_in[e])
    cap = slots[e]
    if cap >= 0:
        n = len(entries[e])
        if n >= cap:
            enter = max(enter, exits[e][n - cap])
    return enter
