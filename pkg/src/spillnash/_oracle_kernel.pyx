# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled packet simulation kernel; same contract as ``_oracle_py.simulate``."""
from libc.stdlib cimport malloc, free
from libc.math cimport INFINITY


cdef inline double _entry(int e, double t, int u, double* vfifo, double* entries, double* exits,
                          int* n_in, int* n_out, double* gate_in, int* slots, int stride,
                          bint vertex_fifo) nogil:
    cdef double enter = t
    cdef int n, cap
    if vertex_fifo and vfifo[u] > enter:
        enter = vfifo[u]
    n = n_in[e]
    if n > 0 and entries[e * stride + n - 1] + gate_in[e] > enter:
        enter = entries[e * stride + n - 1] + gate_in[e]
    cap = slots[e]
    if cap >= 0 and n >= cap:
        if exits[e * stride + n - cap] > enter:
            enter = exits[e * stride + n - cap]
    return enter


def simulate(int n_vertices, int source, int sink, tails, heads, transit, gate_in, gate_out, slots,
             releases, bint vertex_fifo):
    cdef int m = len(tails)
    cdef int n_packets = len(releases)
    cdef int stride = n_packets
    cdef int i, k, u, v, w, e, last
    cdef double best, enter, ready, t
    cdef int* c_tails = <int*> malloc(m * sizeof(int))
    cdef int* c_heads = <int*> malloc(m * sizeof(int))
    cdef int* c_slots = <int*> malloc(m * sizeof(int))
    cdef double* c_transit = <double*> malloc(m * sizeof(double))
    cdef double* c_gin = <double*> malloc(m * sizeof(double))
    cdef double* c_gout = <double*> malloc(m * sizeof(double))
    cdef int* n_in = <int*> malloc(m * sizeof(int))
    cdef int* n_out = <int*> malloc(m * sizeof(int))
    cdef double* entries = <double*> malloc(m * stride * sizeof(double) + 8)
    cdef double* exits = <double*> malloc(m * stride * sizeof(double) + 8)
    cdef double* vfifo = <double*> malloc(n_vertices * sizeof(double))
    cdef double* arrive = <double*> malloc(n_vertices * sizeof(double))
    cdef int* pred = <int*> malloc(n_vertices * sizeof(int))
    cdef int* done = <int*> malloc(n_vertices * sizeof(int))
    cdef int* path = <int*> malloc((n_vertices + 1) * sizeof(int))
    cdef int plen
    labels = [0.0] * (n_packets * n_vertices)
    try:
        for e in range(m):
            c_tails[e] = tails[e]
            c_heads[e] = heads[e]
            c_slots[e] = slots[e]
            c_transit[e] = transit[e]
            c_gin[e] = gate_in[e]
            c_gout[e] = gate_out[e]
            n_in[e] = 0
            n_out[e] = 0
        for v in range(n_vertices):
            vfifo[v] = -INFINITY

        for k in range(n_packets):
            for v in range(n_vertices):
                arrive[v] = INFINITY
                pred[v] = -1
                done[v] = 0
            arrive[source] = releases[k]
            for i in range(n_vertices):
                u = -1
                best = INFINITY
                for w in range(n_vertices):
                    if not done[w] and arrive[w] < best:
                        u = w
                        best = arrive[w]
                if u < 0:
                    break
                done[u] = 1
                for e in range(m):
                    if c_tails[e] != u:
                        continue
                    enter = _entry(e, best, u, vfifo, entries, exits, n_in, n_out, c_gin, c_slots,
                                   stride, vertex_fifo)
                    ready = enter + c_transit[e]
                    if n_out[e] > 0 and exits[e * stride + n_out[e] - 1] + c_gout[e] > ready:
                        ready = exits[e * stride + n_out[e] - 1] + c_gout[e]
                    v = c_heads[e]
                    if ready < arrive[v]:
                        arrive[v] = ready
                        pred[v] = e
            for v in range(n_vertices):
                labels[k * n_vertices + v] = arrive[v]

            plen = 0
            v = sink
            while v != source:
                e = pred[v]
                path[plen] = e
                plen += 1
                v = c_tails[e]
            t = releases[k]
            last = -1
            for i in range(plen - 1, -1, -1):
                e = path[i]
                enter = _entry(e, t, c_tails[e], vfifo, entries, exits, n_in, n_out, c_gin, c_slots,
                               stride, vertex_fifo)
                if last >= 0:
                    exits[last * stride + n_out[last]] = enter
                    n_out[last] += 1
                entries[e * stride + n_in[e]] = enter
                n_in[e] += 1
                vfifo[c_tails[e]] = enter
                ready = enter + c_transit[e]
                if n_out[e] > 0 and exits[e * stride + n_out[e] - 1] + c_gout[e] > ready:
                    ready = exits[e * stride + n_out[e] - 1] + c_gout[e]
                t = ready
                last = e
            exits[last * stride + n_out[last]] = t
            n_out[last] += 1
    finally:
        free(c_tails); free(c_heads); free(c_slots); free(c_transit); free(c_gin); free(c_gout)
        free(n_in); free(n_out); free(entries); free(exits); free(vfifo); free(arrive)
        free(pred); free(done); free(path)
    return labels
