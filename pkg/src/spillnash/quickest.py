"""Quickest flows via successive shortest paths and temporal repetition.

The maximum amount deliverable by horizon ``T`` is
``o(T) = sum_j cap_j * max(0, T - dist_j)`` over the augmenting paths of a
successive-shortest-path run (costs = transit times).  Flow is released at
rate ``r0`` through an auxiliary arc into the source.  ``o`` is inverted
exactly, so no search over ``T`` is needed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .network import UNBOUNDED, Network, fmt
from .pwl import PLFn, StepFn

ZERO = Fraction(0)


class QuickestFlowError(ValueError):
    pass


@dataclass(frozen=True)
class StaticFlow:
    values: dict[int, Fraction]
    value: Fraction

    def to_json(self) -> dict:
        return {"values": {str(i): fmt(x) for i, x in sorted(self.values.items())}, "value": fmt(self.value)}


@dataclass(frozen=True)
class QuickestFlowResult:
    network: Network
    amount: Fraction
    horizon: Fraction
    static_flow: StaticFlow
    paths: list[tuple[list[int], Fraction, Fraction]]
    value_fn: PLFn
    distances: list[tuple[Fraction, Fraction]]

    def to_json(self) -> dict:
        return {
            "kind": "quickest-flow",
            "amount": fmt(self.amount),
            "horizon": fmt(self.horizon),
            "static_flow": self.static_flow.to_json(),
            "paths": [{"edges": p, "rate": fmt(r), "transit": fmt(t)} for p, r, t in self.paths],
            "value_fn": self.value_fn.to_json(),
        }

    def value_csv(self) -> str:
        lines = ["T,o(T)"]
        lines += [f"{fmt(t)},{fmt(v)}" for t, v in self.value_fn.points]
        return "\n".join(lines) + "\n"

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _augmenting_paths(net: Network) -> list[tuple[Fraction, Fraction, dict[int, Fraction]]]:
    """Successive shortest paths; returns ``(dist, cap, edge deltas)`` per augmentation."""
    release = "\0release"
    nodes = [release] + list(net.vertices)
    # arcs: (tail, head, cost, cap, edge index or -1); residual twins at index ^ 1
    arcs: list[list] = []

    def add(u, v, cost, cap, idx):
        arcs.append([u, v, cost, cap, idx])
        arcs.append([v, u, -cost, ZERO, idx])

    add(release, net.source, ZERO, net.inflow_rate, -1)
    for i, e in enumerate(net.edges):
        add(e.tail, e.head, e.transit, e.static_capacity, i)

    out: list[tuple[Fraction, Fraction, dict[int, Fraction]]] = []
    while True:
        dist = {v: None for v in nodes}
        pred: dict[str, int] = {}
        dist[release] = ZERO
        for _ in range(len(nodes)):
            changed = False
            for k, (u, v, cost, cap, _) in enumerate(arcs):
                if cap > 0 and dist[u] is not None:
                    nd = dist[u] + cost
                    if dist[v] is None or nd < dist[v]:
                        dist[v] = nd
                        pred[v] = k
                        changed = True
            if not changed:
                break
        if dist[net.sink] is None:
            return out
        path, v = [], net.sink
        while v != release:
            k = pred[v]
            path.append(k)
            v = arcs[k][0]
        cap = min(arcs[k][3] for k in path)
        if cap == UNBOUNDED:
            raise QuickestFlowError("unbounded augmenting path")
        delta: dict[int, Fraction] = {}
        for k in path:
            arcs[k][3] -= cap
            arcs[k ^ 1][3] += cap
            idx = arcs[k][4]
            if idx >= 0:
                delta[idx] = delta.get(idx, ZERO) + (cap if k % 2 == 0 else -cap)
        out.append((dist[net.sink], cap, delta))


def value_function(net: Network) -> tuple[PLFn, list[tuple[Fraction, Fraction, dict[int, Fraction]]]]:
    augs = _augmenting_paths(net)
    if not augs:
        raise QuickestFlowError("sink unreachable")
    pts = [(augs[0][0], ZERO)]
    slope = ZERO
    for d, cap, _ in augs:
        t0, v0 = pts[-1]
        pts.append((d, v0 + slope * (d - t0)))
        slope += cap
    return PLFn(pts, slope_after=slope), augs


def opt_completion(net: Network, M) -> QuickestFlowResult:
    """Minimal horizon delivering ``M`` together with its underlying static flow."""
    M = Fraction(M)
    if not M > 0:
        raise QuickestFlowError("amount must be positive")
    o, augs = value_function(net)
    horizon = o.lower_inverse(M, augs[0][0])
    if horizon is None:
        raise QuickestFlowError("amount cannot be delivered")
    values = {i: ZERO for i in range(len(net.edges))}
    value = ZERO
    for d, cap, delta in augs:
        if d >= horizon:
            break
        value += cap
        for i, x in delta.items():
            values[i] += x
    flow = StaticFlow(values, value)
    paths = [(p, r, sum((net.edges[i].transit for i in p), ZERO)) for p, r in path_decompose(net, flow)]
    return QuickestFlowResult(net, M, horizon, flow, paths, o, [(d, cap) for d, cap, _ in augs])


def path_decompose(net: Network, flow: StaticFlow) -> list[tuple[list[int], Fraction]]:
    """Split a static s-t flow into simple paths, lowest edge index first."""
    rest = {i: x for i, x in flow.values.items() if x > 0}
    paths: list[tuple[list[int], Fraction]] = []
    while True:
        path = _find_path(net, rest)
        if path is None:
            break
        rate = min(rest[i] for i in path)
        for i in path:
            rest[i] -= rate
            if rest[i] == 0:
                del rest[i]
        paths.append((path, rate))
    if rest:
        raise QuickestFlowError(f"flow has a cyclic or unbalanced remainder on edges {sorted(rest)}")
    return paths


def _find_path(net: Network, rest: dict[int, Fraction]) -> list[int] | None:
    stack = [(net.source, [])]
    seen = {net.source}
    while stack:
        v, path = stack.pop()
        if v == net.sink:
            return path
        for i in reversed(net.out_edges(v)):
            if i in rest and net.edges[i].head not in seen:
                seen.add(net.edges[i].head)
                stack.append((net.edges[i].head, path + [i]))
    return None


def temporally_repeated(result: QuickestFlowResult) -> tuple[dict[int, StepFn], dict[int, StepFn]]:
    """Inflow and outflow rates of the temporally repeated optimal flow."""
    net = result.network
    events_in: dict[int, dict[Fraction, Fraction]] = {i: {} for i in range(len(net.edges))}
    events_out: dict[int, dict[Fraction, Fraction]] = {i: {} for i in range(len(net.edges))}
    for path, rate, transit in result.paths:
        span = result.horizon - transit
        if span <= 0:
            continue
        offset = ZERO
        for i in path:
            e = net.edges[i]
            for ev, start in ((events_in[i], offset), (events_out[i], offset + e.transit)):
                ev[start] = ev.get(start, ZERO) + rate
                ev[start + span] = ev.get(start + span, ZERO) - rate
            offset += e.transit

    def steps(ev: dict[Fraction, Fraction]) -> StepFn:
        acc, pts = ZERO, []
        for t in sorted(ev):
            acc += ev[t]
            pts.append((t, acc))
        return StepFn(pts)

    return {i: steps(ev) for i, ev in events_in.items()}, {i: steps(ev) for i, ev in events_out.items()}
