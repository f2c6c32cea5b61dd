"""Certify flows over time edge by edge and interval by interval.

Everything is re-derived from the cumulative in/outflow curves: queues,
loads, inflow bounds, push rates and the largest admissible spillback
factor.  Earliest-arrival labels are recomputed from the flow itself (not
taken from the trace) before the equilibrium condition
``F+_e(l_u(theta)) = F-_e(l_v(theta))`` is checked.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .engine import EquilibriumTrace
from .network import UNBOUNDED, Network, fmt
from .pwl import PLFn, StepFn, compose, pointwise_min, sample
from .quickest import QuickestFlowResult, temporally_repeated

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class Violation:
    condition: str
    element: str
    interval: tuple[Fraction, Fraction]
    lhs: object = None
    rhs: object = None

    def to_json(self) -> dict:
        def show(x):
            return fmt(x) if isinstance(x, (Fraction, float)) else x

        return {
            "condition": self.condition,
            "element": self.element,
            "interval": [fmt(self.interval[0]), fmt(self.interval[1])],
            "lhs": show(self.lhs),
            "rhs": show(self.rhs),
        }

    def __str__(self) -> str:
        a, b = self.interval
        text = f"{self.condition} at {self.element} on [{fmt(a)}, {fmt(b)}]"
        if self.lhs is not None:
            text += f": {self.lhs} vs {self.rhs}"
        return text


@dataclass(frozen=True)
class FlowOverTime:
    """Edge rates in network time plus the release rate at the source.

    ``release`` must integrate to ``amount`` and never exceed the network
    inflow rate.  ``labels`` and ``spill_factors`` are optional claims made by
    the producer; the verifier compares them against re-derived values.
    """

    network: Network
    amount: Fraction
    rates_in: dict[int, StepFn]
    rates_out: dict[int, StepFn]
    release: StepFn
    labels: dict[str, PLFn] | None = None
    spill_factors: dict[str, StepFn] | None = None
    cum_in: dict[int, PLFn] = field(init=False, repr=False, compare=False)
    cum_out: dict[int, PLFn] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "cum_in", {i: f.integral(ZERO) for i, f in self.rates_in.items()})
        object.__setattr__(self, "cum_out", {i: f.integral(ZERO) for i, f in self.rates_out.items()})

    @property
    def horizon(self) -> Fraction:
        return self.amount / self.network.inflow_rate

    @classmethod
    def from_trace(cls, trace: EquilibriumTrace) -> "FlowOverTime":
        net = trace.network
        release = StepFn([(ZERO, net.inflow_rate), (trace.horizon, ZERO)])
        return cls(net, trace.instance.amount, dict(trace.rates_in), dict(trace.rates_out), release,
                   dict(trace.labels), dict(trace.spill_factors))

    @classmethod
    def from_quickest(cls, result: QuickestFlowResult) -> "FlowOverTime":
        rates_in, rates_out = temporally_repeated(result)
        events: dict[Fraction, Fraction] = {}
        for path, rate, transit in result.paths:
            end = result.horizon - transit
            if end > 0:
                events[ZERO] = events.get(ZERO, ZERO) + rate
                events[end] = events.get(end, ZERO) - rate
        acc, pts = ZERO, []
        for t in sorted(events):
            acc += events[t]
            pts.append((t, acc))
        return cls(result.network, result.amount, rates_in, rates_out, StepFn(pts))


def _breakpoints(flow: FlowOverTime) -> list[Fraction]:
    ts = {ZERO}
    ts.update(flow.release.times)
    for i, e in enumerate(flow.network.edges):
        ts.update(flow.rates_out[i].times)
        for t in flow.rates_in[i].times:
            ts.add(t)
            ts.add(t + e.transit)
    ts = sorted(t for t in ts if t >= 0)
    return ts + [ts[-1] + 1]


def _queue(flow: FlowOverTime, i: int, t: Fraction) -> Fraction:
    e = flow.network.edges[i]
    return flow.cum_in[i](t - e.transit) - flow.cum_out[i](t)


def _load(flow: FlowOverTime, i: int, t: Fraction) -> Fraction:
    return flow.cum_in[i](t) - flow.cum_out[i](t)


def _max_spill_factor(flow: FlowOverTime, v: str, mid: Fraction, push: dict[int, Fraction]):
    """Largest ``c`` in (0, 1] meeting the fair allocation condition, or ``None``."""
    net = flow.network
    fixed: Fraction | None = None
    floor = ZERO
    for i in net.in_edges(v):
        e = net.edges[i]
        out = flow.rates_out[i](mid)
        if out > push[i]:
            return None
        if out < push[i]:
            c = out / e.cap_out
            if fixed is not None and c != fixed:
                return None
            fixed = c
        else:
            floor = max(floor, push[i] / e.cap_out)
    if fixed is None:
        return ONE
    if fixed <= 0 or fixed > 1 or fixed < floor:
        return None
    return fixed


def _full_edges_cyclic(net: Network, full: set[int]) -> bool:
    adj: dict[str, list[str]] = {v: [] for v in net.vertices}
    for i in full:
        adj[net.edges[i].tail].append(net.edges[i].head)
    state: dict[str, int] = {}

    def visit(v: str) -> bool:
        state[v] = 1
        for w in adj[v]:
            if state.get(w) == 1 or (w not in state and visit(w)):
                return True
        state[v] = 2
        return False

    return any(v not in state and visit(v) for v in net.vertices)


def verify_feasible(flow: FlowOverTime | EquilibriumTrace) -> list[Violation]:
    """All feasibility conditions on every maximal interval of constant rates."""
    if isinstance(flow, EquilibriumTrace):
        flow = FlowOverTime.from_trace(flow)
    net = flow.network
    r0 = net.inflow_rate
    out: list[Violation] = []
    ts = _breakpoints(flow)

    total = flow.release.integral(ZERO)(ts[-1])
    if total != flow.amount:
        out.append(Violation("release total differs from amount", net.source, (ZERO, ts[-1]), total, flow.amount))

    for t in ts:
        for i, e in enumerate(net.edges):
            z = _queue(flow, i, t)
            if z < 0:
                out.append(Violation("non-deficit violated", f"edge {i}", (t, t), z, ZERO))
            if e.storage != UNBOUNDED and _load(flow, i, t) > e.storage:
                out.append(Violation("inflow condition violated", f"edge {i}", (t, t), _load(flow, i, t), e.storage))

    for a, b in zip(ts, ts[1:]):
        mid = (a + b) / 2
        span = (a, b)
        rel = flow.release(mid)
        if rel < 0 or rel > r0:
            out.append(Violation("release rate outside [0, r0]", net.source, span, rel, r0))
        push: dict[int, Fraction] = {}
        bound: dict[int, Fraction] = {}
        full: set[int] = set()
        for i, e in enumerate(net.edges):
            f_in, f_out = flow.rates_in[i](mid), flow.rates_out[i](mid)
            if f_in < 0 or f_out < 0:
                out.append(Violation("negative rate", f"edge {i}", span, min(f_in, f_out), ZERO))
            if _queue(flow, i, mid) > 0:
                push[i] = e.cap_out
            else:
                push[i] = min(flow.rates_in[i](mid - e.transit), e.cap_out)
            if e.storage != UNBOUNDED and _load(flow, i, mid) == e.storage:
                full.add(i)
                bound[i] = min(f_out, e.cap_in)
            else:
                bound[i] = e.cap_in
            if f_in > bound[i]:
                out.append(Violation("inflow condition violated", f"edge {i}", span, f_in, bound[i]))
        for v in net.vertices:
            if v == net.sink:
                continue
            bal = sum((flow.rates_in[i](mid) for i in net.out_edges(v)), ZERO) - sum(
                (flow.rates_out[i](mid) for i in net.in_edges(v)), ZERO)
            want = rel if v == net.source else ZERO
            if bal != want:
                out.append(Violation("conservation violated", v, span, bal, want))
        for v in net.vertices:
            c = _max_spill_factor(flow, v, mid, push)
            if c is None:
                out.append(Violation("fair allocation violated", v, span))
                continue
            if c < 1 and not any(flow.rates_in[i](mid) == bound[i] for i in net.out_edges(v)):
                out.append(Violation("no-slack violated", v, span))
            if flow.spill_factors is not None and c < 1:
                claimed = flow.spill_factors[v](mid)
                if claimed != c:
                    out.append(Violation("spillback factor differs from the re-derived one", v, span, claimed, c))
        if full and _full_edges_cyclic(net, full):
            out.append(Violation("no-deadlock violated", ",".join(str(i) for i in sorted(full)), span))
    return out


def exit_time(flow: FlowOverTime, i: int, hi: Fraction) -> PLFn:
    """Exit time from edge ``i`` of a particle entering at network time ``t``, on ``[0, hi]``."""
    e = flow.network.edges[i]
    fin, fout = flow.cum_in[i], flow.cum_out[i]
    last = fout.points[-1][1]

    def first_reach(y: Fraction) -> Fraction:
        if y <= 0:
            return ZERO
        t = fout.lower_inverse(min(y, last), ZERO)
        return ZERO if t is None else t

    def ex(t: Fraction) -> Fraction:
        return max(t + e.transit, first_reach(fin(t)))

    ts = {ZERO, hi}
    ts.update(t for t in fin.times if 0 < t < hi)
    out_ts, fin_pts = fout.points, fin.restrict_points(ZERO, hi)
    for (t0, v0), (t1, v1) in zip(fin_pts, fin_pts[1:]):
        if v1 > v0:
            for _, y in out_ts:
                if v0 < y < v1:
                    ts.add(t0 + (y - v0) * (t1 - t0) / (v1 - v0))
    grid = sorted(ts)
    for t0, t1 in zip(grid, grid[1:]):
        # max(t + tau, G(F+(t))) is linear on both pieces; add the switch point
        g0, g1 = first_reach(fin(t0)) - t0 - e.transit, first_reach(fin(t1)) - t1 - e.transit
        if g0 * g1 < 0:
            ts.add(t0 + g0 * (t1 - t0) / (g0 - g1))
    return sample(ex, ts, slope_after=ONE)


def earliest_arrival_labels(flow: FlowOverTime) -> dict[str, PLFn]:
    """Labels ``l_v(theta)`` on ``[0, horizon]`` from the flow's own waiting times."""
    net = flow.network
    theta_r = flow.horizon
    hi = _breakpoints(flow)[-1] + sum((e.transit for e in net.edges), ZERO) + theta_r
    exits = {i: exit_time(flow, i, hi) for i in range(len(net.edges))}
    labels: dict[str, PLFn | None] = {v: None for v in net.vertices}
    labels[net.source] = PLFn([(ZERO, ZERO), (theta_r, theta_r)], slope_after=1, slope_before=1)
    for _ in range(len(net.vertices)):
        changed = False
        for i, e in enumerate(net.edges):
            lu = labels[e.tail]
            if lu is None or e.head == net.source:
                continue
            cand = compose(exits[i], lu, ZERO, theta_r)
            cur = labels[e.head]
            new = cand if cur is None else pointwise_min([cur, cand], ZERO, theta_r)
            if cur is None or new != cur:
                labels[e.head] = new
                changed = True
        if not changed:
            break
    return {v: f for v, f in labels.items() if f is not None}


def verify_nash(flow: FlowOverTime | EquilibriumTrace) -> list[Violation]:
    """Equilibrium condition at every breakpoint of the composed curves.

    Intervals are in particle time ``theta``.
    """
    if isinstance(flow, EquilibriumTrace):
        flow = FlowOverTime.from_trace(flow)
    net = flow.network
    theta_r = flow.horizon
    labels = earliest_arrival_labels(flow)
    out: list[Violation] = []
    if flow.labels is not None:
        for v, f in labels.items():
            claimed = flow.labels[v]
            ts = sorted({t for t, _ in f.restrict_points(ZERO, theta_r)} | {t for t, _ in claimed.restrict_points(ZERO, theta_r)})
            bad = [t for t in ts if f(t) != claimed(t)]
            if bad:
                out.append(Violation("labels differ from the re-derived earliest arrival times", v,
                                     (bad[0], bad[-1]), claimed(bad[0]), f(bad[0])))
    for i, e in enumerate(net.edges):
        if e.tail not in labels or e.head not in labels:
            continue
        lhs = compose(flow.cum_in[i], labels[e.tail], ZERO, theta_r)
        rhs = compose(flow.cum_out[i], labels[e.head], ZERO, theta_r)
        ts = sorted({t for t, _ in lhs.points} | {t for t, _ in rhs.points})
        bad = [t for t in ts if lhs(t) != rhs(t)]
        if bad:
            out.append(Violation("equilibrium condition violated", f"edge {i}", (bad[0], bad[-1]),
                                 lhs(bad[-1]), rhs(bad[-1])))
    return out


def violations_json(violations: list[Violation]) -> str:
    return json.dumps([v.to_json() for v in violations], indent=2)


def render(violations: list[Violation]) -> str:
    if not violations:
        return "no violations\n"
    return "".join(f"{v}\n" for v in violations)
