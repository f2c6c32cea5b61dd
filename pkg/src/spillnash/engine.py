"""Phase-by-phase construction of dynamic equilibria.

Particles are indexed by their release time ``theta`` at the source.  The
state at a phase boundary consists of the labels ``l_v(theta)``, the
cumulative edge flows ``x_e(theta)`` and the history of both, from which
the cumulative in/outflow curves in network time follow:
``F+_e(l_u(theta)) = x_e(theta) = F-_e(l_v(theta))``.

Each phase solves one thin flow, extends all labels linearly and stops at
the first event (activation, depletion, fill, change of a full edge's
outflow rate) or at the last particle ``M / r0``.
"""
from __future__ import annotations

import csv
import heapq
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction

from .network import (
    UNBOUNDED,
    GameInstance,
    Network,
    fmt,
    network_from_dict,
    network_to_dict,
)
from .pwl import PLFn, StepFn, derivative
from .thinflow import PhaseConfig, ThinFlow, ks_network, solve_thin_flow

ZERO = Fraction(0)

SPILLBACK = "spillback"
KOCH_SKUTELLA = "koch-skutella"
MODES = (SPILLBACK, KOCH_SKUTELLA)

ACTIVATION = "activation"
DEPLETION = "depletion"
FULL = "full"
BOUND_CHANGE = "bound-change"
HORIZON = "horizon"


class PhaseBudgetExceeded(RuntimeError):
    def __init__(self, max_phases: int, theta: Fraction):
        self.max_phases = max_phases
        self.theta = theta
        super().__init__(
            f"phase budget of {max_phases} exhausted at theta = {fmt(theta)} before the last particle"
        )


class EngineError(RuntimeError):
    pass


@dataclass(frozen=True)
class PhaseRecord:
    index: int
    theta_interval: tuple[Fraction, Fraction]
    config: PhaseConfig
    thin_flow: ThinFlow
    sink_capacity: Fraction
    queue_derivatives: dict[int, Fraction]
    omega: Fraction
    labels_start: dict[str, Fraction] = field(compare=False)

    @property
    def length(self) -> Fraction:
        return self.theta_interval[1] - self.theta_interval[0]

    def to_json(self) -> dict:
        cfg = self.config
        return {
            "index": self.index,
            "theta": [fmt(self.theta_interval[0]), fmt(self.theta_interval[1])],
            "active": sorted(cfg.active_edges),
            "resetting": sorted(cfg.resetting_edges),
            "full": sorted(cfg.full_edges),
            "inflow_bounds": {str(i): fmt(b) for i, b in sorted(cfg.inflow_bounds.items())},
            "thin_flow": self.thin_flow.to_json(),
            "sink_capacity": fmt(self.sink_capacity),
            "queue_derivatives": {str(i): fmt(q) for i, q in sorted(self.queue_derivatives.items())},
            "omega": fmt(self.omega),
            "labels_start": {v: fmt(x) for v, x in self.labels_start.items()},
        }


@dataclass(frozen=True)
class EquilibriumTrace:
    instance: GameInstance
    mode: str
    network: Network  # the network the dynamics ran on (spillback-free view in koch-skutella mode)
    phases: list[PhaseRecord]
    labels: dict[str, PLFn]
    cum_in: dict[int, PLFn]
    cum_out: dict[int, PLFn]
    rates_in: dict[int, StepFn]
    rates_out: dict[int, StepFn]
    spill_factors: dict[str, StepFn]
    completion: Fraction
    event_log: list[tuple[Fraction, str, object]]

    @property
    def horizon(self) -> Fraction:
        return self.instance.horizon

    @property
    def min_spill_factor(self) -> Fraction:
        return min(min(p.thin_flow.c.values()) for p in self.phases)

    def to_json(self) -> dict:
        return {
            "kind": "equilibrium-trace",
            "name": self.instance.name,
            "mode": self.mode,
            "instance": network_to_dict(self.instance.network, self.instance.amount),
            "completion": fmt(self.completion),
            "phases": [p.to_json() for p in self.phases],
            "labels": {v: f.to_json() for v, f in self.labels.items()},
            "cum_in": {str(i): f.to_json() for i, f in self.cum_in.items()},
            "cum_out": {str(i): f.to_json() for i, f in self.cum_out.items()},
            "event_log": [[fmt(t), kind, elem] for t, kind, elem in self.event_log],
        }

    def labels_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        verts = list(self.network.vertices)
        w.writerow(["theta"] + verts)
        thetas = sorted({p.theta_interval[0] for p in self.phases} | {self.horizon})
        for th in thetas:
            w.writerow([fmt(th)] + [fmt(self.labels[v](th)) for v in verts])
        return buf.getvalue()

    @classmethod
    def from_json(cls, doc: dict) -> "EquilibriumTrace":
        net, amount = network_from_dict(doc["instance"])
        inst = GameInstance(net, amount, name=doc.get("name", ""))
        mode = doc["mode"]
        model = ks_network(net) if mode == KOCH_SKUTELLA else net
        phases = []
        for p in doc["phases"]:
            cfg = PhaseConfig(
                network=model,
                active_edges=frozenset(p["active"]),
                resetting_edges=frozenset(p["resetting"]),
                full_edges=frozenset(p["full"]),
                inflow_bounds={int(i): _parse_num(b) for i, b in p["inflow_bounds"].items()},
                inflow_rate=net.inflow_rate,
            )
            phases.append(
                PhaseRecord(
                    index=p["index"],
                    theta_interval=(Fraction(p["theta"][0]), Fraction(p["theta"][1])),
                    config=cfg,
                    thin_flow=ThinFlow.from_json(p["thin_flow"]),
                    sink_capacity=Fraction(p["sink_capacity"]),
                    queue_derivatives={int(i): Fraction(q) for i, q in p["queue_derivatives"].items()},
                    omega=Fraction(p["omega"]),
                    labels_start={v: Fraction(x) for v, x in p["labels_start"].items()},
                )
            )
        labels = {v: PLFn.from_json(f) for v, f in doc["labels"].items()}
        cum_in = {int(i): PLFn.from_json(f) for i, f in doc["cum_in"].items()}
        cum_out = {int(i): PLFn.from_json(f) for i, f in doc["cum_out"].items()}
        return _assemble(inst, mode, model, phases, labels, cum_in, cum_out,
                         [(Fraction(t), k, e) for t, k, e in doc["event_log"]])


def _parse_num(text: str):
    return UNBOUNDED if text == "inf" else Fraction(text)


def _assemble(inst, mode, model, phases, labels, cum_in, cum_out, events) -> EquilibriumTrace:
    rates_in = {i: derivative(f) for i, f in cum_in.items()}
    rates_out = {i: derivative(f) for i, f in cum_out.items()}
    spill: dict[str, StepFn] = {}
    for v in model.vertices:
        pts = []
        for p in phases:
            a, b = labels[v](p.theta_interval[0]), labels[v](p.theta_interval[1])
            if b > a:
                pts.append((a, p.thin_flow.c[v]))
                pts.append((b, Fraction(1)))
        spill[v] = StepFn(_merge_steps(pts), 1)
    completion = labels[model.sink](inst.horizon)
    return EquilibriumTrace(inst, mode, model, phases, labels, cum_in, cum_out,
                            rates_in, rates_out, spill, completion, events)


def _merge_steps(pts):
    # a phase's closing "1" is overwritten by the next phase starting at the same time
    out: list = []
    for t, v in pts:
        if out and out[-1][0] == t:
            out[-1] = (t, v)
        else:
            out.append((t, v))
    return out


# -- construction ----------------------------------------------------------------

def shortest_distances(net: Network) -> dict[str, Fraction]:
    dist = {v: None for v in net.vertices}
    dist[net.source] = ZERO
    heap = [(ZERO, net.source)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for i in net.out_edges(u):
            e = net.edges[i]
            nd = d + e.transit
            if dist[e.head] is None or nd < dist[e.head]:
                dist[e.head] = nd
                heapq.heappush(heap, (nd, e.head))
    return dist


class EngineState:
    """Mutable construction state between two phases."""

    def __init__(self, net: Network, horizon: Fraction, spillback: bool = True):
        self.net = net
        self.horizon = horizon
        self.spillback = spillback
        self.theta = ZERO
        self.labels = shortest_distances(net)
        self.x = {i: ZERO for i in range(len(net.edges))}
        self.in_pts = {i: [(self.labels[e.tail], ZERO)] for i, e in enumerate(net.edges)}
        self.out_pts = {i: [(self.labels[e.head], ZERO)] for i, e in enumerate(net.edges)}
        self.label_pts = {v: [(ZERO, self.labels[v])] for v in net.vertices}
        self.config: PhaseConfig | None = None

    # network-time cumulative outflow known so far, optionally extended by a phase rate
    def outflow_curve(self, i: int, slope_after=ZERO) -> PLFn:
        return PLFn(self.out_pts[i], slope_after=slope_after)

    def load(self, i: int) -> Fraction:
        """Edge load when the current particle reaches the tail."""
        e = self.net.edges[i]
        return self.x[i] - self.outflow_curve(i)(self.labels[e.tail])

    def configure(self) -> PhaseConfig:
        net, lab = self.net, self.labels
        active, resetting, full, bounds = set(), set(), set(), {}
        for i, e in enumerate(net.edges):
            if e.head == net.source:
                continue
            reach = lab[e.tail] + e.transit
            if lab[e.head] >= reach:
                active.add(i)
                if lab[e.head] > reach:
                    resetting.add(i)
        for i in sorted(active):
            e = net.edges[i]
            if e.storage == UNBOUNDED:
                continue
            d = self.load(i)
            if d > e.storage:
                raise EngineError(f"edge {i} overfilled (load {fmt(d)} > storage {fmt(e.storage)})")
            if d == e.storage:
                if not lab[e.head] > lab[e.tail]:
                    raise EngineError(f"full edge {i} without a queue")
                rate = self.outflow_curve(i).slope_right(lab[e.tail])
                full.add(i)
                bounds[i] = min(rate, e.cap_in)
        self.config = PhaseConfig.build(net, active, resetting, full, bounds)
        return self.config

    def staying_full(self, tf: ThinFlow) -> set[int]:
        """Full edges whose inflow matches their outflow during the phase."""
        out = set()
        for i in self.config.full_edges:
            e = self.net.edges[i]
            lu = tf.l_prime[e.tail]
            if lu == 0:
                out.add(i)
                continue
            rate = self.outflow_curve(i).slope_right(self.labels[e.tail])
            if tf.x_prime[i] == rate * lu:
                out.add(i)
        return out

    def advance(self, tf: ThinFlow, alpha: Fraction) -> None:
        net = self.net
        self.theta += alpha
        for v in net.vertices:
            self.labels[v] += tf.l_prime[v] * alpha
            self.label_pts[v].append((self.theta, self.labels[v]))
        for i, e in enumerate(net.edges):
            self.x[i] += tf.x_prime[i] * alpha
            self.in_pts[i].append((self.labels[e.tail], self.x[i]))
            self.out_pts[i].append((self.labels[e.head], self.x[i]))


def _first_fill(state: EngineState, i: int, tf: ThinFlow) -> Fraction | None:
    """Smallest alpha > 0 at which the load of edge ``i`` climbs to its storage."""
    net = state.net
    e = net.edges[i]
    xp, lu_p, lv_p = tf.x_prime[i], tf.l_prime[e.tail], tf.l_prime[e.head]
    if xp == 0 or lu_p == 0:
        return None
    curve = state.outflow_curve(i, xp / lv_p if lv_p > 0 else ZERO)
    lu0, x0, sigma = state.labels[e.tail], state.x[i], e.storage

    def load(a: Fraction) -> Fraction:
        return x0 + xp * a - curve(lu0 + lu_p * a)

    cuts = sorted({(t - lu0) / lu_p for t in curve.times if t > lu0})
    a0 = ZERO
    d0 = load(a0)
    for a1 in cuts + [None]:
        if a1 is None:
            slope = xp - curve.slope_right(lu0 + lu_p * a0) * lu_p
            if d0 < sigma and slope > 0:
                return a0 + (sigma - d0) / slope
            return None
        d1 = load(a1)
        if d0 < sigma <= d1:
            return a0 + (sigma - d0) * (a1 - a0) / (d1 - d0)
        a0, d0 = a1, d1
    return None


def _first_rate_change(state: EngineState, i: int, tf: ThinFlow) -> Fraction | None:
    e = state.net.edges[i]
    lu_p = tf.l_prime[e.tail]
    if lu_p == 0:
        return None
    lv_p = tf.l_prime[e.head]
    curve = state.outflow_curve(i, tf.x_prime[i] / lv_p if lv_p > 0 else ZERO)
    lu0 = state.labels[e.tail]
    for t in curve.times:
        if t > lu0 and curve.slope_left(t) != curve.slope_right(t):
            return (t - lu0) / lu_p
    return None


def next_event(state: EngineState, thin_flow: ThinFlow) -> tuple[Fraction, list[tuple[str, int]]]:
    """Length of the current phase and the events that end it.

    The length is clamped to the remaining particle interval, in which case the
    only event is ``horizon``.
    """
    net, cfg, tf, lab = state.net, state.config, thin_flow, state.labels
    cands: list[tuple[Fraction, str, int]] = []
    for i, e in enumerate(net.edges):
        if e.head == net.source:
            continue
        du, dv = tf.l_prime[e.tail], tf.l_prime[e.head]
        if i not in cfg.active_edges:
            if dv > du:
                cands.append(((lab[e.tail] + e.transit - lab[e.head]) / (dv - du), ACTIVATION, i))
        elif i in cfg.resetting_edges and du > dv:
            cands.append(((lab[e.head] - lab[e.tail] - e.transit) / (du - dv), DEPLETION, i))
    if state.spillback:
        stay = state.staying_full(tf)
        for i in sorted(cfg.active_edges):
            if net.edges[i].storage == UNBOUNDED:
                continue
            if i in stay:
                a = _first_rate_change(state, i, tf)
                if a is not None:
                    cands.append((a, BOUND_CHANGE, i))
            else:
                a = _first_fill(state, i, tf)
                if a is not None:
                    cands.append((a, FULL, i))
    remaining = state.horizon - state.theta
    alpha = min((a for a, _, _ in cands), default=remaining)
    if alpha <= 0:
        raise EngineError(f"degenerate phase at theta = {fmt(state.theta)}: {cands}")
    if alpha >= remaining:
        return remaining, [(HORIZON, -1)]
    return alpha, [(kind, i) for a, kind, i in cands if a == alpha]


def compute_equilibrium(instance: GameInstance, mode: str = SPILLBACK, max_phases: int = 10_000) -> EquilibriumTrace:
    """Construct the equilibrium trace up to the last particle ``M / r0``."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if max_phases < 1:
        raise ValueError("max_phases must be at least 1")
    model = ks_network(instance.network) if mode == KOCH_SKUTELLA else instance.network
    horizon = instance.horizon
    state = EngineState(model, horizon, spillback=(mode == SPILLBACK))
    r0 = model.inflow_rate
    phases: list[PhaseRecord] = []
    events: list[tuple[Fraction, str, object]] = []
    while state.theta < horizon:
        if len(phases) >= max_phases:
            raise PhaseBudgetExceeded(max_phases, state.theta)
        cfg = state.configure()
        tf = solve_thin_flow(cfg)
        start = state.theta
        labels_start = dict(state.labels)
        alpha, fired = next_event(state, tf)
        state.advance(tf, alpha)
        qd = {}
        for i, e in enumerate(model.edges):
            qd[i] = tf.l_prime[e.head] - tf.l_prime[e.tail] if i in cfg.active_edges else ZERO
        phases.append(
            PhaseRecord(
                index=len(phases) + 1,
                theta_interval=(start, state.theta),
                config=cfg,
                thin_flow=tf,
                sink_capacity=r0 / tf.l_prime[model.sink],
                queue_derivatives=qd,
                omega=state.labels[model.sink],
                labels_start=labels_start,
            )
        )
        for kind, i in fired:
            events.append((state.theta, kind, i if i >= 0 else None))

    labels = {v: PLFn(pts) for v, pts in state.label_pts.items()}
    cum_in = {i: PLFn(pts) for i, pts in state.in_pts.items()}
    cum_out = {i: PLFn(pts) for i, pts in state.out_pts.items()}
    return _assemble(instance, mode, model, phases, labels, cum_in, cum_out, events)


def labels_at(trace: EquilibriumTrace, theta) -> dict[str, Fraction]:
    theta = Fraction(theta)
    if not 0 <= theta <= trace.horizon:
        raise ValueError(f"theta = {fmt(theta)} outside [0, {fmt(trace.horizon)}]")
    return {v: f(theta) for v, f in trace.labels.items()}


def rates_in_network_time(trace: EquilibriumTrace) -> tuple[dict[int, StepFn], dict[int, StepFn]]:
    """Inflow and outflow rate of every edge as step functions of network time."""
    return trace.rates_in, trace.rates_out


def dump_trace(trace: EquilibriumTrace) -> str:
    return json.dumps(trace.to_json(), indent=2)
