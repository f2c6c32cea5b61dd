"""Per-phase derivative system ("thin flows") with and without spillback.

Unknowns are the edge-flow derivatives ``x'``, label derivatives ``l'``
and spillback factors ``c``.  Writing ``y_v = c_v * l'_v`` turns every
branch of the system into linear (in)equalities, so a *regime* (which
side of each max/min binds) yields a linear program that is solved
exactly over the rationals.

A float MILP proposes the regime; the exact LP and :func:`verify_thin_flow`
decide.  If that fails, a depth-first search over regimes with exact LP
pruning takes over.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np
from scipy.optimize import LinearConstraint, milp

from .lp import Unbounded, solve_lp
from .network import UNBOUNDED, Edge, Network, Number, fmt

log = logging.getLogger(__name__)

ZERO = Fraction(0)
ONE = Fraction(1)


class ThinFlowError(RuntimeError):
    """No thin flow was found for a phase configuration."""

    def __init__(self, msg: str, tried: list[str] | None = None):
        self.tried = tried or []
        super().__init__(msg)


@dataclass(frozen=True)
class PhaseConfig:
    network: Network
    active_edges: frozenset[int]
    resetting_edges: frozenset[int]
    full_edges: frozenset[int]
    inflow_bounds: Mapping[int, Number]
    inflow_rate: Fraction

    @classmethod
    def build(cls, network: Network, active: Iterable[int], resetting: Iterable[int] = (),
              full: Iterable[int] = (), bounds: Mapping[int, Number] | None = None,
              inflow_rate: Fraction | None = None) -> "PhaseConfig":
        active = frozenset(active)
        b = {i: network.edges[i].cap_in for i in active}
        b.update(bounds or {})
        return cls(
            network=network,
            active_edges=active,
            resetting_edges=frozenset(resetting) & active,
            full_edges=frozenset(full) & active,
            inflow_bounds=b,
            inflow_rate=network.inflow_rate if inflow_rate is None else Fraction(inflow_rate),
        )

    def bound(self, i: int) -> Number:
        return self.inflow_bounds.get(i, self.network.edges[i].cap_in)


@dataclass(frozen=True)
class ThinFlow:
    x_prime: dict[int, Fraction]
    l_prime: dict[str, Fraction]
    c: dict[str, Fraction]
    regime: str = field(default="", compare=False)

    def to_json(self) -> dict:
        return {
            "x_prime": {str(i): fmt(v) for i, v in sorted(self.x_prime.items())},
            "l_prime": {v: fmt(x) for v, x in sorted(self.l_prime.items())},
            "c": {v: fmt(x) for v, x in sorted(self.c.items())},
            "regime": self.regime,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ThinFlow":
        return cls(
            {int(i): Fraction(v) for i, v in doc["x_prime"].items()},
            {v: Fraction(x) for v, x in doc["l_prime"].items()},
            {v: Fraction(x) for v, x in doc["c"].items()},
            doc.get("regime", ""),
        )


def ks_network(net: Network) -> Network:
    """The spillback-free counterpart: capacity ``min(cap_in, cap_out)`` at the head."""
    edges = tuple(
        Edge(e.tail, e.head, e.transit, UNBOUNDED, e.static_capacity, UNBOUNDED) for e in net.edges
    )
    return replace(net, edges=edges, strict_source=False)


def ks_config(config: PhaseConfig) -> PhaseConfig:
    net = ks_network(config.network)
    return PhaseConfig(
        network=net,
        active_edges=config.active_edges,
        resetting_edges=config.resetting_edges,
        full_edges=frozenset(),
        inflow_bounds={i: UNBOUNDED for i in config.active_edges},
        inflow_rate=config.inflow_rate,
    )


# -- verification --------------------------------------------------------------

def _rho(config: PhaseConfig, i: int, tf: ThinFlow) -> Fraction:
    e = config.network.edges[i]
    own = tf.x_prime.get(i, ZERO) / (tf.c[e.head] * e.cap_out)
    if i in config.resetting_edges:
        return own
    return max(tf.l_prime[e.tail], own)


def verify_thin_flow(config: PhaseConfig, candidate: ThinFlow) -> list[str]:
    """Every violated condition of the derivative system, as readable strings."""
    net = config.network
    tf = candidate
    out: list[str] = []
    missing = [v for v in net.vertices if v not in tf.l_prime or v not in tf.c]
    if missing:
        return [f"missing label derivative or spillback factor for {missing}"]
    if tf.l_prime[net.source] != 1:
        out.append(f"l'_s = 1 violated (l'_s = {fmt(tf.l_prime[net.source])})")

    for i, e in enumerate(net.edges):
        x = tf.x_prime.get(i, ZERO)
        if x < 0:
            out.append(f"negative flow derivative on edge {i}")
        if i not in config.active_edges and x != 0:
            out.append(f"flow derivative on inactive edge {i}")
    for v in net.vertices:
        if tf.l_prime[v] < 0:
            out.append(f"negative label derivative at {v}")
        if not (0 < tf.c[v] <= 1):
            out.append(f"spillback factor out of (0, 1] at {v}")
    if out:
        return out

    r0 = config.inflow_rate
    for v in net.vertices:
        if v == net.sink:
            continue
        bal = sum((tf.x_prime.get(i, ZERO) for i in net.out_edges(v)), ZERO) - sum(
            (tf.x_prime.get(i, ZERO) for i in net.in_edges(v)), ZERO
        )
        want = r0 if v == net.source else ZERO
        if bal != want:
            out.append(f"flow conservation violated at {v} (net outflow {fmt(bal)}, expected {fmt(want)})")

    for v in net.vertices:
        if v == net.source:
            continue
        incoming = [i for i in net.in_edges(v) if i in config.active_edges]
        if not incoming:
            continue
        lowest = min(_rho(config, i, tf) for i in incoming)
        if tf.l_prime[v] != lowest:
            out.append(f"minimum condition violated at {v} (l' = {fmt(tf.l_prime[v])}, min rho = {fmt(lowest)})")
    for i in sorted(config.active_edges):
        if tf.x_prime.get(i, ZERO) > 0:
            e = net.edges[i]
            if tf.l_prime[e.head] != _rho(config, i, tf):
                out.append(f"edge condition violated on edge {i} ({e.tail}->{e.head})")

    for v in net.vertices:
        ratios = []
        for i in net.out_edges(v):
            if i in config.active_edges:
                b = config.bound(i)
                ratios.append(ZERO if b == UNBOUNDED else tf.x_prime.get(i, ZERO) / b)
        top = max(ratios, default=ZERO)
        if tf.l_prime[v] < top:
            out.append(f"inflow bound violated at {v}")
        if tf.c[v] < 1 and tf.l_prime[v] != top:
            out.append(f"spillback tightness violated at {v}")
    return out


# -- linear systems per regime -------------------------------------------------

@dataclass
class _Layout:
    config: PhaseConfig
    edges: list[int]
    nonreset: list[int]
    vertices: list[str]
    modes: dict[str, list[int | None]]

    def __post_init__(self):
        self.xi = {e: k for k, e in enumerate(self.edges)}
        n = len(self.edges)
        self.li = {v: n + k for k, v in enumerate(self.vertices)}
        self.yi = {v: n + len(self.vertices) + k for k, v in enumerate(self.vertices)}
        self.n_vars = n + 2 * len(self.vertices)


def _layout(config: PhaseConfig) -> _Layout:
    net = config.network
    edges = sorted(config.active_edges)
    nonreset = [i for i in edges if i not in config.resetting_edges]
    modes: dict[str, list[int | None]] = {}
    for v in net.vertices:
        opts: list[int | None] = [None]
        for i in net.out_edges(v):
            if i in config.active_edges and config.bound(i) != UNBOUNDED:
                opts.append(i)
        modes[v] = opts
    return _Layout(config, edges, nonreset, list(net.vertices), modes)


def _base_constraints(lay: _Layout) -> list:
    cfg = lay.config
    net = cfg.network
    xi, li, yi = lay.xi, lay.li, lay.yi
    cons = [({li[net.source]: ONE}, "==", ONE)]
    for v in net.vertices:
        if v == net.sink:
            continue
        row: dict[int, Fraction] = {}
        for i in net.out_edges(v):
            if i in xi:
                row[xi[i]] = row.get(xi[i], ZERO) + 1
        for i in net.in_edges(v):
            if i in xi:
                row[xi[i]] = row.get(xi[i], ZERO) - 1
        want = cfg.inflow_rate if v == net.source else ZERO
        if row:
            cons.append((row, "==", want))
        elif want:
            cons.append(({}, "==", want))
    for v in net.vertices:
        cons.append(({yi[v]: ONE, li[v]: -ONE}, "<=", ZERO))
        if v != net.source and not any(i in xi for i in net.in_edges(v)):
            cons.append(({li[v]: ONE}, "==", ZERO))
    for i in lay.edges:
        e = net.edges[i]
        nu = e.cap_out
        if i in cfg.resetting_edges:
            cons.append(({xi[i]: ONE, yi[e.head]: -nu}, "==", ZERO))
        else:
            cons.append(({xi[i]: ONE, yi[e.head]: -nu}, "<=", ZERO))
        b = cfg.bound(i)
        if b != UNBOUNDED:
            cons.append(({xi[i]: ONE, li[e.tail]: -Fraction(b)}, "<=", ZERO))
    return cons


def _branch_constraints(lay: _Layout, i: int, branch: str) -> list:
    net = lay.config.network
    e = net.edges[i]
    x, lu, lv, yv = lay.xi[i], lay.li[e.tail], lay.li[e.head], lay.yi[e.head]
    if branch == "A":
        return [({x: ONE}, "==", ZERO), ({lv: ONE, lu: -ONE}, "<=", ZERO)]
    if branch == "B":
        return [({lv: ONE, lu: -ONE}, "==", ZERO)]
    return [({x: ONE, yv: -e.cap_out}, "==", ZERO), ({lv: ONE, lu: -ONE}, ">=", ZERO)]


def _mode_constraints(lay: _Layout, v: str, mode: int | None) -> list:
    if mode is None:
        return [({lay.yi[v]: ONE, lay.li[v]: -ONE}, "==", ZERO)]
    b = Fraction(lay.config.bound(mode))
    return [({lay.li[v]: b, lay.xi[mode]: -ONE}, "==", ZERO)]


def _regime_constraints(lay: _Layout, branches: Mapping[int, str], modes: Mapping[str, int | None]) -> list:
    cons = _base_constraints(lay)
    for i, br in branches.items():
        cons += _branch_constraints(lay, i, br)
    for v, m in modes.items():
        cons += _mode_constraints(lay, v, m)
    return cons


def _attains(lay: _Layout, v: str, branches: Mapping[int, str]) -> bool | None:
    """Whether some incoming edge can realise the minimum; ``None`` if undecided."""
    cfg = lay.config
    incoming = [i for i in cfg.network.in_edges(v) if i in cfg.active_edges]
    if not incoming or any(i in cfg.resetting_edges for i in incoming):
        return True
    if any(branches.get(i) in ("B", "C") for i in incoming):
        return True
    if all(i in branches for i in incoming):
        return False
    return None


def _describe(branches, modes) -> str:
    parts = [f"e{i}:{b}" for i, b in sorted(branches.items())]
    parts += [f"{v}:{'free' if m is None else f'tight(e{m})'}" for v, m in sorted(modes.items())]
    return " ".join(parts)


def _extract(lay: _Layout, sol: list[Fraction], regime: str) -> ThinFlow:
    net = lay.config.network
    x = {i: ZERO for i in range(len(net.edges))}
    for i in lay.edges:
        x[i] = sol[lay.xi[i]]
    lp, c = {}, {}
    for v in net.vertices:
        L, y = sol[lay.li[v]], sol[lay.yi[v]]
        lp[v] = L
        c[v] = y / L if L > 0 else ONE
    return ThinFlow(x, lp, c, regime)


def _solve_regime(lay: _Layout, branches, modes) -> ThinFlow | None:
    cons = _regime_constraints(lay, branches, modes)
    objective = {lay.yi[v]: ONE for v in lay.vertices}
    try:
        sol = solve_lp(lay.n_vars, cons, objective)
    except Unbounded:
        return None
    if sol is None:
        return None
    tf = _extract(lay, sol, _describe(branches, modes))
    if any(tf.c[v] <= 0 for v in lay.vertices):
        return None
    return tf


# -- regime proposal by float MILP -----------------------------------------------

def _milp_regime(lay: _Layout):
    cfg = lay.config
    net = cfg.network
    r0 = float(cfg.inflow_rate)
    nus = [float(net.edges[i].cap_out) for i in lay.edges] or [1.0]
    bs = [float(cfg.bound(i)) for i in lay.edges if cfg.bound(i) != UNBOUNDED]
    big_l = 2.0 * max([1.0, r0 / min(nus)] + [r0 / b for b in bs])

    n_cont = lay.n_vars
    cols: list[tuple] = []
    for i in lay.nonreset:
        for br in "ABC":
            cols.append(("branch", i, br))
    for v in lay.vertices:
        for m in lay.modes[v]:
            cols.append(("mode", v, m))
    bidx = {key: n_cont + k for k, key in enumerate(cols)}
    n = n_cont + len(cols)

    rows, lo, hi = [], [], []

    def add(coeffs: dict[int, float], lb: float, ub: float):
        r = np.zeros(n)
        for j, a in coeffs.items():
            r[j] += a
        rows.append(r)
        lo.append(lb)
        hi.append(ub)

    for coeffs, sense, rhs in _base_constraints(lay):
        c = {j: float(a) for j, a in coeffs.items()}
        if not c:
            continue
        rhs = float(rhs)
        add(c, rhs if sense in ("==", ">=") else -np.inf, rhs if sense in ("==", "<=") else np.inf)

    def implied(z: int, coeffs: dict[int, float], sense: str, big: float):
        # coeffs . v (sense) 0 whenever binary z is 1
        if sense in ("<=", "=="):
            add({**coeffs, z: big}, -np.inf, big)
        if sense in (">=", "=="):
            add({**{j: -a for j, a in coeffs.items()}, z: big}, -np.inf, big)

    xi, li, yi = lay.xi, lay.li, lay.yi
    for i in lay.nonreset:
        e = net.edges[i]
        nu = float(e.cap_out)
        bx = max(r0, nu * big_l) + 1.0
        za, zb, zc = (bidx[("branch", i, br)] for br in "ABC")
        add({za: 1, zb: 1, zc: 1}, 1, 1)
        lu, lv, yv, x = li[e.tail], li[e.head], yi[e.head], xi[i]
        implied(za, {x: 1.0}, "<=", r0 + 1.0)
        implied(za, {lv: 1.0, lu: -1.0}, "<=", big_l + 1.0)
        implied(zb, {lv: 1.0, lu: -1.0}, "==", big_l + 1.0)
        implied(zc, {x: 1.0, yv: -nu}, "==", bx)
        implied(zc, {lv: 1.0, lu: -1.0}, ">=", big_l + 1.0)
    for v in lay.vertices:
        zs = [bidx[("mode", v, m)] for m in lay.modes[v]]
        add({z: 1 for z in zs}, 1, 1)
        for m in lay.modes[v]:
            z = bidx[("mode", v, m)]
            if m is None:
                implied(z, {li[v]: 1.0, yi[v]: -1.0}, "==", big_l + 1.0)
            else:
                b = float(cfg.bound(m))
                implied(z, {li[v]: b, xi[m]: -1.0}, "==", b * big_l + r0 + 1.0)
        if v == net.source:
            continue
        incoming = [i for i in net.in_edges(v) if i in cfg.active_edges]
        if incoming and not any(i in cfg.resetting_edges for i in incoming):
            add({bidx[("branch", i, br)]: 1 for i in incoming for br in "BC"}, 1, np.inf)

    cost = np.zeros(n)
    for v in lay.vertices:
        cost[yi[v]] = -1.0
    integrality = np.zeros(n)
    integrality[n_cont:] = 1
    ub = np.full(n, np.inf)
    ub[n_cont:] = 1
    res = milp(
        cost,
        constraints=LinearConstraint(np.array(rows), np.array(lo), np.array(hi)),
        integrality=integrality,
        bounds=(np.zeros(n), ub),
    )
    if res.x is None:
        return None
    sol = res.x
    branches = {}
    for i in lay.nonreset:
        branches[i] = max("ABC", key=lambda br: sol[bidx[("branch", i, br)]])
    modes = {v: max(lay.modes[v], key=lambda m: sol[bidx[("mode", v, m)]]) for v in lay.vertices}
    return branches, modes


# -- exhaustive fallback -------------------------------------------------------

def _feasible(lay: _Layout, branches, modes) -> bool:
    try:
        return solve_lp(lay.n_vars, _regime_constraints(lay, branches, modes)) is not None
    except Unbounded:
        return True


def _search(lay: _Layout, budget: int, tried: list[str]) -> ThinFlow | None:
    net = lay.config.network
    order = [("branch", i) for i in lay.nonreset] + [("mode", v) for v in lay.vertices]
    count = 0

    def rec(k: int, branches: dict, modes: dict):
        nonlocal count
        count += 1
        if count > budget:
            raise ThinFlowError("thin-flow regime budget exhausted", tried)
        for v in net.vertices:
            if v != net.source and _attains(lay, v, branches) is False:
                return None
        if not _feasible(lay, branches, modes):
            return None
        if k == len(order):
            tf = _solve_regime(lay, branches, modes)
            tried.append(_describe(branches, modes))
            if tf is not None and not verify_thin_flow(lay.config, tf):
                return tf
            return None
        kind, key = order[k]
        if kind == "branch":
            for br in "BCA":
                found = rec(k + 1, {**branches, key: br}, modes)
                if found is not None:
                    return found
        else:
            for m in lay.modes[key]:
                found = rec(k + 1, branches, {**modes, key: m})
                if found is not None:
                    return found
        return None

    return rec(0, {}, {})


def solve_thin_flow(config: PhaseConfig, budget: int = 200_000) -> ThinFlow:
    """Spillback thin flow for one phase, verified exactly before returning."""
    lay = _layout(config)
    tried: list[str] = []
    guess = _milp_regime(lay)
    if guess is not None:
        branches, modes = guess
        tf = _solve_regime(lay, branches, modes)
        tried.append(_describe(branches, modes))
        if tf is not None and not verify_thin_flow(config, tf):
            return tf
        log.debug("MILP regime rejected: %s", tried[-1])
    tf = _search(lay, budget, tried)
    if tf is None:
        raise ThinFlowError(f"no thin flow found after {len(tried)} regimes", tried)
    return tf


def solve_thin_flow_ks(config: PhaseConfig, budget: int = 200_000) -> ThinFlow:
    """Thin flow without spillback: ``c = 1``, no inflow bounds, capacity ``min(cap_in, cap_out)``."""
    return solve_thin_flow(ks_config(config), budget)
