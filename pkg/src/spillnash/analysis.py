"""Price of anarchy, Braess ratio, model comparison and executable bound checks.

All comparisons are exact.  The two irrational quantities that appear,
``e`` and ``ln``, are bracketed by rationals and every check uses the
bracket that makes it conservative: a reported pass is always a true pass.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from .engine import KOCH_SKUTELLA, SPILLBACK, EquilibriumTrace, compute_equilibrium, shortest_distances
from .network import UNBOUNDED, GameInstance, Network, check, fmt
from .quickest import QuickestFlowResult, opt_completion

ZERO = Fraction(0)
ONE = Fraction(1)
E_LOW = Fraction(271828, 100000)
E_HIGH = Fraction(271829, 100000)

LEMMAS = ("L2", "C3", "L4", "L5", "L7", "C6", "L8", "T9", "OPT-linear", "EQ-linear")
_SATURATED_ONLY = {"L4", "L5", "C6", "L8", "T9"}


class PreconditionError(ValueError):
    def __init__(self, lemma: str, reason: str):
        self.lemma = lemma
        self.reason = reason
        super().__init__(f"{lemma}: precondition not met: {reason}")


@dataclass(frozen=True)
class PoAReport:
    instance: GameInstance
    mode: str
    eq_completion: Fraction
    opt_completion: Fraction
    trace: EquilibriumTrace = field(repr=False, compare=False)
    quickest: QuickestFlowResult = field(repr=False, compare=False)

    @property
    def ratio(self) -> Fraction:
        return self.eq_completion / self.opt_completion

    def to_json(self) -> dict:
        return {
            "kind": "poa-report",
            "name": self.instance.name,
            "mode": self.mode,
            "amount": fmt(self.instance.amount),
            # a single deterministic equilibrium, not a supremum over all of them
            "computed_equilibrium_completion": fmt(self.eq_completion),
            "opt_completion": fmt(self.opt_completion),
            "ratio": fmt(self.ratio),
        }


@dataclass(frozen=True)
class LemmaReport:
    lemma: str
    relation: str  # "=", "<=", ">=", or "exists >=" (some row must hold)
    rows: list[tuple[int, Fraction, Fraction]]
    note: str = ""

    @property
    def verdict(self) -> bool:
        if self.relation == "exists >=":
            return any(lhs >= rhs for _, lhs, rhs in self.rows)
        return all(_holds(self.relation, lhs, rhs) for _, lhs, rhs in self.rows)

    @property
    def worst_slack(self) -> Fraction:
        if not self.rows:
            return ZERO
        if self.relation == "=":
            return -max(abs(lhs - rhs) for _, lhs, rhs in self.rows)
        if self.relation == "<=":
            return min(rhs - lhs for _, lhs, rhs in self.rows)
        if self.relation == ">=":
            return min(lhs - rhs for _, lhs, rhs in self.rows)
        return max(lhs - rhs for _, lhs, rhs in self.rows)

    def to_json(self) -> dict:
        return {
            "lemma": self.lemma,
            "relation": self.relation,
            "verdict": "pass" if self.verdict else "fail",
            "worst_slack": fmt(self.worst_slack),
            "rows": [{"phase": i, "lhs": fmt(a), "rhs": fmt(b)} for i, a, b in self.rows],
            "note": self.note,
        }

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["phase", "lhs", "rhs"])
        for i, a, b in self.rows:
            w.writerow([i, fmt(a), fmt(b)])
        return buf.getvalue()


def _holds(relation: str, lhs: Fraction, rhs: Fraction) -> bool:
    return {"=": lhs == rhs, "<=": lhs <= rhs, ">=": lhs >= rhs}[relation]


# -- headline quantities ------------------------------------------------------

def price_of_anarchy(instance: GameInstance, mode: str = SPILLBACK, max_phases: int = 10_000) -> PoAReport:
    trace = compute_equilibrium(instance, mode, max_phases)
    quick = opt_completion(instance.network, instance.amount)
    if trace.completion < quick.horizon:
        raise AssertionError("equilibrium completes before the optimum; solver bug")
    return PoAReport(instance, mode, trace.completion, quick.horizon, trace, quick)


def compare_models(instance: GameInstance, max_phases: int = 10_000) -> tuple[Fraction, Fraction]:
    """Completion times ``(spillback, koch-skutella)``."""
    spill = compute_equilibrium(instance, SPILLBACK, max_phases).completion
    ks = compute_equilibrium(instance, KOCH_SKUTELLA, max_phases).completion
    return spill, ks


def _prune(net: Network) -> Network | None:
    """Drop vertices not on any s-t walk; ``None`` when the sink is cut off."""
    fwd = {net.source}
    stack = [net.source]
    while stack:
        u = stack.pop()
        for i in net.out_edges(u):
            v = net.edges[i].head
            if v not in fwd:
                fwd.add(v)
                stack.append(v)
    if net.sink not in fwd:
        return None
    back = {net.sink}
    stack = [net.sink]
    while stack:
        v = stack.pop()
        for i in net.in_edges(v):
            u = net.edges[i].tail
            if u not in back:
                back.add(u)
                stack.append(u)
    keep = fwd & back
    edges = tuple(e for e in net.edges if e.tail in keep and e.head in keep)
    verts = tuple(v for v in net.vertices if v in keep)
    return Network(verts, edges, net.source, net.sink, net.inflow_rate, net.strict_source)


def braess_ratio(instance: GameInstance, mode: str = SPILLBACK, limit: int = 12,
                 max_phases: int = 10_000) -> tuple[Fraction, tuple[int, ...]]:
    """Largest ``EQ(G) / EQ(H)`` over edge subsets ``H`` that keep an s-t path.

    Returns the ratio and the kept edge indices of a maximising subgraph
    (the smallest such subset in enumeration order).
    """
    net = instance.network
    m = len(net.edges)
    if m > limit:
        raise ValueError(f"{m} edges exceed the enumeration limit {limit}")
    full = compute_equilibrium(instance, mode, max_phases).completion
    best, witness = ONE, tuple(range(m))
    seen: dict[tuple, Fraction] = {}
    for size in range(1, m + 1):
        for kept in combinations(range(m), size):
            sub = _prune(net.edge_subset(kept))
            if sub is None:
                continue
            key = (sub.vertices, sub.edges)
            if key not in seen:
                check(sub)
                seen[key] = compute_equilibrium(GameInstance(sub, instance.amount), mode, max_phases).completion
            ratio = full / seen[key]
            if ratio > best:
                best, witness = ratio, kept
    return best, witness


def spillback_factor_bound(net: Network) -> Fraction:
    """Network-only lower bound on every spillback factor of every equilibrium."""
    caps = [c for e in net.edges for c in (e.cap_in, e.cap_out) if c != UNBOUNDED]
    nu_min = min(caps + [ONE])
    nu_sum = max(sum((e.cap_out for e in net.edges), ZERO), ONE)
    nu_max = max(e.cap_out for e in net.edges)
    return (nu_min / nu_sum) ** len(net.edges) * nu_min / nu_max


# -- helpers for the bound checks ---------------------------------------------

def simple_paths(net: Network) -> list[list[int]]:
    out: list[list[int]] = []

    def walk(v: str, path: list[int], seen: set[str]):
        if v == net.sink:
            out.append(list(path))
            return
        for i in net.out_edges(v):
            w = net.edges[i].head
            if w not in seen:
                path.append(i)
                seen.add(w)
                walk(w, path, seen)
                seen.discard(w)
                path.pop()

    walk(net.source, [], {net.source})
    return out


def _shortest_bottleneck_path(net: Network) -> tuple[Fraction, Fraction]:
    """``(tau_p, nu_p)`` for a shortest path, preferring the widest among ties."""
    best = None
    for p in simple_paths(net):
        tau = sum((net.edges[i].transit for i in p), ZERO)
        caps = [c for i in p for c in (net.edges[i].cap_in, net.edges[i].cap_out) if c != UNBOUNDED]
        key = (tau, -min(caps))
        if best is None or key < best:
            best = key
    return best[0], -best[1]


def ln_bracket(x: Fraction, value: Fraction, max_terms: int = 4000) -> tuple[Fraction, Fraction]:
    """Rationals ``lo <= ln(x) <= hi`` tight enough that ``value`` lies outside ``(lo, hi)``.

    Uses the atanh series; partial sums are rounded toward the safe side
    and the accumulated rounding widens the bracket.
    """
    value, x = Fraction(value), Fraction(x)
    if x <= 0:
        raise ValueError("ln needs a positive argument")
    if x == 1:
        return ZERO, ZERO
    y = (x - 1) / (x + 1)
    y2 = y * y
    partial, power, drift = ZERO, y, ZERO
    for k in range(max_terms):
        partial += 2 * power / (2 * k + 1)
        power *= y2
        partial = _round(partial, y > 0)
        drift += _ROUND_UNIT
        tail = 2 * abs(power) / ((2 * k + 3) * (1 - y2)) + drift
        lo, hi = (partial, partial + tail) if y > 0 else (partial - tail, partial)
        if value <= lo or value > hi:
            return lo, hi
    raise ArithmeticError("ln bracket undecided within the term budget")


_ROUND_UNIT = Fraction(1, 2 ** 160)


def _round(q: Fraction, down: bool) -> Fraction:
    scaled = q * 2 ** 160
    n = scaled.numerator // scaled.denominator
    if not down and n * scaled.denominator != scaled.numerator:
        n += 1
    return Fraction(n, 2 ** 160)


def _saturated(trace: EquilibriumTrace, quick: QuickestFlowResult) -> str | None:
    net = trace.instance.network
    flow = quick.static_flow
    if flow.value != net.inflow_rate:
        return f"static flow value {fmt(flow.value)} differs from r0 {fmt(net.inflow_rate)}"
    for i, e in enumerate(net.edges):
        if flow.values.get(i, ZERO) != e.cap_out:
            return f"edge {i} carries {fmt(flow.values.get(i, ZERO))} below its outflow capacity {fmt(e.cap_out)}"
    return None


def _phase_terms(trace: EquilibriumTrace):
    """Per phase: index, theta bounds, omega bounds, sink inflow from rates, l'_t."""
    net = trace.network
    lt = trace.labels[net.sink]
    r0 = net.inflow_rate
    rows = []
    for p in trace.phases:
        a, b = p.theta_interval
        w0, w1 = lt(a), lt(b)
        t_mid = lt((a + b) / 2)
        inflow = sum((trace.rates_out[i](t_mid) for i in net.in_edges(net.sink)), ZERO)
        rows.append((p.index, a, b, w0, w1, inflow, (w1 - w0) / (b - a), p))
    return rows, r0


def verify_lemma(trace: EquilibriumTrace, quick: QuickestFlowResult | None, lemma: str) -> LemmaReport:
    """Evaluate one bound or identity on a computed trace."""
    if lemma not in LEMMAS:
        raise ValueError(f"unknown lemma {lemma!r}; choose from {LEMMAS}")
    if quick is None:
        if lemma not in ("L2", "C3", "EQ-linear"):
            raise PreconditionError(lemma, "needs the quickest flow of the same instance")
    if lemma in _SATURATED_ONLY:
        why = _saturated(trace, quick)
        if why:
            raise PreconditionError(lemma, f"network not saturated ({why})")
    rows, r0 = _phase_terms(trace)
    net = trace.network

    if lemma == "L2":
        return LemmaReport("L2", "=", [(i, lp, r0 / inflow) for i, _, _, _, _, inflow, lp, _ in rows])
    if lemma == "C3":
        return LemmaReport("C3", "=", [(i, w1 - w0, r0 / inflow * (b - a))
                                       for i, a, b, w0, w1, inflow, _, _ in rows])

    if lemma == "L4":
        paths = simple_paths(net)
        taus = [sum((net.edges[e].transit for e in p), ZERO) for p in paths]
        acc = [ZERO] * len(paths)
        out = []
        for i, a, b, w0, w1, inflow, _, ph in rows:
            best = None
            for k, p in enumerate(paths):
                qp = sum((ph.queue_derivatives[e] for e in p), ZERO)
                acc[k] += (1 + qp) * inflow / r0 * (w1 - w0)
                row = (i, taus[k], w1 - acc[k])
                if best is None or row[1] - row[2] < best[1] - best[2]:
                    best = row
            out.append(best)
        return LemmaReport("L4", ">=", out, "tightest simple path per phase; bound taken up to the phase end")

    if lemma == "L5":
        lhs = r0 * quick.horizon
        rhs = sum((rate * tau for _, rate, tau in quick.paths), ZERO)
        rhs += sum((inflow * (w1 - w0) for _, _, _, w0, w1, inflow, _, _ in rows), ZERO)
        return LemmaReport("L5", "=", [(0, lhs, rhs)])

    if lemma == "L7":
        lams = []
        for i, a, b, w0, w1, inflow, _, ph in rows:
            s = sum((rate * sum((ph.queue_derivatives[e] for e in p), ZERO) for p, rate, _ in quick.paths), ZERO)
            lams.append((inflow / r0 * s, w1 - w0))
        top = max(l for l, _ in lams)
        lhs = sum((l * dw for l, dw in lams), ZERO)
        w_first, w_last = rows[0][3], rows[-1][4]
        return LemmaReport("L7", "<=", [(0, lhs, (w_last - w_first) * top)])

    if lemma == "C6":
        ratio = quick.horizon / trace.completion
        out = []
        for i, _, _, _, _, inflow, _, ph in rows:
            s = sum((net.edges[e].cap_out * q for e, q in ph.queue_derivatives.items()), ZERO)
            out.append((i, ratio, 1 - inflow / r0 ** 2 * s))
        return LemmaReport("C6", "exists >=", out, "finite phase count, so the supremum is attained")

    if lemma == "L8":
        out = []
        for i, _, _, _, _, inflow, _, ph in rows:
            if r0 / inflow < 1:
                raise PreconditionError("L8", f"phase {i} has sink inflow above r0")
            c = min(ph.thin_flow.c.values())
            lhs = sum((net.edges[e].cap_out * q for e, q in ph.queue_derivatives.items()), ZERO)
            # lhs <= (r0 / c) ln(r0 / a)  <=>  lhs * c / r0 <= ln(r0 / a)
            scaled = lhs * c / r0
            lo, hi = ln_bracket(r0 / inflow, scaled)
            out.append((i, scaled, lo if scaled <= lo else hi))
        return LemmaReport("L8", "<=", out, "rows compare lhs*c/r0 with a rational bracket end of ln(r0/a)")

    if lemma == "T9":
        c = trace.min_spill_factor
        if not c * E_LOW > 1:
            raise PreconditionError("T9", f"minimal spillback factor {fmt(c)} not provably above 1/e")
        ratio = trace.completion / quick.horizon
        # ratio <= ce/(ce-1)  <=>  ce(ratio - 1) <= ratio; the left side grows with e
        return LemmaReport("T9", "<=", [(0, c * E_HIGH * (ratio - 1), ratio)],
                           "checked as c*e*(ratio-1) <= ratio with e rounded up")

    if lemma == "OPT-linear":
        M = trace.instance.amount
        tau_p, nu_p = _shortest_bottleneck_path(trace.instance.network)
        return LemmaReport("OPT-linear", "<=", [(0, M / r0, quick.horizon), (0, quick.horizon, tau_p + M / nu_p)])

    # EQ-linear
    M = trace.instance.amount
    eps = spillback_factor_bound(net)
    nu_min = min(e.cap_out for e in net.edges)
    l0 = shortest_distances(net)[net.sink]
    return LemmaReport("EQ-linear", "<=", [(0, M / r0, trace.completion),
                                           (0, trace.completion, M / (eps * nu_min) + l0)])


def verify_all(trace: EquilibriumTrace, quick: QuickestFlowResult | None) -> dict[str, LemmaReport | PreconditionError]:
    out: dict[str, LemmaReport | PreconditionError] = {}
    for lemma in LEMMAS:
        try:
            out[lemma] = verify_lemma(trace, quick, lemma)
        except PreconditionError as exc:
            out[lemma] = exc
    return out


# -- sweeps ------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    amount: Fraction
    eq: Fraction
    opt: Fraction
    opt_lower: Fraction
    opt_upper: Fraction
    eq_upper: Fraction

    @property
    def ratio(self) -> Fraction:
        return self.eq / self.opt

    @property
    def bounds_hold(self) -> bool:
        return self.opt_lower <= self.opt <= self.opt_upper and self.opt <= self.eq <= self.eq_upper


@dataclass(frozen=True)
class PoASweep:
    mode: str
    rows: list[SweepRow]

    @property
    def max_ratio(self) -> Fraction:
        return max(r.ratio for r in self.rows)

    def tail_fit(self, column: str) -> tuple[Fraction, Fraction]:
        """Slope and intercept through the last two rows of ``eq`` or ``opt``."""
        if len(self.rows) < 2:
            raise ValueError("a fit needs at least two rows")
        a, b = self.rows[-2], self.rows[-1]
        ya, yb = getattr(a, column), getattr(b, column)
        slope = (yb - ya) / (b.amount - a.amount)
        return slope, yb - slope * b.amount

    def csv(self, decimals: int | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        head = ["M", "EQ", "OPT", "ratio"]
        if decimals is not None:
            head.append("ratio_decimal")
        w.writerow(head)
        for r in self.rows:
            line = [fmt(r.amount), fmt(r.eq), fmt(r.opt), fmt(r.ratio)]
            if decimals is not None:
                line.append(f"{float(r.ratio):.{decimals}f}")
            w.writerow(line)
        return buf.getvalue()


def poa_sweep(net: Network, amounts, mode: str = SPILLBACK, max_phases: int = 10_000) -> PoASweep:
    amounts = [Fraction(m) for m in amounts]
    if any(m <= 0 for m in amounts) or amounts != sorted(amounts):
        raise ValueError("amounts must be positive and sorted")
    r0 = net.inflow_rate
    tau_p, nu_p = _shortest_bottleneck_path(net)
    rows = []
    for M in amounts:
        inst = GameInstance(net, M)
        trace = compute_equilibrium(inst, mode, max_phases)
        model = trace.network
        eps = spillback_factor_bound(model)
        nu_min = min(e.cap_out for e in model.edges)
        l0 = shortest_distances(model)[model.sink]
        opt = opt_completion(net, M).horizon
        rows.append(SweepRow(M, trace.completion, opt, M / r0, tau_p + M / nu_p, M / (eps * nu_min) + l0))
    return PoASweep(mode, rows)
