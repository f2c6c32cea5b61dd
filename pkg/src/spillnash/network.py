"""Network model: edges, networks, routing games and the JSON instance format."""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Union

UNBOUNDED = math.inf

Number = Union[Fraction, float]


class InstanceError(ValueError):
    """Raised for malformed or invalid instance documents."""


class InstanceSyntaxError(InstanceError):
    def __init__(self, msg: str, position: int | None = None):
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"syntax error{where}: {msg}")


class InstanceValidationError(InstanceError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


def as_rational(value, *, allow_unbounded: bool = False, what: str = "value") -> Number:
    """Parse an integer, ``"p/q"`` string or (where legal) ``"inf"`` exactly."""
    if isinstance(value, bool):
        raise InstanceSyntaxError(f"{what}: booleans are not numbers")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if math.isinf(value) and allow_unbounded:
            return UNBOUNDED
        raise InstanceSyntaxError(f"{what}: floating point literal {value!r} is not exact; use \"p/q\"")
    if isinstance(value, str):
        text = value.strip()
        if text.lower() in ("inf", "infinity"):
            if allow_unbounded:
                return UNBOUNDED
            raise InstanceSyntaxError(f"{what}: unbounded value not allowed here")
        try:
            num, _, den = text.partition("/")
            if not den:
                return Fraction(int(num))
            return Fraction(int(num), int(den))
        except (ValueError, ZeroDivisionError):
            raise InstanceSyntaxError(f"{what}: cannot parse {value!r} as a rational") from None
    raise InstanceSyntaxError(f"{what}: unsupported type {type(value).__name__}")


def fmt(value: Number) -> str:
    """Render a rational as ``"p/q"`` (or ``"p"``); unbounded values as ``"inf"``."""
    if value == UNBOUNDED:
        return "inf"
    return str(Fraction(value))


@dataclass(frozen=True)
class Edge:
    tail: str
    head: str
    transit: Fraction
    cap_in: Number
    cap_out: Fraction
    storage: Number = UNBOUNDED

    @property
    def static_capacity(self) -> Fraction:
        return min(self.cap_in, self.cap_out)

    def to_json(self) -> dict:
        return {
            "tail": self.tail,
            "head": self.head,
            "transit": fmt(self.transit),
            "cap_in": fmt(self.cap_in),
            "cap_out": fmt(self.cap_out),
            "storage": fmt(self.storage),
        }


@dataclass(frozen=True)
class Network:
    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    source: str
    sink: str
    inflow_rate: Fraction
    strict_source: bool = False

    def out_edges(self, v: str) -> list[int]:
        return [i for i, e in enumerate(self.edges) if e.tail == v]

    def in_edges(self, v: str) -> list[int]:
        return [i for i, e in enumerate(self.edges) if e.head == v]

    def without_edges(self, removed) -> "Network":
        removed = set(removed)
        return replace(self, edges=tuple(e for i, e in enumerate(self.edges) if i not in removed))

    def edge_subset(self, kept) -> "Network":
        kept = sorted(set(kept))
        return replace(self, edges=tuple(self.edges[i] for i in kept))


@dataclass(frozen=True)
class GameInstance:
    network: Network
    amount: Fraction
    name: str = ""
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (self.amount > 0) or self.amount == UNBOUNDED:
            raise InstanceValidationError(["amount must be finite and positive"])

    @property
    def horizon(self) -> Fraction:
        """Particle time of the last particle, ``M / r0``."""
        return self.amount / self.network.inflow_rate


# -- validation -------------------------------------------------------------

def _reachable(vertices, adj, start) -> set[str]:
    seen = {start}
    todo = deque([start])
    while todo:
        u = todo.popleft()
        for w in adj.get(u, ()):
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return seen


def validate(net: Network) -> list[str]:
    """List every violated structural constraint (empty when valid)."""
    out: list[str] = []
    vset = set(net.vertices)
    if len(vset) != len(net.vertices):
        out.append("duplicate vertex ids")
    for name, v in (("source", net.source), ("sink", net.sink)):
        if v not in vset:
            out.append(f"{name} {v!r} is not a vertex")
    if net.source == net.sink:
        out.append("source equals sink")
    if not (net.inflow_rate > 0) or net.inflow_rate == UNBOUNDED:
        out.append("inflow rate must be finite and positive")
    for i, e in enumerate(net.edges):
        tag = f"edge {i} ({e.tail}->{e.head})"
        if e.tail not in vset or e.head not in vset:
            out.append(f"{tag}: endpoint is not a vertex")
        if e.transit < 0 or e.transit == UNBOUNDED:
            out.append(f"{tag}: transit time must be finite and nonnegative")
        if not (e.cap_in > 0):
            out.append(f"{tag}: inflow capacity must be positive")
        if not (e.cap_out > 0) or e.cap_out == UNBOUNDED:
            out.append(f"{tag}: outflow capacity must be finite and positive")
        if not (e.storage > 0):
            out.append(f"{tag}: storage must be positive")
        if e.storage != UNBOUNDED and e.transit != 0:
            if e.cap_in == UNBOUNDED:
                out.append(f"{tag}: storage constraint violated (finite storage with unbounded inflow capacity)")
            elif not e.storage > e.cap_in * e.transit:
                out.append(f"{tag}: storage constraint violated (storage must exceed cap_in * transit)")
        if net.strict_source and e.tail != net.source:
            if e.cap_in == UNBOUNDED or e.storage == UNBOUNDED:
                out.append(f"{tag}: strict-source mode requires finite cap_in and storage off the source")
    if out:
        return out

    adj: dict[str, list[str]] = {}
    for e in net.edges:
        adj.setdefault(e.tail, []).append(e.head)
    reach = _reachable(net.vertices, adj, net.source)
    for v in net.vertices:
        if v not in reach:
            out.append(f"unreachable vertex {v!r}")
    if net.sink not in reach:
        out.append("sink unreachable from source")

    zero_adj: dict[str, list[str]] = {}
    for e in net.edges:
        if e.transit == 0:
            zero_adj.setdefault(e.tail, []).append(e.head)
    if _has_cycle(net.vertices, zero_adj):
        out.append("cycle with zero total transit")
    return out


def _has_cycle(vertices, adj) -> bool:
    state = {v: 0 for v in vertices}
    for root in vertices:
        if state[root]:
            continue
        stack = [(root, iter(adj.get(root, ())))]
        state[root] = 1
        while stack:
            v, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[v] = 2
                stack.pop()
            elif state.get(nxt, 0) == 1:
                return True
            elif state.get(nxt, 0) == 0:
                state[nxt] = 1
                stack.append((nxt, iter(adj.get(nxt, ()))))
    return False


def check(net: Network) -> Network:
    problems = validate(net)
    if problems:
        raise InstanceValidationError(problems)
    return net


# -- instance documents ------------------------------------------------------

_TOP_FIELDS = {"vertices", "source", "sink", "inflow_rate", "edges", "amount", "strict_source", "name"}
_EDGE_FIELDS = {"tail", "head", "transit", "cap_in", "cap_out", "storage"}


def network_from_dict(doc: dict) -> tuple[Network, Fraction | None]:
    if not isinstance(doc, dict):
        raise InstanceSyntaxError("top level must be an object")
    unknown = set(doc) - _TOP_FIELDS
    if unknown:
        raise InstanceSyntaxError(f"unknown fields {sorted(unknown)}")
    for key in ("vertices", "source", "sink", "inflow_rate", "edges"):
        if key not in doc:
            raise InstanceSyntaxError(f"missing field {key!r}")
    if not isinstance(doc["vertices"], list) or not all(isinstance(v, str) for v in doc["vertices"]):
        raise InstanceSyntaxError("vertices must be an array of strings")
    edges = []
    for i, ed in enumerate(doc["edges"]):
        if not isinstance(ed, dict):
            raise InstanceSyntaxError(f"edge {i} must be an object")
        unknown = set(ed) - _EDGE_FIELDS
        if unknown:
            raise InstanceSyntaxError(f"edge {i}: unknown fields {sorted(unknown)}")
        missing = {"tail", "head", "transit", "cap_in", "cap_out"} - set(ed)
        if missing:
            raise InstanceSyntaxError(f"edge {i}: missing fields {sorted(missing)}")
        edges.append(
            Edge(
                tail=str(ed["tail"]),
                head=str(ed["head"]),
                transit=as_rational(ed["transit"], what=f"edge {i} transit"),
                cap_in=as_rational(ed["cap_in"], allow_unbounded=True, what=f"edge {i} cap_in"),
                cap_out=as_rational(ed["cap_out"], what=f"edge {i} cap_out"),
                storage=as_rational(ed.get("storage", "inf"), allow_unbounded=True, what=f"edge {i} storage"),
            )
        )
    net = Network(
        vertices=tuple(doc["vertices"]),
        edges=tuple(edges),
        source=str(doc["source"]),
        sink=str(doc["sink"]),
        inflow_rate=as_rational(doc["inflow_rate"], what="inflow_rate"),
        strict_source=bool(doc.get("strict_source", False)),
    )
    amount = as_rational(doc["amount"], what="amount") if "amount" in doc else None
    return net, amount


def parse_network(text: str) -> Network:
    """Parse and validate an instance document."""
    return parse_instance(text)[0]


def parse_instance(text: str) -> tuple[Network, Fraction | None]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceSyntaxError(exc.msg, exc.pos) from None
    net, amount = network_from_dict(doc)
    check(net)
    return net, amount


def network_to_dict(net: Network, amount: Fraction | None = None) -> dict:
    doc = {
        "vertices": list(net.vertices),
        "source": net.source,
        "sink": net.sink,
        "inflow_rate": fmt(net.inflow_rate),
        "edges": [e.to_json() for e in net.edges],
    }
    if net.strict_source:
        doc["strict_source"] = True
    if amount is not None:
        doc["amount"] = fmt(amount)
    return doc


def emit_network(net: Network, amount: Fraction | None = None) -> str:
    return json.dumps(network_to_dict(net, amount), indent=2)


def load_instance(path) -> GameInstance:
    with open(path, encoding="utf-8") as fh:
        net, amount = parse_instance(fh.read())
    if amount is None:
        raise InstanceError(f"{path}: instance has no amount")
    return GameInstance(net, amount, name=str(path))
