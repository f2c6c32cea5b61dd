"""Bundled example networks and the saturation transform."""
from __future__ import annotations

from dataclasses import replace
from fractions import Fraction
from typing import Callable, Mapping

from .network import (
    UNBOUNDED,
    Edge,
    GameInstance,
    InstanceError,
    Network,
    as_rational,
    check,
)

F = Fraction


def fig1_network(eps) -> Network:
    """Source edge into ``v``, then a short bottleneck with tiny storage next to a long detour.

    Edge order: ``e1 = s->v``, ``e2 = v->t`` (bottleneck), ``e3 = v->t`` (detour).
    """
    eps = F(eps)
    if not 0 < eps < 3:
        raise InstanceError("fig1 needs 0 < eps < 3")
    return check(
        Network(
            vertices=("s", "v", "t"),
            edges=(
                Edge("s", "v", F(0), UNBOUNDED, F(3), UNBOUNDED),
                Edge("v", "t", F(0), F(3), eps, eps),
                Edge("v", "t", F(2), F(3), F(3), UNBOUNDED),
            ),
            source="s",
            sink="t",
            inflow_rate=F(3),
        )
    )


def fig1(eps=F(1, 2), M=F(2)) -> GameInstance:
    return GameInstance(fig1_network(eps), F(M), name="fig1", params={"eps": F(eps), "M": F(M)})


def unit_family_network(k: int) -> Network:
    """``k`` unit source edges, ``k-1`` unit detours of transit 2 and one unit bottleneck.

    Edge order: source bunch, bottleneck, detour bunch.  Detours get storage 3,
    the smallest integer above ``cap_in * transit``; equilibria never use them.
    """
    if int(k) != k or k < 2:
        raise InstanceError("unit_family needs an integer k >= 2")
    k = int(k)
    one = F(1)
    edges = [Edge("s", "v", F(0), UNBOUNDED, one, UNBOUNDED) for _ in range(k)]
    edges.append(Edge("v", "t", F(0), one, one, one))
    edges += [Edge("v", "t", F(2), one, one, F(3)) for _ in range(k - 1)]
    return check(Network(("s", "v", "t"), tuple(edges), "s", "t", F(k)))


def unit_family(k=4, M=None) -> GameInstance:
    k = int(k)
    M = F(k + 2) if M is None else F(M)
    return GameInstance(unit_family_network(k), M, name="unit_family", params={"k": F(k), "M": M})


def fig2_network() -> Network:
    """Two parallel shortcut edges ``e3``/``e3'`` feeding a shared bottleneck.

    Edge order: ``e1 s->a``, ``e2 s->b``, ``e3 a->b``, ``e3' a->b``, ``e4 a->t``, ``e5 b->t``.
    With spillback the short edge ``e3`` and the bottleneck ``e5`` throttle ``b``, which pushes
    flow onto the slow ``e3'``; without spillback ``e3'`` never activates. Final sink offsets are
    ``2`` for ``theta >= 3`` with spillback and ``3`` for ``theta >= 9/2`` without. Both sink labels
    equal 5 at ``theta = 3``, so spillback finishes strictly first exactly when ``M > 15/2``.
    """
    return Network(
        ("s", "a", "b", "t"),
        (
            Edge("s", "a", F(0), UNBOUNDED, F(2), UNBOUNDED),
            Edge("s", "b", F(1), UNBOUNDED, F(3), UNBOUNDED),
            Edge("a", "b", F(0), F(2), F(2), F(2)),
            Edge("a", "b", F(1), F(3), F(3), UNBOUNDED),
            Edge("a", "t", F(2), F(3), F(3), UNBOUNDED),
            Edge("b", "t", F(0), F(3, 2), F(3, 2), F(2)),
        ),
        "s",
        "t",
        F(5, 2),
    )


def fig2(M=F(14)) -> GameInstance:
    return GameInstance(fig2_network(), F(M), name="fig2", params={"M": F(M)})


BUILTINS: dict[str, tuple[Callable[..., GameInstance], dict[str, Fraction]]] = {
    "fig1": (fig1, {"eps": F(1, 2), "M": F(2)}),
    "unit_family": (unit_family, {"k": F(4)}),
    "fig2": (fig2, {"M": F(14)}),
}

_ALIASES = {"epsilon": "eps", "m": "M", "amount": "M"}


def builtin_instance(name: str, params: Mapping[str, object] | None = None) -> GameInstance:
    """Build a bundled instance; parameters may be rationals or ``"p/q"`` strings."""
    if name not in BUILTINS:
        raise InstanceError(f"unknown builtin {name!r}; choose from {sorted(BUILTINS)}")
    factory, defaults = BUILTINS[name]
    kwargs = dict(defaults)
    for key, value in (params or {}).items():
        key = _ALIASES.get(key, key)
        if key not in defaults and not (name == "unit_family" and key == "M"):
            raise InstanceError(f"builtin {name!r} has no parameter {key!r}")
        kwargs[key] = as_rational(value, what=key)
    if name == "unit_family":
        k = kwargs.pop("k")
        if k.denominator != 1:
            raise InstanceError("unit_family parameter k must be an integer")
        return factory(int(k), kwargs.get("M"))
    return factory(**kwargs)


def saturate(net: Network, flow) -> Network:
    """Lower every used edge's outflow capacity to its static flow value; drop unused edges."""
    values: Mapping[int, Fraction] = flow.values
    if flow.value != net.inflow_rate:
        raise InstanceError(f"flow value {flow.value} differs from the inflow rate {net.inflow_rate}")
    for i, e in enumerate(net.edges):
        x = values.get(i, F(0))
        if x < 0 or x > e.static_capacity:
            raise InstanceError(f"flow on edge {i} outside [0, capacity]")
    for v in net.vertices:
        if v in (net.source, net.sink):
            continue
        bal = sum((values.get(i, F(0)) for i in net.out_edges(v)), F(0)) - sum(
            (values.get(i, F(0)) for i in net.in_edges(v)), F(0)
        )
        if bal != 0:
            raise InstanceError(f"flow not conserved at {v}")
    edges = []
    for i, e in enumerate(net.edges):
        x = values.get(i, F(0))
        if x > 0:
            edges.append(replace(e, cap_out=x))
    used = {net.source, net.sink} | {e.tail for e in edges} | {e.head for e in edges}
    verts = tuple(v for v in net.vertices if v in used)
    return check(replace(net, vertices=verts, edges=tuple(edges)))
