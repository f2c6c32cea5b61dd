"""Hypothesis strategies for small valid networks."""
from fractions import Fraction as F

from hypothesis import strategies as st

from spillnash.network import UNBOUNDED, Edge, Network, validate

caps = st.sampled_from([F(1, 2), F(1), F(3, 2), F(2), F(3)])
transits = st.sampled_from([F(0), F(1), F(2), F(3)])

# candidate arcs on s < a < b < t; s->t and a->t keep every vertex useful
ARCS = [("s", "a"), ("s", "b"), ("a", "b"), ("a", "t"), ("b", "t"), ("s", "t"), ("a", "b")]


@st.composite
def networks(draw, spillback=True, big_storage=False):
    chosen = draw(st.lists(st.sampled_from(ARCS), min_size=2, max_size=6))
    chosen = [("s", "a"), ("a", "t")] + chosen
    edges = []
    for tail, head in chosen:
        tau = draw(transits)
        out = draw(caps)
        if tail == "s" or not spillback:
            cap_in, storage = UNBOUNDED, UNBOUNDED
        else:
            cap_in = draw(caps)
            storage = UNBOUNDED if big_storage else cap_in * tau + draw(st.sampled_from([F(1, 2), F(1), F(3)]))
        edges.append(Edge(tail, head, tau, cap_in, out, storage))
    used = {v for e in edges for v in (e.tail, e.head)}
    verts = tuple(v for v in ("s", "a", "b", "t") if v in used)
    net = Network(verts, tuple(edges), "s", "t", draw(caps) * 2)
    if validate(net):
        # only b can be unreachable; route it through s->b
        edges.append(Edge("s", "b", F(1), UNBOUNDED, F(1), UNBOUNDED))
        net = Network(verts, tuple(edges), "s", "t", net.inflow_rate)
    return net
