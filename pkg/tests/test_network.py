import json
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from spillnash.instances import builtin_instance, fig1_network, saturate, unit_family_network
from spillnash.network import (
    UNBOUNDED,
    Edge,
    GameInstance,
    InstanceError,
    InstanceSyntaxError,
    InstanceValidationError,
    Network,
    emit_network,
    parse_instance,
    parse_network,
    validate,
)
from spillnash.quickest import StaticFlow, opt_completion

SINGLE = {
    "vertices": ["s", "t"],
    "source": "s",
    "sink": "t",
    "inflow_rate": 1,
    "edges": [{"tail": "s", "head": "t", "transit": 1, "cap_in": 1, "cap_out": 1, "storage": 2}],
}


def doc_with(**edge):
    doc = json.loads(json.dumps(SINGLE))
    doc["edges"][0].update(edge)
    return json.dumps(doc)


def test_smallest_valid_instance():
    net = parse_network(json.dumps(SINGLE))
    assert len(net.edges) == 1
    assert validate(net) == []


def test_storage_equal_to_cap_in_times_transit_is_rejected():
    with pytest.raises(InstanceValidationError, match="storage constraint violated"):
        parse_network(doc_with(storage=1))


def test_rational_strings_and_unbounded():
    net = parse_network(doc_with(cap_in="inf", storage="inf", cap_out="3/7"))
    assert net.edges[0].cap_in == UNBOUNDED
    assert net.edges[0].cap_out == F(3, 7)


@pytest.mark.parametrize("bad", [{"cap_out": 0.5}, {"cap_out": "x"}, {"transit": True}, {"speed": 1}])
def test_bad_literals_are_syntax_errors(bad):
    with pytest.raises(InstanceSyntaxError):
        parse_network(doc_with(**bad))


def test_json_syntax_error_reports_position():
    with pytest.raises(InstanceSyntaxError) as info:
        parse_network('{"vertices": [}')
    assert info.value.position is not None


def test_zero_transit_cycle():
    net = Network(
        ("s", "a", "b", "t"),
        (
            Edge("s", "a", F(1), F(1), F(1)),
            Edge("a", "b", F(0), F(1), F(1)),
            Edge("b", "a", F(0), F(1), F(1)),
            Edge("b", "t", F(1), F(1), F(1)),
        ),
        "s",
        "t",
        F(1),
    )
    assert validate(net) == ["cycle with zero total transit"]


def test_unreachable_vertex():
    net = Network(("s", "t", "x"), (Edge("s", "t", F(1), F(1), F(1)),), "s", "t", F(1))
    assert validate(net) == ["unreachable vertex 'x'"]


def test_amount_must_be_positive():
    with pytest.raises(InstanceError):
        GameInstance(fig1_network(F(1, 2)), F(0))


def test_fig1_builtin_shape():
    inst = builtin_instance("fig1", {"eps": "1/10", "M": 2})
    assert len(inst.network.edges) == 3
    assert inst.network.inflow_rate == 3
    assert inst.network.edges[1].cap_out == F(1, 10)


def test_unit_family_builtin_shape():
    inst = builtin_instance("unit_family", {"k": 4})
    net = inst.network
    assert len(net.edges) == 4 + 1 + 3
    assert net.inflow_rate == 4
    assert inst.amount == 6


@pytest.mark.parametrize("name,params", [("fig1", {"eps": 3}), ("unit_family", {"k": "5/2"}), ("nope", {}), ("fig1", {"x": 1})])
def test_builtin_errors(name, params):
    with pytest.raises(InstanceError):
        builtin_instance(name, params)


def test_saturate_single_edge():
    net = Network(("s", "t"), (Edge("s", "t", F(1), F(2), F(2)),), "s", "t", F(1))
    out = saturate(net, StaticFlow({0: F(1)}, F(1)))
    assert out.edges[0].cap_out == 1


def test_saturate_removes_unused_parallel_edge(two_edge_net):
    net = Network(("s", "t"), two_edge_net.edges, "s", "t", F(1))
    out = saturate(net, StaticFlow({0: F(1), 1: F(0)}, F(1)))
    assert len(out.edges) == 1 and out.edges[0].cap_out == 1


def test_saturate_rejects_wrong_value():
    with pytest.raises(InstanceError):
        saturate(fig1_network(1), StaticFlow({0: F(1)}, F(1)))


@pytest.mark.parametrize("net", [fig1_network(F(1, 2)), fig1_network(F(1, 10)), unit_family_network(3)])
def test_saturate_output_is_reproduced_by_the_static_solver(net):
    flow = opt_completion(net, 100).static_flow
    sat = saturate(net, flow)
    assert validate(sat) == []
    again = opt_completion(sat, 100).static_flow
    assert again.value == net.inflow_rate
    assert [again.values[i] for i in range(len(sat.edges))] == [e.cap_out for e in sat.edges]


rationals = st.fractions(min_value=F(1, 20), max_value=20, max_denominator=50)


@given(st.lists(st.tuples(rationals, rationals, rationals, st.booleans()), min_size=1, max_size=4), rationals, rationals)
def test_emit_parse_round_trip(edges, rate, amount):
    es = []
    for transit, cap, out, unbounded in edges:
        cap_in = UNBOUNDED if unbounded else cap
        storage = UNBOUNDED if unbounded else cap * transit + 1
        es.append(Edge("s", "t", transit, cap_in, out, storage))
    net = Network(("s", "t"), tuple(es), "s", "t", rate)
    back, m = parse_instance(emit_network(net, amount))
    assert back == net and m == amount
