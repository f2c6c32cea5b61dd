import json
from fractions import Fraction as F

import pytest

from spillnash.engine import KOCH_SKUTELLA, SPILLBACK, compute_equilibrium
from spillnash.instances import fig1, fig2, unit_family
from spillnash.network import UNBOUNDED, Edge, Network
from spillnash.pwl import StepFn
from spillnash.quickest import opt_completion
from spillnash.verifier import FlowOverTime, earliest_arrival_labels, render, verify_feasible, verify_nash, violations_json


def conditions(violations):
    return {v.condition for v in violations}


def overfilled():
    net = Network(("s", "t"), (Edge("s", "t", F(1), F(2), F(1), F(3)),), "s", "t", F(2))
    return FlowOverTime(
        net, F(8),
        rates_in={0: StepFn([(0, 2), (4, 0)])},
        rates_out={0: StepFn([(1, 1), (9, 0)])},
        release=StepFn([(0, 2), (4, 0)]),
    )


def test_overfilled_edge_breaks_inflow_condition():
    found = verify_feasible(overfilled())
    assert conditions(found) == {"inflow condition violated"}
    worst = max(found, key=lambda v: v.lhs)
    assert worst.element == "edge 0" and worst.rhs == 3


def test_throttle_without_exhausted_outgoing_edge_breaks_no_slack():
    net = Network(
        ("s", "v", "t"),
        (Edge("s", "v", F(0), UNBOUNDED, F(1)), Edge("v", "t", F(1), F(2), F(2), UNBOUNDED)),
        "s", "t", F(2),
    )
    flow = FlowOverTime(
        net, F(2),
        rates_in={0: StepFn([(0, 2), (1, 0)]), 1: StepFn([(0, F(1, 2)), (4, 0)])},
        rates_out={0: StepFn([(0, F(1, 2)), (4, 0)]), 1: StepFn([(1, F(1, 2)), (5, 0)])},
        release=StepFn([(0, 2), (1, 0)]),
    )
    assert conditions(verify_feasible(flow)) == {"no-slack violated"}


def queue_free_single_path():
    net = Network(("s", "t"), (Edge("s", "t", F(1), F(1), F(1)),), "s", "t", F(1))
    return FlowOverTime(
        net, F(2),
        rates_in={0: StepFn([(0, 1), (2, 0)])},
        rates_out={0: StepFn([(1, 1), (3, 0)])},
        release=StepFn([(0, 1), (2, 0)]),
    )


def test_queue_free_single_path_is_an_equilibrium():
    flow = queue_free_single_path()
    assert verify_feasible(flow) == []
    assert verify_nash(flow) == []
    assert earliest_arrival_labels(flow)["t"](F(3, 2)) == F(5, 2)


def test_release_total_must_match_amount():
    flow = queue_free_single_path()
    short = FlowOverTime(flow.network, F(3), flow.rates_in, flow.rates_out, flow.release)
    assert "release total differs from amount" in conditions(verify_feasible(short))


def test_conservation_break_is_reported():
    flow = queue_free_single_path()
    leaky = FlowOverTime(flow.network, flow.amount, {0: StepFn([(0, 1), (1, 0)])}, {0: StepFn([(1, 1), (2, 0)])}, flow.release)
    assert "conservation violated" in conditions(verify_feasible(leaky))


@pytest.mark.parametrize("inst", [fig1(F(1, 2)), fig1(F(1, 10)), fig1(F(1)), unit_family(2), unit_family(4), fig2()],
                         ids=["fig1-half", "fig1-tenth", "fig1-one", "unit2", "unit4", "fig2"])
@pytest.mark.parametrize("mode", [SPILLBACK, KOCH_SKUTELLA])
def test_engine_traces_verify_clean(inst, mode):
    tr = compute_equilibrium(inst, mode)
    assert verify_feasible(tr) == []
    assert verify_nash(tr) == []


def test_fig1_optimum_is_feasible_but_not_an_equilibrium():
    flow = FlowOverTime.from_quickest(opt_completion(fig1(F(1, 2)).network, 2))
    assert verify_feasible(flow) == []
    found = verify_nash(flow)
    assert found and {v.condition for v in found} == {"equilibrium condition violated"}


def test_wrong_claimed_labels_are_caught():
    tr = compute_equilibrium(fig1(F(1, 2)))
    flow = FlowOverTime.from_trace(tr)
    fake = dict(flow.labels)
    fake["t"] = fake["v"]
    forged = FlowOverTime(flow.network, flow.amount, flow.rates_in, flow.rates_out, flow.release, fake)
    assert "labels differ from the re-derived earliest arrival times" in conditions(verify_nash(forged))


def test_rendering():
    found = verify_feasible(overfilled())
    doc = json.loads(violations_json(found))
    assert doc[0]["condition"] == "inflow condition violated"
    assert render([]) == "no violations\n"
    assert "edge 0" in render(found)
