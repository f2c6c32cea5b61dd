from fractions import Fraction as F

import pytest

from spillnash import _oracle_py, oracle
from spillnash.engine import KOCH_SKUTELLA, SPILLBACK, compute_equilibrium
from spillnash.instances import fig1, fig2, unit_family
from spillnash.network import UNBOUNDED, Edge, GameInstance, Network


def single_edge():
    net = Network(("s", "t"), (Edge("s", "t", F(1), UNBOUNDED, F(1)),), "s", "t", F(2))
    return GameInstance(net, F(2))


def test_single_edge_closed_form():
    res = oracle.simulate_oracle(single_edge(), delta=F(1, 64))
    assert abs(res.completion - 3) <= 3 / 64


def test_unit_family_completion():
    res = oracle.simulate_oracle(unit_family(4), delta=F(1, 64))
    assert abs(res.completion - 6) <= 10 * (1 / 64) * (1 + 6)


def test_fig1_sink_rate_after_transient():
    eps = F(1, 2)
    res = oracle.simulate_oracle(fig1(eps), delta=F(1, 128))
    arrivals = res.labels["t"]
    vol = 2 / len(arrivals)
    # late packets leave the bottleneck one packet-volume per vol/eps time units
    gaps = [b - a for a, b in zip(arrivals[len(arrivals) // 2:], arrivals[len(arrivals) // 2 + 1:])]
    assert all(abs(g - vol / float(eps)) < 1e-9 for g in gaps)


def test_bad_arguments():
    with pytest.raises(ValueError):
        oracle.simulate_oracle(single_edge(), delta=0)
    with pytest.raises(ValueError):
        oracle.simulate_oracle(single_edge(), mode="other")


@pytest.mark.skipif(oracle.KERNEL != "compiled", reason="compiled kernel not built")
@pytest.mark.parametrize("inst", [fig1(F(1, 2)), fig1(F(1, 10)), unit_family(3), fig2()], ids=["half", "tenth", "unit3", "fig2"])
@pytest.mark.parametrize("mode", [SPILLBACK, KOCH_SKUTELLA])
def test_kernels_agree(inst, mode):
    from spillnash import _oracle_kernel

    a = oracle.simulate_oracle(inst, mode, F(1, 64), kernel=_oracle_py.simulate)
    b = oracle.simulate_oracle(inst, mode, F(1, 64), kernel=_oracle_kernel.simulate)
    for v in a.labels:
        assert a.labels[v] == pytest.approx(b.labels[v], rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("delta", [F(1, 32), F(1, 128)])
def test_error_shrinks_with_delta(delta):
    inst = fig1(F(1, 2))
    exact = compute_equilibrium(inst).completion
    err = abs(oracle.simulate_oracle(inst, delta=delta).completion - float(exact))
    assert err <= 10 * float(delta) * (1 + float(exact))
