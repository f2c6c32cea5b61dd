"""Discrete packet simulation used as an independent check on exact traces.

Flow is cut into packets of volume ``r0 * delta`` released at the end of
each ``delta`` interval and routed one at a time, in release order, along
a path minimising its own arrival time given all earlier packets.  Edges
enforce transit time, inflow and outflow capacity and storage; vertices
release packets in order (the packet analogue of a common spillback
factor).  Errors are ``O(delta)``.

The hot loop lives in a compiled kernel when it is available;
``SPILLNASH_PURE_PYTHON=1`` forces the Python fallback.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction

from .engine import KOCH_SKUTELLA, MODES
from .network import UNBOUNDED, GameInstance
from .thinflow import ks_network
from . import _oracle_py

KERNEL = "python"
_simulate = _oracle_py.simulate
if os.environ.get("SPILLNASH_PURE_PYTHON") != "1":
    try:
        from ._oracle_kernel import simulate as _simulate  # type: ignore[no-redef]

        KERNEL = "compiled"
    except ImportError:
        pass


@dataclass(frozen=True)
class OracleResult:
    delta: Fraction
    releases: list[float]
    labels: dict[str, list[float]]
    sink: str

    @property
    def completion(self) -> float:
        return self.labels[self.sink][-1]

    @property
    def sink_arrivals(self) -> list[tuple[float, float]]:
        return list(zip(self.releases, self.labels[self.sink]))


def kernel_inputs(instance: GameInstance, mode: str, delta) -> tuple:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    delta = Fraction(delta)
    if not delta > 0:
        raise ValueError("delta must be positive")
    net = ks_network(instance.network) if mode == KOCH_SKUTELLA else instance.network
    r0 = net.inflow_rate
    n_packets = math.ceil(instance.horizon / delta)
    vol = float(instance.amount) / n_packets
    step = float(instance.horizon) / n_packets
    index = {v: i for i, v in enumerate(net.vertices)}
    tails = [index[e.tail] for e in net.edges]
    heads = [index[e.head] for e in net.edges]
    transit = [float(e.transit) for e in net.edges]
    gate_in = [0.0 if e.cap_in == UNBOUNDED else vol / float(e.cap_in) for e in net.edges]
    gate_out = [vol / float(e.cap_out) for e in net.edges]
    slots = [-1 if e.storage == UNBOUNDED else max(1, int(float(e.storage) / vol)) for e in net.edges]
    releases = [step * (k + 1) for k in range(n_packets)]
    assert abs(vol - float(r0) * step) < 1e-12 * max(1.0, vol)
    return (len(net.vertices), index[net.source], index[net.sink], tails, heads, transit,
            gate_in, gate_out, slots, releases, mode != KOCH_SKUTELLA), net


def simulate_oracle(instance: GameInstance, mode: str = "spillback", delta=Fraction(1, 64),
                    kernel=None) -> OracleResult:
    """Approximate labels of every vertex for each packet's release time."""
    args, net = kernel_inputs(instance, mode, delta)
    flat = (kernel or _simulate)(*args)
    n = len(net.vertices)
    labels = {v: flat[i::n] for i, v in enumerate(net.vertices)}
    return OracleResult(Fraction(delta), args[-2], labels, net.sink)
