"""Time the compiled oracle kernel against the pure-Python one on the builtins.

Usage: python benchmarks/bench_oracle.py [--delta 1/1024] [--repeat 3]
"""
from __future__ import annotations

import argparse
import time
from fractions import Fraction

from spillnash import _oracle_py
from spillnash.instances import builtin_instance
from spillnash.oracle import simulate_oracle

try:
    from spillnash import _oracle_kernel
except ImportError:
    _oracle_kernel = None

CASES = [
    ("fig1", {"eps": "1/2"}),
    ("fig1", {"eps": "1/10"}),
    ("unit_family", {"k": "6"}),
]


def best_time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--delta", default="1/1024")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    delta = Fraction(args.delta)
    if _oracle_kernel is None:
        print("compiled kernel not built; run `pip install -e . --no-build-isolation` first")
        return
    print(f"{'instance':<28}{'python s':>10}{'compiled s':>12}{'speedup':>9}  agree")
    for name, params in CASES:
        inst = builtin_instance(name, params)
        py = simulate_oracle(inst, delta=delta, kernel=_oracle_py.simulate)
        cy = simulate_oracle(inst, delta=delta, kernel=_oracle_kernel.simulate)
        agree = all(abs(a - b) <= 1e-9 * max(1.0, abs(a)) for v in py.labels for a, b in zip(py.labels[v], cy.labels[v]))
        t_py = best_time(lambda: simulate_oracle(inst, delta=delta, kernel=_oracle_py.simulate), args.repeat)
        t_cy = best_time(lambda: simulate_oracle(inst, delta=delta, kernel=_oracle_kernel.simulate), args.repeat)
        label = f"{name}({', '.join(f'{k}={v}' for k, v in params.items())})"
        print(f"{label:<28}{t_py:>10.4f}{t_cy:>12.4f}{t_py / t_cy:>8.1f}x  {agree}")


if __name__ == "__main__":
    main()
