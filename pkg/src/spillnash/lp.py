"""Small exact linear programs over the rationals.

Dense two-phase tableau simplex with Bland's pivoting rule.  All variables
are nonnegative.  Intended for the few-dozen-variable systems that arise
per phase of the thin-flow computation, where floating point would
misclassify degenerate regimes.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

ZERO = Fraction(0)
ONE = Fraction(1)

Constraint = tuple[Mapping[int, Fraction], str, Fraction]


class Unbounded(ArithmeticError):
    pass


def _pivot(tab: list[list[Fraction]], basis: list[int], row: int, col: int) -> None:
    prow = tab[row]
    inv = ONE / prow[col]
    if inv != 1:
        for j, a in enumerate(prow):
            if a:
                prow[j] = a * inv
    nz = [j for j, a in enumerate(prow) if a]
    for r, other in enumerate(tab):
        if r == row:
            continue
        f = other[col]
        if f:
            for j in nz:
                other[j] -= f * prow[j]
    basis[row] = col


def _run(tab: list[list[Fraction]], basis: list[int], allowed: int) -> None:
    """Minimise the last row (objective, stored as reduced costs) in place."""
    obj = tab[-1]
    m = len(tab) - 1
    while True:
        col = next((j for j in range(allowed) if obj[j] < 0), None)
        if col is None:
            return
        best = None
        for r in range(m):
            a = tab[r][col]
            if a > 0:
                ratio = tab[r][-1] / a
                key = (ratio, basis[r])
                if best is None or key < best[0]:
                    best = (key, r)
        if best is None:
            raise Unbounded("objective unbounded")
        _pivot(tab, basis, best[1], col)


def solve_lp(
    n_vars: int,
    constraints: Sequence[Constraint],
    objective: Mapping[int, Fraction] | None = None,
    maximize: bool = True,
) -> list[Fraction] | None:
    """Return an optimal vertex, or ``None`` if infeasible.

    Each constraint is ``(coefficients, sense, rhs)`` with sense one of
    ``"<="``, ``">="``, ``"=="``.  Raises :class:`Unbounded` when the
    objective is unbounded on the feasible set.
    """
    rows = []
    for coeffs, sense, rhs in constraints:
        rhs = Fraction(rhs)
        coeffs = {j: Fraction(a) for j, a in coeffs.items() if a}
        if rhs < 0:
            coeffs = {j: -a for j, a in coeffs.items()}
            rhs = -rhs
            sense = {"<=": ">=", ">=": "<=", "==": "=="}[sense]
        if not coeffs:
            if (sense == "==" and rhs != 0) or (sense == ">=" and rhs > 0):
                return None
            continue
        rows.append((coeffs, sense, rhs))

    n_slack = sum(1 for _, s, _ in rows if s != "==")
    n_art = sum(1 for _, s, _ in rows if s != "<=")
    width = n_vars + n_slack + n_art + 1
    tab: list[list[Fraction]] = []
    basis: list[int] = []
    art_cols: list[int] = []
    si, ai = n_vars, n_vars + n_slack
    for coeffs, sense, rhs in rows:
        row = [ZERO] * width
        for j, a in coeffs.items():
            row[j] = a
        row[-1] = rhs
        if sense == "<=":
            row[si] = ONE
            basis.append(si)
            si += 1
        else:
            if sense == ">=":
                row[si] = -ONE
                si += 1
            row[ai] = ONE
            basis.append(ai)
            art_cols.append(ai)
            ai += 1
        tab.append(row)

    # phase one: minimise the sum of artificials
    obj = [ZERO] * width
    for r, b in enumerate(basis):
        if b in art_cols:
            for j in range(width):
                obj[j] -= tab[r][j]
    for c in art_cols:
        obj[c] = ZERO
    tab.append(obj)
    _run(tab, basis, width - 1)
    if tab[-1][-1] != 0:
        return None

    # drive remaining (zero-level) artificials out of the basis
    n_real = n_vars + n_slack
    for r in range(len(basis)):
        if basis[r] >= n_real:
            col = next((j for j in range(n_real) if tab[r][j] != 0), None)
            if col is not None:
                _pivot(tab, basis, r, col)
    keep = [r for r in range(len(basis)) if basis[r] < n_real]
    tab = [tab[r][:n_real] + [tab[r][-1]] for r in keep]
    basis = [basis[r] for r in keep]

    cost = [ZERO] * (n_real + 1)
    if objective:
        sign = -1 if maximize else 1
        for j, a in objective.items():
            cost[j] = sign * Fraction(a)
    for r, b in enumerate(basis):
        f = cost[b]
        if f:
            for j in range(n_real + 1):
                cost[j] -= f * tab[r][j]
    tab.append(cost)
    _run(tab, basis, n_real)

    x = [ZERO] * n_vars
    for r, b in enumerate(basis):
        if b < n_vars:
            x[b] = tab[r][-1]
    return x
