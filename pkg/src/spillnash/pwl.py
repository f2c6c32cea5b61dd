"""Exact piecewise-linear and piecewise-constant functions of time.

Both classes hold sorted ``(time, value)`` breakpoints with
:class:`fractions.Fraction` coordinates.  They are immutable once built.
"""
from __future__ import annotations

from bisect import bisect_left, bisect_right
from fractions import Fraction
from typing import Iterable, Sequence

Point = tuple[Fraction, Fraction]


def _dedupe(points: Iterable[Point]) -> list[Point]:
    out: list[Point] = []
    for t, v in points:
        t, v = Fraction(t), Fraction(v)
        if out and out[-1][0] == t:
            out[-1] = (t, v)
        else:
            if out and t < out[-1][0]:
                raise ValueError("breakpoint times must be nondecreasing")
            out.append((t, v))
    return out


class PLFn:
    """Continuous piecewise-linear function.

    Outside the breakpoint range the function continues linearly with
    ``slope_before`` / ``slope_after``.  Collinear interior points are
    kept; call :meth:`simplified` to drop them.
    """

    __slots__ = ("points", "slope_before", "slope_after", "_ts")

    def __init__(self, points: Sequence[Point], slope_after=0, slope_before=0):
        pts = _dedupe(points)
        if not pts:
            raise ValueError("PLFn needs at least one breakpoint")
        self.points: tuple[Point, ...] = tuple(pts)
        self.slope_after = Fraction(slope_after)
        self.slope_before = Fraction(slope_before)
        self._ts = [t for t, _ in pts]

    @classmethod
    def constant(cls, value, at=0) -> "PLFn":
        return cls([(Fraction(at), Fraction(value))])

    @property
    def times(self) -> list[Fraction]:
        return list(self._ts)

    def __call__(self, t) -> Fraction:
        t = Fraction(t)
        pts = self.points
        if t <= pts[0][0]:
            return pts[0][1] + self.slope_before * (t - pts[0][0])
        if t >= pts[-1][0]:
            return pts[-1][1] + self.slope_after * (t - pts[-1][0])
        i = bisect_right(self._ts, t)
        (t0, v0), (t1, v1) = pts[i - 1], pts[i]
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0)

    def slope_right(self, t) -> Fraction:
        t = Fraction(t)
        pts = self.points
        if t < pts[0][0]:
            return self.slope_before
        i = bisect_right(self._ts, t)
        if i >= len(pts):
            return self.slope_after
        (t0, v0), (t1, v1) = pts[i - 1], pts[i]
        return (v1 - v0) / (t1 - t0)

    def slope_left(self, t) -> Fraction:
        t = Fraction(t)
        pts = self.points
        if t <= pts[0][0]:
            return self.slope_before
        i = bisect_left(self._ts, t)
        if i >= len(pts):
            return self.slope_after
        (t0, v0), (t1, v1) = pts[i - 1], pts[i]
        return (v1 - v0) / (t1 - t0)

    def is_nondecreasing(self) -> bool:
        if self.slope_before < 0 or self.slope_after < 0:
            return False
        return all(b[1] >= a[1] for a, b in zip(self.points, self.points[1:]))

    def simplified(self) -> "PLFn":
        pts = list(self.points)
        keep = [pts[0]]
        for i in range(1, len(pts) - 1):
            (t0, v0), (t1, v1), (t2, v2) = keep[-1], pts[i], pts[i + 1]
            if (v1 - v0) * (t2 - t1) != (v2 - v1) * (t1 - t0):
                keep.append(pts[i])
        if len(pts) > 1:
            keep.append(pts[-1])
        # the outer pieces may also be collinear with the extensions
        while len(keep) > 1 and (keep[1][1] - keep[0][1]) == self.slope_before * (keep[1][0] - keep[0][0]):
            keep.pop(0)
        while len(keep) > 1 and (keep[-1][1] - keep[-2][1]) == self.slope_after * (keep[-1][0] - keep[-2][0]):
            keep.pop()
        return PLFn(keep, self.slope_after, self.slope_before)

    def lower_inverse(self, y, lo) -> Fraction | None:
        """Smallest ``t >= lo`` with ``f(t) >= y`` for a nondecreasing function.

        Returns ``None`` when the value is never reached.
        """
        y, lo = Fraction(y), Fraction(lo)
        if self(lo) >= y:
            return lo
        pts = [p for p in self.points if p[0] > lo]
        prev = (lo, self(lo))
        for t1, v1 in pts:
            if v1 >= y:
                t0, v0 = prev
                return t0 + (y - v0) * (t1 - t0) / (v1 - v0)
            prev = (t1, v1)
        if self.slope_after > 0:
            return prev[0] + (y - prev[1]) / self.slope_after
        return None

    def restrict_points(self, lo, hi) -> list[Point]:
        """Breakpoints on ``[lo, hi]`` including both (evaluated) endpoints."""
        lo, hi = Fraction(lo), Fraction(hi)
        out = [(lo, self(lo))]
        out += [(t, v) for t, v in self.points if lo < t < hi]
        if hi > lo:
            out.append((hi, self(hi)))
        return out

    def to_json(self) -> dict:
        return {
            "points": [[str(t), str(v)] for t, v in self.points],
            "slope_after": str(self.slope_after),
            "slope_before": str(self.slope_before),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PLFn":
        return cls(
            [(Fraction(t), Fraction(v)) for t, v in doc["points"]],
            Fraction(doc.get("slope_after", "0")),
            Fraction(doc.get("slope_before", "0")),
        )

    def __eq__(self, other):
        if not isinstance(other, PLFn):
            return NotImplemented
        a, b = self.simplified(), other.simplified()
        return a.points == b.points and a.slope_after == b.slope_after and a.slope_before == b.slope_before

    def __repr__(self):
        inner = ", ".join(f"({t}, {v})" for t, v in self.points)
        return f"PLFn([{inner}], slope_after={self.slope_after})"


class StepFn:
    """Right-continuous piecewise-constant function.

    ``points[i] = (t_i, v_i)`` means the value is ``v_i`` on ``[t_i, t_{i+1})``.
    Before the first breakpoint the value is ``initial``.
    """

    __slots__ = ("points", "initial", "_ts")

    def __init__(self, points: Sequence[Point], initial=0):
        pts = _dedupe(points)
        merged: list[Point] = []
        prev = Fraction(initial)
        for t, v in pts:
            if v != prev:
                merged.append((t, v))
                prev = v
        self.points: tuple[Point, ...] = tuple(merged)
        self.initial = Fraction(initial)
        self._ts = [t for t, _ in merged]

    @property
    def times(self) -> list[Fraction]:
        return list(self._ts)

    def __call__(self, t) -> Fraction:
        i = bisect_right(self._ts, Fraction(t))
        return self.initial if i == 0 else self.points[i - 1][1]

    def integral(self, start=0) -> PLFn:
        """Cumulative function ``t -> int_start^t f``; assumes ``f = 0`` before ``start``."""
        start = Fraction(start)
        if self.initial != 0 and (not self.points or self.points[0][0] > start):
            raise ValueError("integral needs a zero initial value before the start time")
        pts: list[Point] = [(start, Fraction(0))]
        acc = Fraction(0)
        cur_t, cur_v = start, self(start)
        for t, v in self.points:
            if t <= start:
                continue
            acc += cur_v * (t - cur_t)
            pts.append((t, acc))
            cur_t, cur_v = t, v
        return PLFn(pts, slope_after=cur_v)

    def bounded(self, lo=None, hi=None) -> bool:
        vals = [self.initial] + [v for _, v in self.points]
        if lo is not None and any(v < lo for v in vals):
            return False
        if hi is not None and any(v > hi for v in vals):
            return False
        return True

    def to_json(self) -> dict:
        return {"points": [[str(t), str(v)] for t, v in self.points], "initial": str(self.initial)}

    @classmethod
    def from_json(cls, doc: dict) -> "StepFn":
        return cls([(Fraction(t), Fraction(v)) for t, v in doc["points"]], Fraction(doc.get("initial", "0")))

    def __add__(self, other: "StepFn") -> "StepFn":
        ts = sorted(set(self._ts) | set(other._ts))
        return StepFn([(t, self(t) + other(t)) for t in ts], self.initial + other.initial)

    def __eq__(self, other):
        if not isinstance(other, StepFn):
            return NotImplemented
        return self.points == other.points and self.initial == other.initial

    def __repr__(self):
        inner = ", ".join(f"({t}, {v})" for t, v in self.points)
        return f"StepFn([{inner}], initial={self.initial})"


def derivative(f: PLFn) -> StepFn:
    """Right derivative of a piecewise-linear function as a step function."""
    pts = [(t, f.slope_right(t)) for t in f.times]
    return StepFn(pts, f.slope_before)


def sample(f, times: Iterable, slope_after=0) -> PLFn:
    """Piecewise-linear interpolation of ``f`` at the given (distinct, sorted) times."""
    ts = sorted(set(Fraction(t) for t in times))
    return PLFn([(t, f(t)) for t in ts], slope_after=slope_after)


def compose(outer: PLFn, inner: PLFn, lo, hi) -> PLFn:
    """``outer(inner(t))`` on ``[lo, hi]`` for a nondecreasing ``inner``."""
    lo, hi = Fraction(lo), Fraction(hi)
    ts = {t for t, _ in inner.restrict_points(lo, hi)}
    seg = inner.restrict_points(lo, hi)
    outer_ts = outer.times
    for (t0, v0), (t1, v1) in zip(seg, seg[1:]):
        if v1 == v0:
            continue
        for k in range(bisect_right(outer_ts, min(v0, v1)), bisect_left(outer_ts, max(v0, v1))):
            y = outer_ts[k]
            ts.add(t0 + (y - v0) * (t1 - t0) / (v1 - v0))
    slope = outer.slope_right(inner(hi)) * inner.slope_after
    return sample(lambda t: outer(inner(t)), ts, slope_after=slope)


def pointwise_min(fns: Sequence[PLFn], lo, hi) -> PLFn:
    """Lower envelope of piecewise-linear functions on ``[lo, hi]``."""
    lo, hi = Fraction(lo), Fraction(hi)
    base = {lo, hi}
    for f in fns:
        base.update(t for t in f.times if lo < t < hi)
    grid = sorted(base)
    ts = set(grid)
    for t0, t1 in zip(grid, grid[1:]):
        for i, f in enumerate(fns):
            for g in fns[i + 1:]:
                d0, d1 = f(t0) - g(t0), f(t1) - g(t1)
                if d0 * d1 < 0:
                    ts.add(t0 + d0 * (t1 - t0) / (d0 - d1))

    def low(t):
        return min(f(t) for f in fns)

    right = min(fns, key=lambda f: (f(hi), f.slope_right(hi)))
    return sample(low, ts, slope_after=right.slope_right(hi))
