from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from spillnash.pwl import PLFn, StepFn, compose, derivative, pointwise_min, sample

fractions = st.fractions(min_value=-20, max_value=20, max_denominator=12)


def test_plfn_interpolates_and_extrapolates():
    f = PLFn([(0, 0), (2, 4)], slope_after=1, slope_before=2)
    assert f(1) == 2
    assert f(3) == 5
    assert f(-1) == -2


def test_plfn_one_sided_slopes_at_kink():
    f = PLFn([(0, 0), (1, 1), (2, 1)])
    assert f.slope_left(1) == 1
    assert f.slope_right(1) == 0


def test_plfn_rejects_decreasing_times():
    with pytest.raises(ValueError):
        PLFn([(1, 0), (0, 0)])


def test_simplified_drops_collinear_points():
    f = PLFn([(0, 0), (1, 1), (2, 2), (3, 2)], slope_after=1).simplified()
    assert f.points == ((0, 0), (2, 2), (3, 2))


def test_simplified_folds_trailing_piece_into_extension():
    f = PLFn([(0, 0), (2, 2), (3, 2)]).simplified()
    assert f.points == ((0, 0), (2, 2))
    assert f(5) == 2


def test_lower_inverse_picks_first_time():
    f = PLFn([(0, 0), (1, 1), (3, 1), (4, 2)], slope_after=1)
    assert f.lower_inverse(1, 0) == 1
    assert f.lower_inverse(F(3, 2), 0) == F(7, 2)


def test_stepfn_integral():
    g = StepFn([(0, 2), (1, 1), (3, 0)])
    cum = g.integral(0)
    assert cum(1) == 2
    assert cum(3) == 4
    assert cum(10) == 4


def test_stepfn_value_is_right_continuous():
    g = StepFn([(0, 2), (1, 1)])
    assert g(1) == 1
    assert g(F(1) - F(1, 1000)) == 2


def test_json_round_trip():
    f = PLFn([(0, F(1, 3)), (F(5, 2), 7)], slope_after=F(2, 7))
    assert PLFn.from_json(f.to_json()).points == f.points
    g = StepFn([(0, F(1, 2)), (4, 0)])
    assert StepFn.from_json(g.to_json()) == g


def test_pointwise_min_with_crossing():
    a = PLFn([(0, 0), (4, 4)])
    b = PLFn([(0, 1), (4, 1)])
    m = pointwise_min([a, b], 0, 4)
    assert [m(t) for t in (0, F(1, 2), 1, 3)] == [0, F(1, 2), 1, 1]


def test_compose_matches_direct_evaluation():
    inner = PLFn([(0, 0), (1, 2)])
    outer = PLFn([(0, 0), (1, 2), (2, 2)])
    h = compose(outer, inner, 0, 1)
    assert h(F(1, 4)) == 1
    assert h(1) == 2


@given(st.lists(st.tuples(fractions, fractions), min_size=1, max_size=6, unique_by=lambda p: p[0]), fractions)
def test_derivative_integrates_back(pts, probe):
    f = PLFn(sorted(pts))
    lo = f.points[0][0]
    if probe < lo:
        return
    rebuilt = derivative(f).integral(lo)
    assert rebuilt(probe) + f(lo) == f(probe)


@given(
    st.lists(st.tuples(fractions, fractions), min_size=2, max_size=5, unique_by=lambda p: p[0]),
    st.lists(st.tuples(fractions, fractions), min_size=2, max_size=5, unique_by=lambda p: p[0]),
    st.lists(fractions, min_size=1, max_size=5),
)
def test_pointwise_min_is_min_everywhere(p1, p2, probes):
    f, g = PLFn(sorted(p1)), PLFn(sorted(p2))
    lo = max(f.points[0][0], g.points[0][0])
    hi = lo + 10
    m = pointwise_min([f, g], lo, hi)
    for t in probes:
        t = min(max(t, lo), hi)
        assert m(t) == min(f(t), g(t))


@given(
    st.lists(st.fractions(min_value=0, max_value=3, max_denominator=8), min_size=1, max_size=4),
    st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=8), min_size=2, max_size=5),
    st.lists(st.fractions(min_value=0, max_value=4, max_denominator=16), min_size=1, max_size=5),
)
def test_compose_agrees_with_pointwise_composition(inner_slopes, outer_vals, probes):
    # nondecreasing inner function on [0, 4]
    pts, y = [(F(0), F(0))], F(0)
    for k, s in enumerate(inner_slopes, start=1):
        y += s * 4 / len(inner_slopes)
        pts.append((F(4 * k, len(inner_slopes)), y))
    inner = PLFn(pts)
    outer = PLFn([(F(k), v) for k, v in enumerate(outer_vals)])
    h = compose(outer, inner, 0, 4)
    for t in probes:
        assert h(t) == outer(inner(t))


def test_sample_interpolates_callable():
    f = sample(lambda t: t * t, [0, 1, 2])
    assert f(F(3, 2)) == F(5, 2)
