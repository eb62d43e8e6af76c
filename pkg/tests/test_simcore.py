import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hppsim.errors import EmptyFeasibleSet, NonFiniteDerivative, OutOfRange
from hppsim.simcore import (
    EMPTY,
    Halfplane,
    Interval,
    SignalSeries,
    integrate_scalars,
    integrate_step,
    intersect_halfplanes,
    project_to_interval,
    sample_signal,
    substeps,
)

from oracles import grid_qp, rk4_linear_factor

finite = st.floats(-1e3, 1e3, allow_nan=False)
rows = st.lists(st.tuples(st.floats(-5, 5).filter(lambda a: abs(a) > 1e-3), finite), min_size=1, max_size=5)


def test_single_upper_bound():
    assert intersect_halfplanes([Halfplane(2.0, 4.0)]) == Interval(-math.inf, 2.0)


def test_lower_and_upper_bounds():
    iv = intersect_halfplanes([Halfplane(-1.0, 1.0), Halfplane(1.0, 3.0)])
    assert (iv.lo, iv.hi) == (-1.0, 3.0)


def test_crossed_bounds_are_empty():
    iv = intersect_halfplanes([Halfplane(1.0, 0.0), Halfplane(-1.0, -1.0)])
    assert iv.empty
    assert (iv.lo, iv.hi) == (1.0, 0.0)


def test_zero_row_with_negative_rhs_is_empty():
    assert intersect_halfplanes([Halfplane(0.0, -1.0)]) is EMPTY


def test_zero_row_with_nonnegative_rhs_is_vacuous():
    assert intersect_halfplanes([Halfplane(0.0, 0.0)]) == Interval()


def test_projection_clamps():
    iv = Interval(-1.0, 2.0)
    assert project_to_interval(5.0, iv) == 2.0
    assert project_to_interval(-5.0, iv) == -1.0
    assert project_to_interval(0.5, iv) == 0.5


def test_projection_of_empty_set_raises():
    with pytest.raises(EmptyFeasibleSet):
        project_to_interval(0.0, EMPTY)


def test_halfplane_slack():
    assert Halfplane(2.0, 3.0).slack(1.0) == 1.0


@given(finite, rows)
def test_projection_matches_grid_search(u_star, constraints):
    iv = intersect_halfplanes([Halfplane(a, b) for a, b in constraints])
    lo, hi = -2e3 - abs(u_star), 2e3 + abs(u_star)
    ref = grid_qp(u_star, constraints, lo, hi)
    if iv.empty:
        # the oracle's feasibility test carries a 1e-12 slack
        assert ref is None or iv.lo - iv.hi <= 1e-9
        return
    u = project_to_interval(u_star, iv)
    assert all(a * u <= b + 1e-9 * (1 + abs(b)) for a, b in constraints)
    if ref is not None:
        assert abs(u - ref) <= 1e-9 * max(1.0, abs(ref))


@given(finite, rows)
def test_projection_is_idempotent_and_inside(u_star, constraints):
    iv = intersect_halfplanes([Halfplane(a, b) for a, b in constraints])
    if iv.empty:
        return
    u = project_to_interval(u_star, iv)
    assert u in iv
    assert project_to_interval(u, iv) == u


@pytest.mark.parametrize("lam, h", [(-1.0, 0.1), (-20.0, 0.025), (0.5, 0.5), (-2.0, 1.0)])
def test_rk4_linear_decay_matches_amplification_factor(lam, h):
    x = integrate_step(np.array([1.0]), lambda s: lam * s, h)
    assert x[0] == pytest.approx(rk4_linear_factor(lam * h), rel=1e-14)


def test_rk4_is_fourth_order():
    errs = []
    for h in (0.2, 0.1):
        x = np.array([1.0])
        for _ in range(round(1.0 / h)):
            x = integrate_step(x, lambda s: -s, h)
        errs.append(abs(x[0] - math.exp(-1.0)))
    assert 14.0 < errs[0] / errs[1] < 18.0


def test_scalar_and_array_rk4_agree():
    def f(s):
        return [s[1], -4.0 * s[0] - 0.3 * s[1]]

    a = integrate_step(np.array([1.0, 0.0]), lambda s: np.array(f(s)), 0.05)
    b = integrate_scalars((1.0, 0.0), f, 0.05)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)


def test_nonfinite_derivative_raises():
    with pytest.raises(NonFiniteDerivative):
        integrate_step(np.array([1.0]), lambda s: s * np.inf, 0.1)
    with pytest.raises(NonFiniteDerivative):
        integrate_scalars((1.0,), lambda s: (math.nan,), 0.1)


@pytest.mark.parametrize("dt", [0.0, -0.5])
def test_nonpositive_dt_rejected(dt):
    with pytest.raises(ValueError):
        integrate_step(np.array([1.0]), lambda s: s, dt)


@pytest.mark.parametrize(
    "dt, cap, n", [(0.5, 0.5, 1), (0.5, 0.025, 20), (0.5, 0.25, 2), (0.5, 0.3, 2), (0.25, 0.5, 1)]
)
def test_substeps(dt, cap, n):
    k, h = substeps(dt, cap)
    assert k == n
    assert h * k == pytest.approx(dt)
    assert h <= cap * (1 + 1e-12)


def test_signal_zero_order_hold():
    s = SignalSeries(np.array([0.0, 1.0, 2.0]), np.array([10.0, 20.0, 30.0]), "x")
    assert sample_signal(s, 0.0) == 10.0
    assert sample_signal(s, 0.999) == 10.0
    assert sample_signal(s, 1.0) == 20.0
    assert s(2.0) == 30.0


def test_signal_linear_interpolation():
    s = SignalSeries(np.array([0.0, 2.0]), np.array([0.0, 4.0]), "x", "linear")
    assert s(0.5) == 1.0
    assert s(2.0) == 4.0


@pytest.mark.parametrize("t", [-0.1, 2.5])
def test_signal_out_of_range(t):
    s = SignalSeries(np.array([0.0, 2.0]), np.array([1.0, 2.0]), "x")
    with pytest.raises(OutOfRange):
        s(t)


@pytest.mark.parametrize(
    "ts, vs",
    [([0.0, 0.0], [1.0, 2.0]), ([1.0, 0.0], [1.0, 2.0]), ([], []), ([0.0], [math.nan]), ([0.0, 1.0], [1.0])],
)
def test_signal_validation(ts, vs):
    with pytest.raises(ValueError):
        SignalSeries(np.array(ts), np.array(vs))


def test_signal_covers():
    s = SignalSeries(np.array([0.0, 10.0]), np.array([1.0, 1.0]))
    assert s.covers(0.0, 10.0)
    assert not s.covers(0.0, 10.5)
