import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.errors import BadInputError
from app.fields import Grid2, TestFunction, default_battery, pair, sample, w11_norm
from app.fields.calculus import d1
from app.fields.quadrature import integrate


@pytest.fixture
def grid():
    return Grid2.from_box(-1.1, -1.1, 1.1, 1.1, 221)


def test_pair_of_zero_is_zero(grid):
    assert pair(sample(0.0, grid), TestFunction((0, 0), 1.0)) == 0.0


def test_pair_with_one_matches_radial_integral(grid):
    psi = TestFunction((0, 0), 1.0, order=4)
    assert pair(sample(1.0, grid), psi) == pytest.approx(math.pi / 5, rel=1e-4)
    assert psi.mass == pytest.approx(math.pi / 5)


def test_unit_mass_bump(grid):
    psi = TestFunction.unit_mass((0.1, -0.2), 0.5)
    assert pair(sample(1.0, grid), psi) == pytest.approx(1.0, rel=1e-4)


def test_derivative_of_bump_integrates_to_zero(grid):
    psi = TestFunction((0.2, 0.0), 0.6)
    d = d1(psi.realize(grid).values, grid.hx)
    assert abs(integrate(d, grid)) < 1e-12


def test_support_violation_reports_overshoot(grid):
    with pytest.raises(BadInputError, match="overshoots"):
        pair(sample(1.0, grid), TestFunction((1.0, 0.0), 0.5))


def test_realization_vanishes_outside_support(grid):
    psi = TestFunction((0, 0), 0.5)
    X, Y = grid.mesh()
    vals = psi.realize(grid).values
    assert np.all(vals[np.hypot(X, Y) >= 0.5] == 0.0)


def test_analytic_derivatives_match_stencils(grid):
    psi = TestFunction((0.1, 0.1), 0.7, order=6)
    exact = psi.derivatives(grid)
    disc = psi.stencil_derivatives(grid)
    for key in ("d1", "d2", "d11", "d22", "d12"):
        assert np.max(np.abs(exact[key] - disc[key])) < 5e-2 * np.max(np.abs(exact[key]))


def test_order_below_four_rejected():
    with pytest.raises(BadInputError):
        TestFunction((0, 0), 1.0, order=3)


def test_default_battery_is_deterministic_and_inside_box():
    box = (0.0, 0.0, 1.0, 1.0)
    a, b = default_battery(box), default_battery(box)
    assert len(a) == 15
    assert a == b
    g = Grid2.from_box(*box, 65)
    for psi in a:
        psi.check_support(g)
    assert len({psi.label for psi in a}) == 15


def test_w11_norm_positive(grid):
    psi = TestFunction.unit_mass((0, 0), 0.5)
    assert w11_norm(psi, grid) > 1.0


@settings(max_examples=25, deadline=None)
@given(a=st.floats(-10, 10), b=st.floats(-10, 10))
def test_pair_is_linear_and_bounded(a, b):
    g = Grid2.from_box(-1, -1, 1, 1, 41)
    psi = TestFunction((0, 0), 0.8)
    f = sample(lambda X, Y: np.cos(2 * X) + Y, g)
    h = sample(lambda X, Y: X * Y, g)
    lhs = pair(a * f + b * h, psi)
    rhs = a * pair(f, psi) + b * pair(h, psi)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)
    one = sample(1.0, g)
    assert abs(pair(f, psi)) <= f.max_abs() * pair(one, psi) + 1e-12
