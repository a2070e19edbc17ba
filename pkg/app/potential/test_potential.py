"""
Elliptic solves and potential reconstruction.

  pytest app/potential/test_potential.py
"""
import math

import numpy as np
import pytest

import app.potential.elliptic as elliptic
from app.errors import BadInputError
from app.fields import Grid2, MatrixField, ScalarField, sample
from app.fields.holder import HolderVerdict
from app.fields.quadrature import trapezoid_weights
from app.potential import (
    EllipticProblem, gradient_holder_diagnostic, reconstruct_potential, solve, solve_with_report,
)
from app.potential.elliptic import boundary_trace
from app.shape import second_form
from app.surfaces import SurfaceSpec, generate


def unit(n: int) -> Grid2:
    return Grid2.from_box(0, 0, 1, 1, n)


def weighted_mean(values: np.ndarray, grid: Grid2) -> float:
    w = trapezoid_weights(grid)
    return float((w * values).sum() / w.sum())


# ── solve ─────────────────────────────────────────────────────────────────────

def test_zero_neumann_problem_has_zero_solution():
    g = unit(33)
    u = solve(EllipticProblem("neumann", ScalarField(g, np.zeros(g.shape))))
    assert u.max_abs() <= 1e-12


def test_dirichlet_manufactured_quadratic():
    g = unit(65)
    exact = sample(lambda x, y: x * (1 - x), g)
    u, report = solve_with_report(
        EllipticProblem("dirichlet", sample(-2.0, g), boundary_trace(exact)))
    assert np.abs(u.values - exact.values).max() <= 1e-10
    assert report.regime == "direct" and report.residual <= 1e-10


def test_neumann_manufactured_cosine_converges_second_order():
    errs = []
    for n in (33, 65):
        g = unit(n)
        rhs = sample(lambda x, y: -math.pi ** 2 * np.cos(math.pi * x), g)
        u = solve(EllipticProblem("neumann", rhs))
        exact = np.cos(math.pi * g.mesh()[0])
        exact = exact - weighted_mean(exact, g)
        assert abs(weighted_mean(u.values, g)) <= 1e-12
        errs.append(np.abs(u.values - exact).max())
    assert errs[1] <= 5e-3
    assert errs[0] / errs[1] >= 3.0


def test_incompatible_neumann_data_is_projected():
    g = unit(33)
    u, report = solve_with_report(EllipticProblem("neumann", sample(1.0, g)))
    assert report.imbalance == pytest.approx(-1.0)
    assert u.max_abs() <= 1e-10


def test_cg_regime_matches_direct(monkeypatch):
    g = unit(33)
    rhs = sample(lambda x, y: np.sin(3 * x) * np.cos(2 * y), g)
    direct = solve(EllipticProblem("neumann", rhs))
    d_dir = solve(EllipticProblem("dirichlet", rhs))
    monkeypatch.setattr(elliptic, "DIRECT_LIMIT", 0)
    iterative, report = solve_with_report(EllipticProblem("neumann", rhs))
    assert report.regime == "cg" and report.iterations > 0
    assert np.abs(iterative.values - direct.values).max() <= 1e-7
    assert np.abs(solve(EllipticProblem("dirichlet", rhs)).values - d_dir.values).max() <= 1e-7


def test_malformed_boundary_data_rejected():
    g = unit(9)
    with pytest.raises(BadInputError, match="left boundary"):
        EllipticProblem("neumann", sample(0.0, g), {"left": np.zeros(4)})
    with pytest.raises(BadInputError, match="non-finite"):
        EllipticProblem("dirichlet", sample(0.0, g), {"top": np.full(9, np.inf)})


# ── reconstruct_potential ─────────────────────────────────────────────────────

def test_zero_form_gives_zero_potential():
    g = unit(33)
    z = np.zeros(g.shape)
    res = reconstruct_potential(MatrixField.symmetric2(g, z, z, z))
    assert res.v.max_abs() <= 1e-12
    assert res.hessian_gap <= 1e-10 and res.curl_gap <= 1e-10


def test_constant_cylinder_form_recovers_parabola():
    g = unit(65)
    one, z = np.ones(g.shape), np.zeros(g.shape)
    res = reconstruct_potential(MatrixField.symmetric2(g, -one, z, z))
    X, Y = g.mesh()
    rest = (res.v.values + X ** 2 / 2).ravel()
    basis = np.stack([np.ones(g.size), X.ravel(), Y.ravel()], axis=1)
    coef = np.linalg.lstsq(basis, rest, rcond=None)[0]
    assert np.abs(rest - basis @ coef).max() <= 1e-8
    assert res.hessian_gap <= 1e-8
    assert res.E.max_abs() <= 1e-12


def test_mollified_cylinder_form_meets_hessian_gap():
    u = generate(SurfaceSpec(tag="cylinder"), unit(129))
    eps = 0.0625
    f = second_form(u, eps)
    res = reconstruct_potential(f)
    h = f.grid.h
    assert res.hessian_gap <= max(10 * h * h, 5 * eps * eps) * f.form.max_abs()


def test_harmonic_hessian_is_integrated_to_second_order():
    gaps = []
    for n in (33, 65):
        g = unit(n)
        X, Y = g.mesh()
        A = MatrixField.symmetric2(g, 6 * X, -6 * Y, -6 * X)
        gaps.append(reconstruct_potential(A).hessian_gap)
    assert gaps[1] <= 0.05
    assert gaps[0] / gaps[1] >= 3.0


def test_non_codazzi_form_cannot_be_a_hessian():
    g = unit(65)
    _, Y = g.mesh()
    z = np.zeros(g.shape)
    res = reconstruct_potential(MatrixField.symmetric2(g, Y, z, z))
    # row curl −1 on the unit square: no Hessian comes closer than area/perimeter
    assert res.hessian_gap >= 0.2


def test_non_symmetric_form_rejected():
    g = unit(9)
    with pytest.raises(BadInputError, match="symmetric"):
        reconstruct_potential(MatrixField(g, np.zeros((2, 2) + g.shape)))


# ── gradient regularity ───────────────────────────────────────────────────────

STRIP = Grid2.from_box(-1, 0, 1, 0.0625, 513, 9)
SCALES = [0.5, 0.25, 0.125, 0.0625]


def test_parabola_gradient_is_little_holder():
    v = sample(lambda x, y: -x ** 2 / 2, STRIP)
    profiles, verdict = gradient_holder_diagnostic(v, 2 / 3, SCALES)
    assert verdict is HolderVerdict.MEMBER
    assert len(profiles) == 2


def test_two_thirds_gradient_profile():
    v = sample(lambda x, y: 0.6 * np.sign(x) * np.abs(x) ** (5 / 3), STRIP)
    assert gradient_holder_diagnostic(v, 0.5, SCALES)[1] is HolderVerdict.MEMBER
    assert gradient_holder_diagnostic(v, 2 / 3 + 0.1, SCALES)[1] is HolderVerdict.NON_MEMBER
