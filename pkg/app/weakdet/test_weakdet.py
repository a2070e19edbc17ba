"""
Monge–Ampère pairing, component pairings and Brouwer degrees.

  pytest app/weakdet/test_weakdet.py
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.errors import BadInputError, NumericalError
from app.fields import Grid2, TestFunction, hess, pair, sample
from app.fields.grid import ScalarField, VectorField
from app.mollify import ScaleLadder
from app.surfaces import SurfaceSpec, generate
from app.weakdet import (
    PlanarMap, brouwer_degree, circle_boundary, component_pairing, degree_scan, delta_ladder,
    gradient_map, ma_pairing, map_from_function, perturbed_map, rectangle_boundary,
)

SQUARE = Grid2.from_box(-1, -1, 1, 1, 129)
PSI = TestFunction.unit_mass((0.1, -0.05), 0.6)


def one():
    return sample(1.0, SQUARE)


# ── ma_pairing ────────────────────────────────────────────────────────────────

def test_developable_graph_pairs_to_zero():
    assert abs(ma_pairing(sample(lambda x, y: x ** 2, SQUARE), PSI)) <= 1e-10


@pytest.mark.parametrize("fn, det", [
    (lambda x, y: x ** 2 + y ** 2, 4.0),
    (lambda x, y: x * y, -1.0),
    (lambda x, y: 0.5 * x ** 2 - 1.5 * y ** 2 + 0.25 * x * y, -3.0625),
])
def test_quadratics_reproduce_hessian_determinant(fn, det):
    value = ma_pairing(sample(fn, SQUARE), PSI)
    assert value == pytest.approx(det * pair(one(), PSI), rel=1e-6)


def test_smooth_function_agrees_with_classical_determinant():
    v = sample(lambda x, y: np.sin(x) * np.cos(0.7 * y) + 0.3 * x ** 3, SQUARE)
    H = hess(v)
    det = ScalarField(SQUARE, H.data[0, 0] * H.data[1, 1] - H.data[0, 1] ** 2)
    assert ma_pairing(v, PSI) == pytest.approx(pair(det, PSI), rel=1e-3, abs=2e-3)


@settings(max_examples=20, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), c=st.floats(-3, 3))
def test_pairing_ignores_affine_shifts(a, b, c):
    base = sample(lambda x, y: np.sin(x + 0.5 * y) + x * y ** 2, SQUARE)
    shifted = sample(lambda x, y: np.sin(x + 0.5 * y) + x * y ** 2 + a * x + b * y + c, SQUARE)
    assert ma_pairing(shifted, PSI) == pytest.approx(ma_pairing(base, PSI), abs=1e-10)


def test_pairing_support_needs_two_cells():
    with pytest.raises(BadInputError, match="overshoots"):
        ma_pairing(one(), TestFunction.unit_mass((0.0, 0.0), 0.995))


def test_analytic_psi_derivatives_match_stencil():
    psi = TestFunction.unit_mass((0.1, -0.05), 0.6, order=6)
    quadratic = sample(lambda x, y: x ** 2 + y ** 2, SQUARE)
    assert ma_pairing(quadratic, psi, derivatives="analytic") == pytest.approx(
        4.0 * pair(one(), psi), rel=1e-4)
    v = sample(lambda x, y: np.sin(x) * np.cos(0.7 * y) + 0.3 * x ** 3, SQUARE)
    assert ma_pairing(v, psi, derivatives="analytic") == pytest.approx(
        ma_pairing(v, psi), rel=1e-3, abs=1e-4)
    with pytest.raises(BadInputError, match="derivatives"):
        ma_pairing(v, psi, derivatives="spectral")


# ── component_pairing ─────────────────────────────────────────────────────────

def test_component_pairings():
    psi = TestFunction.unit_mass((0.5, 0.5), 0.25)
    g = Grid2.from_box(0, 0, 1, 1, 129)
    plane = generate(SurfaceSpec(tag="plane"), g)
    assert all(abs(p) <= 1e-12 for p in component_pairing(plane, 0.0625, psi))
    cylinder = generate(SurfaceSpec(tag="cylinder"), g)
    assert all(abs(p) <= 1e-5 for p in component_pairing(cylinder, 0.03125, psi))


def test_sphere_component_control():
    g = Grid2.from_box(-0.35, -0.35, 0.35, 0.35, 129)
    sphere = generate(SurfaceSpec(tag="sphere_patch"), g)
    with pytest.raises(NumericalError, match="not isometric"):
        component_pairing(sphere, 0.0625, TestFunction.unit_mass((0, 0), 0.15))
    psi = TestFunction.unit_mass((0, 0), 0.15)
    p1, p2, p3 = component_pairing(sphere, 0.0625, psi, require_isometric=False)
    assert abs(p1) <= 1e-10 and abs(p2) <= 1e-10
    assert p3 == pytest.approx(1.0, abs=0.05)


def test_cylinder_component_rates_vanish_identically():
    g = Grid2.from_box(0, 0, 1, 1, 129)
    cylinder = generate(SurfaceSpec(tag="cylinder"), g)
    psi = TestFunction.unit_mass((0.5, 0.5), 0.25, label="centre")
    fits = component_pairing(cylinder, None, psi, ladder=ScaleLadder(0.125, 4, 0.5))
    assert [f.quantity for f in fits] == [f"component_pairing_u{m}" for m in (1, 2, 3)]
    assert all(f.identically_zero and f.exponent is None and f.passes for f in fits)
    assert all(f.extra["psi"] == "centre" and f.extra["w11_norm"] > 0 for f in fits)


def test_sphere_component_rates_keep_the_curved_component():
    g = Grid2.from_box(-0.35, -0.35, 0.35, 0.35, 129)
    sphere = generate(SurfaceSpec(tag="sphere_patch"), g)
    psi = TestFunction.unit_mass((0, 0), 0.15)
    ladder = ScaleLadder(0.08, 4, 0.7)
    with pytest.raises(NumericalError, match="not isometric"):
        component_pairing(sphere, None, psi, ladder=ladder)
    f1, f2, f3 = component_pairing(sphere, None, psi, ladder=ladder, require_isometric=False)
    assert f1.identically_zero and f2.identically_zero
    assert not f3.identically_zero
    assert abs(f3.exponent) < 0.2
    assert all(v == pytest.approx(1.0, abs=0.05) for v in f3.values)


def test_component_pairing_needs_one_of_eps_or_ladder():
    g = Grid2.from_box(0, 0, 1, 1, 129)
    plane = generate(SurfaceSpec(tag="plane"), g)
    psi = TestFunction.unit_mass((0.5, 0.5), 0.25)
    with pytest.raises(BadInputError):
        component_pairing(plane, None, psi)
    with pytest.raises(BadInputError):
        component_pairing(plane, 0.0625, psi, ladder=ScaleLadder(0.125, 4, 0.5))


# ── Degree ────────────────────────────────────────────────────────────────────

DISK = Grid2.from_box(-1.5, -1.5, 1.5, 1.5, 121)


def test_identity_has_degree_one():
    rep = brouwer_degree(map_from_function(lambda x, y: (x, y), DISK),
                         circle_boundary((0, 0), 1.0), (0.0, 0.0))
    assert rep.valid and rep.degree == 1


def test_square_map_has_degree_two():
    z2 = map_from_function(lambda x, y: (x * x - y * y, 2 * x * y), DISK)
    rep = brouwer_degree(z2, circle_boundary((0, 0), 1.0), (0.1, 0.0))
    assert rep.valid and rep.degree == 2


def test_degenerate_gradient_image_has_degree_zero():
    v = sample(lambda x, y: x ** 2, DISK)
    rep = brouwer_degree(gradient_map(v), rectangle_boundary((-1, -1, 1, 1)), (0.5, 0.3))
    assert rep.valid and rep.degree == 0


def test_query_on_the_boundary_image_is_invalid():
    ident = map_from_function(lambda x, y: (x, y), DISK)
    rep = brouwer_degree(ident, circle_boundary((0, 0), 1.0), (1.0, 0.0))
    assert not rep.valid and rep.degree is None


def test_boundary_must_be_closed_and_inside():
    ident = map_from_function(lambda x, y: (x, y), DISK)
    open_line = circle_boundary((0, 0), 1.0)[:-1]
    with pytest.raises(BadInputError, match="not closed"):
        brouwer_degree(ident, open_line, (0, 0))
    with pytest.raises(BadInputError, match="leaves the grid"):
        brouwer_degree(ident, circle_boundary((0, 0), 2.0), (0, 0))


def test_degree_is_additive_over_split_rectangles():
    f = map_from_function(lambda x, y: (x * x - y * y + 0.3, 2 * x * y), DISK)
    y = (0.0, 0.05)
    whole = brouwer_degree(f, rectangle_boundary((-1, -1, 1, 1)), y)
    left = brouwer_degree(f, rectangle_boundary((-1, -1, 0.013, 1)), y)
    right = brouwer_degree(f, rectangle_boundary((0.013, -1, 1, 1)), y)
    assert whole.valid and left.valid and right.valid
    assert whole.degree == left.degree + right.degree == 2


def test_small_perturbation_keeps_degree():
    base = map_from_function(lambda x, y: (x, y), DISK)
    boundary = circle_boundary((0, 0), 1.0)
    rep = brouwer_degree(base, boundary, (0.2, 0.1))
    bump = rep.margin / 4
    moved = PlanarMap(VectorField(DISK, base.field.data + bump * np.sin(3 * base.field.data)))
    assert brouwer_degree(moved, boundary, (0.2, 0.1)).degree == rep.degree


def test_perturbed_map_examples():
    zero = sample(0.0, DISK)
    rot = perturbed_map(zero, 1.0)
    assert brouwer_degree(rot, circle_boundary((0, 0), 0.5), (0, 0)).degree == 1
    affine = sample(lambda x, y: 0.3 * x - 0.2 * y + 1.0, DISK)
    rep = brouwer_degree(perturbed_map(affine, 0.1), rectangle_boundary((-1, -1, 1, 1)), (0.3, -0.2))
    assert rep.valid and rep.degree == 1
    with pytest.raises(BadInputError):
        perturbed_map(zero, 0.0)


def test_trace_is_recorded():
    f = map_from_function(lambda x, y: (x, y), DISK).with_trace(circle_boundary((0, 0), 1.0))
    assert np.allclose(f.trace[0], f.trace[-1])


@settings(max_examples=15, deadline=None)
@given(cx=st.floats(-0.5, 0.5), cy=st.floats(-0.5, 0.5), k=st.integers(-2, 2))
def test_degrees_are_integers_of_winding_maps(cx, cy, k):
    def fn(x, y):
        z = (x + 1j * y) ** abs(k) if k >= 0 else np.conj(x + 1j * y) ** abs(k)
        return z.real, z.imag

    rep = brouwer_degree(map_from_function(fn, DISK), circle_boundary((0, 0), 1.2), (cx * 0.1, cy * 0.1))
    if rep.valid:
        assert rep.degree == k


# ── Scan ──────────────────────────────────────────────────────────────────────

UNIT = Grid2.from_box(0, 0, 1, 1, 65)


def test_cylinder_potential_scan_has_no_fails():
    v = sample(lambda x, y: -x ** 2 / 2, UNIT)
    scan = degree_scan(v, samples=50, seed=3)
    assert scan.fails == 0
    assert not scan.all_invalid
    assert set(scan.counts) == {"grad"} | {f"F_delta={d:g}" for d in delta_ladder(UNIT.box)}


def test_non_developable_control_fails_gradient_branch():
    v = sample(lambda x, y: (x ** 2 + y ** 2) / 2, UNIT)
    scan = degree_scan(v, samples=30, seed=1)
    assert scan.counts["grad"]["fail"] > 0
    assert all(w["branch"] == "grad" and w["degree"] == 1 for w in scan.witnesses)


def test_constant_potential_has_degenerate_image():
    scan = degree_scan(sample(0.0, UNIT), samples=10)
    assert scan.degenerate_image
    assert scan.counts["grad"]["invalid"] == 10
    assert scan.to_dict()["note"]


def test_scan_is_deterministic_for_a_seed():
    v = sample(lambda x, y: -x ** 2 / 2 + 0.1 * y, UNIT)
    assert degree_scan(v, samples=10, seed=7).to_dict() == degree_scan(v, samples=10, seed=7).to_dict()
