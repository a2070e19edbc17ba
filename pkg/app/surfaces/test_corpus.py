"""
Corpus members, oracles and the isometry gauge.

  pytest app/surfaces/test_corpus.py
"""
import math

import numpy as np
import pytest
from pydantic import ValidationError

from app.errors import BadInputError, NumericalError
from app.fields import Grid2
from app.fields.calculus import d1, d2
from app.surfaces import (
    SurfaceSpec, default_domain, generate, isometry_defect, oracle_second_form,
    pullback_metric, rigid_motion,
)

DEVELOPABLE = [
    SurfaceSpec(tag="plane"),
    SurfaceSpec(tag="plane", params={"P": [[0.6, 0.0], [0.8, 0.0], [0.0, 1.0]], "b": [1, 2, 3]}),
    SurfaceSpec(tag="cylinder", params={"r": 1.0}),
    SurfaceSpec(tag="cylinder", params={"r": 0.3}),
    SurfaceSpec(tag="cone"),
    SurfaceSpec(tag="cone", params={"half_angle": 0.3}),
    SurfaceSpec(tag="tangent_developable"),
    SurfaceSpec(tag="crumpled_fold"),
]


def on_default(spec: SurfaceSpec, n: int = 65):
    return generate(spec, Grid2.from_box(*default_domain(spec), n))


@pytest.mark.parametrize("spec", DEVELOPABLE, ids=lambda s: s.tag.value)
def test_developable_members_are_isometric(spec):
    assert isometry_defect(on_default(spec)) <= 1e-10


def test_plane_metric_is_identity_and_c0_is_one():
    u = on_default(SurfaceSpec(tag="plane"))
    g = pullback_metric(u)
    assert np.array_equal(g.data[0, 0], np.ones(u.grid.shape))
    assert np.array_equal(g.data[0, 1], np.zeros(u.grid.shape))
    assert u.c0 == pytest.approx(1.0)
    assert np.ptp(u.du.data, axis=(2, 3)).max() == 0.0


def test_cylinder_oracle():
    g = Grid2.from_box(0, 0, math.pi / 2, 1, 33)
    u = generate(SurfaceSpec(tag="cylinder", params={"r": 1.0}), g)
    A = oracle_second_form(u)
    assert np.allclose(A.data[0, 0], -1.0) and np.allclose(A.data[1, 1], 0.0)
    assert np.allclose(u.oracle.ruling_angle, math.pi / 2)
    X, _ = g.mesh()
    assert np.allclose(u.oracle.normal.data[0], np.cos(X))


@pytest.mark.parametrize("spec", [
    SurfaceSpec(tag="cylinder", params={"r": 0.7}),
    SurfaceSpec(tag="cone"),
    SurfaceSpec(tag="tangent_developable"),
    SurfaceSpec(tag="graph", params={"profile": "wave"}),
    SurfaceSpec(tag="sphere_patch"),
], ids=lambda s: s.tag.value)
def test_oracle_matches_finite_differences(spec):
    """Stencil second derivatives of the analytic du contracted with the oracle normal."""
    errs = []
    for n in (65, 129):
        u = on_default(spec, n)
        g = u.grid
        d1u, d2u = u.rows()
        nrm = u.oracle.normal.data
        A = u.oracle.second_form.data
        a11 = np.sum(d1(d1u, g.hx) * nrm, axis=0)
        a12 = np.sum(d2(d1u, g.hy) * nrm, axis=0)
        a22 = np.sum(d2(d2u, g.hy) * nrm, axis=0)
        inner = (slice(2, -2), slice(2, -2))
        errs.append(max(np.max(np.abs(a11 - A[0, 0])[inner]), np.max(np.abs(a12 - A[0, 1])[inner]),
                        np.max(np.abs(a22 - A[1, 1])[inner])))
    assert errs[1] < 1e-3
    assert errs[0] / errs[1] > 3.0


def test_oracle_normal_is_the_unit_cross_product():
    for spec in (SurfaceSpec(tag="cone"), SurfaceSpec(tag="tangent_developable"),
                 SurfaceSpec(tag="sphere_patch"), SurfaceSpec(tag="crumpled_fold")):
        u = on_default(spec, 33)
        d1u, d2u = u.rows()
        cross = np.cross(d1u, d2u, axis=0)
        cross /= np.linalg.norm(cross, axis=0)
        assert np.allclose(cross, u.oracle.normal.data, atol=1e-12), spec.tag


def test_oracle_potential_hessian_is_second_form():
    from app.fields import hess
    for spec in (SurfaceSpec(tag="cone"), SurfaceSpec(tag="tangent_developable")):
        u = on_default(spec, 129)
        H = hess(u.oracle.potential).data
        A = u.oracle.second_form.data
        assert np.max(np.abs(H - A)[:, :, 2:-2, 2:-2]) < 1e-3


def test_sphere_patch_metric_and_defect():
    spec = SurfaceSpec(tag="sphere_patch", params={"R": 1.0})
    u = on_default(spec, 65)
    assert isometry_defect(u) == pytest.approx(1 / 3, rel=0.05)
    g = pullback_metric(u)
    j, i = 32, 32
    assert g.data[:, :, j, i] == pytest.approx(np.eye(2))
    assert u.oracle.gauss_curvature == 1.0
    assert u.oracle.normal.data[:, j, i] == pytest.approx([0, 0, 1])


def test_cone_rulings_point_at_apex():
    u = on_default(SurfaceSpec(tag="cone"), 33)
    X, Y = u.grid.mesh()
    ax, ay = u.oracle.apex
    expected = np.mod(np.arctan2(Y - ay, X - ax), math.pi)
    assert np.allclose(u.oracle.ruling_angle, expected)


def test_cone_domain_must_avoid_apex():
    g = Grid2.from_box(0, -0.6, 1, 1, 33)
    with pytest.raises(BadInputError, match="cone"):
        generate(SurfaceSpec(tag="cone"), g)


def test_tangent_developable_avoids_edge_of_regression():
    g = Grid2.from_box(1.0, 0.0, 2.0, 1.0, 33)
    with pytest.raises(BadInputError, match="regression"):
        generate(SurfaceSpec(tag="tangent_developable"), g)


def test_fold_is_marked_non_c1_and_continuous():
    spec = SurfaceSpec(tag="crumpled_fold", params={"point": (0.5, 0.5), "direction": math.pi / 2})
    u = generate(spec, Grid2.from_box(0, 0, 1, 1, 41))
    assert u.oracle.non_c1
    jump = np.max(np.abs(np.diff(u.u.data, axis=2)))
    assert jump < 2 * u.grid.hx


@pytest.mark.parametrize("params", [{"r": -1}, {"r": 0}])
def test_invalid_parameters_rejected(params):
    with pytest.raises(ValidationError):
        SurfaceSpec(tag="cylinder", params=params)


def test_fold_angle_range():
    with pytest.raises(ValidationError):
        SurfaceSpec(tag="crumpled_fold", params={"angle": math.pi})


def test_degenerate_plane_rejected():
    with pytest.raises(ValidationError):
        SurfaceSpec(tag="plane", params={"P": [[1, 2], [0, 0], [0, 0]]})


def test_cli_params_are_parsed():
    spec = SurfaceSpec.from_cli("cone", ["apex=0.5,-0.5", "half_angle=0.4"])
    assert spec.parsed().apex == (0.5, -0.5)
    with pytest.raises(BadInputError):
        SurfaceSpec.from_cli("cylinder", ["r"])


def test_rigid_motion_equivariance():
    u = on_default(SurfaceSpec(tag="cone"), 33)
    c, s = math.cos(0.7), math.sin(0.7)
    Q = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]]) @ np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    v = rigid_motion(u, Q, (1.0, -2.0, 0.5))
    assert np.allclose(pullback_metric(v).data, pullback_metric(u).data, atol=1e-14)
    assert isometry_defect(v) <= 1e-10
    assert np.allclose(v.oracle.normal.data, np.einsum("ab,bji->aji", Q, u.oracle.normal.data))
    assert v.oracle.second_form is u.oracle.second_form
    with pytest.raises(BadInputError):
        rigid_motion(u, np.diag([1.0, 1.0, -1.0]))


def test_immersion_condition_enforced():
    from app.fields import VectorField
    from app.fields.grid import MatrixField
    from app.surfaces import ImmersionField
    g = Grid2.from_box(0, 0, 1, 1, 5)
    u = VectorField(g, np.zeros((3,) + g.shape))
    du = np.zeros((2, 3) + g.shape)
    du[0, 0] = 1.0
    du[1, 0] = 1.0
    with pytest.raises(NumericalError, match="immersion"):
        ImmersionField(u, MatrixField(g, du))
