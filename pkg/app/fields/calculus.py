"""
Discrete calculus on Grid2 fields.

Centered second-order differences in the interior, one-sided second-order
differences on the boundary rows/columns (numpy.gradient with edge_order=2).
Second derivatives are first differences of first differences, so the mixed
derivative is formed once and the Hessian is symmetric by construction.
"""
import numpy as np

from app.fields.grid import MatrixField, ScalarField, VectorField
from app.errors import BadInputError


def d1(values: np.ndarray, hx: float) -> np.ndarray:
    """∂/∂x₁ along the last axis."""
    return np.gradient(values, hx, axis=-1, edge_order=2)


def d2(values: np.ndarray, hy: float) -> np.ndarray:
    """∂/∂x₂ along the second-to-last axis."""
    return np.gradient(values, hy, axis=-2, edge_order=2)


def grad(f: ScalarField) -> VectorField:
    g = f.grid
    return VectorField(g, np.stack([d1(f.values, g.hx), d2(f.values, g.hy)]))


def div(F: VectorField) -> ScalarField:
    if F.k != 2:
        raise BadInputError(f"div needs a 2-component field, got {F.k}")
    g = F.grid
    return ScalarField(g, d1(F.data[0], g.hx) + d2(F.data[1], g.hy))


def curl2(F: VectorField) -> ScalarField:
    """Scalar curl ∂₁F₂ − ∂₂F₁."""
    if F.k != 2:
        raise BadInputError(f"curl2 needs a 2-component field, got {F.k}")
    g = F.grid
    return ScalarField(g, d1(F.data[1], g.hx) - d2(F.data[0], g.hy))


def hess(f: ScalarField) -> MatrixField:
    g = f.grid
    f1 = d1(f.values, g.hx)
    f2 = d2(f.values, g.hy)
    f12 = d2(f1, g.hy)
    return MatrixField.symmetric2(g, d1(f1, g.hx), f12, d2(f2, g.hy))


def jacobian(F: VectorField) -> MatrixField:
    """Entry [i, m] = ∂ᵢF^m, shape (2, k)."""
    g = F.grid
    return MatrixField(g, np.stack([d1(F.data, g.hx), d2(F.data, g.hy)]))


def row_div(M: MatrixField) -> VectorField:
    """(div M)_i = ∂₁M_{i1} + ∂₂M_{i2}."""
    g = M.grid
    return VectorField(g, d1(M.data[:, 0], g.hx) + d2(M.data[:, 1], g.hy))


def row_curl(M: MatrixField) -> VectorField:
    """(curl M)_i = ∂₁M_{i2} − ∂₂M_{i1}."""
    g = M.grid
    return VectorField(g, d1(M.data[:, 1], g.hx) - d2(M.data[:, 0], g.hy))
