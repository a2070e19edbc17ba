"""Pull-back metric and the isometry gauge."""
import numpy as np

from app.fields.grid import MatrixField
from app.surfaces.corpus import ImmersionField


def pullback_metric(u: ImmersionField) -> MatrixField:
    """gᵢⱼ = ∂ᵢu·∂ⱼu from the stored Jacobian."""
    d1u, d2u = u.rows()
    return MatrixField.symmetric2(u.grid, np.sum(d1u * d1u, axis=0), np.sum(d1u * d2u, axis=0),
                                  np.sum(d2u * d2u, axis=0))


def spectral_deviation(g: MatrixField) -> np.ndarray:
    """Per-node operator norm of g − E₂ for a symmetric 2x2 field."""
    a = g.data[0, 0] - 1.0
    b = g.data[0, 1]
    c = g.data[1, 1] - 1.0
    return np.abs(0.5 * (a + c)) + np.sqrt(0.25 * (a - c) ** 2 + b * b)


def isometry_defect(u: ImmersionField) -> float:
    return float(np.max(spectral_deviation(pullback_metric(u))))
