"""Pointwise sampling of analytic expressions on a grid."""
from typing import Callable, Sequence, Union

import numpy as np

from app.errors import BadInputError
from app.fields.grid import Grid2, ScalarField, VectorField

Spec = Union[float, int, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def _evaluate(spec: Spec, grid: Grid2, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    if callable(spec):
        with np.errstate(all="ignore"):
            vals = np.broadcast_to(np.asarray(spec(X, Y), dtype=float), grid.shape).copy()
    else:
        vals = np.full(grid.shape, float(spec))
    bad = ~np.isfinite(vals)
    if bad.any():
        j, i = (int(t) for t in np.argwhere(bad)[0])
        x, y = grid.point(i, j)
        raise BadInputError(f"expression undefined at node ({i}, {j}) = ({x:.6g}, {y:.6g})")
    return vals


def sample(spec: Union[Spec, Sequence[Spec]], grid: Grid2):
    """
    A scalar spec (number or f(X, Y) on mesh arrays) gives a ScalarField;
    a sequence of them gives a VectorField with one component each.
    """
    X, Y = grid.mesh()
    if isinstance(spec, (list, tuple)):
        return VectorField(grid, np.stack([_evaluate(s, grid, X, Y) for s in spec]))
    return ScalarField(grid, _evaluate(spec, grid, X, Y))
