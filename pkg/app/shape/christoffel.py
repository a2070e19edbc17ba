"""Christoffel symbols of a sampled metric, Γ^i_jk = ½ g^{im}(∂_k g_jm + ∂_j g_km − ∂_m g_jk)."""
from dataclasses import dataclass

import numpy as np

from app.errors import NumericalError
from app.fields.calculus import d1, d2
from app.fields.grid import Grid2, MatrixField, ScalarField

MIN_EIGENVALUE = 1e-8


@dataclass(frozen=True, eq=False)
class ChristoffelField:
    grid: Grid2
    gamma: np.ndarray            # [i, j, k, ny, nx], symmetric in j, k
    metric: MatrixField

    def component(self, i: int, j: int, k: int) -> ScalarField:
        """1-based indices, as written: Γ^i_jk."""
        return ScalarField(self.grid, self.gamma[i - 1, j - 1, k - 1])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.gamma)))


def christoffel(g: MatrixField) -> ChristoffelField:
    grid = g.grid
    a, b, c = g.data[0, 0], g.data[0, 1], g.data[1, 1]
    det = a * c - b * b
    half_tr = 0.5 * (a + c)
    lam_min = half_tr - np.sqrt(np.maximum(half_tr ** 2 - det, 0.0))
    if float(np.min(lam_min)) < MIN_EIGENVALUE:
        j, i = np.unravel_index(int(np.argmin(lam_min)), lam_min.shape)
        raise NumericalError(
            f"metric not positive definite: min eigenvalue {float(lam_min[j, i]):.3e} "
            f"at node ({i}, {j})")
    inv = np.array([[c, -b], [-b, a]]) / det

    # dg[m][j, k] = ∂_m g_jk
    dg = (d1(g.data, grid.hx), d2(g.data, grid.hy))
    gamma = np.zeros((2, 2, 2) + grid.shape)
    for j in range(2):
        for k in range(j, 2):
            # first kind: Γ_{m,jk} = ½(∂_k g_jm + ∂_j g_km − ∂_m g_jk)
            first = [0.5 * (dg[k][j, m] + dg[j][k, m] - dg[m][j, k]) for m in range(2)]
            for i in range(2):
                gamma[i, j, k] = inv[i, 0] * first[0] + inv[i, 1] * first[1]
                gamma[i, k, j] = gamma[i, j, k]
    return ChristoffelField(grid, gamma, g)
