"""
Quadrature, compactly supported test functions and the default battery.

Test functions are radial bumps a·(1 − |x−c|²/r²)^q on the disk B(c, r),
q ≥ 4. Pairings use the composite trapezoidal rule; because the bumps vanish
to order q at the edge of their support the rule stays second-order.
"""
from dataclasses import dataclass
import math

import numpy as np

from app.errors import BadInputError
from app.fields.calculus import d1, d2
from app.fields.grid import Grid2, ScalarField

MIN_ORDER = 4
DEFAULT_RADIUS_FRACTIONS = (0.2, 0.3, 0.4)


def trapezoid_weights(grid: Grid2) -> np.ndarray:
    wx = np.full(grid.nx, grid.hx)
    wx[[0, -1]] *= 0.5
    wy = np.full(grid.ny, grid.hy)
    wy[[0, -1]] *= 0.5
    return np.outer(wy, wx)


def integrate(values: np.ndarray, grid: Grid2) -> float:
    return float(np.sum(values * trapezoid_weights(grid)))


# ── Test functions ────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class TestFunction:
    __test__ = False

    center: tuple[float, float]
    radius: float
    order: int = MIN_ORDER
    amplitude: float = 1.0
    label: str = ""

    def __post_init__(self):
        if not self.radius > 0:
            raise BadInputError(f"test function radius must be positive, got {self.radius}")
        if self.order < MIN_ORDER:
            raise BadInputError(f"bump order must be >= {MIN_ORDER}, got {self.order}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    @classmethod
    def unit_mass(cls, center, radius: float, order: int = MIN_ORDER, label: str = "") -> "TestFunction":
        return cls(center, radius, order, (order + 1) / (math.pi * radius ** 2), label)

    @property
    def mass(self) -> float:
        """Exact ∫ψ = a·π·r²/(q+1)."""
        return self.amplitude * math.pi * self.radius ** 2 / (self.order + 1)

    @property
    def support_box(self) -> tuple[float, float, float, float]:
        cx, cy = self.center
        r = self.radius
        return (cx - r, cy - r, cx + r, cy + r)

    def check_support(self, grid: Grid2, margin_cells: float = 1.0) -> None:
        """Support plus `margin_cells` cells must lie inside the grid."""
        need = margin_cells * grid.h
        gap = grid.clearance(self.support_box)
        if gap < need - 1e-12:
            raise BadInputError(
                f"test function {self.label or self.center} overshoots the grid by "
                f"{need - gap:.3e} (radius {self.radius}, grid box {grid.box})")

    def _s(self, grid: Grid2):
        X, Y = grid.mesh()
        dx = X - self.center[0]
        dy = Y - self.center[1]
        return dx, dy, (dx * dx + dy * dy) / self.radius ** 2

    def realize(self, grid: Grid2) -> ScalarField:
        _, _, s = self._s(grid)
        base = np.where(s < 1.0, 1.0 - s, 0.0)
        return ScalarField(grid, self.amplitude * base ** self.order)

    def derivatives(self, grid: Grid2) -> dict[str, np.ndarray]:
        """Analytic ∂ψ and ∂²ψ sampled at the nodes."""
        dx, dy, s = self._s(grid)
        q, a, r2 = self.order, self.amplitude, self.radius ** 2
        base = np.where(s < 1.0, 1.0 - s, 0.0)
        p1 = a * q * base ** (q - 1)
        p2 = a * q * (q - 1) * base ** (q - 2)
        return {
            "d1": -2.0 * dx / r2 * p1,
            "d2": -2.0 * dy / r2 * p1,
            "d11": 4.0 * dx * dx / r2 ** 2 * p2 - 2.0 / r2 * p1,
            "d22": 4.0 * dy * dy / r2 ** 2 * p2 - 2.0 / r2 * p1,
            "d12": 4.0 * dx * dy / r2 ** 2 * p2,
        }

    def stencil_derivatives(self, grid: Grid2) -> dict[str, np.ndarray]:
        """Differences of the realized bump; exact summation by parts against stencil derivatives."""
        psi = self.realize(grid).values
        p1 = d1(psi, grid.hx)
        p2 = d2(psi, grid.hy)
        return {"d1": p1, "d2": p2, "d11": d1(p1, grid.hx), "d22": d2(p2, grid.hy),
                "d12": d2(p1, grid.hy)}


def pair(f: ScalarField, psi: TestFunction) -> float:
    """Trapezoidal ∫ f ψ."""
    psi.check_support(f.grid)
    return integrate(f.values * psi.realize(f.grid).values, f.grid)


def w11_norm(psi: TestFunction, grid: Grid2) -> float:
    """‖ψ‖_{L¹} + ‖∇ψ‖_{L¹} by quadrature of the analytic derivatives."""
    der = psi.derivatives(grid)
    mass = integrate(np.abs(psi.realize(grid).values), grid)
    slope = integrate(np.hypot(der["d1"], der["d2"]), grid)
    return mass + slope


# ── Battery ───────────────────────────────────────────────────────────────────

def default_battery(box: tuple[float, float, float, float], order: int = MIN_ORDER,
                    radius_fractions: tuple[float, ...] = DEFAULT_RADIUS_FRACTIONS) -> list[TestFunction]:
    """
    len(radius_fractions) radii × 5 centres of unit-mass bumps inside `box`.
    Centres: the box centre and four diagonal points; placement is a pure
    function of the box, so every run sees the same battery.
    """
    bx0, by0, bx1, by1 = box
    cx, cy = 0.5 * (bx0 + bx1), 0.5 * (by0 + by1)
    wx, wy = 0.5 * (bx1 - bx0), 0.5 * (by1 - by0)
    m = min(wx, wy)
    battery = []
    for k, frac in enumerate(radius_fractions):
        r = frac * m
        sx = 0.5 * (0.9 * wx - r)
        sy = 0.5 * (0.9 * wy - r)
        centers = [(cx, cy), (cx - sx, cy - sy), (cx + sx, cy - sy),
                   (cx - sx, cy + sy), (cx + sx, cy + sy)]
        for l, c in enumerate(centers):
            battery.append(TestFunction.unit_mass(c, r, order, label=f"r{k}c{l}"))
    return battery
