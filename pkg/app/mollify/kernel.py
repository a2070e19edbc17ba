"""
The mollifying kernel and the scale ladder.

  φ(z) = c_q (1 − |z|²)^q  on the unit disk,  φ_ε(z) = ε⁻² φ(z/ε)

c_q and the second moment m₂ = ∫|z|²φ are computed once by radial quadrature.
Discrete weights are renormalized on every grid: the value weights sum to 1
and the derivative weights reproduce ∂ⱼ of a linear function exactly.
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy import integrate

from app.errors import BadInputError
from app.fields.grid import Grid2

DEFAULT_ORDER = 4
MIN_COUNT = 4


@dataclass(frozen=True)
class Kernel:
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        if self.order < DEFAULT_ORDER:
            raise BadInputError(f"kernel order must be >= {DEFAULT_ORDER}, got {self.order}")

    @property
    def normalization(self) -> float:
        return _radial_moments(self.order)[0]

    @property
    def m2(self) -> float:
        return _radial_moments(self.order)[1]

    def half_widths(self, eps: float, grid: Grid2) -> tuple[int, int]:
        return (int(math.ceil(eps / grid.hx - 1e-9)), int(math.ceil(eps / grid.hy - 1e-9)))

    def _stencil(self, eps: float, grid: Grid2):
        kx, ky = self.half_widths(eps, grid)
        zx = np.arange(-kx, kx + 1) * grid.hx / eps
        zy = np.arange(-ky, ky + 1) * grid.hy / eps
        ZX, ZY = np.meshgrid(zx, zy, indexing="xy")
        s = ZX ** 2 + ZY ** 2
        base = np.where(s < 1.0, 1.0 - s, 0.0)
        return ZX, ZY, base

    def weights(self, eps: float, grid: Grid2) -> np.ndarray:
        """(2ky+1, 2kx+1) correlation weights summing to 1."""
        _, _, base = self._stencil(eps, grid)
        w = base ** self.order
        return w / w.sum()

    def derivative_weights(self, eps: float, grid: Grid2, axis: int) -> np.ndarray:
        """Correlation weights D with Σ f(x+y) D(y) ≈ ∂_axis (f_ε)(x)."""
        ZX, ZY, base = self._stencil(eps, grid)
        z = ZX if axis == 0 else ZY
        # −∂φ(y) up to a positive factor, fixed below by the linear moment
        d = z * base ** (self.order - 1)
        y = z * eps
        return d / np.sum(y * d)


@lru_cache(maxsize=None)
def _radial_moments(order: int) -> tuple[float, float]:
    mass, _ = integrate.quad(lambda t: 2 * math.pi * t * (1 - t * t) ** order, 0.0, 1.0,
                             epsabs=1e-15, epsrel=1e-14)
    c = 1.0 / mass
    m2, _ = integrate.quad(lambda t: 2 * math.pi * c * t ** 3 * (1 - t * t) ** order, 0.0, 1.0,
                           epsabs=1e-15, epsrel=1e-14)
    return c, m2


# ── Scale ladder ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ScaleLadder:
    eps0: float
    count: int
    ratio: float = 0.5

    def __post_init__(self):
        if not self.eps0 > 0:
            raise BadInputError(f"eps0 must be positive, got {self.eps0}")
        if self.count < MIN_COUNT:
            raise BadInputError(f"ladder needs at least {MIN_COUNT} scales, got {self.count}")
        if not 0 < self.ratio < 1:
            raise BadInputError(f"ladder ratio must lie in (0, 1), got {self.ratio}")

    @classmethod
    def parse(cls, text: str) -> "ScaleLadder":
        """'eps0,count,ratio' as given to --eps-ladder; ratio optional."""
        parts = [p.strip() for p in str(text).split(",") if p.strip()]
        if len(parts) not in (2, 3):
            raise BadInputError(f"bad ladder spec {text!r}, expected eps0,count,ratio")
        try:
            eps0, count = float(parts[0]), int(parts[1])
            ratio = float(parts[2]) if len(parts) == 3 else 0.5
        except ValueError:
            raise BadInputError(f"bad ladder spec {text!r}, expected eps0,count,ratio")
        return cls(eps0, count, ratio)

    @property
    def scales(self) -> tuple[float, ...]:
        return tuple(self.eps0 * self.ratio ** k for k in range(self.count))

    @property
    def smallest(self) -> float:
        return self.eps0 * self.ratio ** (self.count - 1)

    def check(self, grid: Grid2) -> None:
        if self.smallest < 2 * grid.h * (1 - 1e-12):
            raise BadInputError(
                f"smallest scale {self.smallest:.4g} does not resolve the kernel: "
                f"need >= 2*h = {2 * grid.h:.4g}")

    def spec(self) -> str:
        return f"{self.eps0:g},{self.count},{self.ratio:g}"

    def to_dict(self) -> dict:
        return {"eps0": self.eps0, "count": self.count, "ratio": self.ratio}


DEFAULT_KERNEL = Kernel()
