"""
Rectangular grids and the fields sampled on them.

Layout: every field stores its samples as a numpy array whose last two axes
are (ny, nx), so the flat index of node (i, j) is j*nx + i. Fields are
immutable; arrays are copied on construction and marked read-only.

Sub-grids (eroded grids after mollification, trimmed stencil margins,
restriction to a box) keep the parent spacing and an integer offset, which is
how downstream stages intersect grids explicitly.
"""
from dataclasses import dataclass
import math

import numpy as np

from app.errors import BadInputError

MIN_NODES = 3


# ── Grid ──────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Grid2:
    nx: int
    ny: int
    x0: float
    y0: float
    hx: float
    hy: float

    def __post_init__(self):
        if self.nx < MIN_NODES or self.ny < MIN_NODES:
            raise BadInputError(
                f"grid needs at least {MIN_NODES} nodes per axis, got {self.nx}x{self.ny}")
        if not (self.hx > 0 and self.hy > 0) or not math.isfinite(self.hx * self.hy):
            raise BadInputError(f"grid spacings must be positive, got hx={self.hx}, hy={self.hy}")

    @classmethod
    def from_box(cls, x0: float, y0: float, x1: float, y1: float,
                 nx: int, ny: int | None = None) -> "Grid2":
        """nx (and ny) are node counts including both ends of the box."""
        ny = nx if ny is None else ny
        if x1 <= x0 or y1 <= y0:
            raise BadInputError(f"empty box ({x0}, {y0}, {x1}, {y1})")
        if nx < MIN_NODES or ny < MIN_NODES:
            raise BadInputError(f"grid needs at least {MIN_NODES} nodes per axis")
        return cls(nx, ny, float(x0), float(y0), (x1 - x0) / (nx - 1), (y1 - y0) / (ny - 1))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + np.arange(self.nx) * self.hx

    @property
    def y(self) -> np.ndarray:
        return self.y0 + np.arange(self.ny) * self.hy

    @property
    def x1(self) -> float:
        return self.x0 + (self.nx - 1) * self.hx

    @property
    def y1(self) -> float:
        return self.y0 + (self.ny - 1) * self.hy

    @property
    def box(self) -> tuple[float, float, float, float]:
        return (self.x0, self.y0, self.x1, self.y1)

    @property
    def diameter(self) -> float:
        return math.hypot(self.x1 - self.x0, self.y1 - self.y0)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) arrays of shape (ny, nx)."""
        return np.meshgrid(self.x, self.y, indexing="xy")

    def point(self, i: int, j: int) -> tuple[float, float]:
        return (self.x0 + i * self.hx, self.y0 + j * self.hy)

    def node_near(self, x: float, y: float) -> tuple[int, int]:
        i = int(round((x - self.x0) / self.hx))
        j = int(round((y - self.y0) / self.hy))
        return (min(max(i, 0), self.nx - 1), min(max(j, 0), self.ny - 1))

    def sub(self, i0: int, j0: int, nx: int, ny: int) -> "Grid2":
        if i0 < 0 or j0 < 0 or i0 + nx > self.nx or j0 + ny > self.ny:
            raise BadInputError(
                f"sub-grid [{i0}:{i0 + nx}, {j0}:{j0 + ny}] outside {self.nx}x{self.ny} grid")
        x0, y0 = self.point(i0, j0)
        return Grid2(nx, ny, x0, y0, self.hx, self.hy)

    def offset_in(self, parent: "Grid2") -> tuple[int, int]:
        """Integer node offset of this grid inside `parent` (same spacing required)."""
        if not (math.isclose(self.hx, parent.hx, rel_tol=1e-9)
                and math.isclose(self.hy, parent.hy, rel_tol=1e-9)):
            raise BadInputError("grids have different spacings")
        fi = (self.x0 - parent.x0) / parent.hx
        fj = (self.y0 - parent.y0) / parent.hy
        i0, j0 = int(round(fi)), int(round(fj))
        if abs(fi - i0) > 1e-6 or abs(fj - j0) > 1e-6:
            raise BadInputError("grids are not node-aligned")
        if i0 < 0 or j0 < 0 or i0 + self.nx > parent.nx or j0 + self.ny > parent.ny:
            raise BadInputError("grid is not contained in the parent grid")
        return (i0, j0)

    def clearance(self, box: tuple[float, float, float, float]) -> float:
        """Signed distance from `box` to the grid boundary (negative = overshoot)."""
        bx0, by0, bx1, by1 = box
        return min(bx0 - self.x0, by0 - self.y0, self.x1 - bx1, self.y1 - by1)

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "x0": self.x0, "y0": self.y0,
                "hx": self.hx, "hy": self.hy}


# ── Fields ────────────────────────────────────────────────────────────────────

def _frozen_array(values, shape: tuple, what: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        raise BadInputError(f"{what}: expected array of shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise BadInputError(f"{what}: non-finite value at index {tuple(int(b) for b in bad)}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid2
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values, self.grid.shape, "ScalarField"))

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def sub(self, i0: int, j0: int, nx: int, ny: int) -> "ScalarField":
        g = self.grid.sub(i0, j0, nx, ny)
        return ScalarField(g, self.values[j0:j0 + ny, i0:i0 + nx])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __add__(self, other):
        return ScalarField(self.grid, self.values + _raw(other))

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - _raw(other))

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * _raw(other))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class VectorField:
    """k components sharing one grid; data has shape (k, ny, nx)."""
    grid: Grid2
    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim != 3 or arr.shape[0] < 1:
            raise BadInputError(f"VectorField: expected (k, ny, nx) data, got {arr.shape}")
        object.__setattr__(self, "data", _frozen_array(arr, (arr.shape[0],) + self.grid.shape,
                                                       "VectorField"))

    @classmethod
    def stack(cls, components: list) -> "VectorField":
        grid = components[0].grid
        for c in components[1:]:
            if c.grid != grid:
                raise BadInputError("VectorField components live on different grids")
        return cls(grid, np.stack([c.values for c in components]))

    @property
    def k(self) -> int:
        return self.data.shape[0]

    def component(self, c: int) -> ScalarField:
        return ScalarField(self.grid, self.data[c])

    def components(self) -> list[ScalarField]:
        return [self.component(c) for c in range(self.k)]

    def sub(self, i0: int, j0: int, nx: int, ny: int) -> "VectorField":
        g = self.grid.sub(i0, j0, nx, ny)
        return VectorField(g, self.data[:, j0:j0 + ny, i0:i0 + nx])

    def norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.data ** 2, axis=0))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.data)))


@dataclass(frozen=True, eq=False)
class MatrixField:
    """
    rows x cols components; data has shape (rows, cols, ny, nx).
    A symmetric 2x2 field stores one off-diagonal array used for both slots.
    """
    grid: Grid2
    data: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim != 4:
            raise BadInputError(f"MatrixField: expected (r, c, ny, nx) data, got {arr.shape}")
        arr = _frozen_array(arr, arr.shape[:2] + self.grid.shape, "MatrixField")
        if self.symmetric:
            if arr.shape[:2] != (2, 2):
                raise BadInputError("only 2x2 matrix fields can carry the symmetric flag")
            if not np.array_equal(arr[0, 1], arr[1, 0]):
                raise BadInputError("symmetric MatrixField with differing off-diagonals")
        object.__setattr__(self, "data", arr)

    @classmethod
    def symmetric2(cls, grid: Grid2, a11, a12, a22) -> "MatrixField":
        a12 = np.asarray(a12, dtype=float)
        return cls(grid, np.array([[a11, a12], [a12, a22]], dtype=float), symmetric=True)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def entry(self, r: int, c: int) -> ScalarField:
        return ScalarField(self.grid, self.data[r, c])

    def sub(self, i0: int, j0: int, nx: int, ny: int) -> "MatrixField":
        g = self.grid.sub(i0, j0, nx, ny)
        return MatrixField(g, self.data[:, :, j0:j0 + ny, i0:i0 + nx], self.symmetric)

    def as_vector(self) -> VectorField:
        """Row-major flattening: component r*cols + c."""
        return VectorField(self.grid, self.data.reshape((-1,) + self.grid.shape))

    def frobenius(self) -> np.ndarray:
        return np.sqrt(np.sum(self.data ** 2, axis=(0, 1)))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.data)))


def _raw(other):
    if isinstance(other, ScalarField):
        return other.values
    return other


# ── Sub-grid helpers ──────────────────────────────────────────────────────────

def trim(field, margin: int):
    """Drop `margin` nodes on every side."""
    g = field.grid
    if margin == 0:
        return field
    nx, ny = g.nx - 2 * margin, g.ny - 2 * margin
    if nx < MIN_NODES or ny < MIN_NODES:
        raise BadInputError(
            f"trimming {margin} nodes leaves a {nx}x{ny} grid; need a larger domain")
    return field.sub(margin, margin, nx, ny)


def restrict(field, box: tuple[float, float, float, float]):
    """Largest sub-grid of nodes lying inside `box`."""
    g = field.grid
    bx0, by0, bx1, by1 = box
    tol = 1e-9
    i0 = max(0, math.ceil((bx0 - g.x0) / g.hx - tol))
    j0 = max(0, math.ceil((by0 - g.y0) / g.hy - tol))
    i1 = min(g.nx - 1, math.floor((bx1 - g.x0) / g.hx + tol))
    j1 = min(g.ny - 1, math.floor((by1 - g.y0) / g.hy + tol))
    if i1 - i0 + 1 < MIN_NODES or j1 - j0 + 1 < MIN_NODES:
        raise BadInputError(f"box {box} holds fewer than {MIN_NODES} nodes per axis")
    return field.sub(i0, j0, i1 - i0 + 1, j1 - j0 + 1)


def align(field, grid: Grid2):
    """Restrict `field` to the nodes of `grid`, which must be a sub-grid of it."""
    i0, j0 = grid.offset_in(field.grid)
    return field.sub(i0, j0, grid.nx, grid.ny)
