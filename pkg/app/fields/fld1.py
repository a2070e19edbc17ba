"""
FLD1 field files.

One UTF-8 JSON document per field:

  {"magic": "FLD1", "nx", "ny", "x0", "y0", "hx", "hy", "components",
   "encoding": "b64le-f64", "data"}

`data` is base64 of components·ny·nx little-endian float64 values, flat index
(c·ny + j)·nx + i, i.e. the C-order bytes of a (components, ny, nx) array.
"""
import base64
import binascii
import json
import logging
from pathlib import Path

import numpy as np

from app.errors import BadInputError
from app.fields.grid import Grid2, MatrixField, ScalarField, VectorField

logger = logging.getLogger(__name__)

MAGIC = "FLD1"
ENCODING = "b64le-f64"
_HEADER_KEYS = ("nx", "ny", "x0", "y0", "hx", "hy", "components")


def to_document(field) -> dict:
    g = field.grid
    if isinstance(field, ScalarField):
        data = field.values[None]
    elif isinstance(field, VectorField):
        data = field.data
    elif isinstance(field, MatrixField):
        data = field.as_vector().data
    else:
        raise BadInputError(f"cannot encode {type(field).__name__} as FLD1")
    payload = np.ascontiguousarray(data, dtype="<f8").tobytes()
    return {
        "magic": MAGIC,
        "nx": g.nx, "ny": g.ny,
        "x0": g.x0, "y0": g.y0, "hx": g.hx, "hy": g.hy,
        "components": int(data.shape[0]),
        "encoding": ENCODING,
        "data": base64.b64encode(payload).decode("ascii"),
    }


def from_document(doc: dict):
    """ScalarField for one component, VectorField otherwise."""
    if not isinstance(doc, dict):
        raise BadInputError("FLD1 document must be a JSON object")
    if doc.get("magic") != MAGIC:
        raise BadInputError(f"bad magic {doc.get('magic')!r}, expected {MAGIC!r}")
    if doc.get("encoding") != ENCODING:
        raise BadInputError(f"unsupported encoding {doc.get('encoding')!r}, expected {ENCODING!r}")
    missing = [k for k in _HEADER_KEYS + ("data",) if k not in doc]
    if missing:
        raise BadInputError(f"FLD1 header missing {missing}")

    grid = Grid2(int(doc["nx"]), int(doc["ny"]), float(doc["x0"]), float(doc["y0"]),
                 float(doc["hx"]), float(doc["hy"]))
    k = int(doc["components"])
    if k < 1:
        raise BadInputError(f"FLD1 components must be >= 1, got {k}")
    try:
        raw = base64.b64decode(doc["data"], validate=True)
    except (binascii.Error, ValueError, TypeError) as e:
        raise BadInputError(f"FLD1 payload is not valid base64: {e}")
    expected = 8 * k * grid.size
    if len(raw) != expected:
        raise BadInputError(f"FLD1 payload has {len(raw)} bytes, expected {expected} "
                            f"({k} x {grid.ny} x {grid.nx} float64)")
    data = np.frombuffer(raw, dtype="<f8").astype(float).reshape((k,) + grid.shape)
    if k == 1:
        return ScalarField(grid, data[0])
    return VectorField(grid, data)


def write_fld1(path, field) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_document(field)), encoding="utf-8")
    logger.debug("[fld1] wrote %s", path)
    return path


def read_fld1(path):
    path = Path(path)
    if not path.is_file():
        raise BadInputError(f"no such field file: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise BadInputError(f"{path}: not a UTF-8 JSON document ({e})")
    return from_document(doc)


def read_matrix(path, rows: int, cols: int) -> MatrixField:
    """Read a row-major rows·cols component file back into a MatrixField."""
    f = read_fld1(path)
    data = f.values[None] if isinstance(f, ScalarField) else f.data
    if data.shape[0] != rows * cols:
        raise BadInputError(f"{path}: {data.shape[0]} components, expected {rows}x{cols}")
    m = data.reshape((rows, cols) + f.grid.shape)
    symmetric = rows == cols == 2 and np.array_equal(m[0, 1], m[1, 0])
    return MatrixField(f.grid, m, symmetric)
