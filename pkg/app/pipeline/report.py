"""
Fixed-column report of a pipeline bundle.

One CSV row per entry of bundle["measurements"]:

  quantity, eps, value, fitted_exponent, required_exponent, pass
"""
import csv
import io
import json
import logging
from pathlib import Path
from typing import Optional, Union

from pydantic import BaseModel, ValidationError

from app.errors import BadInputError

logger = logging.getLogger(__name__)

COLUMNS = ("quantity", "eps", "value", "fitted_exponent", "required_exponent", "pass")


class ReportRow(BaseModel):
    quantity: str
    eps: Optional[float] = None
    value: Union[bool, int, float, str, None] = None
    fitted_exponent: Optional[float] = None
    required_exponent: Optional[float] = None
    passed: Optional[bool] = None

    @classmethod
    def from_measurement(cls, m: dict) -> "ReportRow":
        return cls(**{k: v for k, v in m.items() if k != "pass"}, passed=m.get("pass"))

    def cells(self) -> list[str]:
        return [self.quantity, _cell(self.eps), _cell(self.value), _cell(self.fitted_exponent),
                _cell(self.required_exponent), _cell(self.passed)]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def report_rows(bundle: dict) -> list[ReportRow]:
    if not isinstance(bundle, dict):
        raise BadInputError("a report bundle is a JSON object")
    try:
        return [ReportRow.from_measurement(m) for m in bundle.get("measurements", [])]
    except (ValidationError, TypeError) as e:
        raise BadInputError(f"malformed measurement in bundle: {e}")


def to_csv(rows: list[ReportRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow(row.cells())
    return buf.getvalue()


def to_table(rows: list[ReportRow]) -> str:
    cells = [list(COLUMNS)] + [row.cells() for row in rows]
    widths = [max(len(r[c]) for r in cells) for c in range(len(COLUMNS))]
    lines = ["  ".join(r[c].ljust(widths[c]) for c in range(len(COLUMNS))).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def report(bundle: dict) -> tuple[str, str]:
    """(human-readable table, CSV)."""
    rows = report_rows(bundle)
    return to_table(rows), to_csv(rows)


def load_bundle(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise BadInputError(f"no such bundle: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise BadInputError(f"{path}: not a JSON bundle ({e})")
