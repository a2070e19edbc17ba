"""
Empirical rates.

Every "Q(ε) = o(ε^β)" statement is checked as a least-squares slope of
log Q against log ε. A fitted slope cannot tell o(·) from O(·), so every
RateFit says so in its serialized form.
"""
from dataclasses import dataclass, field
import logging

import numpy as np

from app.errors import BadInputError

logger = logging.getLogger(__name__)

ZERO_FLOOR = 1e-14
MIN_MEASUREMENTS = 4


@dataclass(frozen=True)
class RateFit:
    scales: tuple[float, ...]
    values: tuple[float, ...]
    exponent: float | None            # None when identically zero
    residual: float
    identically_zero: bool = False
    quantity: str = ""
    required_exponent: float | None = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def passes(self) -> bool:
        if self.identically_zero or self.required_exponent is None:
            return True
        return self.exponent >= self.required_exponent

    def with_requirement(self, required: float | None) -> "RateFit":
        return RateFit(self.scales, self.values, self.exponent, self.residual,
                       self.identically_zero, self.quantity, required, dict(self.extra))

    def to_dict(self) -> dict:
        out = {
            "quantity": self.quantity,
            "exponent": self.exponent,
            "residual": self.residual,
            "scales": list(self.scales),
            "values": list(self.values),
            "identically_zero": self.identically_zero,
            "required_exponent": self.required_exponent,
            "pass": self.passes,
            "little_o_certified": False,
        }
        out.update(self.extra)
        return out


def fit_rate(scales, values, quantity: str = "", required_exponent: float | None = None,
             floor: float = ZERO_FLOOR, min_measurements: int = MIN_MEASUREMENTS,
             **extra) -> RateFit:
    """Values below `floor` count as zero; all-zero ladders are identically zero."""
    scales = tuple(float(s) for s in scales)
    values = tuple(float(v) for v in values)
    if len(scales) != len(values):
        raise BadInputError(f"{len(scales)} scales but {len(values)} measurements")
    if len(values) < min_measurements:
        raise BadInputError(f"rate fit needs at least {min_measurements} measurements, "
                            f"got {len(values)}")
    if any(s <= 0 for s in scales):
        raise BadInputError("scales must be positive")

    v = np.array(values)
    if np.any(v < 0) and np.any(v[v < 0] < -floor):
        raise BadInputError(f"{quantity or 'measurement'}: negative value {v.min():.3e}")
    zero = np.abs(v) < floor
    if zero.all():
        return RateFit(scales, values, None, 0.0, True, quantity, required_exponent, extra)
    if zero.any():
        raise BadInputError(
            f"{quantity or 'measurement'}: {int(zero.sum())} of {v.size} values vanish "
            f"below {floor:g} while others do not; no power law fits")

    x, y = np.log(np.array(scales)), np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.max(np.abs(y - (slope * x + intercept))))
    fit = RateFit(scales, values, float(slope), residual, False, quantity, required_exponent, extra)
    logger.debug("[rates] %s: exponent %.4f residual %.3e", quantity or "fit", slope, residual)
    return fit
