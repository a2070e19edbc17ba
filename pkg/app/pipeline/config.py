"""Experiment configuration: one JSON document fully describes a run."""
import json
import logging
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from app.errors import BadInputError
from app.fields.grid import Grid2
from app.mollify.kernel import ScaleLadder
from app.ruling.developability import RulingConfig
from app.surfaces.corpus import default_domain
from app.surfaces.schemas import SurfaceSpec

logger = logging.getLogger(__name__)

POTENTIAL_MIN_ALPHA = 2.0 / 3.0


class DegreeConfig(BaseModel):
    samples: int = 50
    per_side: int = 64
    deltas: Optional[list[float]] = None      # default: fractions of the region size

    @field_validator("samples", "per_side")
    @classmethod
    def positive(cls, v):
        assert v >= 1, f"must be >= 1, got {v}"
        return v


class GateConfig(BaseModel):
    """Pass/fail thresholds; tightening any of them can only turn passes into fails."""
    isometry_max: float = 1e-8
    rates: bool = True
    codazzi_max: float = 1e-3
    gauss_pairing_max: float = 1e-4
    hessian_gap_factor: float = 1.0       # × max(10h², 5ε²)·‖A^ε‖₀
    hessian_gap_floor: float = 1e-10
    ma_max: float = 1e-4
    degree_fails_max: int = 0
    require_developable: bool = True
    require_agreement: bool = True


class ExperimentConfig(BaseModel):
    name: str = "experiment"
    surface: SurfaceSpec
    domain: Optional[tuple[float, float, float, float]] = None
    n: int = 129
    alpha: float = POTENTIAL_MIN_ALPHA
    ladder: str = "0.125,4,0.5"
    eps: Optional[float] = None               # working scale; default: second rung of the ladder
    battery_order: int = 4
    holder_threshold: float = 1.0
    ruling: RulingConfig = Field(default_factory=RulingConfig)
    degree: DegreeConfig = Field(default_factory=DegreeConfig)
    gates: GateConfig = Field(default_factory=GateConfig)
    seed: int = 0
    out_dir: Optional[str] = None
    threads: Optional[int] = None

    @field_validator("n")
    @classmethod
    def enough_nodes(cls, v):
        assert v >= 17, f"n must be >= 17, got {v}"
        return v

    @field_validator("alpha")
    @classmethod
    def holder_exponent(cls, v):
        assert 0.5 < v < 1, f"alpha must lie in (1/2, 1), got {v}"
        return v

    @field_validator("ladder")
    @classmethod
    def parsable_ladder(cls, v):
        ScaleLadder.parse(v)
        return v

    @model_validator(mode="after")
    def scales_resolve(self):
        if self.alpha < POTENTIAL_MIN_ALPHA - 1e-12:
            logger.warning("[config] alpha=%.4g < 2/3: the potential gate will fail", self.alpha)
        grid = self.grid()
        self.scale_ladder().check(grid)
        eps = self.working_eps()
        assert eps >= 2 * grid.h * (1 - 1e-12), f"eps={eps:.4g} below 2h={2 * grid.h:.4g}"
        return self

    def box(self) -> tuple[float, float, float, float]:
        return tuple(self.domain) if self.domain is not None else default_domain(self.surface)

    def grid(self) -> Grid2:
        return Grid2.from_box(*self.box(), self.n)

    def scale_ladder(self) -> ScaleLadder:
        return ScaleLadder.parse(self.ladder)

    def working_eps(self) -> float:
        return self.eps if self.eps is not None else self.scale_ladder().scales[1]


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise BadInputError(f"no such config file: {path}")
    try:
        return ExperimentConfig.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except json.JSONDecodeError as e:
        raise BadInputError(f"{path}: not valid JSON ({e})")
    except ValidationError as e:
        raise BadInputError(f"{path}: invalid config\n{e}")


def dump_config(config: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(config.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path
