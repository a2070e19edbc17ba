"""Validated surface specifications, one parameter model per corpus tag."""
from enum import Enum
import math
from typing import Any, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from app.errors import BadInputError

GRAPH_PROFILES = ("ridge", "paraboloid", "saddle", "cubic", "wave")


class SurfaceTag(str, Enum):
    PLANE = "plane"
    CYLINDER = "cylinder"
    CONE = "cone"
    TANGENT_DEVELOPABLE = "tangent_developable"
    GRAPH = "graph"
    SPHERE_PATCH = "sphere_patch"
    CRUMPLED_FOLD = "crumpled_fold"


class PlaneParams(BaseModel):
    P: list[list[float]] = [[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]   # 3x2, columns ∂₁u, ∂₂u
    b: list[float] = [0.0, 0.0, 0.0]

    @field_validator("P")
    @classmethod
    def three_by_two(cls, v):
        assert len(v) == 3 and all(len(row) == 2 for row in v), "P must be 3x2"
        c1 = [row[0] for row in v]
        c2 = [row[1] for row in v]
        cross = (c1[1] * c2[2] - c1[2] * c2[1], c1[2] * c2[0] - c1[0] * c2[2],
                 c1[0] * c2[1] - c1[1] * c2[0])
        assert math.hypot(*cross) > 1e-8, "P must have rank 2"
        return v

    @field_validator("b")
    @classmethod
    def three_vector(cls, v):
        assert len(v) == 3, "b must have 3 entries"
        return v


class CylinderParams(BaseModel):
    r: float = 1.0

    @field_validator("r")
    @classmethod
    def positive_radius(cls, v):
        assert v > 0, f"radius must be positive, got {v}"
        return v


class ConeParams(BaseModel):
    apex: tuple[float, float] = (0.5, -0.5)
    half_angle: float = math.pi / 4
    margin_cells: int = 5

    @field_validator("half_angle")
    @classmethod
    def opening_range(cls, v):
        assert 0 < v < math.pi / 2, f"half_angle must lie in (0, pi/2), got {v}"
        return v


class TangentDevelopableParams(BaseModel):
    a: float = 1.0          # helix radius
    b: float = 0.5          # helix pitch / 2π
    margin_cells: int = 5

    @field_validator("a")
    @classmethod
    def positive_radius(cls, v):
        assert v > 0, f"helix radius must be positive, got {v}"
        return v

    @field_validator("b")
    @classmethod
    def nonzero_pitch(cls, v):
        assert v != 0, "helix pitch must be nonzero"
        return v


class GraphParams(BaseModel):
    profile: str = "ridge"
    scale: float = 1.0

    @field_validator("profile")
    @classmethod
    def known_profile(cls, v):
        assert v in GRAPH_PROFILES, f"unknown graph profile {v!r}; choose from {GRAPH_PROFILES}"
        return v


class SpherePatchParams(BaseModel):
    R: float = 1.0

    @field_validator("R")
    @classmethod
    def positive_radius(cls, v):
        assert v > 0, f"sphere radius must be positive, got {v}"
        return v


class CrumpledFoldParams(BaseModel):
    point: tuple[float, float] = (0.5, 0.5)       # a point on the crease
    direction: float = math.pi / 2                # crease direction angle
    angle: float = math.pi / 3                    # rotation of the far side about the crease

    @field_validator("angle")
    @classmethod
    def fold_range(cls, v):
        assert 0 < v < math.pi, f"fold angle must lie in (0, pi), got {v}"
        return v


PARAM_MODELS: dict[SurfaceTag, type[BaseModel]] = {
    SurfaceTag.PLANE: PlaneParams,
    SurfaceTag.CYLINDER: CylinderParams,
    SurfaceTag.CONE: ConeParams,
    SurfaceTag.TANGENT_DEVELOPABLE: TangentDevelopableParams,
    SurfaceTag.GRAPH: GraphParams,
    SurfaceTag.SPHERE_PATCH: SpherePatchParams,
    SurfaceTag.CRUMPLED_FOLD: CrumpledFoldParams,
}


class SurfaceSpec(BaseModel):
    tag: SurfaceTag
    params: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def params_fit_tag(self):
        self.params = PARAM_MODELS[self.tag](**self.params).model_dump()
        return self

    def parsed(self) -> BaseModel:
        return PARAM_MODELS[self.tag](**self.params)

    @classmethod
    def from_cli(cls, tag: str, pairs: Optional[list[str]] = None) -> "SurfaceSpec":
        """`--param r=1.0 --param apex=0.5,-0.5` style key=value strings."""
        params: dict[str, Any] = {}
        for item in pairs or []:
            key, sep, raw = item.partition("=")
            if not sep:
                raise BadInputError(f"bad --param {item!r}, expected key=value")
            if "," in raw:
                params[key.strip()] = [float(x) for x in raw.split(",")]
            else:
                try:
                    params[key.strip()] = float(raw)
                except ValueError:
                    params[key.strip()] = raw.strip()
        return cls(tag=tag, params=params)


def tag_schemas() -> dict[str, dict]:
    return {tag.value: model.model_json_schema() for tag, model in PARAM_MODELS.items()}
