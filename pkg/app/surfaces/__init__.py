from app.surfaces.schemas import SurfaceSpec, SurfaceTag, GRAPH_PROFILES, tag_schemas
from app.surfaces.corpus import (
    ImmersionField, SurfaceOracle, generate, rigid_motion, oracle_second_form, default_domain,
)
from app.surfaces.metric import pullback_metric, isometry_defect
