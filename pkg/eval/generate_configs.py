"""
Generate the experiment configs the API and `flatlab run` look up:
- developable members that must pass every gate (plane, cylinder, cone,
  tangent developable)
- a cylinder run below the potential exponent threshold
- non-developable controls (sphere patch, paraboloid graph) that must
  fail the isometry gate
- a crease that is isometric but not C^1 across the fold

  python eval/generate_configs.py
"""
import json
from datetime import date
from pathlib import Path

from app.pipeline.config import ExperimentConfig

EVAL_DIR = Path("eval/configs")

CONFIGS = [
    {"name": "plane", "description": "affine isometry, every residual vanishes",
     "config": {"surface": {"tag": "plane"}}},
    {"name": "cylinder", "description": "unit cylinder, vertical rulings",
     "config": {"surface": {"tag": "cylinder", "params": {"r": 1.0}}, "ladder": "0.2,4,0.5"}},
    {"name": "cylinder_alpha_0.6", "description": "cylinder below the 2/3 threshold",
     "config": {"surface": {"tag": "cylinder", "params": {"r": 1.0}}, "ladder": "0.2,4,0.5",
                "alpha": 0.6}},
    {"name": "cone", "description": "right circular cone, rulings through the apex",
     "config": {"surface": {"tag": "cone"}, "ruling": {"stride": 2, "tol": 1e-3}}},
    {"name": "tangent_developable", "description": "tangent surface of a helix",
     "config": {"surface": {"tag": "tangent_developable", "params": {"a": 1.0, "b": 0.5}},
                "ruling": {"stride": 2, "tol": 1e-3}}},
    {"name": "sphere_patch", "description": "negative control, positive curvature",
     "config": {"surface": {"tag": "sphere_patch", "params": {"R": 1.0}}, "n": 65,
                "ladder": "0.2,4,0.5"}},
    {"name": "graph_paraboloid", "description": "negative control, not an isometry",
     "config": {"surface": {"tag": "graph", "params": {"profile": "paraboloid"}}, "n": 65,
                "ladder": "0.25,4,0.5"}},
    {"name": "crumpled_fold", "description": "folded plane, isometric with a crease",
     "config": {"surface": {"tag": "crumpled_fold"}}},
]


def generate_configs():
    """Validate and write one config file per entry plus the manifest."""
    EVAL_DIR.mkdir(parents=True, exist_ok=True)
    for entry in CONFIGS:
        doc = {"name": entry["name"], **entry["config"]}
        ExperimentConfig.model_validate(doc)
        with open(EVAL_DIR / f"{entry['name']}.json", "w") as f:
            json.dump(doc, f, indent=2)
            f.write("\n")

    manifest = {
        "total_configs": len(CONFIGS),
        "generated_at": date.today().isoformat(),
        "configs": [{"name": e["name"], "description": e["description"]} for e in CONFIGS],
    }
    with open(EVAL_DIR / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")

    print(f"✅ Generated {len(CONFIGS)} configs in {EVAL_DIR}")
    return CONFIGS


if __name__ == "__main__":
    generate_configs()
