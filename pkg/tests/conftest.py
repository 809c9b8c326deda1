import os

# Keep numerical kernels single-threaded (reproducibility and the stated
# single-thread budget of the ranking acceptance criterion). Must happen
# before numpy loads its BLAS.
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
             "NUMEXPR_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

from pathlib import Path

import pytest

from previz.scene import load_registry, scene_from_dict

ASSETS = Path(__file__).resolve().parents[1] / "src" / "previz" / "assets"


@pytest.fixture(scope="session")
def registry():
    return load_registry(ASSETS / "registry.json")


@pytest.fixture(scope="session")
def apartment(registry):
    return registry.scene("apartment")


@pytest.fixture(scope="session")
def corpus_path():
    return ASSETS / "corpus_10.lines"


def make_scene(objects, size=(10.0, 10.0), spawns=(), scene_id="room"):
    """Flat test scene: a root box with object/spawn children in world coords."""
    half = (size[0] / 2.0, size[1] / 2.0, 1.5)
    root_pos = (size[0] / 2.0, size[1] / 2.0, 1.5)
    children = [o["id"] for o in objects] + [s["id"] for s in spawns]
    nodes = [{"id": scene_id, "kind": "scene", "position": root_pos,
              "half_extents": half, "children": children}]
    for obj in objects:
        local = tuple(p - r for p, r in zip(obj["position"], root_pos))
        nodes.append({"id": obj["id"], "kind": "object", "position": local,
                      "half_extents": obj["half_extents"], "children": []})
    for spawn in spawns:
        local = tuple(p - r for p, r in zip(spawn["position"], root_pos))
        nodes.append({"id": spawn["id"], "kind": "spawn_point", "position": local,
                      "half_extents": (0.0, 0.0, 0.0), "children": []})
    return scene_from_dict({"schema_version": 1, "id": scene_id,
                            "root": scene_id, "nodes": nodes})
