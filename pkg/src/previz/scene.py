"""Hierarchical scene graphs and the asset registry.

A scene is a tree of boxes: a single root of kind ``scene``, rooms, objects
and spawn points.  Node positions are local to the parent; world positions
compose root-to-node.  Documents are JSON with a ``schema_version`` gate
(see ``docs/formats.md``).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SCENE_SCHEMA_VERSION = 1
REGISTRY_SCHEMA_VERSION = 1


class SceneError(Exception):
    pass


class SchemaError(SceneError):
    pass


class DuplicateIdError(SceneError):
    pass


class CycleDetectedError(SceneError):
    pass


class UnknownTargetError(SceneError):
    pass


class NodeKind(enum.Enum):
    SCENE = "scene"
    ROOM = "room"
    OBJECT = "object"
    SPAWN_POINT = "spawn_point"


@dataclass(frozen=True)
class SceneNode:
    id: str
    kind: NodeKind
    position: tuple[float, float, float]
    half_extents: tuple[float, float, float]
    children: tuple[str, ...] = ()


class SceneGraph:
    """Validated scene tree with world-frame queries."""

    def __init__(self, scene_id: str, nodes: list[SceneNode], root_id: str):
        self.id = scene_id
        self.nodes: dict[str, SceneNode] = {}
        for node in nodes:
            if node.id in self.nodes:
                raise DuplicateIdError(f"duplicate node id {node.id!r}")
            if any(h < 0 for h in node.half_extents):
                raise SchemaError(f"node {node.id!r} has negative half_extents")
            self.nodes[node.id] = node
        if root_id not in self.nodes:
            raise SchemaError(f"root node {root_id!r} not defined")
        self.root_id = root_id
        self._parent = self._link_parents()
        self._world_pos: dict[str, np.ndarray] = {}

    def _link_parents(self) -> dict[str, str]:
        parent: dict[str, str] = {}
        for node in self.nodes.values():
            for child_id in node.children:
                if child_id not in self.nodes:
                    raise SchemaError(f"node {node.id!r} lists unknown child {child_id!r}")
                if child_id in parent:
                    raise CycleDetectedError(f"node {child_id!r} has two parents")
                if child_id == self.root_id:
                    raise CycleDetectedError(f"root {child_id!r} appears as a child")
                parent[child_id] = node.id
        # Every non-root node must hang off the root, with no cycles.
        for node_id in self.nodes:
            seen = set()
            cursor = node_id
            while cursor != self.root_id:
                if cursor in seen:
                    raise CycleDetectedError(f"cycle through node {cursor!r}")
                seen.add(cursor)
                if cursor not in parent:
                    raise SchemaError(f"node {cursor!r} is not reachable from the root")
                cursor = parent[cursor]
        return parent

    def __len__(self) -> int:
        return len(self.nodes)

    def world_position(self, node_id: str) -> np.ndarray:
        """World-frame position: local offsets composed along the ancestor chain."""
        if node_id not in self.nodes:
            raise UnknownTargetError(f"no node {node_id!r} in scene {self.id!r}")
        cached = self._world_pos.get(node_id)
        if cached is not None:
            return cached.copy()
        pos = np.array(self.nodes[node_id].position, dtype=float)
        cursor = node_id
        while cursor != self.root_id:
            cursor = self._parent[cursor]
            pos += np.asarray(self.nodes[cursor].position, dtype=float)
        self._world_pos[node_id] = pos
        return pos.copy()

    def nodes_of_kind(self, kind: NodeKind) -> list[SceneNode]:
        return [n for n in self.nodes.values() if n.kind is kind]

    def object_footprints(self) -> list[tuple[str, np.ndarray, np.ndarray]]:
        """World-frame ground footprints ``(id, min_xy, max_xy)`` of object nodes."""
        boxes = []
        for node in self.nodes_of_kind(NodeKind.OBJECT):
            center = self.world_position(node.id)[:2]
            half = np.asarray(node.half_extents[:2], dtype=float)
            boxes.append((node.id, center - half, center + half))
        return boxes

    def bounds_xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Ground-plane extent of the root box."""
        root = self.nodes[self.root_id]
        center = self.world_position(root.id)[:2]
        half = np.asarray(root.half_extents[:2], dtype=float)
        return center - half, center + half


def resolve_target(scene: SceneGraph, target_ref: str) -> np.ndarray:
    """World-frame position of a named node."""
    return scene.world_position(target_ref)


def scene_from_dict(doc: dict) -> SceneGraph:
    if not isinstance(doc, dict):
        raise SchemaError("scene document must be a mapping")
    version = doc.get("schema_version")
    if version != SCENE_SCHEMA_VERSION:
        raise SchemaError(f"unsupported scene schema_version {version!r}")
    for key in ("id", "root", "nodes"):
        if key not in doc:
            raise SchemaError(f"scene document missing {key!r}")
    nodes = []
    for rec in doc["nodes"]:
        try:
            nodes.append(SceneNode(
                id=rec["id"],
                kind=NodeKind(rec["kind"]),
                position=tuple(float(v) for v in rec["position"]),
                half_extents=tuple(float(v) for v in rec["half_extents"]),
                children=tuple(rec.get("children", ())),
            ))
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError(f"bad node record {rec!r}: {exc}") from exc
        if len(nodes[-1].position) != 3 or len(nodes[-1].half_extents) != 3:
            raise SchemaError(f"node {rec['id']!r}: position/half_extents must be 3-vectors")
    return SceneGraph(doc["id"], nodes, doc["root"])


def load_scene(path: str | Path) -> SceneGraph:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"scene file {path}: {exc}") from exc
    return scene_from_dict(doc)


@dataclass(frozen=True)
class CharacterSpec:
    height_m: float = 1.6
    capsule_radius_m: float = 0.2


@dataclass(frozen=True)
class VerbSpec:
    locomotion: bool
    clips: tuple[str, ...]


class AssetRegistry:
    """Characters, verbs and scenes available to a project."""

    def __init__(self, characters: dict[str, CharacterSpec], verbs: dict[str, VerbSpec],
                 scenes: dict[str, Path], clip_pool_path: Path | None = None):
        for name, spec in characters.items():
            if spec.height_m <= 0:
                raise SchemaError(f"character {name!r} must have positive height")
        self.characters = characters
        self.verbs = verbs
        self.scenes = scenes
        self.clip_pool_path = clip_pool_path
        self._scene_cache: dict[str, SceneGraph] = {}
        self._pool = None

    def scene(self, scene_id: str) -> SceneGraph:
        if scene_id not in self.scenes:
            raise UnknownTargetError(f"no scene {scene_id!r} registered")
        if scene_id not in self._scene_cache:
            self._scene_cache[scene_id] = load_scene(self.scenes[scene_id])
        return self._scene_cache[scene_id]

    @property
    def pool(self):
        if self._pool is None:
            if self.clip_pool_path is None:
                raise SchemaError("registry has no clip pool configured")
            from .story import load_clip_pool
            self._pool = load_clip_pool(self.clip_pool_path)
        return self._pool

    def has_target(self, target_ref: str) -> bool:
        """True when any registered scene contains a node with this id."""
        return any(target_ref in self.scene(sid).nodes for sid in self.scenes)

    def is_locomotion(self, verb: str) -> bool:
        spec = self.verbs.get(verb)
        return spec is not None and spec.locomotion


def load_registry(path: str | Path) -> AssetRegistry:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"registry file {path}: {exc}") from exc
    if doc.get("schema_version") != REGISTRY_SCHEMA_VERSION:
        raise SchemaError(f"unsupported registry schema_version {doc.get('schema_version')!r}")
    base = path.parent
    characters = {
        name: CharacterSpec(
            height_m=float(rec.get("height_m", 1.6)),
            capsule_radius_m=float(rec.get("capsule_radius_m", 0.2)),
        )
        for name, rec in doc.get("characters", {}).items()
    }
    verbs = {
        verb: VerbSpec(locomotion=bool(rec.get("locomotion", False)),
                       clips=tuple(rec.get("clips", ())))
        for verb, rec in doc.get("verbs", {}).items()
    }
    scenes = {sid: base / rel for sid, rel in doc.get("scenes", {}).items()}
    pool_rel = doc.get("clip_pool")
    pool_path = base / pool_rel if pool_rel else None
    return AssetRegistry(characters, verbs, scenes, pool_path)
