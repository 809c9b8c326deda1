"""Action clips and story proposal generation.

A story script expands into executable story parameters: one pre-recorded
action clip paired with one route.  Locomotion verbs get M alternative
routes to the target; everything else plays in place at the spawn position.
Clips are metadata only (duration, posture keys); the schematic renderer
needs no skeletal data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from .navgrid import OccupancyGrid, Path, build_grid, in_place_path, plan_paths
from .scene import AssetRegistry, SceneGraph, NodeKind, SchemaError, resolve_target
from .scripts import StoryScript

CLIP_SCHEMA_VERSION = 1
DEFAULT_FPS = 25.0


class UnknownVerb(Exception):
    pass


class FrameOutOfRange(IndexError):
    pass


@dataclass(frozen=True)
class PostureKey:
    frame: int
    root_height_m: float
    posture_label: str
    facing_offset_rad: float = 0.0


@dataclass(frozen=True)
class ActionClip:
    key: str
    verb: str
    duration_frames: int
    locomotion: bool
    posture_track: tuple[PostureKey, ...]

    def __post_init__(self):
        if self.duration_frames < 1:
            raise ValueError(f"clip {self.key!r} must last at least one frame")
        if not self.posture_track or self.posture_track[0].frame != 0:
            raise ValueError(f"clip {self.key!r} posture track must start at frame 0")
        frames = [k.frame for k in self.posture_track]
        if frames != sorted(frames):
            raise ValueError(f"clip {self.key!r} posture keys must be sorted")

    def posture_at(self, t: int) -> PostureKey:
        active = self.posture_track[0]
        for key in self.posture_track:
            if key.frame <= t:
                active = key
            else:
                break
        return active


class ClipPool:
    """Pre-recorded clips in file order, indexed by verb."""

    def __init__(self, clips: list[ActionClip]):
        self.clips = list(clips)
        self.by_verb: dict[str, list[ActionClip]] = {}
        for clip in self.clips:
            self.by_verb.setdefault(clip.verb, []).append(clip)

    def verbs(self) -> list[str]:
        return sorted(self.by_verb)


def load_clip_pool(path: str | FsPath) -> ClipPool:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != CLIP_SCHEMA_VERSION:
        raise SchemaError(f"unsupported clip pool schema_version {doc.get('schema_version')!r}")
    clips = []
    for rec in doc["clips"]:
        track = tuple(PostureKey(frame=int(k["frame"]),
                                 root_height_m=float(k.get("root_height_m", 0.9)),
                                 posture_label=k.get("posture_label", "stand"),
                                 facing_offset_rad=float(k.get("facing_offset_rad", 0.0)))
                      for k in rec.get("posture_track",
                                       [{"frame": 0, "posture_label": "stand"}]))
        clips.append(ActionClip(key=rec["key"], verb=rec["verb"],
                                duration_frames=int(rec["duration_frames"]),
                                locomotion=bool(rec.get("locomotion", False)),
                                posture_track=track))
    return ClipPool(clips)


def retrieve_clips(verb: str, pool: ClipPool, N: int) -> list[ActionClip]:
    """The first min(N, available) clips for a verb, in pool file order."""
    if verb not in pool.by_verb:
        raise UnknownVerb(f"no clips registered for verb {verb!r}")
    return pool.by_verb[verb][:N]


@dataclass(frozen=True)
class StoryParams:
    """One executable story proposal: an action clip bound to a route."""

    clip: ActionClip
    path: Path
    character_id: str
    height_m: float
    capsule_radius_m: float
    base_facing: float = 0.0

    def __post_init__(self):
        if len(self.path) != self.clip.duration_frames:
            raise ValueError(
                f"path length {len(self.path)} != clip duration {self.clip.duration_frames}")


@dataclass(frozen=True)
class CharacterState:
    position: np.ndarray
    facing_rad: float
    posture_label: str
    height_m: float


def spawn_position(scene: SceneGraph, character_id: str) -> np.ndarray:
    """Spawn point for a character: its named spawn node if present, else the
    first spawn point by id, else the scene root."""
    named = f"spawn_{character_id}"
    if named in scene.nodes and scene.nodes[named].kind is NodeKind.SPAWN_POINT:
        pos = scene.world_position(named)
    else:
        spawns = sorted(scene.nodes_of_kind(NodeKind.SPAWN_POINT), key=lambda n: n.id)
        if spawns:
            pos = scene.world_position(spawns[0].id)
        else:
            pos = scene.world_position(scene.root_id)
    pos[2] = 0.0
    return pos


def propose_story(script: StoryScript, scene: SceneGraph, registry: AssetRegistry,
                  N: int = 3, M: int = 3, spawn=None, facing: float = 0.0,
                  grid: OccupancyGrid | None = None, cell_size_m: float = 0.1,
                  frame_rate: float = DEFAULT_FPS) -> list[StoryParams]:
    """Expand a validated story script into its proposal set.

    Locomotion clips pair with up to M routes to the target; in-place clips
    get a single constant path at the spawn.
    """
    char = registry.characters[script.character_id]
    clips = retrieve_clips(script.action_verb, registry.pool, N)
    start = np.asarray(spawn, dtype=float) if spawn is not None \
        else spawn_position(scene, script.character_id)

    needs_routes = any(c.locomotion for c in clips)
    target = None
    if needs_routes:
        if script.target_ref is None:
            raise ValueError(f"verb {script.action_verb!r} needs a target to move to")
        target = resolve_target(scene, script.target_ref)
        if grid is None:
            grid = build_grid(scene, cell_size_m, char.capsule_radius_m)

    proposals: list[StoryParams] = []
    route_cache: dict[int, list[Path]] = {}
    for clip in clips:
        T = clip.duration_frames
        if clip.locomotion:
            if T not in route_cache:
                route_cache[T] = plan_paths(grid, start, target, M, T,
                                            frame_rate=frame_rate,
                                            retarget_blocked_goal=True)
            routes = route_cache[T]
        else:
            routes = [in_place_path(start, T, frame_rate)]
        for route in routes:
            proposals.append(StoryParams(clip=clip, path=route,
                                         character_id=script.character_id,
                                         height_m=char.height_m,
                                         capsule_radius_m=char.capsule_radius_m,
                                         base_facing=facing))
    return proposals


def character_at(s: StoryParams, t: int) -> CharacterState:
    """Character state at an integer frame: path waypoint, tangent facing
    (the last frame reuses the previous tangent), active posture key."""
    T = s.clip.duration_frames
    if not 0 <= t < T:
        raise FrameOutOfRange(f"frame {t} outside [0, {T})")
    wp = s.path.waypoints
    facing = s.base_facing
    # Last nonzero forward difference at or before t.
    for i in range(min(t, T - 2), -1, -1):
        d = wp[i + 1] - wp[i]
        if math.hypot(d[0], d[1]) > 1e-12:
            facing = math.atan2(d[1], d[0])
            break
    key = s.clip.posture_at(t)
    return CharacterState(position=wp[t].copy(),
                          facing_rad=facing + key.facing_offset_rad,
                          posture_label=key.posture_label,
                          height_m=s.height_m)
