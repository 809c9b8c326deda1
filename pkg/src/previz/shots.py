"""Shot execution: metrics, lazy frame rendering, negatives, frame sampling.

A shot proposal binds one story proposal to one camera trajectory.  The
per-frame metrics (fill ratio, centering, camera jerk) come straight from
the projection math, so simulating a shot is cheap; pixels are only rendered
on demand.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .camera import CameraTrajectory
from .raster import Frame, character_center_offset, character_fill_ratio, render_frame
from .scene import SceneGraph
from .story import StoryParams, character_at


class LengthMismatch(ValueError):
    pass


@dataclass
class ShotMetrics:
    fill_ratio: np.ndarray     # (T,)
    center_offset: np.ndarray  # (T,)
    camera_speed: np.ndarray   # (T,) meters/second
    jerk: float                # mean |third difference| of camera position, m/frame^3

    def to_dict(self) -> dict:
        return {
            "fill_ratio_mean": float(np.mean(self.fill_ratio)),
            "fill_ratio_last_over_first": _safe_ratio(self.fill_ratio),
            "center_offset_mean": float(np.mean(self.center_offset)),
            "camera_speed_mean": float(np.mean(self.camera_speed)),
            "jerk": self.jerk,
        }


def _safe_ratio(values: np.ndarray) -> float:
    if len(values) == 0 or values[0] == 0.0:
        return 0.0
    return float(values[-1] / values[0])


def camera_jerk(positions: np.ndarray) -> float:
    """Mean norm of the third difference of the camera position track."""
    if len(positions) < 4:
        return 0.0
    third = np.diff(positions, n=3, axis=0)
    return float(np.mean(np.linalg.norm(third, axis=1)))


@dataclass
class ShotProposal:
    """A renderable candidate shot with its quality measurements."""

    id: str
    scene: SceneGraph
    story: StoryParams
    camera: CameraTrajectory
    size: tuple[int, int]
    metrics: ShotMetrics
    score: float | None = None

    @property
    def duration(self) -> int:
        return len(self.camera)

    def render_frame_at(self, t: int) -> Frame:
        state = character_at(self.story, t)
        return render_frame(self.scene, state, self.camera.pose(t), self.size,
                            self.story.capsule_radius_m)

    @property
    def frames(self) -> list[Frame]:
        """Materialize every frame (prefer render_frame_at for single frames)."""
        return [self.render_frame_at(t) for t in range(self.duration)]


def simulate_shot(scene: SceneGraph, s: StoryParams, c: CameraTrajectory,
                  size: tuple[int, int], shot_id: str = "shot") -> ShotProposal:
    """Execute a (story, camera) pair: per-frame metrics now, pixels lazily."""
    T = s.clip.duration_frames
    if len(c) != T:
        raise LengthMismatch(f"trajectory has {len(c)} poses for a {T}-frame clip")
    fill = np.empty(T)
    center = np.empty(T)
    for t in range(T):
        state = character_at(s, t)
        pose = c.pose(t)
        fill[t] = character_fill_ratio(pose, state, size)
        center[t] = character_center_offset(pose, state, size, s.capsule_radius_m)
    fps = s.path.frame_rate
    if T > 1:
        steps = np.linalg.norm(np.diff(c.positions, axis=0), axis=1) * fps
        speed = np.concatenate([steps, steps[-1:]])
    else:
        speed = np.zeros(1)
    metrics = ShotMetrics(fill_ratio=fill, center_offset=center, camera_speed=speed,
                          jerk=camera_jerk(c.positions))
    return ShotProposal(id=shot_id, scene=scene, story=s, camera=c, size=size,
                        metrics=metrics)


def perturb_negative(c: CameraTrajectory, sigma_pos: float = 0.05,
                     sigma_rot: float = 0.03, seed: int = 0,
                     source_id: str = "") -> CameraTrajectory:
    """Ranker-training negative: independent per-frame noise on position and
    on pitch/yaw.  Focal length and roll stay untouched."""
    if sigma_pos < 0 or sigma_rot < 0:
        raise ValueError("noise magnitudes must be non-negative")
    rng = np.random.default_rng(seed)
    T = len(c)
    positions = c.positions + rng.normal(0.0, sigma_pos, size=(T, 3)) if sigma_pos > 0 \
        else c.positions.copy()
    rotations = c.rotations.copy()
    if sigma_rot > 0:
        rotations[:, 1:] += rng.normal(0.0, sigma_rot, size=(T, 2))
    tag = dataclasses.replace(c.tag, negative_of=source_id or "unknown")
    return CameraTrajectory(positions, rotations, c.focals.copy(), tag)


def sample_indices(T: int, k: int = 8) -> list[int]:
    """Deterministic segment-midpoint frame sampling."""
    if k > T:
        raise ValueError(f"cannot sample {k} frames from {T}")
    return [min(int(math.floor((i + 0.5) * T / k)), T - 1) for i in range(k)]


def sample_frames(p: ShotProposal, k: int = 8) -> list[Frame]:
    return [p.render_frame_at(t) for t in sample_indices(p.duration, k)]


def keyframe_indices(T: int, k: int = 8) -> tuple[int, int, int]:
    """First, middle and last of the k sampled frames."""
    idx = sample_indices(T, min(k, T))
    return idx[0], idx[len(idx) // 2], idx[-1]


def contact_sheet(p: ShotProposal, frame_size: tuple[int, int] | None = None) -> np.ndarray:
    """Three keyframes side by side, as one (H, 3W, 3) uint8 image."""
    size = frame_size or p.size
    panels = []
    for t in keyframe_indices(p.duration):
        state = character_at(p.story, t)
        frame = render_frame(p.scene, state, p.camera.pose(t), size,
                             p.story.capsule_radius_m)
        panels.append(frame.pixels)
    return np.concatenate(panels, axis=1)
