"""Shot features for the ranking model.

Each shot is summarized by 8 sampled frames; every frame contributes a 32x32
luminance grid rendered straight at that resolution plus three geometric
scalars (fill ratio, center offset, camera speed).  Two views are extracted
per shot for the contrastive objective: the segment midpoints and the
segment left edges, which are provably disjoint once T >= 16 frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .raster import render_frame
from .shots import ShotProposal, sample_indices
from .story import character_at

LUMA_SIDE = 32
FRAME_SLOTS = 8
FEATURE_DIM = LUMA_SIDE * LUMA_SIDE + 3

_FILL_CAP = 5.0
_SPEED_CAP_MPS = 5.0


@dataclass
class ShotFeatures:
    view_a: np.ndarray  # (8, FEATURE_DIM) float32, segment midpoints
    view_b: np.ndarray  # (8, FEATURE_DIM) float32, segment left edges
    views_overlap: bool


def view_indices(T: int, k: int = FRAME_SLOTS) -> tuple[list[int], list[int], bool]:
    """Frame indices for the two views and whether they had to overlap.

    View A samples segment midpoints, view B is offset back by half a stride
    (the segment left edges); the pair shares no frame when T >= 2k.
    """
    if T < 1:
        raise ValueError("empty shot")
    k_eff = min(k, T)
    a = sample_indices(T, k_eff)
    b = [min(int(math.floor(i * T / k_eff)), T - 1) for i in range(k_eff)]
    if k_eff < k:  # repeat last frame into the spare slots
        a = a + [a[-1]] * (k - k_eff)
        b = b + [b[-1]] * (k - k_eff)
    overlap = bool(set(a) & set(b))
    return a, b, overlap


def _frame_vector(p: ShotProposal, t: int, cache: dict[int, np.ndarray]) -> np.ndarray:
    if t not in cache:
        state = character_at(p.story, t)
        frame = render_frame(p.scene, state, p.camera.pose(t), (LUMA_SIDE, LUMA_SIDE),
                             p.story.capsule_radius_m)
        luma = frame.pixels.astype(np.float32).mean(axis=2).reshape(-1) / 255.0
        cache[t] = luma
    luma = cache[t]
    fill = min(float(p.metrics.fill_ratio[t]), _FILL_CAP) / _FILL_CAP
    center = float(p.metrics.center_offset[t])
    speed = min(float(p.metrics.camera_speed[t]), _SPEED_CAP_MPS) / _SPEED_CAP_MPS
    return np.concatenate([luma, np.float32([fill, center, speed])])


def extract_features(p: ShotProposal) -> ShotFeatures:
    """Deterministic two-view features; overlapping views are flagged when the
    clip is too short for disjoint 8-frame sets."""
    idx_a, idx_b, overlap = view_indices(p.duration)
    cache: dict[int, np.ndarray] = {}
    view_a = np.stack([_frame_vector(p, t, cache) for t in idx_a]).astype(np.float32)
    view_b = np.stack([_frame_vector(p, t, cache) for t in idx_b]).astype(np.float32)
    return ShotFeatures(view_a=view_a, view_b=view_b, views_overlap=overlap)
