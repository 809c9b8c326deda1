"""Schematic ray-cast renderer and closed-form projection helpers.

The sensor model is a full-frame 24 mm vertical equivalent with square
pixels, so the vertical field of view is ``2 * atan(12 / focal_mm)``.  Scene
objects render as shaded boxes, the character as a capsule with a facing
wedge, all depth-buffered.  Rendering is pure: identical inputs give
bit-identical frames.

The same pinhole model drives the analytic shot metrics, so fill ratios and
centering can be computed without rasterizing anything.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .camera import CameraPose, rotation_matrix
from .scene import NodeKind, SceneGraph
from .story import CharacterState

SENSOR_HEIGHT_MM = 24.0

_SKY_TOP = np.array([0.76, 0.82, 0.90])
_SKY_BOTTOM = np.array([0.42, 0.46, 0.54])
_GROUND_A = np.array([0.52, 0.52, 0.50])
_GROUND_B = np.array([0.44, 0.44, 0.42])
_CAPSULE_COLOR = np.array([0.88, 0.66, 0.48])
_WEDGE_COLOR = np.array([0.85, 0.20, 0.16])
_LIGHT_DIR = np.array([0.40824829, 0.40824829, 0.81649658])  # normalized (1,1,2)


@dataclass
class Frame:
    width: int
    height: int
    pixels: np.ndarray  # (H, W, 3) uint8
    depth: np.ndarray   # (H, W) float, inf where nothing was hit


def focal_px(focal_mm: float, height_px: int) -> float:
    """Pixels per unit tangent for the 24 mm-equivalent sensor."""
    return focal_mm * height_px / SENSOR_HEIGHT_MM


def camera_axes(pose: CameraPose) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(forward, right, up) world-frame unit axes."""
    rot = rotation_matrix(pose.roll, pose.pitch, pose.yaw)
    forward, left, up = rot[:, 0], rot[:, 1], rot[:, 2]
    return forward, -left, up


def project_point(pose: CameraPose, point, size: tuple[int, int]):
    """Pixel coordinates and forward depth of a world point, or None when the
    point is not in front of the camera."""
    width, height = size
    fwd, right, up = camera_axes(pose)
    rel = np.asarray(point, dtype=float) - pose.position
    depth = float(rel @ fwd)
    if depth <= 1e-9:
        return None
    f = focal_px(pose.focal_mm, height)
    u = width / 2.0 + f * float(rel @ right) / depth
    v = height / 2.0 - f * float(rel @ up) / depth
    return u, v, depth


def _sphere_extent_1d(pose: CameraPose, center, radius: float, axis: np.ndarray,
                      forward: np.ndarray):
    """Extremes of (d.axis)/(d.forward) over rays d tangent to the sphere.

    Returns (lo, hi), None when the sphere is entirely behind the camera, or
    ``"unbounded"`` when the silhouette wraps past the image plane.
    """
    rel = np.asarray(center, dtype=float) - pose.position
    dist = float(np.linalg.norm(rel))
    if dist <= radius:
        return "unbounded"
    a = rel / dist
    sin_a = radius / dist
    wa = float(forward @ a)
    ua = float(axis @ a)
    if wa <= 0 and wa * wa > sin_a * sin_a:
        return None
    quad_a = wa * wa - sin_a * sin_a
    if quad_a <= 1e-12:
        return "unbounded"
    quad_b = -2.0 * ua * wa
    quad_c = ua * ua - sin_a * sin_a
    disc = quad_b * quad_b - 4.0 * quad_a * quad_c
    disc = max(disc, 0.0)
    root = math.sqrt(disc)
    lo = (-quad_b - root) / (2.0 * quad_a)
    hi = (-quad_b + root) / (2.0 * quad_a)
    return (min(lo, hi), max(lo, hi))


def capsule_extent(pose: CameraPose, base, height_m: float, radius_m: float,
                   size: tuple[int, int]):
    """Unclipped pixel bounding box (u0, u1, v0, v1) of the capsule silhouette.

    The capsule is the convex hull of its two cap spheres, so the projected
    extent is the union of the sphere extents.  Returns None when the whole
    capsule is behind the camera; spans are clamped to +-1e6 px when the
    silhouette is unbounded (camera inside or astride the capsule).
    """
    width, height = size
    fwd, right, up = camera_axes(pose)
    base = np.asarray(base, dtype=float)
    r = min(radius_m, height_m / 2.0)
    centers = [base + np.array([0.0, 0.0, r]),
               base + np.array([0.0, 0.0, height_m - r])]
    f = focal_px(pose.focal_mm, height)
    big = 1e6
    u_spans, v_spans = [], []
    for center in centers:
        horiz = _sphere_extent_1d(pose, center, r, right, fwd)
        vert = _sphere_extent_1d(pose, center, r, up, fwd)
        if horiz is None or vert is None:
            continue
        if horiz == "unbounded" or vert == "unbounded":
            return (-big, big, -big, big)
        u_spans.append((width / 2.0 + f * horiz[0], width / 2.0 + f * horiz[1]))
        v_spans.append((height / 2.0 - f * vert[1], height / 2.0 - f * vert[0]))
    if not u_spans:
        return None
    u0 = min(s[0] for s in u_spans)
    u1 = max(s[1] for s in u_spans)
    v0 = min(s[0] for s in v_spans)
    v1 = max(s[1] for s in v_spans)
    clamp = lambda x: max(-big, min(big, x))
    return clamp(u0), clamp(u1), clamp(v0), clamp(v1)


def character_fill_ratio(pose: CameraPose, char: CharacterState,
                         size: tuple[int, int]) -> float:
    """Projected character height over frame height.

    Pinhole similar triangles at the depth of the character's mid-height
    point: ``focal_mm * height_m / (24 mm * depth)``.  Zero when that point
    is behind the camera.
    """
    center = char.position + np.array([0.0, 0.0, char.height_m / 2.0])
    fwd, _, _ = camera_axes(pose)
    depth = float((center - pose.position) @ fwd)
    if depth <= 1e-9:
        return 0.0
    return pose.focal_mm * char.height_m / (SENSOR_HEIGHT_MM * depth)


def character_center_offset(pose: CameraPose, char: CharacterState,
                            size: tuple[int, int],
                            capsule_radius_m: float = 0.2) -> float:
    """Normalized distance of the visible character region's center from the
    frame center (0 centered, 1 at the frame corner or not visible)."""
    width, height = size
    ext = capsule_extent(pose, char.position, char.height_m, capsule_radius_m, size)
    if ext is None:
        return 1.0
    u0, u1, v0, v1 = ext
    u0c, u1c = max(u0, 0.0), min(u1, float(width))
    v0c, v1c = max(v0, 0.0), min(v1, float(height))
    if u0c >= u1c or v0c >= v1c:
        return 1.0
    cu = (u0c + u1c) / 2.0
    cv = (v0c + v1c) / 2.0
    du = (cu - width / 2.0) / width
    dv = (cv - height / 2.0) / height
    return min(1.0, math.hypot(du, dv) / math.hypot(0.5, 0.5))


def _object_color(object_id: str) -> np.ndarray:
    digest = hashlib.md5(object_id.encode("utf-8")).digest()
    rgb = np.frombuffer(digest[:3], dtype=np.uint8).astype(float) / 255.0
    return 0.35 + 0.5 * rgb


def _ray_grid(pose: CameraPose, size: tuple[int, int]) -> np.ndarray:
    """(H*W, 3) ray directions scaled so the forward component is 1: the ray
    parameter t is then the depth along the camera's forward axis."""
    width, height = size
    fwd, right, up = camera_axes(pose)
    f = focal_px(pose.focal_mm, height)
    us = (np.arange(width) + 0.5 - width / 2.0) / f
    vs = (height / 2.0 - (np.arange(height) + 0.5)) / f
    dirs = (fwd[None, None, :]
            + us[None, :, None] * right[None, None, :]
            + vs[:, None, None] * up[None, None, :])
    return dirs.reshape(-1, 3)


def _hit_aabb(origin, dirs, bmin, bmax):
    """Slab test; returns (t, normals) with t = inf on miss."""
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        t1 = (bmin[None, :] - origin[None, :]) * inv
        t2 = (bmax[None, :] - origin[None, :]) * inv
    t1 = np.nan_to_num(t1, nan=np.inf)
    t2 = np.nan_to_num(t2, nan=-np.inf)
    tmin = np.minimum(t1, t2)
    tmax = np.maximum(t1, t2)
    # A zero direction component parallel to a slab: inside iff origin between.
    parallel = dirs == 0.0
    inside = (origin[None, :] >= bmin[None, :]) & (origin[None, :] <= bmax[None, :])
    tmin = np.where(parallel & inside, -np.inf, tmin)
    tmax = np.where(parallel & inside, np.inf, tmax)
    tmin = np.where(parallel & ~inside, np.inf, tmin)
    tmax = np.where(parallel & ~inside, -np.inf, tmax)
    enter_axis = np.argmax(tmin, axis=1)
    t_enter = np.max(tmin, axis=1)
    t_exit = np.min(tmax, axis=1)
    hit = (t_enter <= t_exit) & (t_exit > 1e-6)
    t = np.where(hit & (t_enter > 1e-6), t_enter, np.inf)
    normals = np.zeros_like(dirs)
    rows = np.arange(len(dirs))
    signs = -np.sign(dirs[rows, enter_axis])
    signs = np.where(signs == 0.0, 1.0, signs)
    normals[rows, enter_axis] = signs
    return t, normals


def _hit_capsule(origin, dirs, base, height_m, radius_m):
    """Vertical capsule intersection: side cylinder plus two cap spheres."""
    r = min(radius_m, height_m / 2.0)
    z_lo = base[2] + r
    z_hi = base[2] + height_m - r
    t_best = np.full(len(dirs), np.inf)
    normals = np.zeros_like(dirs)

    oxy = origin[:2] - base[:2]
    dxy = dirs[:, :2]
    a = np.einsum("ij,ij->i", dxy, dxy)
    b = 2.0 * dxy @ oxy
    c = float(oxy @ oxy) - r * r
    disc = b * b - 4.0 * a * c
    valid = (disc >= 0.0) & (a > 1e-12)
    sq = np.sqrt(np.where(valid, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_cyl = np.where(valid, (-b - sq) / (2.0 * a), np.inf)
    z_at = origin[2] + t_cyl * dirs[:, 2]
    ok = valid & (t_cyl > 1e-6) & (z_at >= z_lo) & (z_at <= z_hi)
    t_best = np.where(ok, t_cyl, t_best)
    if np.any(ok):
        safe_t = np.where(ok, t_cyl, 0.0)
        hit_pts = origin[None, :] + safe_t[:, None] * dirs
        n = hit_pts - np.array([base[0], base[1], 0.0])
        n[:, 2] = 0.0
        norm = np.linalg.norm(n, axis=1, keepdims=True)
        norm = np.where(norm == 0.0, 1.0, norm)
        n = n / norm
        normals = np.where(ok[:, None], n, normals)

    for cz in (z_lo, z_hi):
        center = np.array([base[0], base[1], cz])
        oc = origin - center
        b_s = 2.0 * dirs @ oc
        c_s = float(oc @ oc) - r * r
        a_s = np.einsum("ij,ij->i", dirs, dirs)
        disc_s = b_s * b_s - 4.0 * a_s * c_s
        valid_s = disc_s >= 0.0
        sq_s = np.sqrt(np.where(valid_s, disc_s, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            t_s = np.where(valid_s, (-b_s - sq_s) / (2.0 * a_s), np.inf)
        ok_s = valid_s & (t_s > 1e-6) & (t_s < t_best)
        if np.any(ok_s):
            safe_t = np.where(ok_s, t_s, 0.0)
            hit_pts = origin[None, :] + safe_t[:, None] * dirs
            n = (hit_pts - center[None, :]) / r
            t_best = np.where(ok_s, t_s, t_best)
            normals = np.where(ok_s[:, None], n, normals)
    return t_best, normals


def _hit_oriented_box(origin, dirs, center, half, facing):
    """Box rotated by `facing` about world z: rays are moved into box frame."""
    cf, sf = math.cos(facing), math.sin(facing)
    rot = np.array([[cf, sf, 0.0], [-sf, cf, 0.0], [0.0, 0.0, 1.0]])  # world->box
    o_local = rot @ (origin - center)
    d_local = dirs @ rot.T
    t, normals_local = _hit_aabb(o_local, d_local, -half, half)
    return t, normals_local @ rot


def render_scene_frame(scene: SceneGraph, characters, pose: CameraPose,
                       size: tuple[int, int],
                       capsule_radius_m: float = 0.2) -> Frame:
    """Depth-buffered schematic render of the scene plus any characters."""
    width, height = size
    if width <= 0 or height <= 0:
        raise ValueError("frame size must be positive")
    origin = np.asarray(pose.position, dtype=float)
    dirs = _ray_grid(pose, size)
    n_px = len(dirs)

    # Sky background: vertical gradient.
    rows = (np.arange(height) / max(height - 1, 1))[:, None, None]
    color = (_SKY_TOP[None, None, :] * (1.0 - rows)
             + _SKY_BOTTOM[None, None, :] * rows)
    color = np.broadcast_to(color, (height, width, 3)).reshape(n_px, 3).copy()
    depth = np.full(n_px, np.inf)

    # One-sided ground plane at z=0 (visible from above) with a checker.
    if origin[2] > 0.0:
        dz = dirs[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t_ground = np.where(dz < -1e-12, -origin[2] / dz, np.inf)
        hit = t_ground < depth
        if np.any(hit):
            safe_t = np.where(hit, t_ground, 0.0)
            pts = origin[None, :] + safe_t[:, None] * dirs
            checker = ((np.floor(pts[:, 0]) + np.floor(pts[:, 1])) % 2.0) == 0.0
            ground = np.where(checker[:, None], _GROUND_A[None, :], _GROUND_B[None, :])
            fade = np.clip(1.0 / (1.0 + 0.02 * safe_t[:, None] ** 2), 0.25, 1.0)
            color = np.where(hit[:, None], ground * fade, color)
            depth = np.where(hit, t_ground, depth)

    def _apply(t, normals, base_color):
        nonlocal color, depth
        closer = t < depth
        if not np.any(closer):
            return
        lambert = 0.35 + 0.65 * np.abs(normals @ _LIGHT_DIR)
        shaded = base_color * lambert[:, None]
        color = np.where(closer[:, None], shaded, color)
        depth = np.where(closer, t, depth)

    for node in sorted(scene.nodes_of_kind(NodeKind.OBJECT), key=lambda n: n.id):
        center = scene.world_position(node.id)
        half = np.asarray(node.half_extents, dtype=float)
        t, normals = _hit_aabb(origin, dirs, center - half, center + half)
        _apply(t, normals, _object_color(node.id)[None, :])

    for char in characters:
        t, normals = _hit_capsule(origin, dirs, np.asarray(char.position, dtype=float),
                                  char.height_m, capsule_radius_m)
        _apply(t, normals, _CAPSULE_COLOR[None, :])
        # Facing wedge: a small oriented box protruding from the chest.
        fdir = np.array([math.cos(char.facing_rad), math.sin(char.facing_rad), 0.0])
        wedge_center = (np.asarray(char.position, dtype=float)
                        + fdir * (capsule_radius_m + 0.09)
                        + np.array([0.0, 0.0, 0.62 * char.height_m]))
        t, normals = _hit_oriented_box(origin, dirs, wedge_center,
                                       np.array([0.12, 0.05, 0.05]), char.facing_rad)
        _apply(t, normals, _WEDGE_COLOR[None, :])

    pixels = np.clip(color * 255.0 + 0.5, 0.0, 255.0).astype(np.uint8)
    return Frame(width=width, height=height,
                 pixels=pixels.reshape(height, width, 3),
                 depth=depth.reshape(height, width))


def render_frame(scene: SceneGraph, char_state: CharacterState, pose: CameraPose,
                 size: tuple[int, int], capsule_radius_m: float = 0.2) -> Frame:
    """Single-character shot frame (see render_scene_frame)."""
    return render_scene_frame(scene, [char_state], pose, size, capsule_radius_m)


def render_top_view(scene: SceneGraph, characters, width: int = 480) -> Frame:
    """Exact orthographic top-down schematic of the scene footprint.

    Pixels map linearly to world coordinates over the scene bounds (row 0 is
    the maximum-y edge), so a client can translate clicks into world points
    using only the bounds it got from the scene listing.
    """
    lo, hi = scene.bounds_xy()
    extent = hi - lo
    height = max(1, int(round(width * extent[1] / extent[0])))
    xs = lo[0] + (np.arange(width) + 0.5) * extent[0] / width
    ys = hi[1] - (np.arange(height) + 0.5) * extent[1] / height
    checker = (np.floor(xs)[None, :] + np.floor(ys)[:, None]) % 2.0 == 0.0
    color = np.where(checker[:, :, None], _GROUND_A[None, None, :],
                     _GROUND_B[None, None, :]).astype(float)

    def to_px(wx, wy):
        px = (wx - lo[0]) / extent[0] * width
        py = (hi[1] - wy) / extent[1] * height
        return px, py

    for node in sorted(scene.nodes_of_kind(NodeKind.OBJECT), key=lambda n: n.id):
        center = scene.world_position(node.id)
        half = np.asarray(node.half_extents, dtype=float)
        x0, y1 = to_px(center[0] - half[0], center[1] - half[1])
        x1, y0 = to_px(center[0] + half[0], center[1] + half[1])
        c0 = max(0, int(math.floor(x0)))
        c1 = min(width, int(math.ceil(x1)))
        r0 = max(0, int(math.floor(y0)))
        r1 = min(height, int(math.ceil(y1)))
        if c0 < c1 and r0 < r1:
            color[r0:r1, c0:c1] = _object_color(node.id)

    yy, xx = np.mgrid[0:height, 0:width]
    for char in characters:
        px, py = to_px(char.position[0], char.position[1])
        radius_px = max(2.0, 0.25 / extent[0] * width)
        mask = (xx - px) ** 2 + (yy - py) ** 2 <= radius_px ** 2
        color[mask] = _CAPSULE_COLOR
        tip_x = px + 2.2 * radius_px * math.cos(char.facing_rad)
        tip_y = py - 2.2 * radius_px * math.sin(char.facing_rad)
        for frac in np.linspace(0.4, 1.0, 8):
            cx = px + frac * (tip_x - px)
            cy = py + frac * (tip_y - py)
            tick = (xx - cx) ** 2 + (yy - cy) ** 2 <= (radius_px * 0.35) ** 2
            color[tick] = _WEDGE_COLOR

    pixels = np.clip(color * 255.0 + 0.5, 0.0, 255.0).astype(np.uint8)
    return Frame(width=width, height=height, pixels=pixels,
                 depth=np.zeros((height, width)))


def measured_capsule_span_px(frame_before: Frame, frame_with: Frame) -> tuple[int, int] | None:
    """Vertical pixel span where the character changed the image: compare a
    render without the character against one with it."""
    diff = np.any(frame_before.pixels != frame_with.pixels, axis=2)
    rows = np.nonzero(np.any(diff, axis=1))[0]
    if len(rows) == 0:
        return None
    return int(rows[0]), int(rows[-1])
