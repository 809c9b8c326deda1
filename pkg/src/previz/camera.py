"""7DoF camera state and the cinematic trajectory generators.

Conventions (documented once, used everywhere):

* World frame is right-handed, z-up.
* A camera pose is position (x, y, z), rotation (roll, pitch, yaw) and focal
  length in millimeters.  Yaw rotates about world z (0 faces +x), pitch tilts
  the view up (+) or down (-), roll turns about the forward axis and is fixed
  at 0 (level horizon); composition order is yaw, then pitch, then roll.
* The subject-centered spherical offset (r, theta, phi) maps to world space as
  ``target + r * (cos(phi) sin(theta), sin(phi) sin(theta), cos(theta))``, so
  theta = pi/2 places the camera at subject height, smaller theta above.
* Shot placement anchors the spherical offset at the character's mid-height
  point; the look-at aim point sits at ``LOOK_HEIGHT_FRAC`` of the height.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields

import numpy as np

from .scripts import Angle, Movement, Scale

FOCAL_MIN_MM = 30.0
FOCAL_MAX_MM = 80.0
BASE_FOCAL_MM = 50.0
LOOK_HEIGHT_FRAC = 0.875

ANGLE_THETA = {
    Angle.EYE_LEVEL: math.pi / 2,
    Angle.HIGH: 2 * math.pi / 5,
    Angle.LOW: 4 * math.pi / 5,
}

SCALE_RADIUS_FACTOR = {
    Scale.CLOSE_UP: 0.2,
    Scale.MEDIUM: 0.5,
    Scale.FULL: 1.0,
}


class DomainError(ValueError):
    """A camera parameter is outside its admissible range."""


class DegenerateLookAt(ValueError):
    """Camera and target coincide; no view direction exists."""


def easing(lam: float, t: float) -> float:
    """Exponential time warp ``(lam^t - 1)/(lam - 1)``; identity at lam = 1.

    Large lam makes motion slow first and fast later, small lam the reverse.
    """
    if lam <= 0:
        raise DomainError(f"easing parameter must be positive, got {lam}")
    if t < 0.0 or t > 1.0:
        raise DomainError(f"easing time must be in [0, 1], got {t}")
    if lam == 1.0:
        return t
    return (lam ** t - 1.0) / (lam - 1.0)


@dataclass(frozen=True)
class SphericalOffset:
    r: float
    theta: float
    phi: float

    def __post_init__(self):
        if self.r <= 0:
            raise DomainError(f"spherical radius must be positive, got {self.r}")
        if not 0.0 < self.theta < math.pi:
            raise DomainError(f"polar angle must be in (0, pi), got {self.theta}")

    def direction(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([math.cos(self.phi) * st,
                         math.sin(self.phi) * st,
                         math.cos(self.theta)])


def spherical_to_world(target, off: SphericalOffset) -> np.ndarray:
    return np.asarray(target, dtype=float) + off.r * off.direction()


def world_to_spherical(target, position) -> SphericalOffset:
    v = np.asarray(position, dtype=float) - np.asarray(target, dtype=float)
    r = float(np.linalg.norm(v))
    if r == 0.0:
        raise DegenerateLookAt("position coincides with target")
    theta = math.acos(max(-1.0, min(1.0, v[2] / r)))
    phi = math.atan2(v[1], v[0])
    return SphericalOffset(r, theta, phi)


def normalize_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a, 2 * math.pi)
    if a <= -math.pi:
        a += 2 * math.pi
    elif a > math.pi:
        a -= 2 * math.pi
    return a


def rotation_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Columns are the camera's forward, left and up axes in world frame."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cp, 0.0, -sp], [0.0, 1.0, 0.0], [sp, 0.0, cp]])   # Ry(-pitch)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return rz @ ry @ rx


def forward_axis(roll: float, pitch: float, yaw: float) -> np.ndarray:
    return np.array([math.cos(pitch) * math.cos(yaw),
                     math.cos(pitch) * math.sin(yaw),
                     math.sin(pitch)])


def look_at(camera_pos, target_pos) -> tuple[float, float, float]:
    """Rotation pointing the forward axis at the target with a level horizon.

    A camera looking straight up or down has no defined yaw; the +x axis is
    used as the fallback there.
    """
    d = np.asarray(target_pos, dtype=float) - np.asarray(camera_pos, dtype=float)
    dist = float(np.linalg.norm(d))
    if dist == 0.0:
        raise DegenerateLookAt("camera position equals target position")
    d = d / dist
    pitch = math.asin(max(-1.0, min(1.0, d[2])))
    if math.hypot(d[0], d[1]) < 1e-12:
        yaw = 0.0
    else:
        yaw = math.atan2(d[1], d[0])
    return 0.0, pitch, yaw


@dataclass(frozen=True)
class CameraPose:
    position: np.ndarray
    roll: float
    pitch: float
    yaw: float
    focal_mm: float

    def forward(self) -> np.ndarray:
        return forward_axis(self.roll, self.pitch, self.yaw)


@dataclass(frozen=True)
class ShotPreset:
    """Angle/scale presets resolved for one character."""

    theta: float
    radius_m: float
    focal_mm: float
    height_m: float

    @classmethod
    def for_character(cls, scale: Scale, angle: Angle, height_m: float,
                      focal_mm: float = BASE_FOCAL_MM) -> "ShotPreset":
        return cls(theta=ANGLE_THETA[angle],
                   radius_m=SCALE_RADIUS_FACTOR[scale] * height_m,
                   focal_mm=focal_mm,
                   height_m=height_m)

    def anchor(self, char_pos) -> np.ndarray:
        """Spherical placement anchor: character mid-height point."""
        return np.asarray(char_pos, dtype=float) + np.array([0.0, 0.0, 0.5 * self.height_m])

    def aim(self, char_pos) -> np.ndarray:
        """Look-at aim point: head/chest height."""
        return np.asarray(char_pos, dtype=float) + np.array(
            [0.0, 0.0, LOOK_HEIGHT_FRAC * self.height_m])


@dataclass
class GeneratorTag:
    """Everything needed to regenerate a trajectory (and audit it)."""

    movement: str
    scale: str
    angle: str
    reference: str = "start"
    azimuth: float | None = None
    lam: float | None = None
    mu: float | None = None
    sweep_rad: float | None = None
    direction: str | None = None
    end_on_subject: bool | None = None
    displacement_m: tuple[float, float, float] | None = None
    focal_clamped: bool = False
    negative_of: str | None = None
    notes: tuple[str, ...] = ()

    def key(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self))

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None or value == ():
                continue
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "GeneratorTag":
        kwargs = dict(doc)
        if "displacement_m" in kwargs:
            kwargs["displacement_m"] = tuple(kwargs["displacement_m"])
        if "notes" in kwargs:
            kwargs["notes"] = tuple(kwargs["notes"])
        return cls(**kwargs)


class CameraTrajectory:
    """Per-frame 7DoF camera states plus the tag that generated them."""

    def __init__(self, positions: np.ndarray, rotations: np.ndarray,
                 focals: np.ndarray, tag: GeneratorTag):
        self.positions = np.asarray(positions, dtype=float)
        self.rotations = np.asarray(rotations, dtype=float)
        self.focals = np.asarray(focals, dtype=float)
        if not (len(self.positions) == len(self.rotations) == len(self.focals)):
            raise ValueError("positions, rotations and focals must share a length")
        self.tag = tag

    def __len__(self) -> int:
        return len(self.positions)

    def pose(self, t: int) -> CameraPose:
        roll, pitch, yaw = self.rotations[t]
        return CameraPose(self.positions[t].copy(), float(roll), float(pitch),
                          float(yaw), float(self.focals[t]))

    @property
    def poses(self) -> list[CameraPose]:
        return [self.pose(t) for t in range(len(self))]


def _progress(t: int, T: int) -> float:
    return 0.0 if T <= 1 else t / (T - 1)


def interp_waypoint(waypoints: np.ndarray, u: float) -> np.ndarray:
    """Linear interpolation between integer-frame waypoints."""
    T = len(waypoints)
    if T == 1:
        return waypoints[0].copy()
    u = min(max(u, 0.0), float(T - 1))
    i = int(math.floor(u))
    if i >= T - 1:
        return waypoints[-1].copy()
    frac = u - i
    return (1.0 - frac) * waypoints[i] + frac * waypoints[i + 1]


def _reference_position(s, reference: str) -> np.ndarray:
    wp = s.path.waypoints
    if reference == "end":
        return wp[-1].copy()
    return wp[0].copy()


def _constant_rotation(rot: tuple[float, float, float], T: int) -> np.ndarray:
    return np.tile(np.array(rot, dtype=float), (T, 1))


def _looked_rotations(positions: np.ndarray, aims: np.ndarray) -> np.ndarray:
    out = np.empty((len(positions), 3))
    for t in range(len(positions)):
        out[t] = look_at(positions[t], aims[t])
    return out


def gen_static(s, preset: ShotPreset, reference: str = "start",
               azimuth: float = 0.0) -> CameraTrajectory:
    """All seven parameters constant, placed around the reference position."""
    T = len(s.path)
    ref = _reference_position(s, reference)
    off = SphericalOffset(preset.radius_m, preset.theta, azimuth)
    pos = spherical_to_world(preset.anchor(ref), off)
    rot = look_at(pos, preset.aim(ref))
    tag = GeneratorTag(Movement.STATIC.value, _scale_of(preset), _angle_of(preset),
                       reference=reference, azimuth=azimuth)
    return CameraTrajectory(np.tile(pos, (T, 1)), _constant_rotation(rot, T),
                            np.full(T, preset.focal_mm), tag)


def gen_follow(s, preset: ShotPreset, lam: float, azimuth: float = 0.0) -> CameraTrajectory:
    """Track the character along its (time-warped) route at a fixed offset."""
    T = len(s.path)
    off = SphericalOffset(preset.radius_m, preset.theta, azimuth)
    offset_vec = off.r * off.direction()
    positions = np.empty((T, 3))
    aims = np.empty((T, 3))
    for t in range(T):
        u = easing(lam, _progress(t, T)) * (T - 1)
        char = interp_waypoint(s.path.waypoints, u)
        positions[t] = preset.anchor(char) + offset_vec
        aims[t] = preset.aim(char)
    tag = GeneratorTag(Movement.FOLLOW.value, _scale_of(preset), _angle_of(preset),
                       azimuth=azimuth, lam=lam)
    return CameraTrajectory(positions, _looked_rotations(positions, aims),
                            np.full(T, preset.focal_mm), tag)


def gen_push_pull(s, preset: ShotPreset, mu: float, lam: float,
                  reference: str = "start", azimuth: float = 0.0) -> CameraTrajectory:
    """Move the camera radially: distance ramps from r0 to mu * r0."""
    if mu <= 0:
        raise DomainError(f"push/pull ratio must be positive, got {mu}")
    T = len(s.path)
    ref = _reference_position(s, reference)
    anchor, aim = preset.anchor(ref), preset.aim(ref)
    off = SphericalOffset(preset.radius_m, preset.theta, azimuth)
    direction = off.direction()
    positions = np.empty((T, 3))
    for t in range(T):
        r_t = ((mu - 1.0) * easing(lam, _progress(t, T)) + 1.0) * preset.radius_m
        positions[t] = anchor + r_t * direction
    movement = Movement.PUSH if mu < 1.0 else Movement.PULL
    tag = GeneratorTag(movement.value, _scale_of(preset), _angle_of(preset),
                       reference=reference, azimuth=azimuth, lam=lam, mu=mu)
    aims = np.tile(aim, (T, 1))
    return CameraTrajectory(positions, _looked_rotations(positions, aims),
                            np.full(T, preset.focal_mm), tag)


def gen_zoom(s, preset: ShotPreset, mu: float, lam: float,
             azimuth: float = 0.0) -> CameraTrajectory:
    """Fixed placement at the first frame; focal length ramps by mu, clamped
    to the usable range (clamps are recorded on the tag)."""
    if mu <= 0:
        raise DomainError(f"zoom ratio must be positive, got {mu}")
    T = len(s.path)
    ref = _reference_position(s, "start")
    off = SphericalOffset(preset.radius_m, preset.theta, azimuth)
    pos = spherical_to_world(preset.anchor(ref), off)
    rot = look_at(pos, preset.aim(ref))
    focals = np.empty(T)
    clamped = False
    for t in range(T):
        f_t = ((mu - 1.0) * easing(lam, _progress(t, T)) + 1.0) * preset.focal_mm
        if f_t < FOCAL_MIN_MM or f_t > FOCAL_MAX_MM:
            clamped = True
        focals[t] = min(max(f_t, FOCAL_MIN_MM), FOCAL_MAX_MM)
    movement = Movement.ZOOM_IN if mu > 1.0 else Movement.ZOOM_OUT
    tag = GeneratorTag(movement.value, _scale_of(preset), _angle_of(preset),
                       azimuth=azimuth, lam=lam, mu=mu, focal_clamped=clamped)
    return CameraTrajectory(np.tile(pos, (T, 1)), _constant_rotation(rot, T), focals, tag)


TILT_PAN_SWEEP_RANGE = (math.radians(30.0), math.radians(60.0))
ARC_SWEEP_RANGE = (math.radians(90.0), math.radians(120.0))


def _check_sweep(sweep_rad: float, lo: float, hi: float, what: str):
    if not lo - 1e-12 <= sweep_rad <= hi + 1e-12:
        raise DomainError(
            f"{what} sweep must be within [{math.degrees(lo):.0f}, "
            f"{math.degrees(hi):.0f}] degrees, got {math.degrees(sweep_rad):.1f}")


def gen_tilt_pan(s, preset: ShotPreset, axis: str, sweep_rad: float, lam: float,
                 end_on_subject: bool, direction: str, reference: str = "start",
                 azimuth: float = 0.0) -> CameraTrajectory:
    """Rotate pitch (tilt) or yaw (pan) through an eased sweep from a fixed
    position, starting or ending on the subject."""
    _check_sweep(sweep_rad, *TILT_PAN_SWEEP_RANGE, what="tilt/pan")
    if axis == "tilt":
        signs, idx, movement = {"up": 1.0, "down": -1.0}, 1, Movement.TILT
    elif axis == "pan":
        signs, idx, movement = {"left": 1.0, "right": -1.0}, 2, Movement.PAN
    else:
        raise DomainError(f"axis must be 'tilt' or 'pan', got {axis!r}")
    if direction not in signs:
        raise DomainError(f"{axis} direction must be one of {sorted(signs)}, got {direction!r}")
    sign = signs[direction]
    T = len(s.path)
    ref = _reference_position(s, reference)
    off = SphericalOffset(preset.radius_m, preset.theta, azimuth)
    pos = spherical_to_world(preset.anchor(ref), off)
    base = np.array(look_at(pos, preset.aim(ref)))
    rotations = np.tile(base, (T, 1))
    for t in range(T):
        delta = easing(lam, _progress(t, T)) * sweep_rad * sign
        if end_on_subject:
            delta -= sweep_rad * sign
        rotations[t, idx] = normalize_angle(base[idx] + delta)
    tag = GeneratorTag(movement.value, _scale_of(preset), _angle_of(preset),
                       reference=reference, azimuth=azimuth, lam=lam,
                       sweep_rad=sweep_rad, direction=direction,
                       end_on_subject=end_on_subject)
    return CameraTrajectory(np.tile(pos, (T, 1)), rotations,
                            np.full(T, preset.focal_mm), tag)


def gen_dolly_pedestal(s, preset: ShotPreset, axis: str, displacement_m,
                       lam: float, reference: str = "start",
                       azimuth: float = 0.0) -> CameraTrajectory:
    """Translate the camera by an eased displacement while holding the look-at:
    dolly moves in the ground plane, pedestal straight up or down."""
    disp = np.asarray(displacement_m, dtype=float)
    if disp.shape != (3,):
        raise DomainError("displacement must be a 3-vector")
    if axis == "dolly":
        if disp[2] != 0.0:
            raise DomainError("dolly displacement must stay in the horizontal plane")
        movement = Movement.DOLLY
    elif axis == "pedestal":
        if disp[0] != 0.0 or disp[1] != 0.0:
            raise DomainError("pedestal displacement must be vertical")
        movement = Movement.PEDESTAL
    else:
        raise DomainError(f"axis must be 'dolly' or 'pedestal', got {axis!r}")
    T = len(s.path)
    ref = _reference_position(s, reference)
    off = SphericalOffset(preset.radius_m, preset.theta, azimuth)
    start = spherical_to_world(preset.anchor(ref), off)
    aim = preset.aim(ref)
    positions = np.empty((T, 3))
    for t in range(T):
        positions[t] = start + easing(lam, _progress(t, T)) * disp
    tag = GeneratorTag(movement.value, _scale_of(preset), _angle_of(preset),
                       reference=reference, azimuth=azimuth, lam=lam,
                       displacement_m=tuple(float(v) for v in disp))
    return CameraTrajectory(positions, _looked_rotations(positions, np.tile(aim, (T, 1))),
                            np.full(T, preset.focal_mm), tag)


def gen_arc(s, preset: ShotPreset, sweep_rad: float, lam: float, direction: str,
            reference: str = "start", azimuth: float = 0.0) -> CameraTrajectory:
    """Orbit the subject: radius and polar angle fixed, azimuth sweeps."""
    _check_sweep(sweep_rad, *ARC_SWEEP_RANGE, what="arc")
    if direction not in ("ccw", "cw"):
        raise DomainError(f"arc direction must be 'ccw' or 'cw', got {direction!r}")
    sign = 1.0 if direction == "ccw" else -1.0
    T = len(s.path)
    ref = _reference_position(s, reference)
    anchor, aim = preset.anchor(ref), preset.aim(ref)
    positions = np.empty((T, 3))
    for t in range(T):
        phi = azimuth + sign * easing(lam, _progress(t, T)) * sweep_rad
        positions[t] = spherical_to_world(
            anchor, SphericalOffset(preset.radius_m, preset.theta, phi))
    notes = ()
    if s.clip.locomotion:
        notes = ("arc-on-moving-subject",)
    tag = GeneratorTag(Movement.ARC.value, _scale_of(preset), _angle_of(preset),
                       reference=reference, azimuth=azimuth, lam=lam,
                       sweep_rad=sweep_rad, direction=direction, notes=notes)
    return CameraTrajectory(positions, _looked_rotations(positions, np.tile(aim, (T, 1))),
                            np.full(T, preset.focal_mm), tag)


def _scale_of(preset: ShotPreset) -> str:
    for scale, factor in SCALE_RADIUS_FACTOR.items():
        if math.isclose(preset.radius_m, factor * preset.height_m):
            return scale.value
    return "custom"


def _angle_of(preset: ShotPreset) -> str:
    for angle, theta in ANGLE_THETA.items():
        if math.isclose(preset.theta, theta):
            return angle.value
    return "custom"


TRAJECTORY_HEADER = "# previz-trajectory v1"
_COLUMNS = "frame x y z roll pitch yaw focal_mm"


def trajectory_to_csv(traj: CameraTrajectory) -> str:
    """Columnar text export: one row of 7DoF state per frame."""
    lines = [TRAJECTORY_HEADER,
             "# tag: " + json.dumps(traj.tag.to_dict(), sort_keys=True),
             _COLUMNS]
    for t in range(len(traj)):
        x, y, z = traj.positions[t]
        roll, pitch, yaw = traj.rotations[t]
        lines.append(" ".join([str(t)] + [format(v, ".17g") for v in
                                          (x, y, z, roll, pitch, yaw, traj.focals[t])]))
    return "\n".join(lines) + "\n"


def trajectory_from_csv(text: str) -> CameraTrajectory:
    lines = text.strip().splitlines()
    if not lines or lines[0].strip() != TRAJECTORY_HEADER:
        raise ValueError("not a previz trajectory export")
    tag = GeneratorTag("unknown", "custom", "custom")
    rows = []
    for line in lines[1:]:
        line = line.strip()
        if line.startswith("# tag:"):
            tag = GeneratorTag.from_dict(json.loads(line[len("# tag:"):]))
            continue
        if not line or line.startswith("#") or line == _COLUMNS:
            continue
        rows.append([float(v) for v in line.split()[1:]])
    data = np.asarray(rows)
    return CameraTrajectory(data[:, 0:3], data[:, 3:6], data[:, 6], tag)
