"""Camera proposal enumeration.

Each movement type leaves a few free parameters (shooting azimuth, easing,
ratios, sweeps, directions, reference endpoint); this module holds the
default grids for those parameters and expands a camera script into the full
deduplicated list of candidate trajectories for one story proposal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import camera
from .camera import CameraTrajectory, ShotPreset
from .scripts import CameraScript, Movement


@dataclass(frozen=True)
class EnumerationConfig:
    azimuth_count: int = 8
    lambdas: tuple[float, ...] = (0.1, 1.0, 10.0)
    push_mu: tuple[float, ...] = (0.5, 0.65, 0.8)
    pull_mu: tuple[float, ...] = (1.0, 1.1, 1.2)
    zoom_in_mu: tuple[float, ...] = (1.2, 1.4, 1.6)
    zoom_out_mu: tuple[float, ...] = (0.5, 0.65, 0.8)
    tilt_pan_sweeps: tuple[float, ...] = (math.radians(30.0), math.radians(60.0))
    arc_sweeps: tuple[float, ...] = (math.radians(90.0), math.radians(120.0))
    dolly_displacements_m: tuple[float, ...] = (1.0, 2.0)
    pedestal_displacements_m: tuple[float, ...] = (0.5, 1.0)
    references: tuple[str, ...] = ("start", "end")
    base_focal_mm: float = camera.BASE_FOCAL_MM

    def azimuths(self) -> tuple[float, ...]:
        step = 2.0 * math.pi / self.azimuth_count
        return tuple(k * step for k in range(self.azimuth_count))


DEFAULT_ENUMERATION = EnumerationConfig()


def _lateral(azimuth: float, side: str) -> tuple[float, float, float]:
    """Unit ground-plane direction perpendicular to the camera's line of sight
    toward the subject (the camera sits at `azimuth` and looks inward)."""
    sign = 1.0 if side == "left" else -1.0
    return (sign * math.sin(azimuth), -sign * math.cos(azimuth), 0.0)


def enumerate_camera_proposals(cs: CameraScript, s,
                               cfg: EnumerationConfig = DEFAULT_ENUMERATION
                               ) -> list[CameraTrajectory]:
    """All candidate trajectories for one (camera script, story proposal)
    pair, in a fixed deterministic order, deduplicated by generator tag."""
    preset = ShotPreset.for_character(cs.scale, cs.angle, s.height_m, cfg.base_focal_mm)
    out: list[CameraTrajectory] = []
    movement = cs.movement

    if movement is Movement.STATIC:
        for az in cfg.azimuths():
            for ref in cfg.references:
                out.append(camera.gen_static(s, preset, reference=ref, azimuth=az))
    elif movement is Movement.FOLLOW:
        for az in cfg.azimuths():
            for lam in cfg.lambdas:
                out.append(camera.gen_follow(s, preset, lam, azimuth=az))
    elif movement in (Movement.PUSH, Movement.PULL):
        mus = cfg.push_mu if movement is Movement.PUSH else cfg.pull_mu
        for az in cfg.azimuths():
            for lam in cfg.lambdas:
                for mu in mus:
                    for ref in cfg.references:
                        out.append(camera.gen_push_pull(s, preset, mu, lam,
                                                        reference=ref, azimuth=az))
    elif movement in (Movement.ZOOM_IN, Movement.ZOOM_OUT):
        mus = cfg.zoom_in_mu if movement is Movement.ZOOM_IN else cfg.zoom_out_mu
        for az in cfg.azimuths():
            for lam in cfg.lambdas:
                for mu in mus:
                    out.append(camera.gen_zoom(s, preset, mu, lam, azimuth=az))
    elif movement in (Movement.TILT, Movement.PAN):
        axis = "tilt" if movement is Movement.TILT else "pan"
        directions = ("up", "down") if movement is Movement.TILT else ("left", "right")
        for az in cfg.azimuths():
            for lam in cfg.lambdas:
                for sweep in cfg.tilt_pan_sweeps:
                    for direction in directions:
                        for end_on in (False, True):
                            out.append(camera.gen_tilt_pan(
                                s, preset, axis, sweep, lam, end_on, direction,
                                azimuth=az))
    elif movement is Movement.DOLLY:
        for az in cfg.azimuths():
            for lam in cfg.lambdas:
                for dist in cfg.dolly_displacements_m:
                    for side in ("left", "right"):
                        lx, ly, _ = _lateral(az, side)
                        out.append(camera.gen_dolly_pedestal(
                            s, preset, "dolly", (dist * lx, dist * ly, 0.0), lam,
                            azimuth=az))
    elif movement is Movement.PEDESTAL:
        for az in cfg.azimuths():
            for lam in cfg.lambdas:
                for dist in cfg.pedestal_displacements_m:
                    for vertical in ("up", "down"):
                        dz = dist if vertical == "up" else -dist
                        out.append(camera.gen_dolly_pedestal(
                            s, preset, "pedestal", (0.0, 0.0, dz), lam, azimuth=az))
    elif movement is Movement.ARC:
        for az in cfg.azimuths():
            for lam in cfg.lambdas:
                for sweep in cfg.arc_sweeps:
                    for direction in ("ccw", "cw"):
                        out.append(camera.gen_arc(s, preset, sweep, lam, direction,
                                                  azimuth=az))
    else:  # pragma: no cover - closed enum
        raise ValueError(f"unhandled movement {movement}")

    seen = set()
    unique = []
    for traj in out:
        key = traj.tag.key()
        if key not in seen:
            seen.add(key)
            unique.append(traj)
    return unique
