"""Generating all eleven camera movement types over one story proposal.

Run with:  python demos/03_camera_moves.py
Writes a follow-shot trajectory export next to this script.
"""

import math
from pathlib import Path

import numpy as np

from previz import StoryParams, easing, enumerate_camera_proposals, parse_camera_script
from previz.camera import (ShotPreset, gen_arc, gen_dolly_pedestal, gen_follow,
                           gen_push_pull, gen_static, gen_tilt_pan, gen_zoom,
                           trajectory_to_csv)
from previz.navgrid import Path as Route
from previz.scripts import Angle, Scale
from previz.story import ActionClip, PostureKey

T = 75
walk = ActionClip(key="walk", verb="walk-to", duration_frames=T, locomotion=True,
                  posture_track=(PostureKey(0, 0.95, "walk"),))
xs = np.linspace(0.0, 4.0, T)
story = StoryParams(clip=walk, path=Route(np.stack([xs, 0.3 * np.sin(xs), np.zeros(T)], 1)),
                    character_id="Anna", height_m=1.6, capsule_radius_m=0.2)
preset = ShotPreset.for_character(Scale.MEDIUM, Angle.EYE_LEVEL, story.height_m)

print(f"easing warps the rhythm: w_10(0.5) = {easing(10, 0.5):.3f} "
      f"(slow first), w_0.1(0.5) = {easing(0.1, 0.5):.3f} (fast first)\n")

moves = {
    "static": gen_static(story, preset, reference="start", azimuth=math.pi / 4),
    "follow": gen_follow(story, preset, lam=1.0, azimuth=math.pi / 4),
    "push": gen_push_pull(story, preset, mu=0.5, lam=1.0),
    "pull": gen_push_pull(story, preset, mu=1.2, lam=10.0),
    "zoom_in": gen_zoom(story, preset, mu=1.4, lam=1.0),
    "zoom_out": gen_zoom(story, preset, mu=0.65, lam=1.0),
    "tilt": gen_tilt_pan(story, preset, "tilt", math.radians(40), 1.0, False, "up"),
    "pan": gen_tilt_pan(story, preset, "pan", math.radians(60), 1.0, True, "left"),
    "dolly": gen_dolly_pedestal(story, preset, "dolly", (1.5, 0.0, 0.0), 1.0),
    "pedestal": gen_dolly_pedestal(story, preset, "pedestal", (0.0, 0.0, 1.0), 0.1),
    "arc": gen_arc(story, preset, math.radians(110), 1.0, "ccw"),
}

print(f"{'movement':10s} {'pos drift m':>11s} {'yaw sweep':>10s} "
      f"{'pitch sweep':>11s} {'focal mm':>17s}")
for name, traj in moves.items():
    drift = float(np.linalg.norm(traj.positions[-1] - traj.positions[0]))
    yaw = math.degrees(float(np.ptp(np.unwrap(traj.rotations[:, 2]))))
    pitch = math.degrees(float(np.ptp(traj.rotations[:, 1])))
    focal = f"{traj.focals[0]:.0f} -> {traj.focals[-1]:.0f}"
    print(f"{name:10s} {drift:11.3f} {yaw:9.1f}d {pitch:10.1f}d {focal:>17s}")

out = Path(__file__).with_name("follow_trajectory.csv")
out.write_text(trajectory_to_csv(moves["follow"]))
print(f"\nwrote replayable 7DoF export: {out.name}")

count = len(enumerate_camera_proposals(parse_camera_script("(arc medium low)"), story))
print(f"subspace enumeration for one arc script: {count} candidate trajectories")
