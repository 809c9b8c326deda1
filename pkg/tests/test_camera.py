import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from previz.camera import (ANGLE_THETA, DegenerateLookAt, DomainError,
                           GeneratorTag, ShotPreset, SphericalOffset,
                           easing, forward_axis, gen_arc, gen_dolly_pedestal,
                           gen_follow, gen_push_pull, gen_static, gen_tilt_pan,
                           gen_zoom, interp_waypoint, look_at, normalize_angle,
                           rotation_matrix, spherical_to_world,
                           trajectory_from_csv, trajectory_to_csv,
                           world_to_spherical)
from previz.navgrid import Path, in_place_path
from previz.scripts import Angle, Scale
from previz.story import ActionClip, PostureKey, StoryParams


def _clip(T, locomotion=False):
    return ActionClip(key=f"clip{T}", verb="walk-to" if locomotion else "pose",
                      duration_frames=T, locomotion=locomotion,
                      posture_track=(PostureKey(0, 0.95, "stand"),))


def straight_story(T=60, length=3.0, height=1.6):
    xs = np.linspace(0.0, length, T)
    wp = np.stack([xs, np.zeros(T), np.zeros(T)], axis=1)
    return StoryParams(clip=_clip(T, locomotion=True), path=Path(wp),
                       character_id="Anna", height_m=height, capsule_radius_m=0.2)


def still_story(T=60, pos=(0.0, 0.0, 0.0), height=1.6):
    return StoryParams(clip=_clip(T), path=in_place_path(pos, T),
                       character_id="Anna", height_m=height, capsule_radius_m=0.2)


def preset(scale=Scale.MEDIUM, angle=Angle.EYE_LEVEL, h=1.6, focal=50.0):
    return ShotPreset.for_character(scale, angle, h, focal)


# --- easing -----------------------------------------------------------------

def test_easing_boundaries():
    for lam in (0.1, 0.5, 1.0, 2.0, 10.0):
        assert easing(lam, 0.0) == 0.0
        assert easing(lam, 1.0) == 1.0


def test_easing_identity_branch():
    assert easing(1.0, 0.37) == 0.37


def test_easing_lambda10_half():
    # Oracle: hand evaluation (sqrt(10) - 1) / 9.
    expected = (math.sqrt(10.0) - 1.0) / 9.0
    assert abs(easing(10.0, 0.5) - expected) < 1e-15
    assert abs(expected - 0.2403) < 5e-5


def test_easing_domain_errors():
    with pytest.raises(DomainError):
        easing(0.0, 0.5)
    with pytest.raises(DomainError):
        easing(-1.0, 0.5)
    with pytest.raises(DomainError):
        easing(2.0, 1.5)


@given(lam=st.sampled_from([0.1, 1.0, 10.0]),
       t=st.floats(min_value=0.0, max_value=1.0, exclude_max=True))
def test_easing_strictly_increasing(lam, t):
    assert easing(lam, t + 1e-6 if t + 1e-6 <= 1.0 else 1.0) > easing(lam, t) or t + 1e-6 > 1.0


def test_easing_continuity_at_one():
    for lam in (1.0 - 1e-4, 1.0 + 1e-4):
        for t in np.linspace(0.0, 1.0, 101):
            assert abs(easing(lam, float(t)) - t) < 1e-3


# --- spherical mapping -------------------------------------------------------

def test_spherical_axis_case():
    out = spherical_to_world((0, 0, 0), SphericalOffset(1.0, math.pi / 2, 0.0))
    assert np.allclose(out, [1, 0, 0], atol=1e-12)


def test_spherical_pole_limit():
    out = spherical_to_world((0, 0, 0), SphericalOffset(1.0, 1e-9, 0.3))
    assert np.allclose(out, [0, 0, 1], atol=1e-8)


def test_spherical_derived_value():
    target = np.array([3.0, 1.0, 0.0])
    r, theta, phi = 0.8, 2 * math.pi / 5, math.pi / 4
    # Oracle: direct evaluation of the mapping at double precision.
    expected = target + r * np.array([math.cos(phi) * math.sin(theta),
                                      math.sin(phi) * math.sin(theta),
                                      math.cos(theta)])
    out = spherical_to_world(target, SphericalOffset(r, theta, phi))
    assert np.allclose(out, expected, rtol=0, atol=0)
    assert np.allclose(out, [3.538, 1.538, 0.247], atol=1e-3)


@given(st.integers(0, 10_000))
def test_spherical_roundtrip(seed):
    rng = np.random.default_rng(seed)
    target = rng.uniform(-10, 10, 3)
    off = SphericalOffset(float(rng.uniform(0.1, 10.0)),
                          float(rng.uniform(1e-3, math.pi - 1e-3)),
                          float(rng.uniform(-math.pi, math.pi)))
    pos = spherical_to_world(target, off)
    back = world_to_spherical(target, pos)
    pos2 = spherical_to_world(target, back)
    assert np.linalg.norm(pos2 - pos) < 1e-9


# --- look-at -----------------------------------------------------------------

def test_look_at_axis_case():
    roll, pitch, yaw = look_at((1, 0, 0), (0, 0, 0))
    assert roll == 0.0
    assert abs(pitch) < 1e-12
    assert abs(abs(yaw) - math.pi) < 1e-12


def test_look_at_pole_fallback():
    roll, pitch, yaw = look_at((0, 0, 1), (0, 0, 0))
    assert abs(pitch + math.pi / 2) < 1e-12
    assert yaw == 0.0


def test_look_at_degenerate():
    with pytest.raises(DegenerateLookAt):
        look_at((1, 2, 3), (1, 2, 3))


@given(st.integers(0, 10_000))
def test_look_at_forward_alignment(seed):
    rng = np.random.default_rng(seed)
    cam = rng.uniform(-5, 5, 3)
    target = rng.uniform(-5, 5, 3)
    if np.linalg.norm(target - cam) < 1e-6:
        target = cam + np.array([1.0, 0.0, 0.0])
    roll, pitch, yaw = look_at(cam, target)
    # Oracle: rotation matrix applied to the forward axis.
    fwd = rotation_matrix(roll, pitch, yaw) @ np.array([1.0, 0.0, 0.0])
    direction = (target - cam) / np.linalg.norm(target - cam)
    assert float(fwd @ direction) > 1.0 - 1e-12
    assert roll == 0.0


def test_look_at_spec_head_case():
    cam = np.array([3.538, 1.538, 0.247])
    target = np.array([3.0, 1.0, 0.8 * 1.6 * 0.875])
    roll, pitch, yaw = look_at(cam, target)
    fwd = forward_axis(roll, pitch, yaw)
    direction = (target - cam) / np.linalg.norm(target - cam)
    assert abs(float(fwd @ direction) - 1.0) < 1e-9


def test_normalize_angle():
    assert normalize_angle(math.pi) == math.pi
    assert abs(normalize_angle(-math.pi) - math.pi) < 1e-12
    assert abs(normalize_angle(3 * math.pi) - math.pi) < 1e-12
    assert abs(normalize_angle(0.3) - 0.3) < 1e-15


# --- generators ---------------------------------------------------------------

def _seven_dof(traj):
    return np.concatenate([traj.positions, traj.rotations,
                           traj.focals[:, None]], axis=1)


def test_static_zero_variance():
    traj = gen_static(straight_story(), preset(), reference="start", azimuth=0.7)
    # All frames bit-identical: variance of every parameter is exactly zero.
    assert np.all(np.ptp(_seven_dof(traj), axis=0) == 0.0)


def test_static_reference_endpoints_differ():
    s = straight_story()
    a = gen_static(s, preset(), reference="start")
    b = gen_static(s, preset(), reference="end")
    # Oracle: evaluate both endpoints.
    assert np.allclose(b.positions[0] - a.positions[0], s.path.waypoints[-1] - s.path.waypoints[0])


def test_static_eye_level_medium_preset():
    s = still_story(pos=(2.0, 3.0, 0.0), height=1.6)
    traj = gen_static(s, preset(Scale.MEDIUM, Angle.EYE_LEVEL, 1.6))
    # r = 0.5 * 1.6 and the camera sits at the character's mid-height.
    anchor = np.array([2.0, 3.0, 0.8])
    assert abs(np.linalg.norm(traj.positions[0] - anchor) - 0.8) < 1e-12
    assert abs(traj.positions[0][2] - 0.8) < 1e-12


def test_follow_identity_easing_translates_path():
    s = straight_story(T=50)
    traj = gen_follow(s, preset(), lam=1.0, azimuth=0.4)
    offsets = traj.positions - (s.path.waypoints + np.array([0, 0, 0.8]))
    assert np.allclose(offsets, offsets[0], atol=1e-9)


def test_follow_slow_first_fast_later():
    s = straight_story(T=101, length=4.0)
    traj = gen_follow(s, preset(), lam=10.0, azimuth=0.0)
    # Oracle: warped arc length at half time stays below half the route.
    halfway = traj.positions[50] - traj.positions[0]
    assert np.linalg.norm(halfway) < 2.0


def test_follow_look_residual():
    s = straight_story(T=40)
    traj = gen_follow(s, preset(), lam=10.0, azimuth=1.1)
    for t in range(len(traj)):
        u = easing(10.0, t / 39) * 39
        char = interp_waypoint(s.path.waypoints, u)
        aim = char + np.array([0, 0, 0.875 * 1.6])
        fwd = traj.pose(t).forward()
        direction = aim - traj.positions[t]
        direction /= np.linalg.norm(direction)
        assert math.acos(min(1.0, float(fwd @ direction))) < 1e-6


def test_push_pull_mu_one_is_static():
    s = still_story()
    a = gen_push_pull(s, preset(), mu=1.0, lam=1.0)
    b = gen_static(s, preset())
    assert np.allclose(a.positions, b.positions)
    assert np.allclose(a.rotations, b.rotations)


def test_push_linear_radius():
    s = still_story(T=81)
    traj = gen_push_pull(s, preset(), mu=0.5, lam=1.0)
    anchor = np.array([0.0, 0.0, 0.8])
    radii = np.linalg.norm(traj.positions - anchor, axis=1)
    # Oracle: closed form r_t = ((mu-1) * t/(T-1) + 1) * r0.
    expected = (0.5 - 1.0) * np.linspace(0, 1, 81) + 1.0
    assert np.allclose(radii, expected * 0.8, atol=1e-12)
    assert abs(radii[-1] - 0.5 * 0.8) < 1e-12


def test_pull_ratio_and_monotonicity():
    s = still_story(T=64)
    traj = gen_push_pull(s, preset(), mu=1.2, lam=10.0)
    anchor = np.array([0.0, 0.0, 0.8])
    radii = np.linalg.norm(traj.positions - anchor, axis=1)
    assert abs(radii[-1] / radii[0] - 1.2) < 1e-9
    assert np.all(np.diff(radii) > 0)


def test_push_pull_domain_error():
    with pytest.raises(DomainError):
        gen_push_pull(still_story(), preset(), mu=-0.2, lam=1.0)


def test_zoom_mu_one_matches_static():
    s = still_story()
    a = gen_zoom(s, preset(), mu=1.0, lam=1.0)
    b = gen_static(s, preset())
    assert np.allclose(a.positions, b.positions)
    assert np.all(a.focals == 50.0)


def test_zoom_focal_ramp():
    s = still_story(T=31)
    traj = gen_zoom(s, preset(), mu=1.2, lam=1.0)
    assert abs(traj.focals[-1] - 60.0) < 1e-12
    assert not traj.tag.focal_clamped
    assert np.all(np.diff(traj.focals) > 0)


def test_zoom_clamp_recorded():
    s = still_story(T=31)
    traj = gen_zoom(s, preset(focal=70.0), mu=1.2, lam=1.0)
    assert traj.focals[-1] == 80.0
    assert traj.tag.focal_clamped
    assert np.all(traj.focals <= 80.0)


def test_tilt_sweep_gate():
    with pytest.raises(DomainError):
        gen_tilt_pan(still_story(), preset(), "tilt", 0.0, 1.0, False, "up")
    with pytest.raises(DomainError):
        gen_tilt_pan(still_story(), preset(), "pan", math.radians(75), 1.0, False, "left")


def test_pan_end_on_subject():
    s = still_story(T=46)
    sweep = math.radians(45)
    traj = gen_tilt_pan(s, preset(), "pan", sweep, 1.0, True, "left")
    base = look_at(traj.positions[0], np.array([0, 0, 0.875 * 1.6]))
    yaws = np.unwrap(traj.rotations[:, 2])
    assert abs(yaws[-1] - base[2]) < 1e-12
    assert abs(yaws[0] - (base[2] - sweep)) < 1e-12
    deltas = np.diff(yaws)
    assert np.allclose(deltas, deltas[0], atol=1e-12)
    assert np.all(traj.rotations[:, 1] == traj.rotations[0, 1])
    assert np.all(traj.positions == traj.positions[0])


def test_tilt_start_on_subject():
    s = still_story(T=30)
    sweep = math.radians(30)
    traj = gen_tilt_pan(s, preset(), "tilt", sweep, 1.0, False, "up")
    base = look_at(traj.positions[0], np.array([0, 0, 0.875 * 1.6]))
    assert abs(traj.rotations[0, 1] - base[1]) < 1e-12
    assert abs(traj.rotations[-1, 1] - (base[1] + sweep)) < 1e-12


def test_dolly_zero_displacement_is_static():
    s = still_story()
    a = gen_dolly_pedestal(s, preset(), "dolly", (0.0, 0.0, 0.0), 1.0)
    b = gen_static(s, preset())
    assert np.allclose(a.positions, b.positions)


def test_dolly_linear_advance():
    s = still_story(T=41)
    traj = gen_dolly_pedestal(s, preset(), "dolly", (2.0, 0.0, 0.0), 1.0)
    dx = np.diff(traj.positions[:, 0])
    assert np.allclose(dx, 2.0 / 40.0, atol=1e-12)
    assert np.allclose(traj.positions[:, 2], traj.positions[0, 2])


def test_pedestal_fast_first():
    s = still_story(T=81)
    traj = gen_dolly_pedestal(s, preset(), "pedestal", (0.0, 0.0, 1.0), 0.1)
    rise = traj.positions[:, 2] - traj.positions[0, 2]
    # Oracle: w_0.1(0.5) > 0.5 from the easing law.
    assert easing(0.1, 0.5) > 0.5
    assert rise[40] > 0.5


def test_dolly_pedestal_axis_validation():
    with pytest.raises(DomainError):
        gen_dolly_pedestal(still_story(), preset(), "dolly", (1.0, 0.0, 0.5), 1.0)
    with pytest.raises(DomainError):
        gen_dolly_pedestal(still_story(), preset(), "pedestal", (0.5, 0.0, 1.0), 1.0)


def test_arc_constant_distance():
    s = still_story(T=50)
    traj = gen_arc(s, preset(), math.radians(100), 1.0, "ccw")
    anchor = np.array([0.0, 0.0, 0.8])
    radii = np.linalg.norm(traj.positions - anchor, axis=1)
    assert np.all(np.abs(radii - radii[0]) < 1e-9)


def test_arc_uniform_azimuth_sweep():
    s = still_story(T=91)
    traj = gen_arc(s, preset(), math.radians(90), 1.0, "ccw", azimuth=0.3)
    anchor = np.array([0.0, 0.0, 0.8])
    # Oracle: recompute the azimuth per frame from positions.
    rel = traj.positions - anchor
    phis = np.unwrap(np.arctan2(rel[:, 1], rel[:, 0]))
    assert abs(phis[-1] - phis[0] - math.radians(90)) < 1e-9
    steps = np.diff(phis)
    assert np.allclose(steps, steps[0], atol=1e-9)


def test_arc_mirror_directions():
    s = still_story(T=40)
    ccw = gen_arc(s, preset(), math.radians(120), 2.0, "ccw", azimuth=0.0)
    cw = gen_arc(s, preset(), math.radians(120), 2.0, "cw", azimuth=0.0)
    mirrored = ccw.positions.copy()
    mirrored[:, 1] *= -1.0  # reflect through the start-azimuth (xz) plane
    assert np.allclose(cw.positions, mirrored, atol=1e-12)


def test_arc_sweep_gate():
    with pytest.raises(DomainError):
        gen_arc(still_story(), preset(), math.radians(60), 1.0, "ccw")


def test_trajectory_csv_roundtrip():
    s = straight_story(T=20)
    traj = gen_follow(s, preset(), lam=10.0, azimuth=0.9)
    text = trajectory_to_csv(traj)
    back = trajectory_from_csv(text)
    assert np.array_equal(back.positions, traj.positions)
    assert np.array_equal(back.rotations, traj.rotations)
    assert np.array_equal(back.focals, traj.focals)
    assert back.tag.to_dict() == traj.tag.to_dict()


def test_look_at_residual_across_generators():
    # Every pose that tracks a target keeps the forward axis on it (< 1e-6 rad)
    # with an exactly level horizon.
    s = still_story(T=25, pos=(2.0, 1.0, 0.0))
    aim = np.array([2.0, 1.0, 0.875 * 1.6])
    cases = [
        gen_static(s, preset(), azimuth=0.9),
        gen_push_pull(s, preset(), mu=0.6, lam=0.1, azimuth=2.2),
        gen_dolly_pedestal(s, preset(), "dolly", (1.0, -0.5, 0.0), 10.0, azimuth=1.1),
        gen_dolly_pedestal(s, preset(), "pedestal", (0.0, 0.0, 0.8), 1.0, azimuth=4.0),
        gen_arc(s, preset(), math.radians(95), 1.0, "cw", azimuth=5.1),
    ]
    for traj in cases:
        for t in range(len(traj)):
            pose = traj.pose(t)
            assert pose.roll == 0.0
            direction = aim - pose.position
            direction /= np.linalg.norm(direction)
            cosang = float(np.clip(pose.forward() @ direction, -1.0, 1.0))
            assert math.acos(cosang) < 1e-6, traj.tag.movement


def test_angle_theta_presets_exact():
    assert ANGLE_THETA[Angle.EYE_LEVEL] == math.pi / 2
    assert ANGLE_THETA[Angle.HIGH] == 2 * math.pi / 5
    assert ANGLE_THETA[Angle.LOW] == 4 * math.pi / 5
    traj = gen_static(still_story(), preset(Scale.FULL, Angle.HIGH))
    anchor = np.array([0.0, 0.0, 0.8])
    rel = traj.positions[0] - anchor
    theta = math.acos(rel[2] / np.linalg.norm(rel))
    assert abs(theta - 2 * math.pi / 5) < 1e-12


def test_generator_tag_roundtrip():
    tag = GeneratorTag("arc", "medium", "low", azimuth=0.5, lam=10.0,
                       sweep_rad=1.6, direction="cw", notes=("x",))
    assert GeneratorTag.from_dict(tag.to_dict()).key() == tag.key()
