import numpy as np
import pytest

from previz.camera import gen_follow, gen_push_pull, gen_static
from previz.shots import (LengthMismatch, camera_jerk, contact_sheet,
                          keyframe_indices, perturb_negative, sample_frames,
                          sample_indices, simulate_shot)

from conftest import make_scene
from test_camera import preset, still_story, straight_story

SCENE = make_scene([{"id": "crate", "position": (8.0, 2.0, 0.4),
                     "half_extents": (0.4, 0.4, 0.4)}])
SIZE = (160, 90)


def _static_shot(T=20):
    s = still_story(T=T, pos=(5.0, 5.0, 0.0))
    traj = gen_static(s, preset(), azimuth=0.3)
    return simulate_shot(SCENE, s, traj, SIZE)


def test_static_shot_frames_identical_and_zero_jerk():
    shot = _static_shot(T=6)
    frames = [shot.render_frame_at(t) for t in range(3)]
    assert frames[0].pixels.tobytes() == frames[1].pixels.tobytes() == frames[2].pixels.tobytes()
    assert shot.metrics.jerk == 0.0
    assert np.all(shot.metrics.camera_speed == 0.0)


def test_follow_constant_center_offset():
    s = straight_story(T=60, length=3.0)
    s = type(s)(clip=s.clip, path=type(s.path)(s.path.waypoints + np.array([2.0, 4.0, 0.0])),
                character_id=s.character_id, height_m=s.height_m,
                capsule_radius_m=s.capsule_radius_m)
    traj = gen_follow(s, preset(), lam=1.0, azimuth=0.8)
    shot = simulate_shot(SCENE, s, traj, SIZE)
    offsets = shot.metrics.center_offset
    # Oracle: constant-offset geometry of the follow rule at identity easing.
    assert np.max(np.abs(offsets - offsets[0])) < 1e-3


def test_push_fill_strictly_increasing():
    s = still_story(T=40, pos=(5.0, 5.0, 0.0))
    traj = gen_push_pull(s, preset(), mu=0.5, lam=1.0, azimuth=0.2)
    shot = simulate_shot(SCENE, s, traj, SIZE)
    assert np.all(np.diff(shot.metrics.fill_ratio) > 0)


def test_length_mismatch_rejected():
    s = still_story(T=30)
    traj = gen_static(still_story(T=40), preset())
    with pytest.raises(LengthMismatch):
        simulate_shot(SCENE, s, traj, SIZE)


def test_perturb_zero_sigma_is_identity():
    shot = _static_shot()
    traj = perturb_negative(shot.camera, sigma_pos=0.0, sigma_rot=0.0, seed=3)
    assert np.array_equal(traj.positions, shot.camera.positions)
    assert np.array_equal(traj.rotations, shot.camera.rotations)
    assert traj.tag.negative_of == "unknown"


def test_perturb_same_seed_identical():
    shot = _static_shot()
    a = perturb_negative(shot.camera, seed=11, source_id=shot.id)
    b = perturb_negative(shot.camera, seed=11, source_id=shot.id)
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.rotations, b.rotations)


def test_perturb_raises_jerk_statistically():
    s = still_story(T=50, pos=(5.0, 5.0, 0.0))
    base = gen_push_pull(s, preset(), mu=0.8, lam=1.0)
    base_jerk = camera_jerk(base.positions)
    greater = sum(
        camera_jerk(perturb_negative(base, sigma_pos=0.05, seed=seed).positions) > base_jerk
        for seed in range(100))
    # Oracle: white-noise third differences dominate a smooth ramp.
    assert greater >= 99


def test_perturb_keeps_focal():
    shot = _static_shot()
    traj = perturb_negative(shot.camera, seed=5)
    assert np.array_equal(traj.focals, shot.camera.focals)
    assert np.array_equal(traj.rotations[:, 0], shot.camera.rotations[:, 0])  # roll


def test_sample_indices_all_when_equal():
    assert sample_indices(8, 8) == list(range(8))


def test_sample_indices_midpoints():
    # Oracle: segment-midpoint arithmetic for T=80, k=8.
    assert sample_indices(80, 8) == [5, 15, 25, 35, 45, 55, 65, 75]


def test_sample_indices_t9_distinct_sorted():
    idx = sample_indices(9, 8)
    assert len(set(idx)) == 8
    assert idx == sorted(idx)
    assert all(0 <= i < 9 for i in idx)


def test_sample_frames_count():
    shot = _static_shot(T=20)
    frames = sample_frames(shot, k=8)
    assert len(frames) == 8


def test_contact_sheet_layout():
    shot = _static_shot(T=20)
    sheet = contact_sheet(shot, frame_size=(80, 45))
    assert sheet.shape == (45, 240, 3)
    assert keyframe_indices(20) == (1, 11, 18)


def test_shot_speed_metric():
    s = still_story(T=30, pos=(5.0, 5.0, 0.0))
    traj = gen_push_pull(s, preset(), mu=0.5, lam=1.0)
    shot = simulate_shot(SCENE, s, traj, SIZE)
    # Oracle: radius shrinks 0.4 m over 29 frames at 25 fps.
    expected = (0.8 - 0.4) / 29.0 * 25.0
    assert np.allclose(shot.metrics.camera_speed[:-1], expected, atol=1e-9)
