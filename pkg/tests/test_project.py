import numpy as np
import pytest

from previz.project import (IncompleteSelection, NotFound, Placement, Project,
                            ProjectStore, RunRecord, StatsTracker,
                            VersionMismatch, compute_stats)
from previz.scripts import ScriptError


def _project_with_runs(n_lines=3):
    prj = Project(id="p1", scene_id="apartment")
    prj.set_placement(Placement("Anna", (1.5, 1.5, 0.0), 0.3))
    movements = ["static", "follow", "arc"]
    for i in range(n_lines):
        line = prj.add_line(f"(Bob sing);({movements[i % 3]} medium eye-level)")
        entries = [{"id": f"p1:{i:02d}:run:{k:03d}", "rank": k, "score": 1.0 - 0.1 * k,
                    "camera_tag": {"movement": movements[i % 3], "scale": "medium",
                                   "angle": "eye_level"},
                    "duration_frames": 100}
                   for k in range(4)]
        line.run = RunRecord(run_id="run", seed=0, config={}, entries=entries)
    return prj


def test_store_roundtrip_empty(tmp_path):
    store = ProjectStore(tmp_path)
    prj = Project(id="empty", scene_id="apartment")
    store.save(prj)
    assert store.load("empty") == prj


def test_store_roundtrip_full(tmp_path):
    store = ProjectStore(tmp_path)
    prj = _project_with_runs()
    prj.lines[0].selection = prj.lines[0].run.entries[0]["id"]
    store.save(prj)
    # Oracle: deep field-for-field comparison via dataclass equality.
    assert store.load("p1") == prj


def test_store_not_found(tmp_path):
    with pytest.raises(NotFound):
        ProjectStore(tmp_path).load("ghost")


def test_future_schema_version_rejected(tmp_path):
    store = ProjectStore(tmp_path)
    store.save(Project(id="p2", scene_id="apartment"))
    path = store.path_of("p2")
    text = path.read_text().replace('"schema_version": 1', '"schema_version": 99')
    path.write_text(text)
    with pytest.raises(VersionMismatch):
        store.load("p2")


def test_add_line_syntax_checked():
    prj = Project(id="p", scene_id="apartment")
    with pytest.raises(ScriptError):
        prj.add_line("(Bob sing);(hover medium eye-level)")


def test_stats_counts_sum_to_selected():
    prj = _project_with_runs(3)
    prj.lines[0].selection = prj.lines[0].run.entries[0]["id"]
    prj.lines[2].selection = prj.lines[2].run.entries[1]["id"]
    stats = compute_stats(prj)
    assert stats.total_shots == 2
    assert sum(stats.by_movement.values()) == 2
    assert sum(stats.by_scale.values()) == 2
    assert sum(stats.by_angle.values()) == 2
    assert stats.total_frames == 200


def test_stats_incremental_matches_recompute():
    rng = np.random.default_rng(0)
    prj = _project_with_runs(5)
    tracker = StatsTracker(prj)
    for _ in range(200):
        idx = int(rng.integers(0, 5))
        line = prj.lines[idx]
        old = line.selection
        if rng.random() < 0.2:
            new = None
        else:
            new = line.run.entries[int(rng.integers(0, 4))]["id"]
        line.selection = new
        tracker.apply_selection(prj, idx, old, new)
        assert tracker.stats == compute_stats(prj)


def test_unselected_indices():
    prj = _project_with_runs(3)
    prj.lines[1].selection = prj.lines[1].run.entries[0]["id"]
    assert prj.unselected_indices() == [0, 2]
    with pytest.raises(IncompleteSelection) as excinfo:
        raise IncompleteSelection(prj.unselected_indices())
    assert excinfo.value.missing_lines == [0, 2]
