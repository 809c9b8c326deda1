"""Project documents: placements, script lines, runs, selections, stats.

Projects persist as JSON under a store root (one file per project) with a
schema version gate.  Loading a saved project reproduces it field for field.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .scripts import Angle, Movement, Scale, parse_line

PROJECT_SCHEMA_VERSION = 1


class NotFound(KeyError):
    pass


class VersionMismatch(ValueError):
    pass


class IncompleteSelection(ValueError):
    def __init__(self, missing_lines: list[int]):
        super().__init__(f"lines without a selected proposal: {missing_lines}")
        self.missing_lines = missing_lines


@dataclass(frozen=True)
class Placement:
    character_id: str
    position: tuple[float, float, float]
    facing_rad: float = 0.0


@dataclass
class RunRecord:
    """One generation run for one script line."""

    run_id: str
    seed: int
    config: dict
    entries: list[dict] = field(default_factory=list)  # ranked manifest rows
    warnings: list[str] = field(default_factory=list)

    @property
    def proposal_count(self) -> int:
        return len(self.entries)


@dataclass
class LineState:
    index: int
    text: str
    selection: str | None = None       # proposal id
    run: RunRecord | None = None

    def parsed(self):
        return parse_line(self.text, index=self.index)


@dataclass
class Project:
    id: str
    scene_id: str
    placements: list[Placement] = field(default_factory=list)
    lines: list[LineState] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    schema_version: int = PROJECT_SCHEMA_VERSION

    def placement_of(self, character_id: str) -> Placement | None:
        for p in self.placements:
            if p.character_id == character_id:
                return p
        return None

    def set_placement(self, placement: Placement):
        self.placements = [p for p in self.placements
                           if p.character_id != placement.character_id]
        self.placements.append(placement)

    def add_line(self, text: str) -> LineState:
        line = LineState(index=len(self.lines), text=text)
        line.parsed()  # syntax-checks now
        self.lines.append(line)
        return line

    def selected_lines(self) -> list[LineState]:
        return [ln for ln in self.lines if ln.selection is not None]

    def unselected_indices(self) -> list[int]:
        return [ln.index for ln in self.lines if ln.selection is None]

    def to_dict(self) -> dict:
        doc = asdict(self)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "Project":
        version = doc.get("schema_version")
        if version != PROJECT_SCHEMA_VERSION:
            raise VersionMismatch(f"project schema_version {version!r} not supported")
        placements = [Placement(p["character_id"], tuple(p["position"]),
                                p.get("facing_rad", 0.0))
                      for p in doc.get("placements", ())]
        lines = []
        for rec in doc.get("lines", ()):
            run = None
            if rec.get("run") is not None:
                rr = rec["run"]
                run = RunRecord(run_id=rr["run_id"], seed=rr["seed"],
                                config=rr["config"], entries=rr["entries"],
                                warnings=rr.get("warnings", []))
            lines.append(LineState(index=rec["index"], text=rec["text"],
                                   selection=rec.get("selection"), run=run))
        return cls(id=doc["id"], scene_id=doc["scene_id"], placements=placements,
                   lines=lines, config=doc.get("config", {}))


class ProjectStore:
    """One JSON document per project under a root directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path_of(self, project_id: str) -> Path:
        return self.root / f"{project_id}.json"

    def save(self, project: Project) -> Path:
        path = self.path_of(project.id)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(project.to_dict(), sort_keys=True, indent=1),
                       encoding="utf-8")
        tmp.replace(path)
        return path

    def load(self, project_id: str) -> Project:
        path = self.path_of(project_id)
        if not path.exists():
            raise NotFound(f"no project {project_id!r} in {self.root}")
        return Project.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.json"))


@dataclass
class StatsSummary:
    """Shot style counts over the selected proposals."""

    by_movement: dict[str, int] = field(default_factory=dict)
    by_scale: dict[str, int] = field(default_factory=dict)
    by_angle: dict[str, int] = field(default_factory=dict)
    total_shots: int = 0
    total_frames: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _entry_by_id(line: LineState, proposal_id: str) -> dict | None:
    if line.run is None:
        return None
    for entry in line.run.entries:
        if entry["id"] == proposal_id:
            return entry
    return None


def compute_stats(project: Project) -> StatsSummary:
    """Recompute the statistics panel from scratch."""
    stats = StatsSummary(
        by_movement={m.value: 0 for m in Movement},
        by_scale={s.value: 0 for s in Scale},
        by_angle={a.value: 0 for a in Angle},
    )
    for line in project.selected_lines():
        entry = _entry_by_id(line, line.selection)
        if entry is None:
            continue
        tag = entry["camera_tag"]
        stats.by_movement[tag["movement"]] = stats.by_movement.get(tag["movement"], 0) + 1
        stats.by_scale[tag["scale"]] = stats.by_scale.get(tag["scale"], 0) + 1
        stats.by_angle[tag["angle"]] = stats.by_angle.get(tag["angle"], 0) + 1
        stats.total_shots += 1
        stats.total_frames += int(entry["duration_frames"])
    return stats


class StatsTracker:
    """Incrementally maintained counterpart of compute_stats."""

    def __init__(self, project: Project):
        self.stats = compute_stats(project)

    def apply_selection(self, project: Project, line_index: int,
                        old_id: str | None, new_id: str | None):
        line = project.lines[line_index]
        for pid, sign in ((old_id, -1), (new_id, +1)):
            if pid is None:
                continue
            entry = _entry_by_id(line, pid)
            if entry is None:
                continue
            tag = entry["camera_tag"]
            self.stats.by_movement[tag["movement"]] += sign
            self.stats.by_scale[tag["scale"]] += sign
            self.stats.by_angle[tag["angle"]] += sign
            self.stats.total_shots += sign
            self.stats.total_frames += sign * int(entry["duration_frames"])
