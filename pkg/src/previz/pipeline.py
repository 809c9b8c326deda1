"""Propose-simulate-rank orchestration shared by the CLI and the service.

A generation run is fully determined by (project, line, seed, config): the
planner, the enumeration grids and the ranking are all deterministic, so a
run can be re-materialized later to render frames without storing pixels.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .corpus import even_subsample
from .project import IncompleteSelection, Project, RunRecord
from .proposals import DEFAULT_ENUMERATION, EnumerationConfig, enumerate_camera_proposals
from .ranker import RankerModel, order_proposals, rank_shots
from .scene import AssetRegistry
from .scripts import format_camera_script, format_story_script, validate_against_assets
from .shots import ShotProposal, contact_sheet, simulate_shot
from .story import propose_story


class GenerationError(RuntimeError):
    def __init__(self, line_index: int, cause: Exception):
        super().__init__(f"line {line_index}: {cause}")
        self.line_index = line_index
        self.cause = cause


@dataclass(frozen=True)
class PipelineConfig:
    story_n: int = 3
    story_m: int = 3
    cell_size_m: float = 0.1
    render_size: tuple[int, int] = (1280, 720)
    preview_size: tuple[int, int] = (320, 180)
    max_proposals: int = 200
    min_proposals: int = 40
    seed: int = 0
    checkpoint: str | None = None
    enumeration: EnumerationConfig = DEFAULT_ENUMERATION

    def to_dict(self) -> dict:
        doc = dataclasses.asdict(self)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        kwargs = dict(doc)
        if "enumeration" in kwargs:
            enum_kwargs = dict(kwargs["enumeration"])
            for key, value in enum_kwargs.items():
                if isinstance(value, list):
                    enum_kwargs[key] = tuple(
                        tuple(v) if isinstance(v, list) else v for v in value)
            kwargs["enumeration"] = EnumerationConfig(**enum_kwargs)
        for key in ("render_size", "preview_size"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


def run_id_for(project_id: str, line_index: int, seed: int, cfg: PipelineConfig) -> str:
    payload = json.dumps([project_id, line_index, seed, cfg.to_dict()], sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def fallback_score(metrics) -> float:
    """Checkpoint-free ranking score from smoothness and centering."""
    return 1.0 / (1.0 + 25.0 * metrics.jerk + float(np.mean(metrics.center_offset)))


def _build_shots(project: Project, line_index: int, registry: AssetRegistry,
                 cfg: PipelineConfig) -> list[ShotProposal]:
    """The capped, deterministically ordered shot list for one line."""
    line = project.lines[line_index]
    parsed = line.parsed()
    report = validate_against_assets(parsed.story, registry)
    if not report.ok():
        raise ValueError("; ".join(report.problems))
    scene = registry.scene(project.scene_id)
    if parsed.story.target_ref is not None and parsed.story.target_ref not in scene.nodes:
        raise ValueError(f"target {parsed.story.target_ref!r} not in scene "
                         f"{project.scene_id!r}")
    placement = project.placement_of(parsed.story.character_id)
    spawn = placement.position if placement else None
    facing = placement.facing_rad if placement else 0.0
    stories = propose_story(parsed.story, scene, registry, N=cfg.story_n,
                            M=cfg.story_m, spawn=spawn, facing=facing,
                            cell_size_m=cfg.cell_size_m)
    pairs = []
    for s in stories:
        for c in enumerate_camera_proposals(parsed.camera, s, cfg.enumeration):
            pairs.append((s, c))
    pairs = even_subsample(pairs, cfg.max_proposals)
    run_id = run_id_for(project.id, line_index, cfg.seed, cfg)
    shots = []
    for idx, (s, c) in enumerate(pairs):
        shot_id = f"{project.id}:{line_index:02d}:{run_id}:{idx:03d}"
        shots.append(simulate_shot(scene, s, c, cfg.render_size, shot_id=shot_id))
    return shots


def generate_line(project: Project, line_index: int, registry: AssetRegistry,
                  cfg: PipelineConfig, model: RankerModel | None = None) -> RunRecord:
    """Run propose -> enumerate -> simulate -> rank for one line and attach
    the ranked manifest to the project (replacing any previous run)."""
    try:
        shots = _build_shots(project, line_index, registry, cfg)
        if model is not None:
            ranked = rank_shots(model, shots)
            ranker_kind = "model"
        else:
            for shot in shots:
                shot.score = fallback_score(shot.metrics)
            ranked = order_proposals(shots)
            ranker_kind = "metric-fallback"
    except Exception as exc:
        raise GenerationError(line_index, exc) from exc

    warnings = []
    if len(ranked) < cfg.min_proposals:
        warnings.append(f"below-band: {len(ranked)} proposals "
                        f"(target at least {cfg.min_proposals})")
    line = project.lines[line_index]
    parsed = line.parsed()
    entries = []
    for rank, shot in enumerate(ranked):
        entries.append({
            "id": shot.id,
            "rank": rank,
            "score": shot.score,
            "ranker": ranker_kind,
            "story_text": format_story_script(parsed.story),
            "camera_text": format_camera_script(parsed.camera),
            "clip_key": shot.story.clip.key,
            "duration_frames": shot.story.clip.duration_frames,
            "camera_tag": shot.camera.tag.to_dict(),
            "metrics": shot.metrics.to_dict(),
        })
    record = RunRecord(run_id=run_id_for(project.id, line_index, cfg.seed, cfg),
                       seed=cfg.seed, config=cfg.to_dict(), entries=entries,
                       warnings=warnings)
    line.run = record
    return record


def materialize_line(project: Project, line_index: int, registry: AssetRegistry,
                     cfg: PipelineConfig) -> dict[str, ShotProposal]:
    """Recreate the run's shot objects (for rendering) keyed by proposal id."""
    return {shot.id: shot for shot in _build_shots(project, line_index, registry, cfg)}


def _write_png(path: Path, pixels: np.ndarray):
    Image.fromarray(pixels).save(path, format="PNG")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def export_storyboard(project: Project, registry: AssetRegistry, cfg: PipelineConfig,
                      out_dir: str | Path, render_frames: bool = True) -> Path:
    """Write the selected shots, concatenated in line order, plus a global
    manifest.  Exports are byte-stable for identical inputs."""
    missing = project.unselected_indices()
    if missing:
        raise IncompleteSelection(missing)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "schema_version": 1,
        "project": project.id,
        "scene": project.scene_id,
        "total_frames": 0,
        "shots": [],
    }
    for line in project.lines:
        entry = next((e for e in line.run.entries if e["id"] == line.selection), None)
        if entry is None:
            raise ValueError(f"line {line.index}: selection {line.selection!r} "
                             f"is not part of its generation run")
        shot_dir_name = f"line_{line.index:02d}_" + line.selection.replace(":", "-")
        record = {
            "line": line.index,
            "proposal_id": line.selection,
            "story_text": entry["story_text"],
            "camera_text": entry["camera_text"],
            "camera_tag": entry["camera_tag"],
            "score": entry["score"],
            "duration_frames": entry["duration_frames"],
            "directory": shot_dir_name,
            "files": [],
        }
        if render_frames:
            run_cfg = PipelineConfig.from_dict(line.run.config)
            shots = materialize_line(project, line.index, registry, run_cfg)
            shot = shots[line.selection]
            shot_dir = out / shot_dir_name
            shot_dir.mkdir(exist_ok=True)
            sheet = contact_sheet(shot, frame_size=run_cfg.preview_size)
            _write_png(shot_dir / "contact_sheet.png", sheet)
            for t in range(shot.duration):
                frame = shot.render_frame_at(t)
                _write_png(shot_dir / f"frame_{t:04d}.png", frame.pixels)
            for file in sorted(shot_dir.iterdir()):
                record["files"].append({"name": file.name, "sha256": _sha256(file)})
        manifest["total_frames"] += int(entry["duration_frames"])
        manifest["shots"].append(record)
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=1),
                             encoding="utf-8")
    return manifest_path


def load_model_if_configured(cfg: PipelineConfig) -> RankerModel | None:
    if cfg.checkpoint is None:
        return None
    from .ranker import load_checkpoint
    return load_checkpoint(cfg.checkpoint)
