"""HTTP/JSON API for the two-stage storyboard workflow.

The service wraps the same pipeline the CLI drives: stage one edits scene,
characters and placements; stage two submits script lines, polls generation
jobs, pages through ranked proposals and selects shots.  Long generations
run as background jobs with polled status; frames render on demand.
"""

from __future__ import annotations

import io
import math
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .camera import CameraPose, look_at
from .pipeline import (PipelineConfig, export_storyboard, generate_line,
                       load_model_if_configured, materialize_line)
from .project import (IncompleteSelection, NotFound, Placement, Project,
                      ProjectStore, VersionMismatch, compute_stats)
from .navgrid import build_grid
from .raster import render_scene_frame, render_top_view
from .ranker import RankerModel
from .scene import AssetRegistry, load_registry
from .scripts import ScriptError, validate_against_assets
from .story import CharacterState
from PIL import Image


class PlacementBody(BaseModel):
    character_id: str
    position: tuple[float, float, float]
    facing_rad: float = 0.0


class LineBody(BaseModel):
    text: str


class SelectBody(BaseModel):
    proposal_id: str


class ProjectBody(BaseModel):
    id: str
    scene_id: str


@dataclass
class Job:
    id: str
    project_id: str
    line_index: int
    status: str = "queued"       # queued | running | done | failed
    error: str | None = None
    proposal_count: int | None = None
    run_id: str | None = None


@dataclass
class AppState:
    store: ProjectStore
    registry: AssetRegistry
    cfg: PipelineConfig
    model: RankerModel | None = None
    jobs: dict[str, Job] = field(default_factory=dict)
    locks: dict[str, threading.Lock] = field(default_factory=dict)
    lock_guard: threading.Lock = field(default_factory=threading.Lock)
    shot_cache: dict[str, dict] = field(default_factory=dict)
    executor: ThreadPoolExecutor = field(default_factory=lambda: ThreadPoolExecutor(2))

    def project_lock(self, project_id: str) -> threading.Lock:
        with self.lock_guard:
            return self.locks.setdefault(project_id, threading.Lock())


def _png_response(pixels: np.ndarray) -> Response:
    buf = io.BytesIO()
    Image.fromarray(pixels).save(buf, format="PNG")
    return Response(content=buf.getvalue(), media_type="image/png")


def create_app(store_root: str | Path, registry_path: str | Path,
               cfg: PipelineConfig | None = None) -> FastAPI:
    cfg = cfg or PipelineConfig()
    state = AppState(store=ProjectStore(store_root),
                     registry=load_registry(registry_path), cfg=cfg,
                     model=load_model_if_configured(cfg))
    app = FastAPI(title="previz studio", version="0.1.0")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    app.state.previz = state

    def _load_project(project_id: str) -> Project:
        try:
            return state.store.load(project_id)
        except NotFound:
            raise HTTPException(404, f"no project {project_id!r}")
        except VersionMismatch as exc:
            raise HTTPException(409, str(exc))

    def _line_or_404(project: Project, line_index: int):
        if not 0 <= line_index < len(project.lines):
            raise HTTPException(404, f"no line {line_index} in {project.id!r}")
        return project.lines[line_index]

    @app.get("/api/scenes")
    def list_scenes():
        scenes = []
        for sid in sorted(state.registry.scenes):
            graph = state.registry.scene(sid)
            lo, hi = graph.bounds_xy()
            scenes.append({"id": sid, "nodes": len(graph),
                           "bounds": [lo.tolist(), hi.tolist()],
                           "objects": sorted(n.id for n in graph.nodes.values()
                                             if n.kind.value == "object")})
        return {"scenes": scenes}

    @app.get("/api/characters")
    def list_characters():
        return {"characters": [
            {"id": cid, "height_m": spec.height_m,
             "capsule_radius_m": spec.capsule_radius_m}
            for cid, spec in sorted(state.registry.characters.items())]}

    @app.post("/api/projects")
    def create_project(body: ProjectBody):
        if body.scene_id not in state.registry.scenes:
            raise HTTPException(422, f"unknown scene {body.scene_id!r}")
        project = Project(id=body.id, scene_id=body.scene_id,
                          config=state.cfg.to_dict())
        state.store.save(project)
        return project.to_dict()

    @app.get("/api/projects/{project_id}")
    def get_project(project_id: str):
        return _load_project(project_id).to_dict()

    @app.put("/api/projects/{project_id}")
    def put_project(project_id: str, body: dict):
        _load_project(project_id)  # must exist
        body["id"] = project_id
        try:
            project = Project.from_dict(body)
        except (VersionMismatch, KeyError, TypeError) as exc:
            raise HTTPException(422, f"bad project document: {exc}")
        with state.project_lock(project_id):
            state.store.save(project)
        return project.to_dict()

    @app.post("/api/projects/{project_id}/placements")
    def place_character(project_id: str, body: PlacementBody):
        project = _load_project(project_id)
        if body.character_id not in state.registry.characters:
            raise HTTPException(422, f"unknown character {body.character_id!r}")
        scene = state.registry.scene(project.scene_id)
        radius = state.registry.characters[body.character_id].capsule_radius_m
        grid = build_grid(scene, state.cfg.cell_size_m, radius)
        if not grid.walkable_point(body.position):
            raise HTTPException(422, "placement is inside an obstacle or out of bounds")
        with state.project_lock(project_id):
            project = state.store.load(project_id)
            project.set_placement(Placement(body.character_id, tuple(body.position),
                                            body.facing_rad))
            state.store.save(project)
        return project.to_dict()

    @app.post("/api/projects/{project_id}/lines")
    def add_line(project_id: str, body: LineBody):
        project = _load_project(project_id)
        with state.project_lock(project_id):
            project = state.store.load(project_id)
            try:
                line = project.add_line(body.text)
            except ScriptError as exc:
                raise HTTPException(422, {"message": exc.message, "offset": exc.offset})
            parsed = line.parsed()
            report = validate_against_assets(parsed.story, state.registry)
            if not report.ok():
                project.lines.pop()
                raise HTTPException(422, {"message": "; ".join(report.problems),
                                          "offset": 0})
            state.store.save(project)
        return {"index": line.index, "text": line.text}

    def _run_job(job: Job):
        job.status = "running"
        try:
            with state.project_lock(job.project_id):
                project = state.store.load(job.project_id)
                record = generate_line(project, job.line_index, state.registry,
                                       state.cfg, model=state.model)
                state.store.save(project)
            job.proposal_count = record.proposal_count
            job.run_id = record.run_id
            job.status = "done"
        except Exception as exc:  # report through job status, never crash the pool
            job.status = "failed"
            job.error = str(exc)

    @app.post("/api/projects/{project_id}/lines/{line_index}/generate")
    def generate(project_id: str, line_index: int):
        project = _load_project(project_id)
        _line_or_404(project, line_index)
        job = Job(id=uuid.uuid4().hex[:12], project_id=project_id,
                  line_index=line_index)
        state.jobs[job.id] = job
        state.executor.submit(_run_job, job)
        return {"job_id": job.id}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            raise HTTPException(404, f"no job {job_id!r}")
        return {"id": job.id, "status": job.status, "error": job.error,
                "proposal_count": job.proposal_count, "run_id": job.run_id,
                "project_id": job.project_id, "line_index": job.line_index}

    @app.get("/api/projects/{project_id}/lines/{line_index}/proposals")
    def proposals(project_id: str, line_index: int,
                  top: int = Query(default=5, ge=1, le=200),
                  offset: int = Query(default=0, ge=0)):
        project = _load_project(project_id)
        line = _line_or_404(project, line_index)
        if line.run is None:
            raise HTTPException(404, "line has no generation run yet")
        entries = line.run.entries[offset:offset + top]
        return {"run_id": line.run.run_id, "total": len(line.run.entries),
                "offset": offset, "warnings": line.run.warnings,
                "selection": line.selection, "proposals": entries}

    @app.post("/api/projects/{project_id}/lines/{line_index}/select")
    def select(project_id: str, line_index: int, body: SelectBody):
        with state.project_lock(project_id):
            project = _load_project(project_id)
            line = _line_or_404(project, line_index)
            if line.run is None or all(e["id"] != body.proposal_id
                                       for e in line.run.entries):
                raise HTTPException(422, f"proposal {body.proposal_id!r} is not "
                                         f"part of line {line_index}'s run")
            line.selection = body.proposal_id
            state.store.save(project)
        return {"line": line_index, "selection": body.proposal_id}

    @app.get("/api/projects/{project_id}/stats")
    def stats(project_id: str):
        return compute_stats(_load_project(project_id)).to_dict()

    def _materialized(project: Project, line_index: int) -> dict:
        line = project.lines[line_index]
        key = f"{project.id}:{line_index}:{line.run.run_id}"
        if key not in state.shot_cache:
            if len(state.shot_cache) > 8:
                state.shot_cache.clear()
            run_cfg = PipelineConfig.from_dict(line.run.config)
            state.shot_cache[key] = materialize_line(project, line_index,
                                                     state.registry, run_cfg)
        return state.shot_cache[key]

    def _resolve_proposal(pid: str):
        parts = pid.split(":")
        if len(parts) != 4:
            raise HTTPException(404, f"malformed proposal id {pid!r}")
        project_id, line_str, run_id, _ = parts
        project = _load_project(project_id)
        line = _line_or_404(project, int(line_str))
        if line.run is None or line.run.run_id != run_id:
            raise HTTPException(404, f"proposal {pid!r} refers to a stale run")
        shots = _materialized(project, int(line_str))
        if pid not in shots:
            raise HTTPException(404, f"no proposal {pid!r}")
        return shots[pid]

    @app.get("/api/proposals/{pid}/frames/{t}.png")
    def proposal_frame(pid: str, t: int, width: int = Query(default=0, ge=0)):
        shot = _resolve_proposal(pid)
        if not 0 <= t < shot.duration:
            raise HTTPException(404, f"frame {t} outside [0, {shot.duration})")
        if width:
            size = (width, max(1, round(width * shot.size[1] / shot.size[0])))
            shot = type(shot)(id=shot.id, scene=shot.scene, story=shot.story,
                              camera=shot.camera, size=size, metrics=shot.metrics)
        return _png_response(shot.render_frame_at(t).pixels)

    @app.get("/api/proposals/{pid}/sheet.png")
    def proposal_sheet(pid: str):
        from .shots import contact_sheet
        shot = _resolve_proposal(pid)
        run_cfg = state.cfg
        return _png_response(contact_sheet(shot, frame_size=run_cfg.preview_size))

    @app.get("/api/projects/{project_id}/monitor.png")
    def monitor(project_id: str, yaw_deg: float = 45.0, pitch_deg: float = -35.0,
                dist: float = 0.0, width: int = Query(default=480, ge=32, le=1920),
                mode: str = Query(default="orbit", pattern="^(orbit|top)$")):
        project = _load_project(project_id)
        scene = state.registry.scene(project.scene_id)
        if mode == "top":
            characters = [
                CharacterState(position=np.asarray(p.position, dtype=float),
                               facing_rad=p.facing_rad, posture_label="stand",
                               height_m=state.registry.characters[p.character_id].height_m)
                for p in project.placements
                if p.character_id in state.registry.characters]
            return _png_response(render_top_view(scene, characters, width).pixels)
        lo, hi = scene.bounds_xy()
        center = np.array([(lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, 0.0])
        if dist <= 0:
            dist = 0.9 * float(np.linalg.norm(hi - lo))
        yaw = math.radians(yaw_deg)
        pitch = math.radians(max(-85.0, min(-5.0, pitch_deg)))
        offset = dist * np.array([math.cos(pitch) * math.cos(yaw),
                                  math.cos(pitch) * math.sin(yaw),
                                  -math.sin(pitch)])
        position = center + offset
        roll, look_pitch, look_yaw = look_at(position, center)
        pose = CameraPose(position, roll, look_pitch, look_yaw, 35.0)
        characters = []
        for placement in project.placements:
            spec = state.registry.characters.get(placement.character_id)
            if spec is None:
                continue
            characters.append(CharacterState(
                position=np.asarray(placement.position, dtype=float),
                facing_rad=placement.facing_rad, posture_label="stand",
                height_m=spec.height_m))
        size = (width, max(1, round(width * 9 / 16)))
        frame = render_scene_frame(scene, characters, pose, size)
        return _png_response(frame.pixels)

    @app.post("/api/projects/{project_id}/export")
    def export(project_id: str, out_dir: str, render: bool = True):
        project = _load_project(project_id)
        try:
            manifest = export_storyboard(project, state.registry, state.cfg,
                                         out_dir, render_frames=render)
        except IncompleteSelection as exc:
            raise HTTPException(422, {"message": str(exc),
                                      "missing_lines": exc.missing_lines})
        return {"manifest": str(manifest)}

    return app
