"""Command-line interface: batch twin of the HTTP service.

Both front ends drive the same pipeline code, so a CLI run and an API run
with the same seed produce identical manifests.
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from . import __version__
from .pipeline import (PipelineConfig, export_storyboard, generate_line,
                       load_model_if_configured, materialize_line)
from .project import IncompleteSelection, Placement, Project, ProjectStore
from .scene import load_registry
from .shots import contact_sheet

ASSETS = Path(__file__).parent / "assets"

store_option = click.option(
    "--store", envvar="PREVIZ_STORE", default="./previz_store", show_default=True,
    help="Project store root (env PREVIZ_STORE).")
registry_option = click.option(
    "--registry", envvar="PREVIZ_REGISTRY", default=str(ASSETS / "registry.json"),
    show_default=True, help="Asset registry document (env PREVIZ_REGISTRY).")
seed_option = click.option("--seed", default=0, show_default=True,
                           help="Deterministic run seed.")


def _config(seed: int, checkpoint: str | None = None,
            render_size: tuple[int, int] | None = None) -> PipelineConfig:
    kwargs = {"seed": seed, "checkpoint": checkpoint}
    if render_size is not None:
        kwargs["render_size"] = render_size
    return PipelineConfig(**kwargs)


@click.group()
@click.version_option(__version__)
def main():
    """Storyboard pre-visualization studio."""


@main.group()
def scene():
    """Scene asset commands."""


@scene.command("ls")
@registry_option
def scene_ls(registry):
    """List registered scenes."""
    reg = load_registry(registry)
    for sid in sorted(reg.scenes):
        graph = reg.scene(sid)
        objects = sum(1 for n in graph.nodes.values() if n.kind.value == "object")
        click.echo(f"{sid}: {len(graph)} nodes, {objects} objects")


@main.group()
def project():
    """Project store commands."""


@project.command("new")
@click.option("--id", "project_id", required=True)
@click.option("--scene", "scene_id", required=True)
@click.option("--place", "places", multiple=True,
              help="Placement as Name@x,y[,facing_rad]; repeatable.")
@click.option("--script", "script_file", type=click.Path(exists=True),
              help="Script file; each line becomes a project line.")
@store_option
@registry_option
def project_new(project_id, scene_id, places, script_file, store, registry):
    """Create a project with placements and script lines."""
    reg = load_registry(registry)
    if scene_id not in reg.scenes:
        raise click.ClickException(f"unknown scene {scene_id!r}")
    prj = Project(id=project_id, scene_id=scene_id, config=PipelineConfig().to_dict())
    for spec in places:
        name, _, coords = spec.partition("@")
        parts = [float(v) for v in coords.split(",")]
        if len(parts) < 2:
            raise click.ClickException(f"bad placement {spec!r}")
        facing = parts[2] if len(parts) > 2 else 0.0
        prj.set_placement(Placement(name, (parts[0], parts[1], 0.0), facing))
    if script_file:
        for raw in Path(script_file).read_text(encoding="utf-8").splitlines():
            stripped = raw.strip()
            if stripped and not stripped.startswith("#"):
                prj.add_line(stripped)
    path = ProjectStore(store).save(prj)
    click.echo(f"created {project_id} ({len(prj.lines)} lines) at {path}")


@main.command()
@click.option("--project", "project_id", required=True)
@click.option("--line", "line_index", type=int, default=None,
              help="Line to generate; omit for all lines.")
@click.option("--checkpoint", default=None, help="Ranker checkpoint (.npz).")
@click.option("--preview", is_flag=True, help="Use 320x180 preview render size.")
@store_option
@registry_option
@seed_option
def propose(project_id, line_index, checkpoint, preview, store, registry, seed):
    """Generate, simulate and rank proposals for script lines."""
    reg = load_registry(registry)
    cfg = _config(seed, checkpoint, (320, 180) if preview else None)
    model = load_model_if_configured(cfg)
    st = ProjectStore(store)
    prj = st.load(project_id)
    indices = [line_index] if line_index is not None else [ln.index for ln in prj.lines]
    for idx in indices:
        record = generate_line(prj, idx, reg, cfg, model=model)
        flag = " ".join(record.warnings)
        click.echo(f"line {idx}: {record.proposal_count} proposals "
                   f"(run {record.run_id}){(' WARN ' + flag) if flag else ''}")
    st.save(prj)


@main.command()
@click.option("--project", "project_id", required=True)
@click.option("--line", "line_index", type=int, required=True)
@click.option("--proposal", "proposal_id", default=None,
              help="Proposal id; defaults to the top-ranked one.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--keyframes-only", is_flag=True, help="Write only the contact sheet.")
@store_option
@registry_option
def render(project_id, line_index, proposal_id, out_dir, keyframes_only,
           store, registry):
    """Render one proposal's frames (and contact sheet) to a directory."""
    from PIL import Image

    reg = load_registry(registry)
    prj = ProjectStore(store).load(project_id)
    line = prj.lines[line_index]
    if line.run is None:
        raise click.ClickException(f"line {line_index} has no run; propose first")
    run_cfg = PipelineConfig.from_dict(line.run.config)
    shots = materialize_line(prj, line_index, reg, run_cfg)
    pid = proposal_id or line.run.entries[0]["id"]
    if pid not in shots:
        raise click.ClickException(f"no proposal {pid!r} in line {line_index}'s run")
    shot = shots[pid]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    Image.fromarray(contact_sheet(shot, frame_size=run_cfg.preview_size)).save(
        out / "contact_sheet.png")
    if not keyframes_only:
        for t in range(shot.duration):
            Image.fromarray(shot.render_frame_at(t).pixels).save(
                out / f"frame_{t:04d}.png")
    click.echo(f"rendered {pid} to {out}")


@main.command("train-ranker")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--epochs", default=60, show_default=True)
@click.option("--batch", default=128, show_default=True)
@click.option("--lr", default=1e-3, show_default=True)
@click.option("--k", "queue_size", default=6553, show_default=True,
              help="Contrastive dictionary size.")
@click.option("--corpus", "corpus_file", type=click.Path(exists=True),
              default=str(ASSETS / "corpus_10.lines"), show_default=True)
@click.option("--scene", "scene_id", default="apartment", show_default=True)
@click.option("--positives", default=500, show_default=True)
@click.option("--negatives", default=500, show_default=True)
@click.option("--holdout", default=0.1, show_default=True)
@click.option("--log", "log_path", type=click.Path(), default=None,
              help="Per-epoch loss log (tab-delimited).")
@click.option("--report", "report_path", type=click.Path(), default=None,
              help="Evaluation report (JSON).")
@registry_option
@seed_option
def train_ranker_cmd(out_path, epochs, batch, lr, queue_size, corpus_file,
                     scene_id, positives, negatives, holdout, log_path,
                     report_path, registry, seed):
    """Train the shot ranking model on a synthetic corpus."""
    from .corpus import (CorpusConfig, build_corpus, evaluate_ranking,
                         split_corpus, train_ranker)
    from .ranker import RankerConfig, save_checkpoint

    reg = load_registry(registry)
    corpus_cfg = CorpusConfig(scene_id=scene_id, n_positive=positives,
                              n_negative=negatives, seed=seed)
    text = Path(corpus_file).read_text(encoding="utf-8")
    extra = max(0, int(round(9 * positives * holdout)) - int(round(negatives * holdout)))
    click.echo("building corpus (positives, paired negatives, eval pool)...")
    pos, neg, extras = build_corpus(reg, text, corpus_cfg, extra_negatives=extra)
    train_pos, hold_pos = split_corpus(pos, holdout, seed=seed + 1)
    train_neg, hold_neg = split_corpus(neg, holdout, seed=seed + 2)
    samples = [s.sample() for s in train_pos + train_neg]
    click.echo(f"training on {len(samples)} shots "
               f"({epochs} epochs, batch {batch}, lr {lr}, K {queue_size})...")
    model, logs = train_ranker(samples, RankerConfig(queue_size=queue_size),
                               epochs=epochs, batch_size=batch, lr=lr, seed=seed,
                               log_path=log_path)
    report = evaluate_ranking(model, hold_pos, hold_neg + extras)
    save_checkpoint(model, out_path)
    click.echo(f"checkpoint: {out_path}")
    click.echo(f"held-out AUC {report.auc:.4f}, "
               f"top-decile recall {report.top_decile_recall:.4f} "
               f"(pool {report.n_pool})")
    if report_path:
        Path(report_path).write_text(json.dumps(report.to_dict(), indent=1),
                                     encoding="utf-8")


@main.command()
@click.option("--project", "project_id", required=True)
@click.option("--line", "line_index", type=int, default=None)
@click.option("--checkpoint", required=True, help="Ranker checkpoint (.npz).")
@store_option
@registry_option
def rank(project_id, line_index, checkpoint, store, registry):
    """Re-rank existing runs with a trained model (same shots, new order)."""
    import dataclasses

    reg = load_registry(registry)
    st = ProjectStore(store)
    prj = st.load(project_id)
    indices = [line_index] if line_index is not None else \
        [ln.index for ln in prj.lines if ln.run is not None]
    for idx in indices:
        line = prj.lines[idx]
        if line.run is None:
            raise click.ClickException(f"line {idx} has no run; propose first")
        run_cfg = dataclasses.replace(PipelineConfig.from_dict(line.run.config),
                                      checkpoint=checkpoint)
        model = load_model_if_configured(run_cfg)
        record = generate_line(prj, idx, reg, run_cfg, model=model)
        click.echo(f"line {idx}: re-ranked {record.proposal_count} proposals")
    st.save(prj)


@main.command()
@click.option("--project", "project_id", required=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--no-frames", is_flag=True, help="Manifest only, skip rendering.")
@store_option
@registry_option
def export(project_id, out_dir, no_frames, store, registry):
    """Export the selected shots, concatenated in line order."""
    reg = load_registry(registry)
    prj = ProjectStore(store).load(project_id)
    try:
        manifest = export_storyboard(prj, reg, PipelineConfig(), out_dir,
                                     render_frames=not no_frames)
    except IncompleteSelection as exc:
        raise click.ClickException(str(exc))
    click.echo(f"export manifest: {manifest}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8040, show_default=True)
@click.option("--checkpoint", default=None, help="Ranker checkpoint (.npz).")
@store_option
@registry_option
@seed_option
def serve(host, port, checkpoint, store, registry, seed):
    """Run the HTTP/JSON studio service."""
    import uvicorn

    from .service import create_app

    app = create_app(store, registry, _config(seed, checkpoint))
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
