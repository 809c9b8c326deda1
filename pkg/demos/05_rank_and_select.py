"""The project pipeline: generate a ranked proposal run and inspect it.

Run with:  python demos/05_rank_and_select.py
Uses the checkpoint-free metric ranking; demos/06 trains the learned ranker.
"""

from pathlib import Path

from previz.pipeline import PipelineConfig, generate_line
from previz.project import Placement, Project, compute_stats

ASSETS = Path(__file__).resolve().parents[1] / "src" / "previz" / "assets"

from previz import load_registry  # noqa: E402

registry = load_registry(ASSETS / "registry.json")
cfg = PipelineConfig(render_size=(320, 180))

project = Project(id="demo", scene_id="apartment", config=cfg.to_dict())
project.set_placement(Placement("Anna", (1.5, 1.5, 0.0), 0.0))
project.add_line("(Anna walk-to door);(follow medium eye-level)")
project.add_line("(Anna sit);(arc close-up low)")

for line in project.lines:
    record = generate_line(project, line.index, registry, cfg)
    print(f"line {line.index}: {line.text}")
    print(f"  {record.proposal_count} proposals (run {record.run_id}), "
          f"warnings: {record.warnings or 'none'}")
    for entry in record.entries[:5]:
        tag = entry["camera_tag"]
        extras = {k: v for k, v in tag.items()
                  if k in ("azimuth", "lam", "mu", "direction", "reference")}
        print(f"    #{entry['rank']} score {entry['score']:.4f} "
              f"clip {entry['clip_key']:11s} jerk {entry['metrics']['jerk']:.5f} "
              f"{extras}")
    line.selection = record.entries[0]["id"]

stats = compute_stats(project)
print(f"\nselected {stats.total_shots} shots, {stats.total_frames} frames total")
print(f"movement counts: "
      f"{ {k: v for k, v in stats.by_movement.items() if v} }")
