"""Parsing story/camera scripts and querying the scene graph.

Run with:  python demos/01_scripts_and_scenes.py
"""

from pathlib import Path

from previz import (load_registry, parse_camera_script, parse_line,
                    parse_story_script, resolve_target, validate_against_assets)
from previz.scripts import ScriptError

ASSETS = Path(__file__).resolve().parents[1] / "src" / "previz" / "assets"

registry = load_registry(ASSETS / "registry.json")
scene = registry.scene("apartment")

print("== story tuples ==")
for text in ["(Anna walk-to door)", "(Bob sing)", "(Cara sit)"]:
    script = parse_story_script(text)
    print(f"  {text:24s} -> char={script.character_id} verb={script.action_verb} "
          f"target={script.target_ref}")

print("\n== camera tuples (hyphen aliases normalize) ==")
for text in ["(follow medium eye-level)", "(arc close-up low)",
             "(zoom-in full high)"]:
    cam = parse_camera_script(text)
    print(f"  {text:28s} -> {cam.movement.value}/{cam.scale.value}/{cam.angle.value}")

print("\n== structured syntax errors carry byte offsets ==")
for bad in ["(Anna walk-to)", "(hover medium eye-level);(x)",
            "(Bob sing);(hover medium eye-level)"]:
    try:
        parse_line(bad)
    except ScriptError as exc:
        print(f"  {bad!r}: {exc.message} @ byte {exc.offset}")

print("\n== asset validation never throws, it reports ==")
for text in ["(Anna walk-to door)", "(Zed walk-to door)", "(Anna moonwalk door)"]:
    report = validate_against_assets(parse_story_script(text), registry)
    print(f"  {text:24s} -> {'ok' if report.ok() else '; '.join(report.problems)}")

print("\n== world positions compose along the scene tree ==")
for target in ["door", "sofa", "spawn_Anna"]:
    print(f"  {target:12s} at {resolve_target(scene, target).round(3)}")
