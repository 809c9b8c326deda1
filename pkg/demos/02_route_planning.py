"""Walkability grids and diverse route proposals.

Run with:  python demos/02_route_planning.py
"""

from pathlib import Path

import numpy as np

from previz import build_grid, load_registry, plan_paths, resolve_target
from previz.story import spawn_position

ASSETS = Path(__file__).resolve().parents[1] / "src" / "previz" / "assets"

registry = load_registry(ASSETS / "registry.json")
scene = registry.scene("apartment")
grid = build_grid(scene, cell_size_m=0.1,
                  capsule_radius_m=registry.characters["Anna"].capsule_radius_m)
print(f"grid {grid.shape[0]}x{grid.shape[1]} cells, "
      f"{int(grid.blocked.sum())} blocked, "
      f"{grid.walkable_components()} walkable component(s)")

start = spawn_position(scene, "Anna")
goal = resolve_target(scene, "door")
paths = plan_paths(grid, start, goal, M=3, T=100, retarget_blocked_goal=True)
print(f"\n{len(paths)} route(s) from Anna's spawn to the door "
      f"(goal retargeted to a stand-point beside it):")
for i, path in enumerate(paths):
    print(f"  route {i}: length {path.length():.2f} m over {len(path)} frames, "
          f"ends at {path.waypoints[-1][:2].round(2)}")

# ASCII map: '#' blocked, '.' free, digits mark each route (coarsened 4x).
stride = 4
cells = {}
for i, path in enumerate(paths):
    for p in path.waypoints:
        cx, cy = grid.cell_of(p)
        cells[(cx // stride, cy // stride)] = str(i)
nx, ny = grid.shape
print()
for gy in range(ny // stride - 1, -1, -1):
    row = []
    for gx in range(nx // stride):
        block = grid.blocked[gx * stride:(gx + 1) * stride,
                             gy * stride:(gy + 1) * stride]
        row.append(cells.get((gx, gy), "#" if block.any() else "."))
    print("".join(row))
