"""Walkability grids and multi-path planning.

The ground plane is rasterized into square cells; a cell is blocked when it
overlaps any object footprint inflated by the character capsule radius.
Routes come from 8-connected A* (octile metric, no corner cutting); extra
route alternatives are found by re-searching with a multiplicative cost
penalty inside a corridor around the paths already returned.  Every returned
path is resampled to exactly T waypoints at constant speed.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .scene import SceneGraph

SQRT2 = math.sqrt(2.0)


class PlanningError(Exception):
    pass


class StartBlocked(PlanningError):
    pass


class GoalBlocked(PlanningError):
    pass


class Unreachable(PlanningError):
    pass


@dataclass(frozen=True)
class Path:
    """Per-frame character route: one 3-vector waypoint per frame."""

    waypoints: np.ndarray  # (T, 3) float
    frame_rate: float = 25.0

    def __post_init__(self):
        object.__setattr__(self, "waypoints", np.asarray(self.waypoints, dtype=float))
        if self.waypoints.ndim != 2 or self.waypoints.shape[1] != 3:
            raise ValueError("waypoints must be an (T, 3) array")

    def __len__(self) -> int:
        return self.waypoints.shape[0]

    def length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1)))


def in_place_path(position, T: int, frame_rate: float = 25.0) -> Path:
    pos = np.asarray(position, dtype=float)
    return Path(np.tile(pos, (T, 1)), frame_rate)


@dataclass
class OccupancyGrid:
    cell_size_m: float
    origin: np.ndarray          # (2,) world xy of the grid corner
    blocked: np.ndarray         # (nx, ny) bool
    capsule_radius_m: float = 0.0

    @property
    def shape(self) -> tuple[int, int]:
        return self.blocked.shape

    def cell_of(self, point) -> tuple[int, int]:
        p = np.asarray(point, dtype=float)[:2]
        idx = np.floor((p - self.origin) / self.cell_size_m).astype(int)
        return int(idx[0]), int(idx[1])

    def center_of(self, cell: tuple[int, int]) -> np.ndarray:
        return self.origin + (np.asarray(cell, dtype=float) + 0.5) * self.cell_size_m

    def in_bounds(self, cell: tuple[int, int]) -> bool:
        nx, ny = self.blocked.shape
        return 0 <= cell[0] < nx and 0 <= cell[1] < ny

    def walkable(self, cell: tuple[int, int]) -> bool:
        return self.in_bounds(cell) and not self.blocked[cell]

    def walkable_point(self, point) -> bool:
        return self.walkable(self.cell_of(point))

    def walkable_components(self) -> int:
        """Number of connected walkable regions (8-connectivity)."""
        seen = np.zeros_like(self.blocked)
        count = 0
        nx, ny = self.blocked.shape
        for sx in range(nx):
            for sy in range(ny):
                if self.blocked[sx, sy] or seen[sx, sy]:
                    continue
                count += 1
                stack = [(sx, sy)]
                seen[sx, sy] = True
                while stack:
                    cx, cy = stack.pop()
                    for dx in (-1, 0, 1):
                        for dy in (-1, 0, 1):
                            nxt = (cx + dx, cy + dy)
                            if self.in_bounds(nxt) and not self.blocked[nxt] and not seen[nxt]:
                                seen[nxt] = True
                                stack.append(nxt)
        return count


def build_grid(scene: SceneGraph, cell_size_m: float = 0.1,
               capsule_radius_m: float = 0.2) -> OccupancyGrid:
    """Rasterize walkability over the scene root footprint.

    A cell is blocked iff it has nonzero-area overlap with some object
    footprint inflated by the capsule radius.
    """
    if cell_size_m <= 0:
        raise ValueError("cell_size_m must be positive")
    lo, hi = scene.bounds_xy()
    nx = max(1, int(round((hi[0] - lo[0]) / cell_size_m)))
    ny = max(1, int(round((hi[1] - lo[1]) / cell_size_m)))
    blocked = np.zeros((nx, ny), dtype=bool)
    x_lo = lo[0] + np.arange(nx) * cell_size_m
    y_lo = lo[1] + np.arange(ny) * cell_size_m
    for _, bmin, bmax in scene.object_footprints():
        bmin = bmin - capsule_radius_m
        bmax = bmax + capsule_radius_m
        mx = (x_lo < bmax[0]) & (x_lo + cell_size_m > bmin[0])
        my = (y_lo < bmax[1]) & (y_lo + cell_size_m > bmin[1])
        blocked |= mx[:, None] & my[None, :]
    return OccupancyGrid(cell_size_m, np.asarray(lo, dtype=float), blocked, capsule_radius_m)


_STRAIGHT = ((1, 0), (-1, 0), (0, 1), (0, -1))
_DIAGONAL = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def _octile(a: tuple[int, int], b: tuple[int, int]) -> float:
    dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
    return (dx + dy) + (SQRT2 - 2.0) * min(dx, dy)


def _astar(grid: OccupancyGrid, start: tuple[int, int], goal: tuple[int, int],
           multiplier: np.ndarray) -> list[tuple[int, int]] | None:
    """Octile A* over walkable cells; entering a cell costs move length times
    that cell's multiplier.  Diagonal steps require both flanking orthogonal
    cells to be walkable (no corner cutting)."""
    open_heap: list[tuple[float, int, tuple[int, int]]] = []
    counter = 0
    g_score = {start: 0.0}
    came_from: dict[tuple[int, int], tuple[int, int]] = {}
    heapq.heappush(open_heap, (_octile(start, goal), counter, start))
    closed = set()
    while open_heap:
        _, _, current = heapq.heappop(open_heap)
        if current == goal:
            path = [current]
            while current in came_from:
                current = came_from[current]
                path.append(current)
            return path[::-1]
        if current in closed:
            continue
        closed.add(current)
        cx, cy = current
        for dx, dy in _STRAIGHT:
            nxt = (cx + dx, cy + dy)
            if not grid.walkable(nxt):
                continue
            tentative = g_score[current] + 1.0 * multiplier[nxt]
            if tentative < g_score.get(nxt, math.inf):
                g_score[nxt] = tentative
                came_from[nxt] = current
                counter += 1
                heapq.heappush(open_heap, (tentative + _octile(nxt, goal), counter, nxt))
        for dx, dy in _DIAGONAL:
            nxt = (cx + dx, cy + dy)
            if not grid.walkable(nxt):
                continue
            if not (grid.walkable((cx + dx, cy)) and grid.walkable((cx, cy + dy))):
                continue
            tentative = g_score[current] + SQRT2 * multiplier[nxt]
            if tentative < g_score.get(nxt, math.inf):
                g_score[nxt] = tentative
                came_from[nxt] = current
                counter += 1
                heapq.heappush(open_heap, (tentative + _octile(nxt, goal), counter, nxt))
    return None


def reachable_mask(grid: OccupancyGrid, start: tuple[int, int]) -> np.ndarray:
    """Cells reachable from start under the planner's movement rule."""
    mask = np.zeros(grid.shape, dtype=bool)
    if not grid.walkable(start):
        return mask
    mask[start] = True
    stack = [start]
    while stack:
        cx, cy = stack.pop()
        for dx, dy in _STRAIGHT:
            nxt = (cx + dx, cy + dy)
            if grid.walkable(nxt) and not mask[nxt]:
                mask[nxt] = True
                stack.append(nxt)
        for dx, dy in _DIAGONAL:
            nxt = (cx + dx, cy + dy)
            if grid.walkable(nxt) and not mask[nxt] \
                    and grid.walkable((cx + dx, cy)) and grid.walkable((cx, cy + dy)):
                mask[nxt] = True
                stack.append(nxt)
    return mask


def nearest_walkable(grid: OccupancyGrid, point,
                     within: np.ndarray | None = None) -> tuple[int, int]:
    """Closest walkable cell to a world point, searching outward ring by ring;
    `within` restricts candidates (e.g. to the cells reachable from a start).

    Ties within a ring resolve by euclidean distance to the point, then by
    cell index, so the result is deterministic.
    """
    p = np.asarray(point, dtype=float)[:2]
    cell = grid.cell_of(p)
    nx, ny = grid.shape
    for radius in range(max(nx, ny)):
        candidates = []
        for dx in range(-radius, radius + 1):
            for dy in range(-radius, radius + 1):
                if max(abs(dx), abs(dy)) != radius:
                    continue
                cand = (cell[0] + dx, cell[1] + dy)
                if grid.walkable(cand) and (within is None or within[cand]):
                    dist = float(np.linalg.norm(grid.center_of(cand) - p))
                    candidates.append((dist, cand[0], cand[1]))
        if candidates:
            candidates.sort()
            _, bx, by = candidates[0]
            return (bx, by)
    raise Unreachable("no reachable walkable cell near the requested point")


def _resample(polyline: np.ndarray, T: int) -> np.ndarray:
    """Arc-length resampling to T points at constant speed."""
    seg = np.linalg.norm(np.diff(polyline, axis=0), axis=1)
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    total = cum[-1]
    if total == 0.0 or T == 1:
        return np.tile(polyline[0], (T, 1))
    targets = np.linspace(0.0, total, T)
    out = np.empty((T, polyline.shape[1]))
    idx = np.searchsorted(cum, targets, side="right") - 1
    idx = np.clip(idx, 0, len(seg) - 1)
    frac = (targets - cum[idx]) / np.where(seg[idx] > 0, seg[idx], 1.0)
    out = polyline[idx] + frac[:, None] * (polyline[idx + 1] - polyline[idx])
    return out


def _segment_cells(grid: OccupancyGrid, p0: np.ndarray, p1: np.ndarray
                   ) -> set[tuple[int, int]]:
    """Every cell a ground segment passes through; corner touches include all
    four surrounding cells (conservative)."""
    g0 = (p0[:2] - grid.origin) / grid.cell_size_m
    g1 = (p1[:2] - grid.origin) / grid.cell_size_m
    d = g1 - g0
    ts = {0.0, 1.0}
    for axis in range(2):
        if abs(d[axis]) > 1e-15:
            lo = math.ceil(min(g0[axis], g1[axis]))
            hi = math.floor(max(g0[axis], g1[axis]))
            for k in range(lo, hi + 1):
                t = (k - g0[axis]) / d[axis]
                if 0.0 <= t <= 1.0:
                    ts.add(t)
    order = sorted(ts)
    cells: set[tuple[int, int]] = set()
    for a, b in zip(order[:-1], order[1:]):
        if b - a < 1e-15:
            continue
        mid = g0 + 0.5 * (a + b) * d
        cells.add((int(math.floor(mid[0])), int(math.floor(mid[1]))))
    for t in order:
        pt = g0 + t * d
        near_x = abs(pt[0] - round(pt[0])) < 1e-9
        near_y = abs(pt[1] - round(pt[1])) < 1e-9
        if near_x and near_y:
            cx, cy = int(round(pt[0])), int(round(pt[1]))
            for dx in (-1, 0):
                for dy in (-1, 0):
                    cells.add((cx + dx, cy + dy))
    return cells


def _line_walkable(grid: OccupancyGrid, p0: np.ndarray, p1: np.ndarray) -> bool:
    return all(grid.walkable(c) for c in _segment_cells(grid, p0, p1))


def _smooth(grid: OccupancyGrid, polyline: np.ndarray) -> np.ndarray:
    """Greedy string pulling: drop vertices whose neighbors see each other."""
    if len(polyline) <= 2:
        return polyline
    keep = [0]
    i = 0
    while i < len(polyline) - 1:
        j = len(polyline) - 1
        while j > i + 1 and not _line_walkable(grid, polyline[i], polyline[j]):
            j -= 1
        keep.append(j)
        i = j
    return polyline[keep]


def _corridor_mask(grid: OccupancyGrid, cells: list[tuple[int, int]],
                   corridor_radius_m: float) -> np.ndarray:
    mask = np.zeros(grid.shape, dtype=bool)
    reach = int(math.floor(corridor_radius_m / grid.cell_size_m))
    offsets = [(dx, dy) for dx in range(-reach, reach + 1) for dy in range(-reach, reach + 1)
               if math.hypot(dx, dy) * grid.cell_size_m <= corridor_radius_m]
    nx, ny = grid.shape
    for cx, cy in cells:
        for dx, dy in offsets:
            px, py = cx + dx, cy + dy
            if 0 <= px < nx and 0 <= py < ny:
                mask[px, py] = True
    return mask


def plan_paths(grid: OccupancyGrid, start, goal, M: int, T: int,
               frame_rate: float = 25.0, v_max: float = 3.0,
               corridor_radius_m: float = 0.5, corridor_penalty: float = 4.0,
               retarget_blocked_goal: bool = False) -> list[Path]:
    """Up to M distinct collision-free paths from start to goal, each with
    exactly T waypoints, shortest first.

    With ``retarget_blocked_goal`` a goal inside an obstacle footprint is
    moved to the nearest walkable cell adjacent to it (stand-point rule for
    object interaction targets); the path then ends at that cell's center.
    """
    if T < 1 or M < 1:
        raise ValueError("M and T must be >= 1")
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    start_cell = grid.cell_of(start)
    if not grid.walkable(start_cell):
        raise StartBlocked(f"start {start[:2].tolist()} is not walkable")
    goal_cell = grid.cell_of(goal)
    goal_point = goal[:2].copy()
    if not grid.walkable(goal_cell):
        if not retarget_blocked_goal:
            raise GoalBlocked(f"goal {goal[:2].tolist()} is not walkable")
        goal_cell = nearest_walkable(grid, goal, within=reachable_mask(grid, start_cell))
        goal_point = grid.center_of(goal_cell)

    if start_cell == goal_cell:
        poly = np.array([[start[0], start[1], 0.0]])
        return [Path(_resample(poly, T), frame_rate)]

    cell_paths: list[list[tuple[int, int]]] = []
    multiplier = np.ones(grid.shape)
    for _ in range(M):
        cells = _astar(grid, start_cell, goal_cell, multiplier)
        if cells is None:
            if not cell_paths:
                raise Unreachable("no route between start and goal")
            break
        if cells in cell_paths:
            break
        cell_paths.append(cells)
        multiplier = multiplier * np.where(
            _corridor_mask(grid, cells, corridor_radius_m), corridor_penalty, 1.0)

    paths: list[Path] = []
    max_step = v_max / frame_rate + 1e-9
    for cells in cell_paths:
        poly_pts = [[start[0], start[1], 0.0]]
        for cell in cells:
            cx, cy = grid.center_of(cell)
            poly_pts.append([cx, cy, 0.0])
        poly_pts.append([goal_point[0], goal_point[1], 0.0])
        waypoints = _resample(_smooth(grid, np.asarray(poly_pts)), T)
        if T > 1 and float(np.max(np.linalg.norm(np.diff(waypoints, axis=0), axis=1))) > max_step:
            continue
        # Distinct cell routes can smooth down to the same geometry.
        if any(np.array_equal(waypoints, p.waypoints) for p in paths):
            continue
        paths.append(Path(waypoints, frame_rate))

    paths.sort(key=Path.length)
    if not paths and cell_paths:
        raise Unreachable(
            f"route exists but exceeds the speed cap of {v_max} m/s over {T} frames")
    return paths
