"""Procedural indoor environments built from corridor-laying random walkers.

Generation runs on a coarse square grid:

1. two walkers start on the start and target cells;
2. each walker takes 4-connected steps, going straight with probability
   ``p_str`` and turning left or right otherwise, marking corridor cells;
3. walking stops once the corridor fraction reaches ``t_cor``; if start and
   target are not joined by corridor cells the whole attempt is redone;
4. every non-corridor cell touching a corridor (8-neighbourhood) becomes wall;
5. leftover regions become rooms, split by wall lines while too large;
6. every room gets one door per wall it shares with a corridor.

The grid is then turned into axis-aligned wall segments for ray casting.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .geometry import Pose, Segment, Vec2, make_segment, segments_to_array


class Cell(IntEnum):
    FREE = 0
    WALL = 1
    CORRIDOR = 2
    ROOM = 3


CELL_CHARS = {Cell.WALL: "#", Cell.FREE: ".", Cell.CORRIDOR: "c", Cell.ROOM: "r"}
CHAR_CELLS = {v: k for k, v in CELL_CHARS.items()}
FORMAT_TAG = "bugnav-env"
FORMAT_VERSION = "v1"

# headings for the walkers, counter-clockwise order so +1 is a left turn
_DIRS = ((1, 0), (0, 1), (-1, 0), (0, -1))
_N4 = _DIRS
_N8 = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


class GenerationError(RuntimeError):
    """Raised when the regeneration budget runs out."""


class EnvParseError(ValueError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(eq=False)
class GridMap:
    """Coarse occupancy grid. ``cells[row, col]``; cell indices are (col, row)."""

    width: int
    height: int
    cell_size: float
    cells: np.ndarray
    start: tuple[int, int]
    target: tuple[int, int]

    def __post_init__(self):
        self.cells = np.array(self.cells, dtype=np.uint8, copy=True)
        if self.cells.shape != (self.height, self.width):
            raise ValueError(f"cells shape {self.cells.shape} != ({self.height}, {self.width})")
        self.start = (int(self.start[0]), int(self.start[1]))
        self.target = (int(self.target[0]), int(self.target[1]))
        if self.start == self.target:
            raise ValueError("start and target must differ")
        for name, (cx, cy) in (("start", self.start), ("target", self.target)):
            if not (0 <= cx < self.width and 0 <= cy < self.height):
                raise ValueError(f"{name} {cx, cy} outside grid")
            if self.cells[cy, cx] not in (Cell.FREE, Cell.CORRIDOR):
                raise ValueError(f"{name} cell must be free or corridor")
            # S/T are stored as corridor so that the text format round-trips
            self.cells[cy, cx] = Cell.CORRIDOR
        border = np.concatenate(
            [self.cells[0, :], self.cells[-1, :], self.cells[:, 0], self.cells[:, -1]]
        )
        if np.any(border != Cell.WALL):
            raise ValueError("outer boundary must be wall")

    def __eq__(self, other):
        if not isinstance(other, GridMap):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.cell_size == other.cell_size
            and self.start == other.start
            and self.target == other.target
            and np.array_equal(self.cells, other.cells)
        )

    def cell_center(self, cell: tuple[int, int]) -> Vec2:
        return Vec2((cell[0] + 0.5) * self.cell_size, (cell[1] + 0.5) * self.cell_size)

    def passable(self) -> np.ndarray:
        return self.cells != Cell.WALL


@dataclass
class GenParams:
    p_str: float = 0.75
    t_cor: float = 0.4
    arena_size: float = 14.0
    cell_size: float = 1.0
    room_split_max: int = 5
    # doors per room wall that faces a corridor
    doors_per_wall: int = 1
    # cells kept open around the target so it is never right next to a wall
    target_clearance: int = 2
    # lower bound on the start-target separation, metres
    min_target_distance: float = 7.0
    max_retries: int = 100
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.p_str < 1.0:
            raise ValueError("p_str must lie in (0, 1)")
        if not 0.0 < self.t_cor < 1.0:
            raise ValueError("t_cor must lie in (0, 1)")
        if self.cell_size <= 0 or self.arena_size <= 0:
            raise ValueError("arena_size and cell_size must be positive")
        if self.grid_cells < 5:
            raise ValueError("arena must span at least 5 cells")
        if self.room_split_max < 1:
            raise ValueError("room_split_max must be >= 1")
        if self.doors_per_wall < 1:
            raise ValueError("doors_per_wall must be >= 1")
        if self.target_clearance < 0:
            raise ValueError("target_clearance must be >= 0")
        if self.max_retries < 1:
            raise ValueError("max_retries must be >= 1")

    @property
    def grid_cells(self) -> int:
        return int(round(self.arena_size / self.cell_size))


@dataclass(eq=False)
class Environment:
    grid: GridMap
    walls: list[Segment]
    start_pose: Pose
    target: Vec2
    wall_array: np.ndarray = field(repr=False)

    @classmethod
    def from_grid(cls, grid: GridMap) -> "Environment":
        walls = grid_to_segments(grid)
        start = grid.cell_center(grid.start)
        target = grid.cell_center(grid.target)
        heading = math.atan2(target.y - start.y, target.x - start.x)
        return cls(grid, walls, Pose.at(start.x, start.y, heading), target, segments_to_array(walls))

    def __eq__(self, other):
        if not isinstance(other, Environment):
            return NotImplemented
        return (
            self.grid == other.grid
            and self.walls == other.walls
            and self.start_pose == other.start_pose
            and self.target == other.target
        )


# --------------------------------------------------------------------------
# connectivity


def flood_fill(passable: np.ndarray, seed: tuple[int, int]) -> np.ndarray:
    """4-connected reachability mask from ``seed`` (col, row)."""
    h, w = passable.shape
    seen = np.zeros_like(passable, dtype=bool)
    sx, sy = seed
    if not passable[sy, sx]:
        return seen
    seen[sy, sx] = True
    queue = deque([seed])
    while queue:
        x, y = queue.popleft()
        for dx, dy in _N4:
            nx, ny = x + dx, y + dy
            if 0 <= nx < w and 0 <= ny < h and passable[ny, nx] and not seen[ny, nx]:
                seen[ny, nx] = True
                queue.append((nx, ny))
    return seen


def connectivity_check(grid: GridMap) -> bool:
    """True iff start and target are 4-connected through non-wall cells."""
    reach = flood_fill(grid.passable(), grid.start)
    tx, ty = grid.target
    return bool(reach[ty, tx])


# --------------------------------------------------------------------------
# segments


def cells_to_segments(wall: np.ndarray, cell_size: float) -> list[Segment]:
    """Wall faces between wall and non-wall cells, collinear runs merged.

    Faces on the array border are skipped: nothing outside the array can
    see them.
    """
    h, w = wall.shape
    segments: list[Segment] = []
    # horizontal faces lie on line y = j between rows j-1 and j
    for j in range(1, h):
        for facing in (1, -1):
            run_start = None
            for i in range(w + 1):
                is_face = False
                if i < w:
                    below, above = wall[j - 1, i], wall[j, i]
                    is_face = (below and not above) if facing == 1 else (above and not below)
                if is_face and run_start is None:
                    run_start = i
                elif not is_face and run_start is not None:
                    segments.append(
                        make_segment(run_start * cell_size, j * cell_size, i * cell_size, j * cell_size)
                    )
                    run_start = None
    # vertical faces lie on line x = i between columns i-1 and i
    for i in range(1, w):
        for facing in (1, -1):
            run_start = None
            for j in range(h + 1):
                is_face = False
                if j < h:
                    left, right = wall[j, i - 1], wall[j, i]
                    is_face = (left and not right) if facing == 1 else (right and not left)
                if is_face and run_start is None:
                    run_start = j
                elif not is_face and run_start is not None:
                    segments.append(
                        make_segment(i * cell_size, run_start * cell_size, i * cell_size, j * cell_size)
                    )
                    run_start = None
    return segments


def grid_to_segments(grid: GridMap) -> list[Segment]:
    return cells_to_segments(grid.cells == Cell.WALL, grid.cell_size)


# --------------------------------------------------------------------------
# generation


def _label_regions(mask: np.ndarray) -> list[list[tuple[int, int]]]:
    h, w = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    regions = []
    for y in range(h):
        for x in range(w):
            if mask[y, x] and not seen[y, x]:
                region = []
                seen[y, x] = True
                queue = deque([(x, y)])
                while queue:
                    cx, cy = queue.popleft()
                    region.append((cx, cy))
                    for dx, dy in _N4:
                        nx, ny = cx + dx, cy + dy
                        if 0 <= nx < w and 0 <= ny < h and mask[ny, nx] and not seen[ny, nx]:
                            seen[ny, nx] = True
                            queue.append((nx, ny))
                regions.append(region)
    return regions


def _pick_target(n: int, start: tuple[int, int], params: GenParams, rng) -> tuple[int, int]:
    lo = 1 + params.target_clearance
    hi = n - 2 - params.target_clearance
    if lo > hi:
        raise GenerationError("arena too small for the target clearance")
    cands = [
        (x, y)
        for y in range(lo, hi + 1)
        for x in range(lo, hi + 1)
        if math.hypot(x - start[0], y - start[1]) * params.cell_size >= params.min_target_distance
    ]
    if not cands:
        raise GenerationError("no target cell satisfies min_target_distance")
    return cands[int(rng.integers(len(cands)))]


def _walk_corridors(n: int, corridor: np.ndarray, origins, params: GenParams, rng) -> bool:
    total = n * n
    goal = params.t_cor * total
    count = int(corridor.sum())
    walkers = [[ox, oy, int(rng.integers(4))] for ox, oy in origins]
    half_turn = (1.0 - params.p_str) / 2.0
    max_steps = 200 * total
    steps = 0
    while count < goal:
        for walker in walkers:
            if count >= goal:
                break
            x, y, d = walker
            r = rng.random()
            if r >= params.p_str:
                d = (d + 1) % 4 if r < params.p_str + half_turn else (d - 1) % 4
            nx, ny = x + _DIRS[d][0], y + _DIRS[d][1]
            if not (1 <= nx <= n - 2 and 1 <= ny <= n - 2):
                # bounce off the outer wall: turn left/right, else reverse
                options = [(d + 1) % 4, (d - 1) % 4]
                if rng.random() < 0.5:
                    options.reverse()
                options.append((d + 2) % 4)
                for d in options:
                    nx, ny = x + _DIRS[d][0], y + _DIRS[d][1]
                    if 1 <= nx <= n - 2 and 1 <= ny <= n - 2:
                        break
            walker[0], walker[1], walker[2] = nx, ny, d
            if not corridor[ny, nx]:
                corridor[ny, nx] = True
                count += 1
        steps += 1
        if steps > max_steps:
            return False
    return True


def _split_rooms(cells: np.ndarray, params: GenParams, rng) -> None:
    while True:
        changed = False
        for region in _label_regions(cells == Cell.ROOM):
            xs = [c[0] for c in region]
            ys = [c[1] for c in region]
            span_x = max(xs) - min(xs) + 1
            span_y = max(ys) - min(ys) + 1
            if max(span_x, span_y) <= params.room_split_max:
                continue
            if span_x >= span_y:
                k = int(rng.integers(min(xs) + 1, max(xs)))
                for x, y in region:
                    if x == k:
                        cells[y, x] = Cell.WALL
            else:
                k = int(rng.integers(min(ys) + 1, max(ys)))
                for x, y in region:
                    if y == k:
                        cells[y, x] = Cell.WALL
            changed = True
        if not changed:
            return


def _carve_to_corridor(cells: np.ndarray, region, n: int) -> None:
    """Open the shortest wall-cell passage from a sealed room to any open cell."""
    region_set = set(region)
    parent: dict[tuple[int, int], tuple[int, int] | None] = {}
    queue: deque = deque()
    for x, y in region:
        for dx, dy in _N4:
            nx, ny = x + dx, y + dy
            if (nx, ny) in region_set or (nx, ny) in parent:
                continue
            if 1 <= nx <= n - 2 and 1 <= ny <= n - 2 and cells[ny, nx] == Cell.WALL:
                parent[(nx, ny)] = None
                queue.append((nx, ny))
    while queue:
        x, y = queue.popleft()
        for dx, dy in _N4:
            nx, ny = x + dx, y + dy
            if (nx, ny) in region_set or (nx, ny) in parent:
                continue
            if not (1 <= nx <= n - 2 and 1 <= ny <= n - 2):
                continue
            if cells[ny, nx] in (Cell.CORRIDOR, Cell.FREE):
                node: tuple[int, int] | None = (x, y)
                while node is not None:
                    cells[node[1], node[0]] = Cell.FREE
                    node = parent[node]
                return
            if cells[ny, nx] == Cell.WALL:
                parent[(nx, ny)] = (x, y)
                queue.append((nx, ny))


def _place_doors(cells: np.ndarray, params: GenParams, rng, n: int) -> None:
    for region in _label_regions(cells == Cell.ROOM):
        region_set = set(region)
        walls: dict[tuple[int, int], list[tuple[int, int]]] = {}
        for x, y in region:
            for d, (dx, dy) in enumerate(_N4):
                wx, wy = x + dx, y + dy
                fx, fy = wx + dx, wy + dy
                if not (1 <= wx <= n - 2 and 1 <= wy <= n - 2):
                    continue
                if cells[wy, wx] != Cell.WALL or (wx, wy) in region_set:
                    continue
                if 0 <= fx < n and 0 <= fy < n and cells[fy, fx] == Cell.CORRIDOR:
                    # one room wall = one side direction at one grid line
                    line = wx if dx else wy
                    walls.setdefault((d, line), []).append((wx, wy))
        if not walls:
            _carve_to_corridor(cells, region, n)
            continue
        for key in sorted(walls):
            cands = sorted(set(walls[key]))
            k = min(params.doors_per_wall, len(cands))
            for idx in rng.choice(len(cands), size=k, replace=False):
                cx, cy = cands[int(idx)]
                cells[cy, cx] = Cell.FREE


def _attempt(params: GenParams, rng) -> GridMap | None:
    n = params.grid_cells
    start = (1, 1)
    target = _pick_target(n, start, params, rng)
    corridor = np.zeros((n, n), dtype=bool)
    corridor[start[1], start[0]] = True
    c = params.target_clearance
    corridor[target[1] - c : target[1] + c + 1, target[0] - c : target[0] + c + 1] = True
    if not _walk_corridors(n, corridor, (start, target), params, rng):
        return None
    if not flood_fill(corridor, start)[target[1], target[0]]:
        return None

    cells = np.full((n, n), Cell.FREE, dtype=np.uint8)
    cells[corridor] = Cell.CORRIDOR
    cells[0, :] = cells[-1, :] = cells[:, 0] = cells[:, -1] = Cell.WALL
    for y in range(1, n - 1):
        for x in range(1, n - 1):
            if corridor[y, x]:
                continue
            if any(corridor[y + dy, x + dx] for dx, dy in _N8):
                cells[y, x] = Cell.WALL
    cells[cells == Cell.FREE] = Cell.ROOM
    _split_rooms(cells, params, rng)
    _place_doors(cells, params, rng, n)
    grid = GridMap(n, n, params.cell_size, cells, start, target)
    if not connectivity_check(grid):
        return None
    return grid


def generate(params: GenParams) -> Environment:
    """Build an environment; deterministic in ``params`` (seed included)."""
    rng = np.random.default_rng(params.seed)
    for _ in range(params.max_retries):
        grid = _attempt(params, rng)
        if grid is not None:
            return Environment.from_grid(grid)
    raise GenerationError(
        f"no connected environment after {params.max_retries} attempts (seed {params.seed})"
    )


def corridor_fraction(grid: GridMap) -> float:
    return float(np.count_nonzero(grid.cells == Cell.CORRIDOR)) / grid.cells.size


# --------------------------------------------------------------------------
# text format


def save_env(env: Environment) -> str:
    grid = env.grid
    lines = [f"{FORMAT_TAG} {FORMAT_VERSION} {grid.width} {grid.height} {grid.cell_size!r}"]
    for y in range(grid.height):
        row = [CELL_CHARS[Cell(v)] for v in grid.cells[y]]
        if y == grid.start[1]:
            row[grid.start[0]] = "S"
        if y == grid.target[1]:
            row[grid.target[0]] = "T"
        lines.append("".join(row))
    return "\n".join(lines) + "\n"


def load_env(text: str) -> Environment:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise EnvParseError(1, 1, "empty input")
    header = lines[0].split(" ")
    if len(header) != 5 or header[0] != FORMAT_TAG:
        raise EnvParseError(1, 1, f"expected header '{FORMAT_TAG} {FORMAT_VERSION} <w> <h> <cell_size>'")
    if header[1] != FORMAT_VERSION:
        raise EnvParseError(1, len(FORMAT_TAG) + 2, f"unsupported version {header[1]!r}")
    try:
        width, height = int(header[2]), int(header[3])
        cell_size = float(header[4])
    except ValueError:
        raise EnvParseError(1, 1, "width/height must be integers and cell_size a number") from None
    if width < 3 or height < 3 or not cell_size > 0:
        raise EnvParseError(1, 1, "grid must be at least 3x3 with positive cell size")
    if len(lines) - 1 != height:
        raise EnvParseError(len(lines) + 1, 1, f"expected {height} rows, found {len(lines) - 1}")
    cells = np.zeros((height, width), dtype=np.uint8)
    start = target = None
    for y in range(height):
        row = lines[y + 1]
        if len(row) != width:
            raise EnvParseError(y + 2, min(len(row), width) + 1, f"row has {len(row)} chars, expected {width}")
        for x, ch in enumerate(row):
            if ch == "S" or ch == "T":
                if (start if ch == "S" else target) is not None:
                    raise EnvParseError(y + 2, x + 1, f"duplicate {ch}")
                if ch == "S":
                    start = (x, y)
                else:
                    target = (x, y)
                cells[y, x] = Cell.CORRIDOR
            elif ch in CHAR_CELLS:
                cells[y, x] = CHAR_CELLS[ch]
            else:
                raise EnvParseError(y + 2, x + 1, f"unexpected character {ch!r}")
    if start is None or target is None:
        raise EnvParseError(len(lines), 1, "map needs exactly one S and one T")
    try:
        grid = GridMap(width, height, cell_size, cells, start, target)
    except ValueError as exc:
        raise EnvParseError(2, 1, str(exc)) from None
    return Environment.from_grid(grid)
