"""Shortest-path oracle used only to normalize trajectory lengths.

The coarse grid is split into sub-cells and walls are inflated by one
sub-cell in the 8-neighbourhood, so an 8-connected search cannot slip
diagonally between two touching wall corners. Splitting first keeps 1 m
corridors open after inflation.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .envgen import Cell, GridMap

SQRT2 = math.sqrt(2.0)
UNREACHABLE = math.inf
DEFAULT_SUBDIVISION = 4

# (dcol, drow, is_diagonal)
_MOVES = tuple(
    (dc, dr, dc != 0 and dr != 0) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dc, dr) != (0, 0)
)


class PaddingDegenerateError(RuntimeError):
    """Start or target ended up inside the inflated obstacle set."""


@dataclass(frozen=True)
class PaddedGrid:
    """``blocked[row, col]`` occupancy of square cells of side ``cell_size``."""

    blocked: np.ndarray
    cell_size: float = 1.0
    subdivision: int = 1

    @property
    def shape(self) -> tuple[int, int]:
        return self.blocked.shape

    def is_free(self, cell: tuple[int, int]) -> bool:
        c, r = cell
        h, w = self.blocked.shape
        return 0 <= c < w and 0 <= r < h and not self.blocked[r, c]


def inflate(blocked: np.ndarray) -> np.ndarray:
    """Blocked set grown by one cell in every direction (8-neighbourhood)."""
    b = np.asarray(blocked, dtype=bool)
    p = np.pad(b, 1, constant_values=False)
    h, w = b.shape
    out = np.zeros_like(b)
    for dr in range(3):
        for dc in range(3):
            out |= p[dr : dr + h, dc : dc + w]
    return out


def coarse_to_sub(cell: tuple[int, int], subdivision: int) -> tuple[int, int]:
    """Sub-cell containing the centre of a coarse cell (its lower-left one for even splits)."""
    half = subdivision // 2
    return cell[0] * subdivision + half, cell[1] * subdivision + half


def pad(grid: GridMap, subdivision: int = DEFAULT_SUBDIVISION) -> PaddedGrid:
    if subdivision < 1:
        raise ValueError("subdivision must be >= 1")
    wall = grid.cells == Cell.WALL
    fine = np.kron(wall, np.ones((subdivision, subdivision), dtype=bool))
    padded = PaddedGrid(inflate(fine), grid.cell_size / subdivision, subdivision)
    for name, cell in (("start", grid.start), ("target", grid.target)):
        if not padded.is_free(coarse_to_sub(cell, subdivision)):
            raise PaddingDegenerateError(f"{name} cell {cell} is blocked after padding")
    return padded


def octile(a: tuple[int, int], b: tuple[int, int]) -> float:
    dx = abs(a[0] - b[0])
    dy = abs(a[1] - b[1])
    lo, hi = min(dx, dy), max(dx, dy)
    return (hi - lo) + SQRT2 * lo


def astar_length(grid: PaddedGrid, start: tuple[int, int], goal: tuple[int, int]) -> float:
    """Length in metres of the shortest 8-connected path, or ``inf`` if none.

    The returned value is rebuilt from the integer counts of straight and
    diagonal moves on the chosen path, so equal-length paths found in a
    different order give bit-identical results.
    """
    if not grid.is_free(start):
        raise ValueError(f"start {start} is blocked or outside the grid")
    if not grid.is_free(goal):
        raise ValueError(f"goal {goal} is blocked or outside the grid")
    blocked = grid.blocked
    h, w = blocked.shape
    if start == goal:
        return 0.0
    # g values as (float length, straight count, diagonal count)
    best = {start: 0.0}
    counts = {start: (0, 0)}
    closed = set()
    heap = [(octile(start, goal), 0.0, start)]
    while heap:
        _, g, node = heapq.heappop(heap)
        if node in closed:
            continue
        if node == goal:
            n_straight, n_diag = counts[node]
            return grid.cell_size * (n_straight + SQRT2 * n_diag)
        closed.add(node)
        c, r = node
        ns, nd = counts[node]
        for dc, dr, diag in _MOVES:
            nc, nr = c + dc, r + dr
            if not (0 <= nc < w and 0 <= nr < h) or blocked[nr, nc]:
                continue
            nxt = (nc, nr)
            if nxt in closed:
                continue
            ng = g + (SQRT2 if diag else 1.0)
            if ng < best.get(nxt, math.inf) - 1e-12:
                best[nxt] = ng
                counts[nxt] = (ns, nd + 1) if diag else (ns + 1, nd)
                heapq.heappush(heap, (ng + octile(nxt, goal), ng, nxt))
    return UNREACHABLE


def environment_astar_length(grid: GridMap, subdivision: int = DEFAULT_SUBDIVISION) -> float:
    """Oracle length between the start and target cell centres of ``grid``."""
    padded = pad(grid, subdivision)
    return astar_length(
        padded, coarse_to_sub(grid.start, subdivision), coarse_to_sub(grid.target, subdivision)
    )
