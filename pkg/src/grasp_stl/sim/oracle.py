"""Exact grid shortest-path reachability oracle."""

import heapq
import logging
import math
import threading
from typing import Dict, Optional, Sequence

import numpy as np

from ..graph.oracle import ReachabilityOracle, State
from .world import Cell, MazeWorld

logger = logging.getLogger(__name__)

_SQRT2 = math.sqrt(2.0)
_MOVES = (
    (-1, 0, 1.0),
    (1, 0, 1.0),
    (0, -1, 1.0),
    (0, 1, 1.0),
    (-1, -1, _SQRT2),
    (-1, 1, _SQRT2),
    (1, -1, _SQRT2),
    (1, 1, _SQRT2),
)


class BfsOracle(ReachabilityOracle):
    """Shortest 8-connected free-cell path length divided by the agent speed.

    Diagonal moves cost ``sqrt(2) * cell_size`` and may not cut a wall corner. Distance
    fields are computed per goal cell with Dijkstra's algorithm and cached; the cache is
    safe to populate from several threads.
    """

    def __init__(self, world: MazeWorld, k: int = 10, speed: Optional[float] = None) -> None:
        """Initialize the oracle.

        Args:
            world: Maze the agent moves in
            k: Control steps per graph edge
            speed: World units covered per control step, defaults to ``world.max_speed``
        """
        super().__init__(k)
        self.world = world
        self.speed = float(speed if speed is not None else world.max_speed)
        if self.speed <= 0:
            raise ValueError(f"speed must be positive, got {self.speed}")
        self._fields: Dict[Cell, np.ndarray] = {}
        self._lock = threading.Lock()

    def field(self, goal: Cell) -> np.ndarray:
        """Path length in world units from every cell to ``goal`` (``inf`` for walls)."""
        with self._lock:
            cached = self._fields.get(goal)
        if cached is not None:
            return cached
        computed = self._dijkstra(goal)
        with self._lock:
            self._fields[goal] = computed
        return computed

    def _dijkstra(self, goal: Cell) -> np.ndarray:
        world = self.world
        dist = np.full(world.grid.shape, np.inf)
        if not world.is_free_cell(goal):
            dist.setflags(write=False)
            return dist
        dist[goal] = 0.0
        heap = [(0.0, goal)]
        while heap:
            d, (i, j) = heapq.heappop(heap)
            if d > dist[i, j]:
                continue
            for di, dj, cost in _MOVES:
                ni, nj = i + di, j + dj
                if not world.is_free_cell((ni, nj)):
                    continue
                if di and dj and not (
                    world.is_free_cell((i + di, j)) and world.is_free_cell((i, j + dj))
                ):
                    continue
                nd = d + cost * world.cell_size
                if nd < dist[ni, nj]:
                    dist[ni, nj] = nd
                    heapq.heappush(heap, (nd, (ni, nj)))
        dist.setflags(write=False)
        return dist

    def distance(self, s: State, g: State) -> float:
        if not (self.world.is_free(s) and self.world.is_free(g)):
            return math.inf
        return float(self.field(self.world.cell_of(g))[self.world.cell_of(s)]) / self.speed

    def distances(self, sources: Sequence[State], g: State) -> np.ndarray:
        if len(sources) == 0:
            return np.empty(0)
        if not self.world.is_free(g):
            return np.full(len(sources), np.inf)
        grid_field = self.field(self.world.cell_of(g))
        pts = np.asarray(sources, dtype=float).reshape(len(sources), -1)[:, :2]
        rows = np.floor(pts[:, 1] / self.world.cell_size).astype(int)
        cols = np.floor(pts[:, 0] / self.world.cell_size).astype(int)
        inside = (rows >= 0) & (rows < self.world.height) & (cols >= 0) & (cols < self.world.width)
        out = np.full(len(sources), np.inf)
        out[inside] = grid_field[rows[inside], cols[inside]]
        return out / self.speed


def bfs_oracle(world: MazeWorld, speed: Optional[float] = None, k: int = 10) -> BfsOracle:
    """Exact reachability oracle for ``world``."""
    return BfsOracle(world, k=k, speed=speed)
