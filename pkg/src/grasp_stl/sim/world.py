"""Occupancy-grid maze and point-mass dynamics.

Cell ``(i, j)`` (row ``i``, column ``j``) covers ``x in [j*c, (j+1)*c)`` and
``y in [i*c, (i+1)*c)`` for cell size ``c``. States are planar positions.
"""

import logging
import math
import os
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import networkx as nx
import numpy as np

logger = logging.getLogger(__name__)

AgentState = Tuple[float, float]
Cell = Tuple[int, int]

WALL = "#"
FREE = "."


class MazeError(ValueError):
    """Raised for malformed maze layouts."""


class MazeWorld:
    """A walled maze with a speed-limited point agent."""

    def __init__(self, grid: np.ndarray, cell_size: float = 1.0, max_speed: float = 0.5) -> None:
        """Initialize and validate a maze.

        Args:
            grid: ``H x W`` boolean occupancy array, ``True`` marks a wall
            cell_size: Side of one cell in world units
            max_speed: Largest displacement per control step

        Raises:
            MazeError: If the border is open or the free cells are disconnected
            ValueError: If ``cell_size`` or ``max_speed`` is invalid
        """
        if cell_size <= 0:
            raise ValueError(f"cell_size must be positive, got {cell_size}")
        if not 0 < max_speed <= cell_size:
            raise ValueError(f"max_speed must be in (0, cell_size], got {max_speed}")
        grid = np.array(grid, dtype=bool)
        if grid.ndim != 2 or min(grid.shape) < 3:
            raise MazeError(f"Maze must be a 2D grid of at least 3x3 cells, got {grid.shape}")
        if not (grid[0, :].all() and grid[-1, :].all() and grid[:, 0].all() and grid[:, -1].all()):
            raise MazeError("Maze border cells must all be walls")

        self.grid = grid
        self.grid.setflags(write=False)
        self.cell_size = float(cell_size)
        self.max_speed = float(max_speed)
        self._free_cells: List[Cell] = [(int(i), int(j)) for i, j in np.argwhere(~grid)]
        if not self._free_cells:
            raise MazeError("Maze has no free cells")
        self._check_connected()

    def _check_connected(self) -> None:
        free = set(self._free_cells)
        graph = nx.Graph()
        graph.add_nodes_from(free)
        for i, j in free:
            for neighbor in ((i + 1, j), (i, j + 1)):
                if neighbor in free:
                    graph.add_edge((i, j), neighbor)
        components = nx.number_connected_components(graph)
        if components != 1:
            raise MazeError(f"Free space must be connected, found {components} components")

    @property
    def height(self) -> int:
        return self.grid.shape[0]

    @property
    def width(self) -> int:
        return self.grid.shape[1]

    @property
    def free_cells(self) -> List[Cell]:
        return list(self._free_cells)

    def cell_of(self, pos: Sequence[float]) -> Cell:
        return int(math.floor(pos[1] / self.cell_size)), int(math.floor(pos[0] / self.cell_size))

    def is_free_cell(self, cell: Cell) -> bool:
        i, j = cell
        if not (0 <= i < self.height and 0 <= j < self.width):
            return False
        return not self.grid[i, j]

    def is_free(self, pos: Sequence[float]) -> bool:
        return self.is_free_cell(self.cell_of(pos))

    def cell_center(self, cell: Cell) -> AgentState:
        i, j = cell
        return ((j + 0.5) * self.cell_size, (i + 0.5) * self.cell_size)

    def sample_free(self, rng: np.random.Generator) -> AgentState:
        """Uniform random position in free space."""
        i, j = self._free_cells[int(rng.integers(len(self._free_cells)))]
        x = (j + rng.random()) * self.cell_size
        y = (i + rng.random()) * self.cell_size
        return (float(x), float(y))

    def segment_free(self, p: Sequence[float], q: Sequence[float]) -> bool:
        """Whether the straight segment ``p -> q`` stays in free space.

        The segment is sampled at a spacing of a tenth of a cell.
        """
        length = math.hypot(q[0] - p[0], q[1] - p[1])
        n = max(1, int(math.ceil(length / (0.1 * self.cell_size))))
        for s in np.linspace(0.0, 1.0, n + 1):
            if not self.is_free((p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1]))):
                return False
        return True

    def disk_free(self, center: Sequence[float], radius: float) -> bool:
        """Whether the closed disk lies entirely inside free cells."""
        c = self.cell_size
        i0 = int(math.floor((center[1] - radius) / c))
        i1 = int(math.floor((center[1] + radius) / c))
        j0 = int(math.floor((center[0] - radius) / c))
        j1 = int(math.floor((center[0] + radius) / c))
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                if self.is_free_cell((i, j)):
                    continue
                # distance from the center to the closed wall square
                qx = min(max(center[0], j * c), (j + 1) * c)
                qy = min(max(center[1], i * c), (i + 1) * c)
                if math.hypot(center[0] - qx, center[1] - qy) <= radius:
                    return False
        return True


def step(world: MazeWorld, s: Sequence[float], a: Sequence[float]) -> AgentState:
    """Advance the point agent by one control step.

    The action is clipped to ``max_speed``. Motion is resolved per axis, x first: an axis
    component that would end inside a wall is dropped, so the agent slides along walls.
    """
    ax, ay = float(a[0]), float(a[1])
    norm = math.hypot(ax, ay)
    if norm > world.max_speed:
        ax, ay = ax * world.max_speed / norm, ay * world.max_speed / norm
    x, y = float(s[0]), float(s[1])
    if world.is_free((x + ax, y)):
        x += ax
    if world.is_free((x, y + ay)):
        y += ay
    return (x, y)


def parse_maze(text: str) -> np.ndarray:
    """Parse ``#``/``.`` maze text into a wall bitmap.

    Raises:
        MazeError: On ragged rows, unknown characters or empty input
    """
    rows = [line.rstrip() for line in text.splitlines()]
    while rows and not rows[-1]:
        rows.pop()
    while rows and not rows[0]:
        rows.pop(0)
    if not rows:
        raise MazeError("Maze text is empty")
    width = len(rows[0])
    for n, row in enumerate(rows):
        if len(row) != width:
            raise MazeError(f"Row {n} has length {len(row)}, expected {width}")
        bad = set(row) - {WALL, FREE}
        if bad:
            raise MazeError(f"Row {n} contains unknown characters {sorted(bad)}")
    return np.array([[ch == WALL for ch in row] for row in rows], dtype=bool)


def load_maze(
    path: Union[str, Path], cell_size: float = 1.0, max_speed: float = 0.5
) -> MazeWorld:
    """Load a maze file.

    Args:
        path: Text file, one row per line, ``#`` wall and ``.`` free
        cell_size: Side of one cell in world units
        max_speed: Largest displacement per control step

    Returns:
        Validated world
    """
    with open(path, "r") as f:
        grid = parse_maze(f.read())
    world = MazeWorld(grid, cell_size=cell_size, max_speed=max_speed)
    logger.info(f"Loaded {world.height}x{world.width} maze from {path}")
    return world


def desk_maze_path() -> Path:
    """Path of the bundled 20x20 desk maze."""
    return Path(os.path.dirname(os.path.dirname(__file__))) / "mazes" / "desk.txt"


def desk_world(cell_size: float = 1.0, max_speed: float = 0.5) -> MazeWorld:
    return load_maze(desk_maze_path(), cell_size=cell_size, max_speed=max_speed)
