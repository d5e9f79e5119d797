"""Greedy goal-conditioned controller, plan execution and signal sampling."""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .oracle import BfsOracle
from .world import AgentState, MazeWorld, step

logger = logging.getLogger(__name__)

Action = Tuple[float, float]


def _toward(s: Sequence[float], target: Sequence[float], max_speed: float) -> Action:
    dx, dy = target[0] - s[0], target[1] - s[1]
    dist = math.hypot(dx, dy)
    if dist <= max_speed:
        return (dx, dy)
    return (dx * max_speed / dist, dy * max_speed / dist)


def greedy_controller(
    world: MazeWorld, oracle: BfsOracle, s: Sequence[float], g: Sequence[float]
) -> Action:
    """Action moving ``s`` toward ``g``.

    With a free line of sight the agent heads straight for ``g`` and lands on it once it
    is within ``max_speed``. Otherwise it heads for the center of the neighboring cell
    with the smallest remaining path length to ``g``'s cell.
    """
    if s[0] == g[0] and s[1] == g[1]:
        return (0.0, 0.0)
    if world.segment_free(s, g):
        return _toward(s, g, world.max_speed)

    field = oracle.field(world.cell_of(g))
    i, j = world.cell_of(s)
    best = (i, j)
    best_value = field[i, j]
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            cell = (i + di, j + dj)
            if not world.is_free_cell(cell):
                continue
            if di and dj and not (
                world.is_free_cell((i + di, j)) and world.is_free_cell((i, j + dj))
            ):
                continue
            if field[cell] < best_value:
                best, best_value = cell, field[cell]
    return _toward(s, world.cell_center(best), world.max_speed)


def execute_plan(
    world: MazeWorld,
    x0: Sequence[float],
    waypoints: Sequence[Sequence[float]],
    k: int,
    oracle: Optional[BfsOracle] = None,
) -> List[AgentState]:
    """Track waypoints on a fixed clock.

    The controller runs toward ``waypoints[i]`` for exactly ``k`` control steps for every
    ``i >= 1`` (``waypoints[0]`` is the start), holding position on early arrival. A plan
    of ``N`` waypoints after the start takes ``N * k`` control steps; the returned list
    also holds the start state, so ``[x0, x0]`` yields ``k`` steps that never move.

    Returns:
        Control-step trajectory of ``(len(waypoints) - 1) * k + 1`` states, starting at ``x0``
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    oracle = oracle or BfsOracle(world, k=k)
    s: AgentState = (float(x0[0]), float(x0[1]))
    trajectory = [s]
    for w in waypoints[1:]:
        for _ in range(k):
            s = step(world, s, greedy_controller(world, oracle, s, w))
            trajectory.append(s)
    return trajectory


def subsample_signal(trajectory: Sequence[Sequence[float]], k: int) -> List[AgentState]:
    """Sample every ``k``-th control step, repeating the last state to fill the final slot.

    ``s_i = x_{i*k}`` while ``i*k <= T`` and ``x_T`` otherwise, for ``i = 0..ceil(T/k)``.
    """
    if len(trajectory) == 0:
        raise ValueError("Trajectory must not be empty")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    last = len(trajectory) - 1
    n = -(-last // k)
    return [
        (float(trajectory[min(i * k, last)][0]), float(trajectory[min(i * k, last)][1]))
        for i in range(n + 1)
    ]


def tracking_error(
    signal: Sequence[Sequence[float]], waypoints: Sequence[Sequence[float]]
) -> float:
    """Mean distance between each waypoint and the signal sample at the same step."""
    n = min(len(signal), len(waypoints))
    if n == 0:
        raise ValueError("Need at least one sample to compare")
    a = np.asarray(signal[:n], dtype=float)[:, :2]
    b = np.asarray(waypoints[:n], dtype=float)[:, :2]
    return float(np.mean(np.linalg.norm(a - b, axis=1)))
