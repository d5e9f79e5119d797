"""Offline trajectory dataset collected by a task-agnostic random walk."""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Set, Tuple, Union

import numpy as np

from .world import AgentState, Cell, MazeWorld, step

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Transition:
    """One control step ``(x_t, a_t, x_{t+1})``."""

    x: AgentState
    a: Tuple[float, float]
    x_next: AgentState


class OfflineDataset:
    """Trajectories of chained transitions."""

    def __init__(self, trajectories: Sequence[Sequence[Transition]]) -> None:
        self.trajectories: List[List[Transition]] = [list(tr) for tr in trajectories]
        for n, tr in enumerate(self.trajectories):
            for prev, cur in zip(tr, tr[1:]):
                if prev.x_next != cur.x:
                    raise ValueError(f"Trajectory {n} is not chained at state {cur.x}")

    def __len__(self) -> int:
        return sum(len(tr) for tr in self.trajectories)

    def states(self) -> List[AgentState]:
        """Every visited state: each ``x_t`` plus the final ``x_{t+1}`` of each trajectory."""
        out: List[AgentState] = []
        for tr in self.trajectories:
            out.extend(t.x for t in tr)
            if tr:
                out.append(tr[-1].x_next)
        return out


class RandomWalkPolicy:
    """Momentum random walk at full speed.

    The heading drifts by a Gaussian turn each step; when a wall blocks any axis of the
    motion the walker bounces off in a fresh uniformly random direction.
    """

    def __init__(self, world: MazeWorld, turn_sigma: float = 0.6) -> None:
        if turn_sigma < 0:
            raise ValueError(f"turn_sigma must be non-negative, got {turn_sigma}")
        self.world = world
        self.turn_sigma = turn_sigma

    def rollout(self, rng: np.random.Generator, length: int) -> List[Transition]:
        world = self.world
        x = world.sample_free(rng)
        heading = float(rng.uniform(-math.pi, math.pi))
        transitions: List[Transition] = []
        for _ in range(length):
            heading += float(rng.normal(0.0, self.turn_sigma))
            a = (world.max_speed * math.cos(heading), world.max_speed * math.sin(heading))
            x_next = step(world, x, a)
            transitions.append(Transition(x=x, a=a, x_next=x_next))
            if not math.isclose(x_next[0] - x[0], a[0]) or not math.isclose(
                x_next[1] - x[1], a[1]
            ):
                heading = float(rng.uniform(-math.pi, math.pi))
            x = x_next
        return transitions


def generate_dataset(
    world: MazeWorld,
    n_traj: int,
    traj_len: int,
    rng_seed: int,
    turn_sigma: float = 0.6,
) -> OfflineDataset:
    """Collect ``n_traj`` random-walk trajectories of ``traj_len`` transitions each.

    Each trajectory starts at a uniformly random free position. Deterministic under
    ``rng_seed``.
    """
    if n_traj < 1 or traj_len < 1:
        raise ValueError(f"n_traj and traj_len must be at least 1, got {n_traj}, {traj_len}")
    rng = np.random.default_rng(rng_seed)
    policy = RandomWalkPolicy(world, turn_sigma=turn_sigma)
    dataset = OfflineDataset([policy.rollout(rng, traj_len) for _ in range(n_traj)])
    logger.info(f"Generated {n_traj} trajectories x {traj_len} steps ({len(dataset)} transitions)")
    return dataset


def coverage(world: MazeWorld, dataset: OfflineDataset) -> float:
    """Fraction of free cells visited by at least one dataset state."""
    visited: Set[Cell] = {world.cell_of(s) for s in dataset.states()}
    free = set(world.free_cells)
    return len(visited & free) / len(free)


def save_dataset(path: Union[str, Path], dataset: OfflineDataset) -> None:
    """Write one JSON object per transition.

    Each line is ``{"traj": i, "t": t, "x": [x, y], "a": [ax, ay], "x_next": [x, y]}``.
    """
    with open(path, "w") as f:
        for i, tr in enumerate(dataset.trajectories):
            for t, tran in enumerate(tr):
                record = {
                    "traj": i,
                    "t": t,
                    "x": list(tran.x),
                    "a": list(tran.a),
                    "x_next": list(tran.x_next),
                }
                f.write(json.dumps(record) + "\n")


def load_dataset(path: Union[str, Path]) -> OfflineDataset:
    """Read a dataset written by :func:`save_dataset`.

    Raises:
        ValueError: If the file is empty or its transitions are out of order or not chained
    """
    trajectories: List[List[Transition]] = []
    with open(path, "r") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            i, t = int(record["traj"]), int(record["t"])
            if i == len(trajectories):
                trajectories.append([])
            if i != len(trajectories) - 1 or t != len(trajectories[i]):
                raise ValueError(f"Line {line_no}: transition ({i}, {t}) out of order")
            trajectories[i].append(
                Transition(
                    x=(float(record["x"][0]), float(record["x"][1])),
                    a=(float(record["a"][0]), float(record["a"][1])),
                    x_next=(float(record["x_next"][0]), float(record["x_next"][1])),
                )
            )
    if not trajectories:
        raise ValueError(f"Dataset file {path} contains no transitions")
    return OfflineDataset(trajectories)
