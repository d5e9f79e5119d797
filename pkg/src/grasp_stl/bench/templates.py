"""Formula templates T1-T12 and random task sampling.

Templates are grouped by difficulty: Basic (reachability and disjunction), Intermediate
(sequencing and safety) and Advanced (branching, persistence and nesting). Time bounds
scale with the hop diameter ``D`` of the graph so that every region can be reached
within its window from anywhere in the maze.
"""

import logging
import math
import re
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config import TEMPLATE_IDS, BenchConfig
from ..graph.builder import hop_diameter
from ..models.formula import StlFormula
from ..models.graph import ReachGraph
from ..models.predicates import PredicateDef
from ..models.task import TaskSpec
from ..sim.world import MazeWorld
from ..stl.analysis import horizon, predicate_ids
from ..stl.parser import format_formula, parse_formula

logger = logging.getLogger(__name__)

TEMPLATE_GROUPS: Dict[str, List[str]] = {
    "Basic": ["T1", "T2", "T3"],
    "Intermediate": ["T4", "T5", "T6", "T7"],
    "Advanced": ["T8", "T9", "T10", "T11", "T12"],
}

TEMPLATE_TEXT: Dict[str, str] = {
    "T1": "F[0,t1] m1 & F[t1,t2] m2",
    "T2": "F[0,t1] m1 | F[0,t1] m2",
    "T3": "F[0,t1] m1 & F[0,t1] m2 & F[0,t1] m3",
    "T4": "F[0,t1] m1 & F[t1,t2] m2 & F[t2,t3] m3",
    "T5": "F[0,t1] m1 & F[t1,t2] m2 & F[t2,t3] m3 & G[0,t3] !m4",
    "T6": "F[0,t1] m1 & F[t1,t2] m2 & F[t2,t3] m3 & F[t3,t4] m4",
    "T7": "F[0,t1] m1 & F[0,t1] m2 & F[0,t1] m3 & F[0,t1] m4",
    "T8": "F[0,t1] m1 & G[t1,t3] m1",
    "T9": "G[t1,t2] m1 & G[t3,t4] m2",
    "T10": "(F[0,t1] m1 & F[t1,t2] m2) | F[0,t2] m3",
    "T11": "(F[0,t1] m1 & F[0,t1] m2) | (F[0,t1] m1 & F[0,t1] m3) | (F[0,t1] m2 & F[0,t1] m3)",
    "T12": "G[0,t1] (F[0,t2] m1 & F[t2,t3] m2)",
}

_PLACEHOLDER = re.compile(r"\bt[1-4]\b")


class SamplingError(RuntimeError):
    """Raised when rejection sampling cannot place a task within its budget."""


def template_group(template_id: str) -> str:
    for group, members in TEMPLATE_GROUPS.items():
        if template_id in members:
            return group
    raise ValueError(f"Unknown template: {template_id}")


class _Bounds:
    """Draws time bounds scaled to the graph hop diameter."""

    def __init__(self, rng: np.random.Generator, diameter: int) -> None:
        self.rng = rng
        self.d = max(1, diameter)
        self.slack = max(2, self.d // 3)

    def randint(self, lo: int, hi: int) -> int:
        return int(self.rng.integers(lo, hi + 1))

    def reach(self, legs: int) -> int:
        """Enough steps to visit ``legs`` regions one after another."""
        base = legs * (self.d + 1)
        return self.randint(base, base + self.slack)

    def gap(self) -> int:
        return self.randint(self.d, self.d + self.slack)

    def sequence(self, legs: int) -> Dict[str, int]:
        bounds = [self.reach(1)]
        for _ in range(legs - 1):
            bounds.append(bounds[-1] + self.gap())
        return {f"t{i + 1}": t for i, t in enumerate(bounds)}


def _reach_then_gap(b: _Bounds) -> Dict[str, int]:
    t1 = b.reach(1)
    return {"t1": t1, "t2": t1 + b.gap()}


def _persistence(b: _Bounds) -> Dict[str, int]:
    t1 = b.reach(1)
    return {"t1": t1, "t3": t1 + b.randint(2, 2 + b.slack)}


def _two_holds(b: _Bounds) -> Dict[str, int]:
    # short holds separated by a transfer shorter than the diameter
    t1 = b.reach(1)
    t2 = t1 + b.randint(1, 3)
    t3 = t2 + b.randint(math.ceil(b.d / 2), b.d)
    return {"t1": t1, "t2": t2, "t3": t3, "t4": t3 + b.randint(1, 3)}


def _recurrent(b: _Bounds) -> Dict[str, int]:
    # the outer window spans about a diameter, so every inner F window is tracked across
    # it; holding in m1 until t1 and then in m2 from t1 + t2 to t3 always satisfies it
    t1 = b.randint(b.d, b.d + b.slack)
    t2 = b.reach(1)
    return {"t1": t1, "t2": t2, "t3": t2 + t1 + b.gap()}


_BOUNDS: Dict[str, Callable[[_Bounds], Dict[str, int]]] = {
    "T1": _reach_then_gap,
    "T2": lambda b: {"t1": b.reach(1)},
    "T3": lambda b: {"t1": b.reach(3)},
    "T4": lambda b: b.sequence(3),
    "T5": lambda b: b.sequence(3),
    "T6": lambda b: b.sequence(4),
    "T7": lambda b: {"t1": b.reach(4)},
    "T8": _persistence,
    "T9": _two_holds,
    "T10": _reach_then_gap,
    "T11": lambda b: {"t1": b.reach(2)},
    "T12": _recurrent,
}


def render_template(template_id: str, bounds: Dict[str, int]) -> str:
    """Template text with its time-bound placeholders replaced.

    Raises:
        ValueError: If the template id is unknown or a placeholder has no value
    """
    text = TEMPLATE_TEXT.get(template_id)
    if text is None:
        raise ValueError(f"Unknown template: {template_id}")
    missing = sorted(set(_PLACEHOLDER.findall(text)) - set(bounds))
    if missing:
        raise ValueError(f"{template_id} needs values for {missing}")
    return _PLACEHOLDER.sub(lambda m: str(bounds[m.group(0)]), text)


def build_template(
    template_id: str, rng: np.random.Generator, diameter: int
) -> Tuple[StlFormula, Dict[str, int]]:
    """Formula and drawn time bounds for one template.

    Raises:
        ValueError: If the template id is unknown
    """
    draw = _BOUNDS.get(template_id)
    if draw is None:
        raise ValueError(f"Unknown template: {template_id}")
    bounds = draw(_Bounds(rng, diameter))
    return parse_formula(render_template(template_id, bounds)), bounds


def sample_regions(
    n: int,
    world: MazeWorld,
    graph: ReachGraph,
    config: BenchConfig,
    rng: np.random.Generator,
) -> List[PredicateDef]:
    """Rejection-sample ``n`` non-overlapping disks ``m1..mn`` in free space.

    Every disk lies entirely in free cells, is disjoint from the others and holds at
    least one graph node strictly inside.

    Raises:
        SamplingError: If ``config.region_attempts`` draws are not enough
    """
    node_pos = np.asarray([node.pos for node in graph.nodes], dtype=float).reshape(-1, 2)
    regions: List[PredicateDef] = []
    for _ in range(config.region_attempts):
        if len(regions) == n:
            break
        center = world.sample_free(rng)
        radius = float(rng.uniform(config.radius_min, config.radius_max))
        if not world.disk_free(center, radius):
            continue
        if any(math.dist(center, r.center) <= radius + r.radius for r in regions):
            continue
        if not np.any(np.linalg.norm(node_pos - np.asarray(center), axis=1) < radius):
            continue
        regions.append(PredicateDef(id=f"m{len(regions) + 1}", center=center, radius=radius))
    if len(regions) < n:
        raise SamplingError(
            f"Placed {len(regions)} of {n} regions in {config.region_attempts} attempts"
        )
    return regions


def sample_start(
    world: MazeWorld,
    regions: Sequence[PredicateDef],
    rng: np.random.Generator,
    attempts: int,
) -> Tuple[float, float]:
    """Uniform free position outside every region.

    Raises:
        SamplingError: If no such position is drawn within ``attempts``
    """
    for _ in range(attempts):
        x0 = world.sample_free(rng)
        if all(math.dist(x0, r.center) > r.radius for r in regions):
            return x0
    raise SamplingError(f"No start state outside the regions in {attempts} attempts")


def instantiate_template(
    template_id: str,
    world: MazeWorld,
    graph: ReachGraph,
    config: BenchConfig,
    rng_seed: int,
    diameter: Optional[int] = None,
) -> TaskSpec:
    """Draw one task from a template.

    Args:
        template_id: One of T1-T12
        world: Maze the regions must fit in
        graph: Graph whose nodes must reach into every region
        config: Sampling parameters
        rng_seed: Seed for every random draw of this task
        diameter: Hop diameter of ``graph``; computed when omitted

    Returns:
        The instantiated task

    Raises:
        ValueError: If the template id is unknown
        SamplingError: If regions or start cannot be placed, or the drawn horizon exceeds
            ``config.max_horizon``
    """
    if template_id not in TEMPLATE_IDS:
        raise ValueError(f"Unknown template: {template_id}")
    if diameter is None:
        diameter = hop_diameter(graph)
    rng = np.random.default_rng(rng_seed)
    phi, bounds = build_template(template_id, rng, diameter)
    if horizon(phi) > config.max_horizon:
        raise SamplingError(
            f"{template_id} horizon {horizon(phi)} exceeds the maximum {config.max_horizon}"
        )
    regions = sample_regions(len(predicate_ids(phi)), world, graph, config, rng)
    x0 = sample_start(world, regions, rng, config.region_attempts)
    return TaskSpec(
        template_id=template_id,
        predicates=regions,
        time_bounds=bounds,
        x0=x0,
        formula=format_formula(phi),
        rng_seed=rng_seed,
    )


def task_seed(base_seed: int, template_id: str, config_idx: int, attempt: int = 0) -> int:
    """Independent, reproducible seed for one task draw."""
    seq = np.random.SeedSequence([base_seed, TEMPLATE_IDS.index(template_id), config_idx, attempt])
    return int(seq.generate_state(1)[0])


def sample_task(
    template_id: str,
    world: MazeWorld,
    graph: ReachGraph,
    config: BenchConfig,
    config_idx: int,
    diameter: Optional[int] = None,
) -> TaskSpec:
    """Draw the ``config_idx``-th task of a template, reseeding after sampling failures.

    Raises:
        SamplingError: If ``config.task_retries`` seeds all fail
    """
    if diameter is None:
        diameter = hop_diameter(graph)
    last: Optional[SamplingError] = None
    for attempt in range(config.task_retries):
        seed = task_seed(config.seed, template_id, config_idx, attempt)
        try:
            return instantiate_template(template_id, world, graph, config, seed, diameter)
        except SamplingError as e:
            logger.debug(f"{template_id}#{config_idx} attempt {attempt} discarded: {e}")
            last = e
    raise SamplingError(
        f"{template_id}#{config_idx}: no task after {config.task_retries} seeds ({last})"
    )
