"""Task execution and the concurrent benchmark runner."""

import asyncio
import logging
import time
from typing import Callable, List, Optional, Sequence, Tuple

from ..config import BenchConfig, PlannerConfig
from ..graph.builder import hop_diameter
from ..models.graph import ReachGraph
from ..models.task import TaskRecord, TaskSpec
from ..planner.search import STLGraphSearch
from ..robustness.agm import agm_robustness
from ..sim.controller import execute_plan, subsample_signal, tracking_error
from ..sim.oracle import BfsOracle
from ..sim.world import MazeWorld
from .templates import SamplingError, sample_task

logger = logging.getLogger(__name__)


def run_task(
    task: TaskSpec,
    graph: ReachGraph,
    world: MazeWorld,
    planner_config: PlannerConfig,
    oracle: Optional[BfsOracle] = None,
) -> TaskRecord:
    """Plan, execute and judge one task.

    Planning time is wall-clock time of the search alone. A planned task is executed
    with the greedy controller for ``graph.k`` control steps per waypoint; it succeeds in
    execution when the robustness of the k-step samples of the executed trajectory is
    positive.
    """
    phi = task.phi
    table = task.table
    searcher = STLGraphSearch(graph, phi, table, planner_config)
    started = time.perf_counter()
    plan = searcher.search(task.x0)
    plan_time = time.perf_counter() - started

    if plan is None:
        return TaskRecord(task=task, plan_time_s=plan_time, plan_stats=searcher.stats)

    trajectory = execute_plan(world, task.x0, plan.waypoints, graph.k, oracle)
    signal = subsample_signal(trajectory, graph.k)
    rho = agm_robustness(phi, table, signal)
    return TaskRecord(
        task=task,
        plan_ok=True,
        exec_ok=rho > 0,
        plan_time_s=plan_time,
        plan_stats=plan.stats,
        executed_robustness=rho,
        tracking_error=tracking_error(signal, plan.waypoints),
    )


def generate_tasks(world: MazeWorld, graph: ReachGraph, config: BenchConfig) -> List[TaskSpec]:
    """Sample ``configs_per_template`` tasks for each configured template.

    Task configurations whose sampling fails after every reseed are skipped with a
    warning.
    """
    diameter = hop_diameter(graph)
    logger.info(f"Graph hop diameter {diameter}")
    tasks: List[TaskSpec] = []
    for template_id in config.templates:
        for idx in range(config.configs_per_template):
            try:
                tasks.append(sample_task(template_id, world, graph, config, idx, diameter))
            except SamplingError as e:
                logger.warning(f"Skipping task: {e}")
    logger.info(f"Sampled {len(tasks)} tasks over {len(config.templates)} templates")
    return tasks


async def run_bench(
    tasks: Sequence[TaskSpec],
    graph: ReachGraph,
    world: MazeWorld,
    planner_config: PlannerConfig,
    workers: int = 1,
    on_record: Optional[Callable[[int, TaskRecord], None]] = None,
) -> List[TaskRecord]:
    """Run every task with at most ``workers`` searches in flight.

    Workers hand finished records to a single consumer through a queue; the returned
    list follows the order of ``tasks`` whatever the completion order.

    Args:
        tasks: Tasks to run
        graph: Planning graph
        world: Execution environment
        planner_config: Search parameters
        workers: Concurrent searches
        on_record: Called by the consumer with each record's task index

    Returns:
        One record per task
    """
    if workers < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")
    semaphore = asyncio.Semaphore(workers)
    queue: "asyncio.Queue[Optional[Tuple[int, TaskRecord]]]" = asyncio.Queue()
    oracle = BfsOracle(world, k=graph.k)

    async def worker(idx: int, task: TaskSpec) -> None:
        async with semaphore:
            record = await asyncio.to_thread(run_task, task, graph, world, planner_config, oracle)
        await queue.put((idx, record))

    async def consumer() -> List[Optional[TaskRecord]]:
        collected: List[Optional[TaskRecord]] = [None] * len(tasks)
        done = 0
        while True:
            item = await queue.get()
            if item is None:
                return collected
            idx, record = item
            collected[idx] = record
            done += 1
            if on_record is not None:
                on_record(idx, record)
            logger.info(
                f"[{done}/{len(tasks)}] {record.task.template_id} seed {record.task.rng_seed}: "
                f"plan={'ok' if record.plan_ok else 'fail'} "
                f"exec={'ok' if record.exec_ok else 'fail'} pt={record.plan_time_s:.3f}s"
            )

    consumer_task = asyncio.create_task(consumer())
    try:
        await asyncio.gather(*(worker(i, t) for i, t in enumerate(tasks)))
    finally:
        await queue.put(None)
    collected = await consumer_task
    return [r for r in collected if r is not None]
