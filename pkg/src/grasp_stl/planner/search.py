"""STL graph search.

Search nodes pair a graph node with a signal time step and carry both the sound
interval monitor (pruning and acceptance) and the heuristic monitor (ordering). A node
at step ``t`` represents the waypoint prefix ``(x0, w1, ..., wt)``. Successors are the
graph neighbors plus a wait successor that stays put while time advances.
"""

import heapq
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config import PlannerConfig
from ..models.formula import StlFormula
from ..models.graph import ReachGraph
from ..models.plan import PlanResult, SearchStats
from ..models.predicates import PredicateTable
from ..robustness.agm import RobustnessInterval, check_predicates, position_of
from ..robustness.monitor import (
    MonitorState,
    eval_interval,
    eval_interval_heuristic,
    init_heuristic_monitor,
    init_monitor,
)
from ..stl.analysis import horizon
from .frontier import make_frontier

logger = logging.getLogger(__name__)

Lambdas = Tuple[float, float, float]


@dataclass(eq=False)
class SearchNode:
    """Augmented search state.

    Attributes:
        v: Graph node id, ``None`` for the virtual start
        parent: Predecessor, ``None`` for the virtual start
        t: Signal step of the newest waypoint
        state: Newest waypoint
        interval: Sound robustness interval of the prefix
        monitor: Sound monitor snapshot
        monitor_h: Heuristic monitor snapshot
        heuristic_pair: Guidance interval from the heuristic monitor
        path_len: Accumulated geometric length of the prefix
        alive: Cleared when evicted from its dominance bucket
    """

    v: Optional[int]
    parent: Optional["SearchNode"]
    t: int
    state: Tuple[float, float]
    interval: RobustnessInterval
    monitor: MonitorState
    monitor_h: MonitorState
    heuristic_pair: RobustnessInterval
    path_len: float = 0.0
    alive: bool = field(default=True, compare=False)


_BucketEntry = Tuple[float, float, int, SearchNode]


def nearest_anchor(graph: ReachGraph, x0: Sequence[float]) -> int:
    """Graph node closest to ``x0`` in the plane; ties go to the lowest id.

    Raises:
        ValueError: If the graph is empty
    """
    if len(graph) == 0:
        raise ValueError("Graph has no nodes")
    pos = np.asarray([n.pos for n in graph.nodes], dtype=float)
    d2 = np.sum((pos - np.asarray(position_of(x0))) ** 2, axis=1)
    return int(np.argmin(d2))


def score(node: SearchNode, lambdas: Lambdas) -> float:
    """Frontier priority ``l0 * heuristic_lower + l1 * t - l2 * path_len``; higher first."""
    l0, l1, l2 = lambdas
    return l0 * node.heuristic_pair.lower + l1 * node.t - l2 * node.path_len


def dominates(z1: SearchNode, z2: SearchNode, eps: float) -> bool:
    """Whether ``z1`` dominates ``z2`` at the same graph node and time step.

    ``z1`` dominates when its sound lower bound is at least ``z2``'s, or when the lower
    bounds are within ``eps`` and ``z1``'s path is no longer.

    Raises:
        ValueError: If the nodes differ in graph node or time step
    """
    if z1.v != z2.v or z1.t != z2.t:
        raise ValueError(f"Cannot compare nodes at ({z1.v}, {z1.t}) and ({z2.v}, {z2.t})")
    l1, l2 = z1.interval.lower, z2.interval.lower
    return l1 >= l2 or (abs(l1 - l2) <= eps and z1.path_len <= z2.path_len)


def reconstruct_waypoints(goal_node: SearchNode) -> List[Tuple[float, float]]:
    """Waypoints ``(x0, w1, ..., wt)`` recovered from the parent chain."""
    return [n.state for n in _chain(goal_node)]


def _chain(node: SearchNode) -> List[SearchNode]:
    chain: List[SearchNode] = []
    cur: Optional[SearchNode] = node
    while cur is not None:
        chain.append(cur)
        cur = cur.parent
    chain.reverse()
    return chain


class _Buckets:
    """Top-K dominance buckets keyed by ``(v, t)``.

    Each bucket is a min-heap whose root is the worst retained node: lowest sound lower
    bound, then longest path.
    """

    def __init__(self, top_k: Optional[int], eps: float) -> None:
        self.top_k = top_k
        self.eps = eps
        self._buckets: Dict[Tuple[Optional[int], int], List[_BucketEntry]] = {}
        self._seq = 0

    def admit(self, node: SearchNode) -> Tuple[bool, Optional[SearchNode]]:
        """Try to retain ``node``.

        Returns:
            Whether it was admitted, and the node it evicted if any
        """
        bucket = self._buckets.setdefault((node.v, node.t), [])
        entry = (node.interval.lower, -node.path_len, self._seq, node)
        self._seq += 1
        if self.top_k is None or len(bucket) < self.top_k:
            heapq.heappush(bucket, entry)
            return True, None
        worst = bucket[0][3]
        if dominates(node, worst, self.eps) and not dominates(worst, node, self.eps):
            heapq.heapreplace(bucket, entry)
            worst.alive = False
            return True, worst
        return False, None

    def discard(self, node: SearchNode) -> None:
        bucket = self._buckets.get((node.v, node.t))
        if not bucket:
            return
        kept = [e for e in bucket if e[3] is not node]
        if len(kept) != len(bucket):
            heapq.heapify(kept)
            self._buckets[(node.v, node.t)] = kept

    def size(self, v: Optional[int], t: int) -> int:
        return len(self._buckets.get((v, t), []))


class STLGraphSearch:
    """Best-first search for a waypoint sequence satisfying an STL formula.

    Acceptance and pruning consult the sound interval only: a popped node is accepted
    when ``t >= horizon`` and its lower bound is positive, and any node whose upper
    bound is not positive is discarded. Statistics of the last run are kept in
    :attr:`stats` whether or not a plan was found.
    """

    def __init__(
        self,
        graph: ReachGraph,
        phi: StlFormula,
        preds: PredicateTable,
        config: Optional[PlannerConfig] = None,
        on_expand: Optional[Callable[[SearchNode, List[SearchNode]], None]] = None,
    ) -> None:
        """Initialize the searcher.

        Args:
            graph: Strongly connected reachability graph
            phi: Formula the waypoint sequence must satisfy
            preds: Predicate table for ``phi``
            config: Planner parameters
            on_expand: Called with each expanded node and all its evaluated children
        """
        check_predicates(phi, preds)
        self.graph = graph
        self.phi = phi
        self.preds = preds
        self.config = config or PlannerConfig()
        self.horizon = horizon(phi)
        self.on_expand = on_expand
        self.stats = SearchStats()

    def _extend(self, parent: SearchNode, v: int) -> SearchNode:
        state = self.graph.position(v)
        interval, monitor = eval_interval(self.phi, self.preds, state, parent.monitor)
        hint, monitor_h = eval_interval_heuristic(self.phi, self.preds, state, parent.monitor_h)
        return SearchNode(
            v=v,
            parent=parent,
            t=parent.t + 1,
            state=state,
            interval=interval,
            monitor=monitor,
            monitor_h=monitor_h,
            heuristic_pair=hint,
            path_len=parent.path_len + math.dist(parent.state, state),
        )

    def _successors(self, v: int) -> List[int]:
        return list(self.graph.neighbors(v)) + [v]

    def _result(self, node: SearchNode) -> PlanResult:
        chain = _chain(node)
        return PlanResult(
            waypoints=[n.state for n in chain],
            node_ids=[n.v for n in chain],
            final_interval=(node.interval.lower, node.interval.upper),
            stats=self.stats,
        )

    def search(self, x0: Sequence[float]) -> Optional[PlanResult]:
        """Plan from initial state ``x0``.

        Returns:
            The first accepted plan, or ``None`` when the frontier empties or the
            expansion budget runs out
        """
        started = time.perf_counter()
        self.stats = SearchStats()
        stats = self.stats
        cfg = self.config
        lambdas = cfg.lambdas
        x0_pos = position_of(x0)

        monitor = init_monitor(self.phi, self.preds, x0_pos)
        monitor_h = init_heuristic_monitor(self.phi, self.preds, x0_pos)
        root = SearchNode(
            v=None,
            parent=None,
            t=0,
            state=x0_pos,
            interval=monitor.interval,
            monitor=monitor,
            monitor_h=monitor_h,
            heuristic_pair=monitor_h.interval,
        )

        try:
            if self.horizon == 0:
                return self._result(root) if root.interval.lower > 0 else None

            frontier = make_frontier(cfg.frontier, lambda z: score(z, lambdas))
            buckets = _Buckets(cfg.top_k, cfg.eps)

            v_start = nearest_anchor(self.graph, x0_pos)
            for v in self._successors(v_start):
                child = self._extend(root, v)
                stats.generated += 1
                if child.interval.upper < 0:
                    stats.pruned_upper += 1
                    continue
                admitted, evicted = buckets.admit(child)
                if evicted is not None or not admitted:
                    stats.pruned_dominance += 1
                if admitted:
                    frontier.push(child)

            while frontier:
                if stats.expanded >= cfg.max_expansions:
                    logger.info(f"Expansion budget of {cfg.max_expansions} exhausted")
                    return None
                z = frontier.pop()
                if not z.alive:
                    continue
                if z.t >= self.horizon:
                    if z.interval.lower > 0:
                        logger.debug(f"Accepted node {z.v} at t={z.t}, interval {z.interval}")
                        return self._result(z)
                    buckets.discard(z)
                    continue
                if z.interval.upper <= 0:
                    stats.pruned_upper += 1
                    buckets.discard(z)
                    continue

                stats.expanded += 1
                children: List[SearchNode] = []
                for v in self._successors(z.v):  # type: ignore[arg-type]
                    child = self._extend(z, v)
                    children.append(child)
                    stats.generated += 1
                    if child.interval.upper <= 0:
                        stats.pruned_upper += 1
                        continue
                    admitted, evicted = buckets.admit(child)
                    if evicted is not None or not admitted:
                        stats.pruned_dominance += 1
                    if admitted:
                        frontier.push(child)
                if self.on_expand is not None:
                    self.on_expand(z, children)
                if stats.expanded % cfg.trace_interval == 0:
                    stats.snapshot(len(frontier))
            return None
        finally:
            stats.elapsed_seconds = time.perf_counter() - started
            if not stats.trace or stats.trace[-1].expanded != stats.expanded:
                stats.snapshot(0)
            logger.info(
                f"Search finished: {stats.expanded} expanded, {stats.generated} generated, "
                f"{stats.pruned_upper} pruned by bound, {stats.pruned_dominance} by dominance, "
                f"{stats.elapsed_seconds:.3f}s"
            )


def stl_graph_search(
    x0: Sequence[float],
    graph: ReachGraph,
    phi: StlFormula,
    preds: PredicateTable,
    config: Optional[PlannerConfig] = None,
) -> Optional[PlanResult]:
    """Functional entry point for :class:`STLGraphSearch`."""
    return STLGraphSearch(graph, phi, preds, config).search(x0)
