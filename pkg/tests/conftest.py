"""Pytest configuration and shared fixtures."""
import sys
from pathlib import Path
from typing import Callable, Dict, Sequence, Tuple

import numpy as np
import pytest

# Add project root to Python path to support 'from src.grasp_stl...' imports
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.grasp_stl.config import GraphConfig, RunConfig  # noqa: E402
from src.grasp_stl.graph.builder import build_graph  # noqa: E402
from src.grasp_stl.models.formula import (  # noqa: E402
    Always,
    And,
    Eventually,
    Not,
    Or,
    Predicate,
    StlFormula,
    TrueLiteral,
)
from src.grasp_stl.models.graph import GraphEdge, GraphNode, ReachGraph  # noqa: E402
from src.grasp_stl.models.predicates import PredicateDef  # noqa: E402
from src.grasp_stl.sim.dataset import OfflineDataset, generate_dataset  # noqa: E402
from src.grasp_stl.sim.oracle import BfsOracle  # noqa: E402
from src.grasp_stl.sim.world import MazeWorld, desk_world  # noqa: E402

GraphFactory = Callable[[Sequence[Tuple[float, float]], Sequence[Tuple[int, int]]], ReachGraph]


@pytest.fixture(scope="session")
def world() -> MazeWorld:
    """The bundled 20x20 desk maze."""
    return desk_world()


@pytest.fixture(scope="session")
def small_dataset(world: MazeWorld) -> OfflineDataset:
    """A quick random-walk dataset over the desk maze."""
    return generate_dataset(world, n_traj=80, traj_len=120, rng_seed=7)


@pytest.fixture(scope="session")
def small_graph(world: MazeWorld, small_dataset: OfflineDataset) -> ReachGraph:
    """Reachability graph built from the small dataset with the exact oracle."""
    config = GraphConfig(budget=300, seed=3)
    oracle = BfsOracle(world, k=config.k)
    return build_graph(small_dataset.states(), oracle, config)


@pytest.fixture(scope="session")
def desk_dataset(world: MazeWorld) -> OfflineDataset:
    """The default-size dataset used by the command-line pipeline."""
    d = RunConfig().dataset
    return generate_dataset(world, d.n_traj, d.traj_len, d.seed, d.turn_sigma)


@pytest.fixture(scope="session")
def desk_graph(world: MazeWorld, desk_dataset: OfflineDataset) -> ReachGraph:
    """Graph built from the default dataset with the default graph parameters."""
    config = RunConfig().graph
    return build_graph(desk_dataset.states(), BfsOracle(world, k=config.k), config)


def make_graph(
    positions: Sequence[Tuple[float, float]],
    edges: Sequence[Tuple[int, int]],
    k: int = 10,
    delta: float = 1.0,
    dhat: float = 5.0,
) -> ReachGraph:
    """Hand-made graph with every edge at the same estimated cost."""
    nodes = [GraphNode(id=i, pos=p, state=list(p)) for i, p in enumerate(positions)]
    graph_edges = [GraphEdge(source=i, to=j, dhat=dhat) for i, j in edges]
    return ReachGraph(
        k=k,
        delta=delta,
        nodes=nodes,
        edges=graph_edges,
        stats=ReachGraph.compute_stats(nodes, graph_edges),
    )


@pytest.fixture
def graph_factory() -> GraphFactory:
    """Factory for hand-made graphs: ``graph_factory(positions, edges)``."""
    return make_graph


@pytest.fixture
def triangle() -> ReachGraph:
    """Directed 3-cycle A -> B -> C -> A with nodes 10 units apart."""
    return make_graph([(0.0, 0.0), (10.0, 0.0), (5.0, 8.0)], [(0, 1), (1, 2), (2, 0)])


def disk(pid: str, x: float, y: float, r: float) -> PredicateDef:
    return PredicateDef(id=pid, center=(x, y), radius=r)


@pytest.fixture
def triangle_preds() -> Dict[str, PredicateDef]:
    """One unit disk around each triangle node: ``a``, ``b`` and ``c``."""
    return {
        "a": disk("a", 0.0, 0.0, 1.0),
        "b": disk("b", 10.0, 0.0, 1.0),
        "c": disk("c", 5.0, 8.0, 1.0),
    }


def _random_formula(rng: np.random.Generator, depth: int, n_preds: int = 3) -> StlFormula:
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.1:
            return TrueLiteral()
        return Predicate(f"p{int(rng.integers(1, n_preds + 1))}")
    kind = int(rng.integers(0, 5))
    if kind == 0:
        return Not(_random_formula(rng, depth - 1, n_preds))
    if kind in (1, 2):
        n = int(rng.integers(2, 4))
        kids = tuple(_random_formula(rng, depth - 1, n_preds) for _ in range(n))
        return And(kids) if kind == 1 else Or(kids)
    a = int(rng.integers(0, 3))
    b = a + int(rng.integers(0, 3))
    cls = Always if kind == 3 else Eventually
    return cls(a, b, _random_formula(rng, depth - 1, n_preds))


@pytest.fixture
def random_formula() -> Callable[..., StlFormula]:
    """Random formula over ``p1..p3`` with bounds below 5: ``random_formula(rng, depth)``."""
    return _random_formula


@pytest.fixture
def disk_preds() -> Dict[str, PredicateDef]:
    """Three overlapping disks ``p1..p3`` inside the square [0, 10] x [0, 10]."""
    return {
        "p1": disk("p1", 3.0, 3.0, 2.5),
        "p2": disk("p2", 6.0, 5.0, 2.0),
        "p3": disk("p3", 5.0, 8.0, 3.0),
    }
