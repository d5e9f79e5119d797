"""Tests for reachability graph construction and the graph document."""

import math

import networkx as nx
import numpy as np
import pytest
from pydantic import ValidationError

from src.grasp_stl.config import GraphConfig
from src.grasp_stl.graph.builder import (
    build_edges,
    build_graph,
    cluster_medoids,
    grid_subsample,
    hop_diameter,
    largest_scc,
    scc_members,
)
from src.grasp_stl.graph.oracle import ReachabilityOracle
from src.grasp_stl.models.graph import ReachGraph
from src.grasp_stl.sim.oracle import BfsOracle
from src.grasp_stl.sim.world import MazeWorld


class EuclideanOracle(ReachabilityOracle):
    """Straight-line distance over a fixed speed."""

    def __init__(self, k: int = 10, speed: float = 0.5) -> None:
        super().__init__(k)
        self.speed = speed

    def distance(self, s, g) -> float:
        return math.hypot(g[0] - s[0], g[1] - s[1]) / self.speed


class TableOracle(ReachabilityOracle):
    """Fixed costs between listed states; every other pair costs 100 steps."""

    def __init__(self, nodes, costs, k: int = 10) -> None:
        super().__init__(k)
        self.index = {tuple(s): i for i, s in enumerate(nodes)}
        self.costs = costs

    def distance(self, s, g) -> float:
        i, j = self.index[tuple(s)], self.index[tuple(g)]
        return 0.0 if i == j else self.costs.get((i, j), 100.0)


class NoisyOracle(ReachabilityOracle):
    """Straight-line steps inflated by a fixed random factor per ordered pair."""

    def __init__(self, nodes, rng: np.random.Generator, k: int = 10) -> None:
        super().__init__(k)
        self.index = {tuple(s): i for i, s in enumerate(nodes)}
        self.factor = rng.uniform(1.0, 1.5, size=(len(nodes), len(nodes)))

    def distance(self, s, g) -> float:
        i, j = self.index[tuple(s)], self.index[tuple(g)]
        return math.hypot(g[0] - s[0], g[1] - s[1]) / 0.5 * self.factor[i, j]


def sector_of(origin, target, n_bins: int) -> int:
    angle = math.atan2(target[1] - origin[1], target[0] - origin[0])
    return int(math.floor((angle + math.pi) / (2 * math.pi / n_bins))) % n_bins


def brute_force_largest_scc(adjacency) -> list:
    n = len(adjacency)
    reach = np.eye(n, dtype=bool)
    for i, targets in enumerate(adjacency):
        for j in targets:
            reach[i, j] = True
    for m in range(n):
        reach |= reach[:, [m]] & reach[[m], :]
    components = {frozenset(np.flatnonzero(reach[i] & reach[:, i]).tolist()) for i in range(n)}
    best = max(components, key=lambda c: (len(c), -min(c)))
    return sorted(best)


class TestGridSubsample:
    """Test cases for grid subsampling."""

    def test_one_per_cell_first(self) -> None:
        """Test that every occupied cell contributes before any contributes twice."""
        states = [(0.1, 0.1), (0.2, 0.3), (0.7, 0.4), (1.5, 0.5), (2.5, 2.5), (2.6, 2.2)]
        picked = grid_subsample(states, cell_size=1.0, budget=3, rng_seed=0)
        cells = {(math.floor(x), math.floor(y)) for x, y in picked}
        assert cells == {(0, 0), (1, 0), (2, 2)}

    def test_budget_above_population(self) -> None:
        """Test that a large budget returns every state once."""
        states = [(0.1, 0.1), (0.2, 0.3), (1.5, 0.5)]
        picked = grid_subsample(states, cell_size=1.0, budget=10, rng_seed=0)
        assert sorted(picked) == sorted(states)

    def test_deterministic(self, small_dataset) -> None:
        """Test that the seed fixes the sample."""
        states = small_dataset.states()
        assert grid_subsample(states, 1.0, 50, 4) == grid_subsample(states, 1.0, 50, 4)

    def test_validation(self) -> None:
        """Test empty input and bad cell sizes."""
        with pytest.raises(ValueError):
            grid_subsample([], 1.0, 5, 0)
        with pytest.raises(ValueError):
            grid_subsample([(0.0, 0.0)], 0.0, 5, 0)


class TestClustering:
    """Test cases for temporal-distance clustering."""

    def test_medoids(self) -> None:
        """Test greedy assignment and medoid choice."""
        states = [(0.0, 0.0), (0.5, 0.0), (10.0, 0.0), (10.4, 0.0), (0.2, 0.0)]
        medoids = cluster_medoids(states, EuclideanOracle(), threshold=2.0)
        assert medoids == [(0.2, 0.0), (10.0, 0.0)]

    def test_coincident_states(self) -> None:
        """Test that states at distance zero share one cluster led by the first."""
        states = [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]
        oracle = TableOracle(states, {(i, j): 0.0 for i in range(3) for j in range(3)})
        assert cluster_medoids(states, oracle, threshold=1.0) == [(0.0, 0.0)]

    def test_unit_line(self) -> None:
        """Test a line of unit steps: clusters span at most two steps around a central medoid."""
        states = [(float(i), 0.0) for i in range(10)]
        medoids = cluster_medoids(states, EuclideanOracle(speed=1.0), threshold=2.5)
        assert medoids == [(1.0, 0.0), (4.0, 0.0), (7.0, 0.0), (9.0, 0.0)]
        for m in medoids:
            members = [s for s in states if min(medoids, key=lambda c: abs(c[0] - s[0])) == m]
            assert max(s[0] for s in members) - min(s[0] for s in members) <= 2.0

    def test_empty_and_invalid(self) -> None:
        """Test empty input and non-positive thresholds."""
        assert cluster_medoids([], EuclideanOracle(), threshold=1.0) == []
        with pytest.raises(ValueError):
            cluster_medoids([(0.0, 0.0)], EuclideanOracle(), threshold=0.0)


class TestEdges:
    """Test cases for edge selection."""

    def test_square(self) -> None:
        """Test a unit square where every neighbor falls in its own sector."""
        nodes = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
        adjacency = build_edges(nodes, EuclideanOracle(), k=10, delta=1.0)
        for i in range(4):
            assert set(adjacency[i]) == set(range(4)) - {i}
        assert adjacency[0][3] == pytest.approx(2.0 * math.sqrt(2.0))

    def test_best_candidate_per_sector(self) -> None:
        """Test three candidates in one sector with a target degree of one."""
        nodes = [(0.0, 0.0), (1.0, 0.1), (2.0, 0.2), (3.0, 0.3)]
        oracle = TableOracle(nodes, {(0, 1): 4.0, (0, 2): 4.0, (0, 3): 8.0})
        adjacency = build_edges(nodes, oracle, k=10, delta=1.0, target_degree=1)
        assert adjacency[0] == {2: 4.0}
        assert adjacency[1:] == [{}, {}, {}]
        topped = build_edges(nodes, oracle, k=10, delta=1.0, target_degree=3)
        assert set(topped[0]) == {1, 2, 3}

    def test_sector_choices_before_reverse_edges(self) -> None:
        """Test one most-efficient neighbor per occupied sector on random points."""
        rng = np.random.default_rng(5)
        nodes = [tuple(p) for p in rng.uniform(0, 8, size=(40, 2))]
        oracle = NoisyOracle(nodes, rng)
        limit = 10 - 1.0
        n_bins = 6
        choices = build_edges(
            nodes, oracle, k=10, delta=1.0, n_bins=n_bins, top_up=False, reverse=False
        )
        for i, targets in enumerate(choices):
            best = {}
            for j in range(len(nodes)):
                d = oracle.distance(nodes[i], nodes[j])
                if j == i or d >= limit:
                    continue
                b = sector_of(nodes[i], nodes[j], n_bins)
                eff = math.dist(nodes[i], nodes[j]) / d
                if b not in best or eff > best[b][1]:
                    best[b] = (j, eff)
            assert set(targets) == {j for j, _ in best.values()}
            sectors = [sector_of(nodes[i], nodes[j], n_bins) for j in targets]
            assert len(sectors) == len(set(sectors))
        with_reverse = build_edges(nodes, oracle, k=10, delta=1.0, n_bins=n_bins, top_up=False)
        for i in range(len(nodes)):
            assert set(choices[i]) <= set(with_reverse[i])

    def test_infeasible_pairs_skipped(self) -> None:
        """Test that pairs at dhat >= k - delta get no edge."""
        nodes = [(0.0, 0.0), (4.0, 0.0), (4.6, 0.0)]
        adjacency = build_edges(nodes, EuclideanOracle(), k=10, delta=1.0)
        assert set(adjacency[0]) == {1}
        assert set(adjacency[2]) == {1}

    def test_invariants_on_random_points(self) -> None:
        """Test feasibility, self-loops and reverse edges."""
        rng = np.random.default_rng(0)
        nodes = [tuple(p) for p in rng.uniform(0, 8, size=(40, 2))]
        oracle = EuclideanOracle()
        limit = 10 - 1.0
        sparse = build_edges(nodes, oracle, k=10, delta=1.0, n_bins=4, top_up=False)
        dense = build_edges(nodes, oracle, k=10, delta=1.0, n_bins=4, target_degree=6)
        for adjacency in (sparse, dense):
            for i, targets in enumerate(adjacency):
                assert i not in targets
                for j, d in targets.items():
                    assert d < limit
                    if oracle.distance(nodes[j], nodes[i]) < limit:
                        assert i in adjacency[j]
        for i in range(len(nodes)):
            assert set(sparse[i]) <= set(dense[i])

    def test_validation(self) -> None:
        """Test k and delta validation."""
        with pytest.raises(ValueError):
            build_edges([(0.0, 0.0)], EuclideanOracle(), k=5, delta=5.0)


class TestStrongComponents:
    """Test cases for SCC restriction."""

    def test_matches_brute_force(self) -> None:
        """Test the largest SCC on random small digraphs."""
        rng = np.random.default_rng(1)
        for _ in range(200):
            n = int(rng.integers(1, 9))
            adjacency = [
                {int(j): 1.0 for j in range(n) if j != i and rng.random() < 0.25}
                for i in range(n)
            ]
            assert scc_members(adjacency) == brute_force_largest_scc(adjacency)

    def test_tie_goes_to_smallest_index(self) -> None:
        """Test equal-size components."""
        adjacency = [{1: 1.0}, {0: 1.0}, {3: 1.0}, {2: 1.0}]
        assert scc_members(adjacency) == [0, 1]

    def test_renumbering(self) -> None:
        """Test dense renumbering and dropped edges."""
        adjacency = [{1: 2.0}, {2: 2.0}, {1: 2.0}]
        nodes = [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]
        graph = largest_scc(adjacency, nodes, k=10, delta=1.0)
        assert [n.pos for n in graph.nodes] == [(1.0, 0.0), (2.0, 0.0)]
        assert graph.neighbors(0) == [1] and graph.neighbors(1) == [0]
        assert graph.stats.edge_count == 2


class TestBuiltGraph:
    """Test cases for the full pipeline on the desk maze."""

    def test_invariants(self, world: MazeWorld, small_graph: ReachGraph) -> None:
        """Test strong connectivity, feasibility and free positions."""
        assert len(small_graph) >= 10
        assert nx.is_strongly_connected(small_graph.to_networkx())
        for e in small_graph.edges:
            assert e.source != e.to
            assert e.dhat < small_graph.k - small_graph.delta
        assert all(world.is_free(n.pos) for n in small_graph.nodes)
        assert [n.id for n in small_graph.nodes] == list(range(len(small_graph)))

    def test_config_hash(self, small_graph: ReachGraph) -> None:
        """Test that the graph records its construction parameters."""
        assert small_graph.config_hash == GraphConfig(budget=300, seed=3).config_hash()

    def test_deterministic(self, world: MazeWorld, small_dataset, small_graph) -> None:
        """Test that rebuilding gives the same document."""
        config = GraphConfig(budget=300, seed=3)
        again = build_graph(small_dataset.states(), BfsOracle(world, k=config.k), config)
        assert again.to_dict() == small_graph.to_dict()

    def test_empty_states_rejected(self, world: MazeWorld) -> None:
        """Test that an empty dataset cannot build a graph."""
        with pytest.raises(ValueError):
            build_graph([], BfsOracle(world), GraphConfig())

    def test_document(self, small_graph: ReachGraph, tmp_path) -> None:
        """Test the JSON document layout."""
        path = tmp_path / "graph.json"
        small_graph.to_file(str(path))
        loaded = ReachGraph.from_file(str(path))
        assert loaded.to_dict() == small_graph.to_dict()
        assert set(small_graph.to_dict()["edges"][0]) == {"from", "to", "dhat"}
        assert loaded.neighbors(0) == small_graph.neighbors(0)


class TestReachGraph:
    """Test cases for the graph model."""

    def test_invalid_edges_rejected(self, graph_factory) -> None:
        """Test self-loops, missing nodes and infeasible costs."""
        with pytest.raises(ValidationError):
            graph_factory([(0.0, 0.0), (1.0, 0.0)], [(0, 0)])
        nodes = [
            {"id": 0, "pos": [0, 0], "state": [0, 0]},
            {"id": 1, "pos": [1, 0], "state": [1, 0]},
        ]
        for edge in ({"from": 0, "to": 2, "dhat": 2.0}, {"from": 0, "to": 1, "dhat": 9.0}):
            with pytest.raises(ValidationError):
                ReachGraph.model_validate(
                    {"k": 10, "delta": 1.0, "nodes": nodes, "edges": [edge]}
                )

    def test_sparse_ids_rejected(self) -> None:
        """Test that node ids must be dense."""
        with pytest.raises(ValidationError):
            ReachGraph.model_validate(
                {"k": 10, "delta": 1.0, "nodes": [{"id": 1, "pos": [0, 0], "state": [0, 0]}]}
            )

    def test_stats(self, triangle: ReachGraph) -> None:
        """Test degree and edge length statistics."""
        stats = triangle.stats
        assert (stats.node_count, stats.edge_count) == (3, 3)
        assert stats.mean_degree == 1.0
        expected = (10.0 + math.hypot(5.0, 8.0) * 2) / 3
        assert stats.mean_edge_length == pytest.approx(expected)

    def test_hop_diameter(self, triangle: ReachGraph, graph_factory) -> None:
        """Test diameters of a cycle, a single node and a disconnected graph."""
        assert hop_diameter(triangle) == 2
        assert hop_diameter(graph_factory([(0.0, 0.0)], [])) == 0
        with pytest.raises(ValueError):
            hop_diameter(graph_factory([(0.0, 0.0), (1.0, 0.0)], [(0, 1)]))
