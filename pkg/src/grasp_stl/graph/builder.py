"""Reachability graph construction.

Pipeline: grid subsampling of dataset states, temporal-distance clustering into medoids,
feasibility-thresholded edges chosen for angular diversity, then restriction to the
largest strongly connected component.
"""

import logging
import math
from collections import defaultdict
from typing import TYPE_CHECKING, Dict, List, Sequence, Tuple

import networkx as nx
import numpy as np

from ..models.graph import GraphEdge, GraphNode, ReachGraph
from .oracle import ReachabilityOracle, State

if TYPE_CHECKING:
    from ..config import GraphConfig

logger = logging.getLogger(__name__)

Adjacency = List[Dict[int, float]]


def _positions(states: Sequence[State]) -> np.ndarray:
    return np.asarray([[float(s[0]), float(s[1])] for s in states], dtype=float).reshape(-1, 2)


def grid_subsample(
    states: Sequence[State], cell_size: float, budget: int, rng_seed: int
) -> List[State]:
    """Spread up to ``budget`` samples evenly over occupied grid cells.

    Cells are visited round-robin in sorted order; inside a cell, states are drawn at
    random without replacement. Every occupied cell contributes once before any cell
    contributes twice.

    Raises:
        ValueError: If ``states`` is empty or ``cell_size`` is not positive
    """
    if len(states) == 0:
        raise ValueError("Cannot subsample an empty set of states")
    if cell_size <= 0:
        raise ValueError(f"cell_size must be positive, got {cell_size}")
    rng = np.random.default_rng(rng_seed)
    cells = np.floor(_positions(states) / cell_size).astype(int)
    members: Dict[Tuple[int, int], List[int]] = defaultdict(list)
    for n, (cx, cy) in enumerate(cells):
        members[(int(cx), int(cy))].append(n)

    queues = [list(rng.permutation(members[c])) for c in sorted(members)]
    picked: List[int] = []
    depth = 0
    while len(picked) < budget:
        progressed = False
        for queue in queues:
            if depth < len(queue):
                picked.append(int(queue[depth]))
                progressed = True
                if len(picked) == budget:
                    break
        if not progressed:
            break
        depth += 1
    logger.debug(f"Subsampled {len(picked)} of {len(states)} states over {len(queues)} cells")
    return [states[i] for i in picked]


def symmetrized(matrix: np.ndarray) -> np.ndarray:
    return (matrix + matrix.T) / 2.0


def cluster_medoids(
    states: Sequence[State], oracle: ReachabilityOracle, threshold: float
) -> List[State]:
    """Greedy temporal-distance clustering.

    States are scanned in input order and join the first cluster whose seed lies within
    symmetrized distance ``threshold``; otherwise they open a new cluster. Each cluster
    is then represented by the member with the smallest total symmetrized distance to the
    other members, ties going to the earliest member.
    """
    if threshold <= 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    if len(states) == 0:
        return []
    dist = symmetrized(oracle.pairwise(states))
    seeds: List[int] = []
    clusters: List[List[int]] = []
    for i in range(len(states)):
        for c, seed in enumerate(seeds):
            if dist[i, seed] < threshold:
                clusters[c].append(i)
                break
        else:
            seeds.append(i)
            clusters.append([i])

    medoids: List[State] = []
    for members in clusters:
        totals = dist[np.ix_(members, members)].sum(axis=1)
        medoids.append(states[members[int(np.argmin(totals))]])
    logger.debug(f"Clustered {len(states)} states into {len(medoids)} medoids")
    return medoids


def _angle_gap(a: float, b: float) -> float:
    gap = abs(a - b) % (2 * math.pi)
    return min(gap, 2 * math.pi - gap)


def build_edges(
    nodes: Sequence[State],
    oracle: ReachabilityOracle,
    k: float,
    delta: float,
    n_bins: int = 8,
    target_degree: int = 5,
    top_up: bool = True,
    reverse: bool = True,
) -> Adjacency:
    """Select feasible, angularly diverse directed edges.

    For each node the candidates are the other nodes with ``dhat < k - delta``. The plane
    around the node is split into ``n_bins`` equal sectors and the candidate with the best
    distance efficiency (geometric length over ``dhat``) is kept per sector. While the
    out-degree is below ``target_degree`` the remaining candidates are added by angular
    novelty (smallest angle to an already chosen edge, larger first), then efficiency.
    Finally every chosen edge gets its reverse when the reverse is feasible.

    Args:
        nodes: Representative states
        oracle: Distance oracle
        k: Control steps per edge
        delta: Feasibility margin
        n_bins: Number of angular sectors
        target_degree: Out-degree the top-up phase aims for
        top_up: Disable to keep only the per-sector choices
        reverse: Disable to skip the reverse-edge pass

    Returns:
        ``adjacency[i][j] = dhat(i, j)`` for every selected edge ``i -> j``
    """
    if not k > delta >= 0:
        raise ValueError(f"Need k > delta >= 0, got k={k}, delta={delta}")
    if n_bins < 1 or target_degree < 1:
        raise ValueError("n_bins and target_degree must be at least 1")
    n = len(nodes)
    adjacency: Adjacency = [{} for _ in range(n)]
    if n == 0:
        return adjacency

    dist = np.array(oracle.pairwise(nodes), dtype=float)
    np.fill_diagonal(dist, np.inf)
    pos = _positions(nodes)
    limit = k - delta
    sector = 2 * math.pi / n_bins

    for i in range(n):
        candidates = [int(j) for j in np.flatnonzero(dist[i] < limit)]
        angle: Dict[int, float] = {}
        efficiency: Dict[int, float] = {}
        for j in candidates:
            dx, dy = pos[j] - pos[i]
            angle[j] = math.atan2(dy, dx)
            d = dist[i, j]
            efficiency[j] = math.hypot(dx, dy) / d if d > 0 else math.inf

        best_in_bin: Dict[int, int] = {}
        for j in candidates:
            b = int(math.floor((angle[j] + math.pi) / sector)) % n_bins
            incumbent = best_in_bin.get(b)
            if incumbent is None or efficiency[j] > efficiency[incumbent]:
                best_in_bin[b] = j
        chosen = [best_in_bin[b] for b in sorted(best_in_bin)]

        if top_up:
            taken = set(chosen)
            remaining = [j for j in candidates if j not in taken]
            while len(chosen) < target_degree and remaining:
                pick = max(
                    remaining,
                    key=lambda j: (
                        min((_angle_gap(angle[j], angle[c]) for c in chosen), default=math.pi),
                        efficiency[j],
                        -j,
                    ),
                )
                chosen.append(pick)
                remaining.remove(pick)

        for j in chosen:
            adjacency[i][j] = float(dist[i, j])

    if not reverse:
        return adjacency
    for i in range(n):
        for j in list(adjacency[i]):
            if i not in adjacency[j] and dist[j, i] < limit:
                adjacency[j][i] = float(dist[j, i])
    return adjacency


def scc_members(adjacency: Adjacency) -> List[int]:
    """Original indices of the largest strongly connected component, ascending.

    Ties in size go to the component holding the smallest node index.
    """
    if not adjacency:
        return []
    graph = nx.DiGraph()
    graph.add_nodes_from(range(len(adjacency)))
    graph.add_edges_from((i, j) for i, targets in enumerate(adjacency) for j in targets)
    best = max(nx.strongly_connected_components(graph), key=lambda c: (len(c), -min(c)))
    return sorted(best)


def largest_scc(
    adjacency: Adjacency,
    nodes: Sequence[State],
    k: int,
    delta: float,
    config_hash: str = "",
) -> ReachGraph:
    """Restrict to the largest strongly connected component and renumber densely.

    Surviving nodes keep their relative order.
    """
    keep = scc_members(adjacency)
    remap = {old: new for new, old in enumerate(keep)}
    graph_nodes = [
        GraphNode(
            id=remap[old],
            pos=(float(nodes[old][0]), float(nodes[old][1])),
            state=[float(v) for v in nodes[old]],
        )
        for old in keep
    ]
    edges = [
        GraphEdge(source=remap[i], to=remap[j], dhat=d)
        for i in keep
        for j, d in sorted(adjacency[i].items())
        if j in remap
    ]
    return ReachGraph(
        k=k,
        delta=delta,
        config_hash=config_hash,
        nodes=graph_nodes,
        edges=edges,
        stats=ReachGraph.compute_stats(graph_nodes, edges),
    )


def build_graph(
    states: Sequence[State], oracle: ReachabilityOracle, config: "GraphConfig"
) -> ReachGraph:
    """Run the full construction pipeline.

    Args:
        states: Dataset states
        oracle: Distance oracle
        config: Graph construction parameters

    Returns:
        Strongly connected reachability graph

    Raises:
        ValueError: If ``states`` is empty
    """
    sampled = grid_subsample(states, config.cell_size, config.budget, config.seed)
    logger.info(f"Subsampled {len(sampled)} states")
    medoids = cluster_medoids(sampled, oracle, config.cluster_threshold)
    logger.info(f"Clustered into {len(medoids)} medoids")
    adjacency = build_edges(
        medoids, oracle, config.k, config.delta, config.n_bins, config.target_degree
    )
    graph = largest_scc(adjacency, medoids, config.k, config.delta, config.config_hash())
    stats = graph.stats
    logger.info(
        f"Graph: {stats.node_count} nodes, {stats.edge_count} edges, "
        f"mean degree {stats.mean_degree:.2f}, mean edge length {stats.mean_edge_length:.2f}"
    )
    return graph


def hop_diameter(graph: ReachGraph) -> int:
    """Longest shortest path, in edges, between any ordered pair of nodes.

    Raises:
        ValueError: If the graph is empty or not strongly connected
    """
    if len(graph) == 0:
        raise ValueError("Empty graph has no diameter")
    if len(graph) == 1:
        return 0
    g = graph.to_networkx()
    if not nx.is_strongly_connected(g):
        raise ValueError("Graph is not strongly connected")
    return int(nx.diameter(g))
