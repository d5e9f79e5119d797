"""Reachability graph model and its JSON document."""

import json
import math
from typing import Any, Dict, List, Tuple

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator


class GraphNode(BaseModel):
    """Representative state."""

    id: int = Field(..., ge=0)
    pos: Tuple[float, float]
    state: List[float]


class GraphEdge(BaseModel):
    """Directed edge with its estimated transition steps."""

    model_config = ConfigDict(populate_by_name=True)

    source: int = Field(..., alias="from", ge=0)
    to: int = Field(..., ge=0)
    dhat: float = Field(..., ge=0)


class GraphStats(BaseModel):
    """Summary statistics of a built graph."""

    node_count: int = 0
    edge_count: int = 0
    mean_degree: float = 0.0
    mean_edge_length: float = 0.0


class ReachGraph(BaseModel):
    """Directed graph of representative states with feasible k-step edges.

    Node ids are dense (``nodes[i].id == i``). Every edge satisfies
    ``dhat < k - delta`` and no edge is a self-loop.
    """

    k: int = Field(..., ge=1, description="Control steps per edge")
    delta: float = Field(..., ge=0, description="Feasibility margin in steps")
    config_hash: str = Field(default="", description="Hash of the construction parameters")
    nodes: List[GraphNode] = Field(default_factory=list)
    edges: List[GraphEdge] = Field(default_factory=list)
    stats: GraphStats = Field(default_factory=GraphStats)

    _adjacency: List[List[int]] = PrivateAttr(default_factory=list)

    @model_validator(mode="after")
    def _check_edges(self) -> "ReachGraph":
        for n, node in enumerate(self.nodes):
            if node.id != n:
                raise ValueError(f"Node ids must be dense, found id {node.id} at position {n}")
        limit = self.k - self.delta
        for e in self.edges:
            if e.source == e.to:
                raise ValueError(f"Self-edge at node {e.source}")
            if e.source >= len(self.nodes) or e.to >= len(self.nodes):
                raise ValueError(f"Edge {e.source}->{e.to} references a missing node")
            if not e.dhat < limit:
                raise ValueError(f"Edge {e.source}->{e.to} has dhat {e.dhat} >= k - delta")
        return self

    def model_post_init(self, __context: Any) -> None:
        adjacency: List[List[int]] = [[] for _ in self.nodes]
        for e in self.edges:
            if e.source < len(adjacency):
                adjacency[e.source].append(e.to)
        self._adjacency = adjacency

    def __len__(self) -> int:
        return len(self.nodes)

    def neighbors(self, v: int) -> List[int]:
        return self._adjacency[v]

    def position(self, v: int) -> Tuple[float, float]:
        return self.nodes[v].pos

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(len(self.nodes)))
        graph.add_weighted_edges_from((e.source, e.to, e.dhat) for e in self.edges)
        return graph

    @staticmethod
    def compute_stats(nodes: List[GraphNode], edges: List[GraphEdge]) -> GraphStats:
        if not nodes:
            return GraphStats()
        lengths = [math.dist(nodes[e.source].pos, nodes[e.to].pos) for e in edges]
        return GraphStats(
            node_count=len(nodes),
            edge_count=len(edges),
            mean_degree=len(edges) / len(nodes),
            mean_edge_length=sum(lengths) / len(lengths) if lengths else 0.0,
        )

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(by_alias=True)

    def to_file(self, path: str) -> None:
        """Save the graph as a JSON document.

        Args:
            path: Output path
        """
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)

    @classmethod
    def from_file(cls, path: str) -> "ReachGraph":
        """Load a graph written by :meth:`to_file`.

        Raises:
            pydantic.ValidationError: If the document violates the graph invariants
        """
        with open(path, "r") as f:
            data = json.load(f)
        return cls.model_validate(data)
