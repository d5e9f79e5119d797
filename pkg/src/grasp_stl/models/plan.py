"""Planner output models."""

import json
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field


class SearchTracePoint(BaseModel):
    """Counters sampled during a search."""

    expanded: int
    generated: int
    pruned_upper: int
    pruned_dominance: int
    frontier_size: int


class SearchStats(BaseModel):
    """Search counters."""

    expanded: int = Field(default=0, description="Nodes popped and expanded")
    generated: int = Field(default=0, description="Children evaluated")
    pruned_upper: int = Field(default=0, description="Nodes discarded by the upper bound")
    pruned_dominance: int = Field(default=0, description="Nodes rejected or evicted by dominance")
    elapsed_seconds: float = Field(default=0.0, description="Wall-clock search time")
    trace: List[SearchTracePoint] = Field(default_factory=list)

    def snapshot(self, frontier_size: int) -> SearchTracePoint:
        point = SearchTracePoint(
            expanded=self.expanded,
            generated=self.generated,
            pruned_upper=self.pruned_upper,
            pruned_dominance=self.pruned_dominance,
            frontier_size=frontier_size,
        )
        self.trace.append(point)
        return point


class PlanResult(BaseModel):
    """A satisfying waypoint plan.

    ``waypoints[0]`` is the initial state; ``waypoints[i]`` for ``i >= 1`` is the graph
    node visited at signal step ``i`` (``node_ids[i]``).
    """

    waypoints: List[Tuple[float, float]]
    node_ids: List[Optional[int]]
    final_interval: Tuple[float, float]
    stats: SearchStats

    @property
    def horizon_steps(self) -> int:
        return len(self.waypoints) - 1

    def to_document(self) -> Dict[str, Any]:
        """JSON layout ``{"waypoints", "interval", "stats"}``."""
        return {
            "waypoints": [list(w) for w in self.waypoints],
            "interval": list(self.final_interval),
            "stats": {
                "expanded": self.stats.expanded,
                "generated": self.stats.generated,
                "pruned_upper": self.stats.pruned_upper,
                "pruned_dominance": self.stats.pruned_dominance,
                "elapsed_s": self.stats.elapsed_seconds,
            },
        }

    def to_file(self, path: str) -> None:
        with open(path, "w") as f:
            json.dump(self.to_document(), f, indent=2)
