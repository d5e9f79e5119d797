"""Configuration management."""

import hashlib
import json
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

TEMPLATE_IDS = [f"T{i}" for i in range(1, 13)]


class MazeConfig(BaseModel):
    """Maze and agent configuration."""

    path: Optional[str] = Field(
        default=None, description="Maze text file; the bundled desk maze when unset"
    )
    cell_size: float = Field(default=1.0, gt=0, description="Side of one maze cell in world units")
    max_speed: float = Field(
        default=0.5, gt=0, description="Largest agent displacement per control step"
    )

    @model_validator(mode="after")
    def _speed_within_cell(self) -> "MazeConfig":
        if self.max_speed > self.cell_size:
            raise ValueError("max_speed must not exceed cell_size")
        return self


class DatasetConfig(BaseModel):
    """Offline random-walk dataset configuration."""

    n_traj: int = Field(default=500, ge=1, description="Number of trajectories")
    traj_len: int = Field(default=200, ge=1, description="Transitions per trajectory")
    seed: int = Field(default=0, description="Random seed")
    turn_sigma: float = Field(
        default=0.6, ge=0, description="Std. dev. of the per-step heading change in radians"
    )


class GraphConfig(BaseModel):
    """Reachability graph construction configuration."""

    cell_size: float = Field(default=1.0, gt=0, description="Grid cell size for subsampling")
    budget: int = Field(default=600, ge=1, description="Number of subsampled states")
    threshold: Optional[float] = Field(
        default=None, gt=0, description="Clustering distance threshold in steps; k/2 when unset"
    )
    k: int = Field(default=10, ge=1, description="Control steps per graph edge")
    delta: float = Field(default=1.0, ge=0, description="Edge feasibility margin in steps")
    n_bins: int = Field(default=8, ge=1, description="Angular bins per node")
    target_degree: int = Field(default=5, ge=1, description="Out-degree targeted by the top-up")
    seed: int = Field(default=0, description="Random seed for subsampling")

    @model_validator(mode="after")
    def _margin_below_horizon(self) -> "GraphConfig":
        if self.k <= self.delta:
            raise ValueError("k must be greater than delta")
        return self

    @property
    def cluster_threshold(self) -> float:
        return self.threshold if self.threshold is not None else self.k / 2.0

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON dump."""
        payload = json.dumps(self.model_dump(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()


class PlannerConfig(BaseModel):
    """STL graph search configuration."""

    lambda0: float = Field(default=10.0, description="Weight of the heuristic lower bound")
    lambda1: float = Field(default=0.1, description="Weight of the time step (depth)")
    lambda2: float = Field(default=0.01, description="Penalty per world unit of path length")
    eps: float = Field(default=0.05, ge=0, description="Dominance tolerance on lower bounds")
    top_k: Optional[int] = Field(
        default=3, ge=1, description="Nodes kept per (node, time) bucket; unlimited when null"
    )
    max_expansions: int = Field(default=200000, ge=1, description="Expansion budget")
    frontier: Literal["score", "fifo", "lifo"] = Field(
        default="score", description="Frontier policy"
    )
    trace_interval: int = Field(
        default=100, ge=1, description="Expansions between search statistic snapshots"
    )

    @property
    def lambdas(self) -> tuple:
        return (self.lambda0, self.lambda1, self.lambda2)


class BenchConfig(BaseModel):
    """Benchmark configuration."""

    templates: List[str] = Field(default_factory=lambda: list(TEMPLATE_IDS))
    configs_per_template: int = Field(default=50, ge=1, description="Tasks per template")
    seed: int = Field(default=0, description="Base random seed")
    workers: int = Field(default=1, ge=1, description="Concurrent planning tasks")
    max_horizon: int = Field(default=80, ge=1, description="Largest allowed formula horizon")
    radius_min: float = Field(default=0.5, gt=0, description="Smallest region radius")
    radius_max: float = Field(default=1.0, gt=0, description="Largest region radius")
    region_attempts: int = Field(
        default=2000, ge=1, description="Rejection-sampling attempts per task"
    )
    task_retries: int = Field(
        default=20, ge=1, description="Reseeds before a task configuration is given up"
    )

    @field_validator("templates")
    @classmethod
    def _known_templates(cls, value: List[str]) -> List[str]:
        unknown = [t for t in value if t not in TEMPLATE_IDS]
        if unknown:
            raise ValueError(f"Unknown templates: {unknown}")
        if not value:
            raise ValueError("At least one template is required")
        return value

    @model_validator(mode="after")
    def _radius_order(self) -> "BenchConfig":
        if self.radius_min > self.radius_max:
            raise ValueError("radius_min must not exceed radius_max")
        return self


class RunConfig(BaseModel):
    """Main configuration."""

    maze: MazeConfig = Field(default_factory=MazeConfig)
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    graph: GraphConfig = Field(default_factory=GraphConfig)
    planner: PlannerConfig = Field(default_factory=PlannerConfig)
    bench: BenchConfig = Field(default_factory=BenchConfig)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        """Load configuration from a JSON file.

        Args:
            path: Path to configuration file

        Returns:
            RunConfig instance
        """
        with open(path, "r") as f:
            data = json.load(f)
        return cls.model_validate(data)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """Load configuration from a dictionary.

        Args:
            data: Configuration dictionary

        Returns:
            RunConfig instance
        """
        return cls.model_validate(data)

    def to_file(self, path: str) -> None:
        """Save configuration to a JSON file.

        Args:
            path: Path to save configuration
        """
        with open(path, "w") as f:
            json.dump(self.model_dump(), f, indent=2)

    def with_overrides(self, overrides: Dict[str, Dict[str, Any]]) -> "RunConfig":
        """Copy with selected fields replaced and everything re-validated.

        Args:
            overrides: Section name to ``{field: value}``; ``None`` values are ignored

        Returns:
            New RunConfig instance

        Raises:
            pydantic.ValidationError: If an overridden value violates a constraint
        """
        data = self.model_dump()
        for section, values in overrides.items():
            if section not in data:
                raise ValueError(f"Unknown configuration section: {section}")
            data[section].update({k: v for k, v in values.items() if v is not None})
        return RunConfig.model_validate(data)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON dump."""
        payload = json.dumps(self.model_dump(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()
