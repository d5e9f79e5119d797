"""Benchmark task and result models."""

import json
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from ..robustness.agm import check_predicates
from ..stl.parser import parse_formula
from .formula import StlFormula
from .plan import SearchStats
from .predicates import PredicateDef, UnknownPredicateError, predicate_table


class TaskSpec(BaseModel):
    """An instantiated formula template with its regions and start state."""

    template_id: str = Field(..., description="Template the task was drawn from, or 'custom'")
    predicates: List[PredicateDef] = Field(..., description="Region predicates")
    time_bounds: Dict[str, int] = Field(
        default_factory=dict, description="Drawn t1, t2, ... by name"
    )
    x0: Tuple[float, float] = Field(..., description="Initial state")
    formula: str = Field(..., description="Formula text")
    rng_seed: int = Field(default=0, description="Seed the task was sampled with")

    @model_validator(mode="after")
    def _check_formula(self) -> "TaskSpec":
        try:
            check_predicates(self.phi, predicate_table(self.predicates))
        except UnknownPredicateError as e:
            raise ValueError(f"Formula references undefined predicate {e.args[0]!r}") from e
        return self

    @property
    def phi(self) -> StlFormula:
        return parse_formula(self.formula)

    @property
    def table(self) -> Dict[str, PredicateDef]:
        return predicate_table(self.predicates)

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump()

    def to_file(self, path: str) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)

    @classmethod
    def from_file(cls, path: str) -> "TaskSpec":
        """Load a task written by :meth:`to_file`.

        Raises:
            pydantic.ValidationError: If the document is malformed or references an
                undefined predicate
        """
        with open(path, "r") as f:
            data = json.load(f)
        return cls.model_validate(data)


class TaskRecord(BaseModel):
    """Outcome of planning and executing one task.

    Failures are recorded rather than raised, so every sampled task contributes to the
    success rates.
    """

    task: TaskSpec
    plan_ok: bool = False
    exec_ok: bool = False
    plan_time_s: float = 0.0
    plan_stats: SearchStats = Field(default_factory=SearchStats)
    executed_robustness: Optional[float] = None
    tracking_error: Optional[float] = None

    @model_validator(mode="after")
    def _exec_implies_plan(self) -> "TaskRecord":
        if self.exec_ok and not self.plan_ok:
            raise ValueError("A task cannot execute successfully without a plan")
        return self
