"""Circular region predicates."""

from typing import Dict, Iterable, Mapping, Tuple

from pydantic import BaseModel, Field


class PredicateDef(BaseModel):
    """A disk-shaped region predicate.

    The predicate holds inside the disk of ``radius`` around ``center``. Negation is
    expressed in the formula, never here.
    """

    model_config = {"frozen": True}

    id: str = Field(..., pattern=r"^[a-zA-Z_][a-zA-Z0-9_]*$", description="Predicate identifier")
    center: Tuple[float, float] = Field(..., description="Region center (x, y) in world units")
    radius: float = Field(..., gt=0, description="Region radius in world units")


PredicateTable = Mapping[str, PredicateDef]


class UnknownPredicateError(KeyError):
    """Raised when a formula references a predicate missing from the table."""


def predicate_table(predicates: Iterable[PredicateDef]) -> Dict[str, PredicateDef]:
    """Index predicates by id.

    Args:
        predicates: Predicate definitions

    Returns:
        Mapping from id to definition

    Raises:
        ValueError: If two predicates share an id
    """
    table: Dict[str, PredicateDef] = {}
    for pred in predicates:
        if pred.id in table:
            raise ValueError(f"Duplicate predicate id: {pred.id}")
        table[pred.id] = pred
    return table


def parse_predicate_arg(text: str) -> PredicateDef:
    """Parse a ``name=x,y,r`` command-line predicate definition."""
    try:
        name, rest = text.split("=", 1)
        x, y, r = (float(part) for part in rest.split(","))
    except ValueError as e:
        raise ValueError(f"Predicate must look like name=x,y,r, got {text!r}") from e
    return PredicateDef(id=name.strip(), center=(x, y), radius=r)
