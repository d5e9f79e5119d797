"""STL formula syntax tree.

Nodes are frozen dataclasses, so formulae are hashable, compare structurally and can be
shared freely between threads and search branches.
"""

from dataclasses import dataclass
from typing import Tuple, Union


class _FormulaNode:
    """Shared behaviour for all syntax tree nodes."""

    def __str__(self) -> str:
        from ..stl.parser import format_formula

        return format_formula(self)  # type: ignore[arg-type]


@dataclass(frozen=True)
class TrueLiteral(_FormulaNode):
    """The constant true formula (spelled ``TRUE``)."""


@dataclass(frozen=True)
class Predicate(_FormulaNode):
    """Atomic predicate referencing an entry of a predicate table."""

    id: str


@dataclass(frozen=True)
class Not(_FormulaNode):
    """Negation."""

    child: "StlFormula"


@dataclass(frozen=True)
class And(_FormulaNode):
    """n-ary conjunction."""

    children: Tuple["StlFormula", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("And requires at least two children")


@dataclass(frozen=True)
class Or(_FormulaNode):
    """n-ary disjunction."""

    children: Tuple["StlFormula", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("Or requires at least two children")


def _check_bounds(a: int, b: int) -> None:
    if a < 0 or b < 0:
        raise ValueError(f"Temporal bounds must be non-negative, got [{a},{b}]")
    if a > b:
        raise ValueError(f"Temporal bound a must not exceed b, got [{a},{b}]")


@dataclass(frozen=True)
class Always(_FormulaNode):
    """Bounded always ``G[a,b] child``."""

    a: int
    b: int
    child: "StlFormula"

    def __post_init__(self) -> None:
        _check_bounds(self.a, self.b)


@dataclass(frozen=True)
class Eventually(_FormulaNode):
    """Bounded eventually ``F[a,b] child``."""

    a: int
    b: int
    child: "StlFormula"

    def __post_init__(self) -> None:
        _check_bounds(self.a, self.b)


StlFormula = Union[TrueLiteral, Predicate, Not, And, Or, Always, Eventually]


def children_of(phi: StlFormula) -> Tuple[StlFormula, ...]:
    """Direct subformulae of a node, in syntactic order."""
    if isinstance(phi, (And, Or)):
        return phi.children
    if isinstance(phi, (Not, Always, Eventually)):
        return (phi.child,)
    return ()
