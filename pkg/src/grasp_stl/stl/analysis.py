"""Structural queries on formulae: horizon, immutability, traversal order."""

from functools import lru_cache
from typing import List, Set

from ..models.formula import Always, Eventually, Predicate, StlFormula, children_of


@lru_cache(maxsize=4096)
def horizon(phi: StlFormula) -> int:
    """Latest step, relative to the evaluation time, that ``phi`` depends on.

    Predicates and TRUE have horizon 0, boolean nodes take the maximum over their
    children and a temporal node ``[a,b]`` adds ``b`` to its child's horizon.
    """
    if isinstance(phi, (Always, Eventually)):
        return phi.b + horizon(phi.child)
    kids = children_of(phi)
    if not kids:
        return 0
    return max(horizon(c) for c in kids)


@lru_cache(maxsize=4096)
def is_immutable(phi: StlFormula) -> bool:
    """True iff ``phi`` contains no temporal operator."""
    if isinstance(phi, (Always, Eventually)):
        return False
    return all(is_immutable(c) for c in children_of(phi))


def subformulae_postorder(phi: StlFormula) -> List[StlFormula]:
    """All nodes of ``phi``, children before parents.

    Structurally equal subtrees occurring at different positions are listed once per
    occurrence, so the result has exactly one entry per tree node.
    """
    order: List[StlFormula] = []

    def visit(node: StlFormula) -> None:
        for child in children_of(node):
            visit(child)
        order.append(node)

    visit(phi)
    return order


def predicate_ids(phi: StlFormula) -> Set[str]:
    """Ids of all predicates referenced by ``phi``."""
    return {node.id for node in subformulae_postorder(phi) if isinstance(node, Predicate)}
