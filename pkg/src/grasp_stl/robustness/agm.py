"""Arithmetic-geometric mean (AGM) robustness.

Robustness values live in [-1, 1]; strictly positive means satisfied. Conjunction uses
the geometric mean of ``1 + v`` when every argument is positive and the mean of the
non-positive parts otherwise. Disjunction is the dual ``agm_or(v) = -agm_and(-v)``.

Besides the full-signal evaluator this module holds the from-scratch interval
semantics on a signal prefix: every unobserved child value inside a temporal window is
replaced by -1 for the lower endpoint and +1 for the upper endpoint. The incremental
monitor in :mod:`.monitor` must agree with it.
"""

import math
from typing import Dict, NamedTuple, Sequence, Tuple

from ..models.formula import (
    Always,
    And,
    Eventually,
    Not,
    Or,
    Predicate,
    StlFormula,
    TrueLiteral,
)
from ..models.predicates import PredicateDef, PredicateTable, UnknownPredicateError
from ..stl.analysis import horizon, is_immutable, predicate_ids

Position = Tuple[float, float]


class SignalTooShortError(ValueError):
    """Raised when a signal does not cover the formula horizon."""


class RobustnessInterval(NamedTuple):
    """Closed range ``[lower, upper]`` of robustness values over all completions.

    Sound intervals satisfy ``-1 <= lower <= upper <= 1``. The heuristic monitor reuses
    this type for its guidance pair, which is not clamped.
    """

    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= value <= self.upper + tol


def position_of(state: Sequence[float]) -> Position:
    """Planar position of a state (its first two coordinates)."""
    return float(state[0]), float(state[1])


def eval_predicate_normalized(pred: PredicateDef, state_pos: Sequence[float]) -> float:
    """Normalized disk predicate ``(r^2 - d^2) / (r^2 + d^2)`` in [-1, 1]."""
    x, y = position_of(state_pos)
    cx, cy = pred.center
    d2 = (x - cx) ** 2 + (y - cy) ** 2
    r2 = pred.radius**2
    return (r2 - d2) / (r2 + d2)


def eval_predicate_raw(pred: PredicateDef, state_pos: Sequence[float]) -> float:
    """Unnormalized disk predicate ``r^2 - d^2`` used for search guidance."""
    x, y = position_of(state_pos)
    cx, cy = pred.center
    return pred.radius**2 - ((x - cx) ** 2 + (y - cy) ** 2)


def agm_and(values: Sequence[float]) -> float:
    """AGM conjunction.

    Args:
        values: Non-empty sequence of robustness values

    Returns:
        ``(prod(1 + v))^(1/n) - 1`` if every value is strictly positive, otherwise the
        mean of ``min(v, 0)``

    Raises:
        ValueError: If ``values`` is empty
    """
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("AGM conjunction needs at least one value")
    n = len(vals)
    if all(v > 0.0 for v in vals):
        return math.expm1(math.fsum(math.log1p(v) for v in vals) / n)
    return math.fsum(min(v, 0.0) for v in vals) / n


def agm_or(values: Sequence[float]) -> float:
    """AGM disjunction, the dual of :func:`agm_and`.

    Raises:
        ValueError: If ``values`` is empty
    """
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("AGM disjunction needs at least one value")
    return -agm_and([-v for v in vals])


def lookup_predicate(preds: PredicateTable, pred_id: str) -> PredicateDef:
    try:
        return preds[pred_id]
    except KeyError:
        raise UnknownPredicateError(pred_id) from None


def check_predicates(phi: StlFormula, preds: PredicateTable) -> None:
    """Raise :class:`UnknownPredicateError` for the first id of ``phi`` missing in ``preds``."""
    missing = sorted(predicate_ids(phi) - set(preds))
    if missing:
        raise UnknownPredicateError(missing[0])


def agm_robustness(
    phi: StlFormula,
    preds: PredicateTable,
    signal: Sequence[Sequence[float]],
    t: int = 0,
) -> float:
    """Exact AGM robustness of ``phi`` on a full signal at step ``t``.

    Args:
        phi: Formula
        preds: Predicate table resolving every id in ``phi``
        signal: Sequence of states; positions are the first two coordinates
        t: Evaluation step

    Returns:
        Robustness in [-1, 1]

    Raises:
        SignalTooShortError: If ``len(signal) < t + horizon(phi) + 1``
        UnknownPredicateError: If a predicate id is missing from ``preds``
    """
    needed = t + horizon(phi) + 1
    if len(signal) < needed:
        raise SignalTooShortError(
            f"Signal of length {len(signal)} is shorter than required {needed}"
        )
    check_predicates(phi, preds)
    positions = [position_of(s) for s in signal]
    memo: Dict[Tuple[int, int], float] = {}

    def ev(node: StlFormula, tau: int) -> float:
        key = (id(node), tau)
        if key in memo:
            return memo[key]
        if isinstance(node, TrueLiteral):
            value = 1.0
        elif isinstance(node, Predicate):
            value = eval_predicate_normalized(preds[node.id], positions[tau])
        elif isinstance(node, Not):
            value = -ev(node.child, tau)
        elif isinstance(node, And):
            value = agm_and([ev(c, tau) for c in node.children])
        elif isinstance(node, Or):
            value = agm_or([ev(c, tau) for c in node.children])
        elif isinstance(node, Always):
            value = agm_and([ev(node.child, s) for s in range(tau + node.a, tau + node.b + 1)])
        elif isinstance(node, Eventually):
            value = agm_or([ev(node.child, s) for s in range(tau + node.a, tau + node.b + 1)])
        else:
            raise TypeError(f"Not a formula node: {node!r}")
        memo[key] = value
        return value

    return ev(phi, t)


def point_value(node: StlFormula, preds: PredicateTable, pos: Position, raw: bool) -> float:
    """Value of an immutable formula on a single state."""
    if isinstance(node, TrueLiteral):
        return 1.0
    if isinstance(node, Predicate):
        pred = lookup_predicate(preds, node.id)
        return eval_predicate_raw(pred, pos) if raw else eval_predicate_normalized(pred, pos)
    if isinstance(node, Not):
        return -point_value(node.child, preds, pos, raw)
    if isinstance(node, And):
        return agm_and([point_value(c, preds, pos, raw) for c in node.children])
    if isinstance(node, Or):
        return agm_or([point_value(c, preds, pos, raw) for c in node.children])
    raise ValueError(f"Formula is not immutable: {node!r}")


def lookahead_interval(
    conjunctive: bool, window: int, child_value: float, gamma: float
) -> RobustnessInterval:
    """Guidance interval of a temporal node whose window has not started yet.

    The child's current value is discounted toward -1 (lower) and +1 (upper) by
    ``gamma`` and aggregated with ``window - 1`` fully unknown slots.
    """
    lower_seed = gamma * child_value - (1.0 - gamma)
    upper_seed = gamma * child_value + (1.0 - gamma)
    agg = agm_and if conjunctive else agm_or
    rest = window - 1
    return RobustnessInterval(
        agg([lower_seed] + [-1.0] * rest),
        agg([upper_seed] + [1.0] * rest),
    )


def interval_robustness(
    phi: StlFormula,
    preds: PredicateTable,
    prefix: Sequence[Sequence[float]],
    t: int = 0,
    heuristic: bool = False,
) -> RobustnessInterval:
    """Robustness interval of ``phi`` at step ``t`` given only a signal prefix.

    This is the from-scratch reference for the incremental monitor. With
    ``heuristic=True`` it reproduces the guidance semantics instead: raw predicate
    values and a discounted look-ahead for temporal nodes with immutable children whose
    window starts after the newest observed step.

    Raises:
        ValueError: If ``prefix`` is empty
        UnknownPredicateError: If a predicate id is missing from ``preds``
    """
    if len(prefix) == 0:
        raise ValueError("Prefix must contain at least one state")
    check_predicates(phi, preds)
    positions = [position_of(s) for s in prefix]
    newest = len(positions) - 1
    unknown = RobustnessInterval(-1.0, 1.0)
    memo: Dict[Tuple[int, int], RobustnessInterval] = {}

    def ev(node: StlFormula, tau: int) -> RobustnessInterval:
        key = (id(node), tau)
        if key in memo:
            return memo[key]
        if isinstance(node, TrueLiteral):
            value = RobustnessInterval(1.0, 1.0)
        elif isinstance(node, Predicate):
            if tau <= newest:
                v = point_value(node, preds, positions[tau], heuristic)
                value = RobustnessInterval(v, v)
            else:
                value = unknown
        elif isinstance(node, Not):
            inner = ev(node.child, tau)
            value = RobustnessInterval(-inner.upper, -inner.lower)
        elif isinstance(node, (And, Or)):
            agg = agm_and if isinstance(node, And) else agm_or
            parts = [ev(c, tau) for c in node.children]
            value = RobustnessInterval(agg([p.lower for p in parts]), agg([p.upper for p in parts]))
        elif isinstance(node, (Always, Eventually)):
            conjunctive = isinstance(node, Always)
            if heuristic and is_immutable(node.child) and tau + node.a > newest:
                gamma = 1.0 / (tau + node.a - newest + 1)
                child_now = point_value(node.child, preds, positions[newest], True)
                value = lookahead_interval(conjunctive, node.b - node.a + 1, child_now, gamma)
            else:
                agg = agm_and if conjunctive else agm_or
                parts = [
                    ev(node.child, s) if s <= newest else unknown
                    for s in range(tau + node.a, tau + node.b + 1)
                ]
                value = RobustnessInterval(
                    agg([p.lower for p in parts]), agg([p.upper for p in parts])
                )
        else:
            raise TypeError(f"Not a formula node: {node!r}")
        memo[key] = value
        return value

    return ev(phi, t)
