"""Incremental interval monitor.

A :class:`MonitorState` stores, for every subformula occurrence ``psi`` and every time
step ``t`` its parents can consume, the robustness interval of ``psi`` at ``t`` given the
prefix observed so far. Appending a state only touches entries whose value can change:

* predicates change at the new step only;
* boolean nodes change where one of their children changed;
* temporal nodes over an immutable child keep a :class:`RawAggregate` per entry, so
  folding in the child's new value costs O(1);
* temporal nodes over a temporal child are re-aggregated over their full window
  wherever the window saw a change (counted in ``MonitorState.reaggregations``).

States are immutable. :func:`eval_interval` returns a new state that shares every
untouched per-node table with its input, so search branches can fork a monitor freely.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from ..models.formula import (
    Always,
    And,
    Eventually,
    Not,
    Or,
    Predicate,
    StlFormula,
    TrueLiteral,
    children_of,
)
from ..models.predicates import PredicateTable
from ..stl.analysis import is_immutable
from .agm import (
    RobustnessInterval,
    agm_and,
    agm_or,
    check_predicates,
    eval_predicate_normalized,
    eval_predicate_raw,
    lookahead_interval,
    lookup_predicate,
    point_value,
    position_of,
)

logger = logging.getLogger(__name__)

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class EndpointStats:
    """Summary of one endpoint stream of a conjunctive window.

    Attributes:
        log_prod_pos: Sum of ``log1p(v)`` over observed values ``v > 0``
        neg_sum: Sum of ``min(v, 0)`` over observed values
        n_nonpos: Number of observed values ``v <= 0``
    """

    log_prod_pos: float = 0.0
    neg_sum: float = 0.0
    n_nonpos: int = 0

    def add(self, v: float) -> "EndpointStats":
        if v > 0.0:
            return EndpointStats(self.log_prod_pos + math.log1p(v), self.neg_sum, self.n_nonpos)
        return EndpointStats(self.log_prod_pos, self.neg_sum + v, self.n_nonpos + 1)

    def recover(self, n_total: int, n_obs: int, fill: float) -> float:
        """AGM conjunction over the observed values plus ``n_total - n_obs`` fills of ±1."""
        unknown = n_total - n_obs
        if fill < 0:
            if unknown > 0 or self.n_nonpos > 0:
                return (self.neg_sum - unknown) / n_total
            return math.expm1(self.log_prod_pos / n_total)
        if self.n_nonpos > 0:
            return self.neg_sum / n_total
        return math.expm1((self.log_prod_pos + unknown * _LN2) / n_total)


@dataclass(frozen=True)
class RawAggregate:
    """Constant-size summary of the observed part of a temporal window.

    Values of an eventually window are stored negated so both operators share the
    conjunctive bookkeeping; :meth:`interval` undoes the negation.
    """

    conjunctive: bool
    n_total: int
    n_obs: int = 0
    lower: EndpointStats = field(default_factory=EndpointStats)
    upper: EndpointStats = field(default_factory=EndpointStats)

    @classmethod
    def empty(cls, n_total: int, conjunctive: bool) -> "RawAggregate":
        if n_total < 1:
            raise ValueError(f"Window length must be positive, got {n_total}")
        return cls(conjunctive=conjunctive, n_total=n_total)

    def add(self, child_lower: float, child_upper: float) -> "RawAggregate":
        if self.n_obs >= self.n_total:
            raise ValueError("Window already fully observed")
        if self.conjunctive:
            lower, upper = self.lower.add(child_lower), self.upper.add(child_upper)
        else:
            lower, upper = self.lower.add(-child_lower), self.upper.add(-child_upper)
        return RawAggregate(self.conjunctive, self.n_total, self.n_obs + 1, lower, upper)

    def interval(self) -> RobustnessInterval:
        if self.conjunctive:
            return RobustnessInterval(
                self.lower.recover(self.n_total, self.n_obs, -1.0),
                self.upper.recover(self.n_total, self.n_obs, 1.0),
            )
        return RobustnessInterval(
            -self.lower.recover(self.n_total, self.n_obs, 1.0),
            -self.upper.recover(self.n_total, self.n_obs, -1.0),
        )


@dataclass(frozen=True)
class MonitorLayout:
    """Static shape of the monitor tables for one formula.

    Nodes are listed in post-order. ``ranges[i]`` is the inclusive span of time steps at
    which node ``i`` is tracked: the root is tracked at step 0 only and the child of a
    temporal node ``[a, b]`` tracked on ``[lo, hi]`` is tracked on ``[lo + a, hi + b]``.
    """

    formula: StlFormula
    nodes: Tuple[StlFormula, ...]
    children: Tuple[Tuple[int, ...], ...]
    ranges: Tuple[Tuple[int, int], ...]
    immutable: Tuple[bool, ...]

    @property
    def root(self) -> int:
        return len(self.nodes) - 1

    @property
    def size(self) -> int:
        return len(self.nodes)


@lru_cache(maxsize=256)
def build_layout(phi: StlFormula) -> MonitorLayout:
    """Compute (and cache) the table layout for ``phi``."""
    nodes: List[StlFormula] = []
    children: List[Tuple[int, ...]] = []
    ranges: List[Tuple[int, int]] = []

    def visit(node: StlFormula, lo: int, hi: int) -> int:
        if isinstance(node, (Always, Eventually)):
            child_lo, child_hi = lo + node.a, hi + node.b
        else:
            child_lo, child_hi = lo, hi
        kids = tuple(visit(c, child_lo, child_hi) for c in children_of(node))
        nodes.append(node)
        children.append(kids)
        ranges.append((lo, hi))
        return len(nodes) - 1

    visit(phi, 0, 0)
    return MonitorLayout(
        formula=phi,
        nodes=tuple(nodes),
        children=tuple(children),
        ranges=tuple(ranges),
        immutable=tuple(is_immutable(n) for n in nodes),
    )


@dataclass(frozen=True, eq=False)
class MonitorState:
    """Persistent snapshot of the monitor tables after ``prefix_len`` observed states.

    Attributes:
        layout: Table layout of the monitored formula
        lower: Per node, lower interval endpoints indexed by ``t - lo``
        upper: Per node, upper interval endpoints indexed by ``t - lo``
        raw: Per node, window summaries for temporal nodes over immutable children
        prefix_len: Number of states observed
        reaggregations: Cumulative count of full-window re-aggregations
        heuristic: Whether this is a guidance monitor (raw predicates, look-ahead)
    """

    layout: MonitorLayout
    lower: Tuple[Tuple[float, ...], ...]
    upper: Tuple[Tuple[float, ...], ...]
    raw: Tuple[Optional[Tuple[RawAggregate, ...]], ...]
    prefix_len: int
    reaggregations: int = 0
    heuristic: bool = False

    @property
    def t0(self) -> int:
        return 0

    @property
    def interval(self) -> RobustnessInterval:
        """Interval of the whole formula at the anchor step."""
        return self.entry(self.layout.root, self.t0)

    def entry(self, node: int, t: int) -> RobustnessInterval:
        lo, hi = self.layout.ranges[node]
        if not lo <= t <= hi:
            raise IndexError(f"Step {t} outside tracked range [{lo},{hi}] of node {node}")
        return RobustnessInterval(self.lower[node][t - lo], self.upper[node][t - lo])


def _is_temporal(node: StlFormula) -> bool:
    return isinstance(node, (Always, Eventually))


def _window_agg(node: StlFormula):
    return agm_and if isinstance(node, (And, Always)) else agm_or


def empty_state(phi: StlFormula, heuristic: bool = False) -> MonitorState:
    """Monitor tables before any state is observed."""
    layout = build_layout(phi)
    lower: List[Tuple[float, ...]] = []
    upper: List[Tuple[float, ...]] = []
    raw: List[Optional[Tuple[RawAggregate, ...]]] = []

    for i, node in enumerate(layout.nodes):
        lo, hi = layout.ranges[i]
        span = hi - lo + 1
        node_raw: Optional[Tuple[RawAggregate, ...]] = None
        if isinstance(node, TrueLiteral):
            lv, uv = [1.0] * span, [1.0] * span
        elif isinstance(node, Not):
            c = layout.children[i][0]
            lv = [-u for u in upper[c]]
            uv = [-l for l in lower[c]]
        elif isinstance(node, (And, Or)):
            agg = _window_agg(node)
            kids = layout.children[i]
            lv = [agg([lower[c][j] for c in kids]) for j in range(span)]
            uv = [agg([upper[c][j] for c in kids]) for j in range(span)]
        else:
            lv, uv = [-1.0] * span, [1.0] * span
            if _is_temporal(node) and layout.immutable[layout.children[i][0]]:
                blank = RawAggregate.empty(node.b - node.a + 1, isinstance(node, Always))
                node_raw = (blank,) * span
        lower.append(tuple(lv))
        upper.append(tuple(uv))
        raw.append(node_raw)

    return MonitorState(
        layout=layout,
        lower=tuple(lower),
        upper=tuple(upper),
        raw=tuple(raw),
        prefix_len=0,
        heuristic=heuristic,
    )


def _advance(
    state: MonitorState, preds: PredicateTable, new_state: Sequence[float]
) -> MonitorState:
    layout = state.layout
    tp = state.prefix_len
    pos = position_of(new_state)
    heuristic = state.heuristic
    lower = list(state.lower)
    upper = list(state.upper)
    raw = list(state.raw)
    dirty: List[Set[int]] = []
    reaggregations = state.reaggregations

    for i, node in enumerate(layout.nodes):
        lo, hi = layout.ranges[i]
        kids = layout.children[i]
        updates: Dict[int, Tuple[float, float]] = {}

        if isinstance(node, Predicate):
            if lo <= tp <= hi:
                pred = lookup_predicate(preds, node.id)
                if heuristic:
                    v = eval_predicate_raw(pred, pos)
                else:
                    v = eval_predicate_normalized(pred, pos)
                updates[tp] = (v, v)

        elif isinstance(node, Not):
            c = kids[0]
            for t in dirty[c]:
                updates[t] = (-upper[c][t - lo], -lower[c][t - lo])

        elif isinstance(node, (And, Or)):
            agg = _window_agg(node)
            changed: Set[int] = set()
            for c in kids:
                changed |= dirty[c]
            for t in changed:
                j = t - lo
                updates[t] = (agg([lower[c][j] for c in kids]), agg([upper[c][j] for c in kids]))

        elif _is_temporal(node):
            c = kids[0]
            c_lo = layout.ranges[c][0]
            a, b = node.a, node.b
            if layout.immutable[c]:
                first, last = max(lo, tp - b), min(hi, tp - a)
                if first <= last:
                    c_lower, c_upper = lower[c][tp - c_lo], upper[c][tp - c_lo]
                    aggs = list(raw[i])  # type: ignore[arg-type]
                    for t in range(first, last + 1):
                        aggs[t - lo] = aggs[t - lo].add(c_lower, c_upper)
                        updates[t] = aggs[t - lo].interval()
                    raw[i] = tuple(aggs)
                if heuristic:
                    start = max(lo, tp - a + 1)
                    if start <= hi:
                        child_now = point_value(node.child, preds, pos, True)
                        conjunctive = isinstance(node, Always)
                        for t in range(start, hi + 1):
                            gamma = 1.0 / (t + a - tp + 1)
                            updates[t] = lookahead_interval(
                                conjunctive, b - a + 1, child_now, gamma
                            )
            else:
                touched: Set[int] = set(range(max(lo, tp - b), min(hi, tp - a) + 1))
                for tc in dirty[c]:
                    if tc <= tp:
                        touched.update(range(max(lo, tc - b), min(hi, tc - a) + 1))
                agg = _window_agg(node)
                for t in touched:
                    lows: List[float] = []
                    ups: List[float] = []
                    for tau in range(t + a, t + b + 1):
                        if tau <= tp:
                            lows.append(lower[c][tau - c_lo])
                            ups.append(upper[c][tau - c_lo])
                        else:
                            lows.append(-1.0)
                            ups.append(1.0)
                    updates[t] = (agg(lows), agg(ups))
                reaggregations += len(touched)

        if updates:
            lv = list(lower[i])
            uv = list(upper[i])
            for t, (l_val, u_val) in updates.items():
                lv[t - lo] = l_val
                uv[t - lo] = u_val
            lower[i] = tuple(lv)
            upper[i] = tuple(uv)
        dirty.append(set(updates))

    return MonitorState(
        layout=layout,
        lower=tuple(lower),
        upper=tuple(upper),
        raw=tuple(raw),
        prefix_len=tp + 1,
        reaggregations=reaggregations,
        heuristic=heuristic,
    )


def _check_formula(phi: StlFormula, monitor: MonitorState) -> None:
    if monitor.layout.formula is not phi and monitor.layout.formula != phi:
        raise ValueError("Monitor state was built for a different formula")


def eval_interval(
    phi: StlFormula,
    preds: PredicateTable,
    new_state: Sequence[float],
    monitor: MonitorState,
) -> Tuple[RobustnessInterval, MonitorState]:
    """Append ``new_state`` to the monitored prefix.

    Args:
        phi: Monitored formula
        preds: Predicate table
        new_state: State observed at step ``monitor.prefix_len``
        monitor: Snapshot to extend; left untouched

    Returns:
        Root interval over all completions of the extended prefix, and the new snapshot
    """
    _check_formula(phi, monitor)
    if monitor.heuristic:
        raise ValueError("eval_interval needs a sound monitor; use eval_interval_heuristic")
    nxt = _advance(monitor, preds, new_state)
    return nxt.interval, nxt


def eval_interval_heuristic(
    phi: StlFormula,
    preds: PredicateTable,
    new_state: Sequence[float],
    monitor_h: MonitorState,
) -> Tuple[RobustnessInterval, MonitorState]:
    """Guidance counterpart of :func:`eval_interval`.

    Predicates use the raw value ``r^2 - d^2`` without clamping, and a temporal node over
    an immutable child whose window starts after the newest step is estimated from the
    child's current value discounted by ``1 / (steps until the window opens + 1)``.
    Only for ordering search nodes; it is neither sound nor bounded.
    """
    _check_formula(phi, monitor_h)
    if not monitor_h.heuristic:
        raise ValueError("eval_interval_heuristic needs a heuristic monitor")
    nxt = _advance(monitor_h, preds, new_state)
    return nxt.interval, nxt


def init_monitor(phi: StlFormula, preds: PredicateTable, x0: Sequence[float]) -> MonitorState:
    """Monitor after observing the singleton prefix ``(x0,)``."""
    check_predicates(phi, preds)
    _, state = eval_interval(phi, preds, x0, empty_state(phi))
    return state


def init_heuristic_monitor(
    phi: StlFormula, preds: PredicateTable, x0: Sequence[float]
) -> MonitorState:
    """Guidance monitor after observing the singleton prefix ``(x0,)``."""
    check_predicates(phi, preds)
    _, state = eval_interval_heuristic(phi, preds, x0, empty_state(phi, heuristic=True))
    return state


def monitor_prefix(
    phi: StlFormula,
    preds: PredicateTable,
    signal: Iterable[Sequence[float]],
    heuristic: bool = False,
) -> List[RobustnessInterval]:
    """Root interval after each prefix ``signal[:1], signal[:2], ...``.

    Raises:
        ValueError: If ``signal`` is empty
    """
    check_predicates(phi, preds)
    state = empty_state(phi, heuristic=heuristic)
    intervals: List[RobustnessInterval] = []
    for s in signal:
        state = _advance(state, preds, s)
        intervals.append(state.interval)
    if not intervals:
        raise ValueError("Signal must contain at least one state")
    logger.debug(
        f"Monitored {len(intervals)} steps, final interval {intervals[-1]}, "
        f"{state.reaggregations} window re-aggregations"
    )
    return intervals
