"""CSV plot-data files for planning runs and standalone monitoring.

Every file has a header row and ``\\n`` line endings; rendering is left to external
plotting tools.
"""

import csv
import logging
from typing import Any, Dict, List, Sequence, Tuple

from .models.plan import SearchStats
from .models.predicates import PredicateTable
from .robustness.agm import RobustnessInterval, eval_predicate_normalized

logger = logging.getLogger(__name__)


def _write_csv(path: str, fieldnames: List[str], rows: List[Dict[str, Any]]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    logger.debug(f"Wrote {len(rows)} rows to {path}")


def write_interval_trace(path: str, intervals: Sequence[RobustnessInterval]) -> None:
    """Root interval after each signal step: ``step, lower, upper, width``."""
    _write_csv(
        path,
        ["step", "lower", "upper", "width"],
        [
            {
                "step": t,
                "lower": repr(iv.lower),
                "upper": repr(iv.upper),
                "width": repr(iv.width),
            }
            for t, iv in enumerate(intervals)
        ],
    )


def write_predicate_trace(
    path: str, preds: PredicateTable, signal: Sequence[Sequence[float]]
) -> None:
    """Normalized robustness of every predicate at every signal step."""
    ids = sorted(preds)
    rows = []
    for t, s in enumerate(signal):
        row: Dict[str, Any] = {"step": t}
        for pid in ids:
            row[pid] = repr(eval_predicate_normalized(preds[pid], s))
        rows.append(row)
    _write_csv(path, ["step", *ids], rows)


def write_search_trace(path: str, stats: SearchStats) -> None:
    """Search counters sampled during planning."""
    fields = ["expanded", "generated", "pruned_upper", "pruned_dominance", "frontier_size"]
    _write_csv(path, fields, [p.model_dump() for p in stats.trace])


def write_trajectory(path: str, trajectory: Sequence[Sequence[float]]) -> None:
    """Executed control-step trajectory: ``step, x, y``."""
    _write_csv(
        path,
        ["step", "x", "y"],
        [
            {"step": i, "x": repr(float(s[0])), "y": repr(float(s[1]))}
            for i, s in enumerate(trajectory)
        ],
    )


def write_signal(
    path: str, signal: Sequence[Sequence[float]], waypoints: Sequence[Sequence[float]]
) -> None:
    """k-step samples next to the waypoint planned for the same step.

    The file is also valid input for :func:`read_signal`.
    """
    rows = []
    for t, s in enumerate(signal):
        row: Dict[str, Any] = {"step": t, "x": repr(float(s[0])), "y": repr(float(s[1]))}
        if t < len(waypoints):
            row["wx"] = repr(float(waypoints[t][0]))
            row["wy"] = repr(float(waypoints[t][1]))
        rows.append(row)
    _write_csv(path, ["step", "x", "y", "wx", "wy"], rows)


def read_signal(path: str) -> List[Tuple[float, float]]:
    """Read the ``x`` and ``y`` columns of a signal CSV.

    Raises:
        ValueError: If the header lacks ``x`` or ``y`` or a value is not a number
    """
    with open(path, "r", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or not {"x", "y"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: signal CSV needs 'x' and 'y' columns")
        signal: List[Tuple[float, float]] = []
        for line, row in enumerate(reader, start=2):
            try:
                signal.append((float(row["x"]), float(row["y"])))
            except (TypeError, ValueError) as e:
                raise ValueError(f"{path}:{line}: malformed sample {row}") from e
    return signal
