"""Benchmark aggregation and report files."""

import csv
import logging
import math
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from ..config import TEMPLATE_IDS
from ..models.task import TaskRecord
from .templates import TEMPLATE_GROUPS

logger = logging.getLogger(__name__)

RESULT_COLUMNS = [
    "template",
    "seed",
    "plan_ok",
    "exec_ok",
    "pt_s",
    "expanded",
    "pruned_upper",
    "pruned_dominance",
    "robustness",
    "tracking_error",
]

REPORT_COLUMNS = ["row", "tasks", "psr", "esr", "pt_mean", "pt_std", "tracking_error"]


class ReportRow(BaseModel):
    """Success rates and planning time of one group of tasks."""

    name: str
    tasks: int = Field(..., ge=1)
    psr: float = Field(..., description="Planning success rate in percent")
    esr: float = Field(..., description="Execution success rate in percent")
    pt_mean: Optional[float] = Field(default=None, description="Mean PT over planned tasks")
    pt_std: Optional[float] = Field(default=None, description="Population std of PT")
    tracking_error: Optional[float] = Field(
        default=None, description="Mean waypoint tracking error over planned tasks"
    )


class BenchReport(BaseModel):
    """Per-template rows, group subtotals and the overall row."""

    templates: List[ReportRow] = Field(default_factory=list)
    groups: List[ReportRow] = Field(default_factory=list)
    overall: ReportRow

    def row(self, name: str) -> ReportRow:
        for r in [*self.templates, *self.groups, self.overall]:
            if r.name == name:
                return r
        raise KeyError(name)


def summarize(name: str, records: Sequence[TaskRecord]) -> ReportRow:
    """PSR, ESR and PT statistics of ``records``.

    PT is averaged over planned tasks only; its standard deviation uses ``ddof=0`` so a
    single planned task reports 0.

    Raises:
        ValueError: If ``records`` is empty
    """
    if not records:
        raise ValueError(f"No records for {name}")
    n = len(records)
    planned = [r for r in records if r.plan_ok]
    times = np.asarray([r.plan_time_s for r in planned], dtype=float)
    errors = [r.tracking_error for r in planned if r.tracking_error is not None]
    return ReportRow(
        name=name,
        tasks=n,
        psr=100.0 * len(planned) / n,
        esr=100.0 * sum(r.exec_ok for r in records) / n,
        pt_mean=float(np.mean(times)) if planned else None,
        pt_std=float(np.std(times)) if planned else None,
        tracking_error=float(np.mean(errors)) if errors else None,
    )


def aggregate(records: Sequence[TaskRecord]) -> BenchReport:
    """Group records per template, per difficulty group and overall.

    Rows appear in template order and only for templates and groups that have records.

    Raises:
        ValueError: If ``records`` is empty
    """
    if not records:
        raise ValueError("Cannot aggregate an empty set of records")
    by_template: Dict[str, List[TaskRecord]] = {}
    for r in records:
        by_template.setdefault(r.task.template_id, []).append(r)

    order = [t for t in TEMPLATE_IDS if t in by_template]
    order += sorted(t for t in by_template if t not in TEMPLATE_IDS)
    templates = [summarize(t, by_template[t]) for t in order]
    groups = []
    for group, members in TEMPLATE_GROUPS.items():
        grouped = [r for t in members for r in by_template.get(t, [])]
        if grouped:
            groups.append(summarize(group, grouped))
    return BenchReport(templates=templates, groups=groups, overall=summarize("Overall", records))


def _fmt(value: Optional[float], digits: int = 2) -> str:
    return "-" if value is None or math.isnan(value) else f"{value:.{digits}f}"


def format_report(report: BenchReport) -> str:
    """Fixed-width text table with PSR, ESR and PT mean +- std per row."""
    lines = [f"{'Template':<14}{'Tasks':>7}{'PSR (%)':>10}{'ESR (%)':>10}{'PT (s)':>20}"]
    lines.append("-" * len(lines[0]))

    def render(row: ReportRow) -> str:
        pt = "-" if row.pt_mean is None else f"{_fmt(row.pt_mean)} +- {_fmt(row.pt_std)}"
        return f"{row.name:<14}{row.tasks:>7}{row.psr:>10.2f}{row.esr:>10.2f}{pt:>20}"

    lines.extend(render(r) for r in report.templates)
    lines.append("-" * len(lines[0]))
    lines.extend(render(r) for r in report.groups)
    lines.append(render(report.overall))
    return "\n".join(lines) + "\n"


def result_row(record: TaskRecord) -> Dict[str, Any]:
    return {
        "template": record.task.template_id,
        "seed": record.task.rng_seed,
        "plan_ok": int(record.plan_ok),
        "exec_ok": int(record.exec_ok),
        "pt_s": f"{record.plan_time_s:.6f}",
        "expanded": record.plan_stats.expanded,
        "pruned_upper": record.plan_stats.pruned_upper,
        "pruned_dominance": record.plan_stats.pruned_dominance,
        "robustness": _fmt(record.executed_robustness, 9),
        "tracking_error": _fmt(record.tracking_error, 6),
    }


def _write_csv(path: str, fieldnames: List[str], rows: List[Dict[str, Any]]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def write_results_csv(path: str, records: Sequence[TaskRecord]) -> None:
    """One row per task record."""
    _write_csv(path, RESULT_COLUMNS, [result_row(r) for r in records])
    logger.info(f"Wrote {len(records)} task results to {path}")


def write_report_csv(path: str, report: BenchReport) -> None:
    """Report rows in the order of :func:`format_report`."""
    rows = [
        {
            "row": r.name,
            "tasks": r.tasks,
            "psr": f"{r.psr:.2f}",
            "esr": f"{r.esr:.2f}",
            "pt_mean": _fmt(r.pt_mean, 6),
            "pt_std": _fmt(r.pt_std, 6),
            "tracking_error": _fmt(r.tracking_error, 6),
        }
        for r in [*report.templates, *report.groups, report.overall]
    ]
    _write_csv(path, REPORT_COLUMNS, rows)
