"""Tests for task templates, the benchmark runner and report aggregation."""

import csv
import math
import re

import numpy as np
import pytest
from pydantic import ValidationError

from src.grasp_stl.bench.report import (
    REPORT_COLUMNS,
    RESULT_COLUMNS,
    aggregate,
    format_report,
    summarize,
    write_report_csv,
    write_results_csv,
)
from src.grasp_stl.bench.runner import generate_tasks, run_bench, run_task
from src.grasp_stl.bench.templates import (
    TEMPLATE_GROUPS,
    TEMPLATE_TEXT,
    SamplingError,
    build_template,
    instantiate_template,
    render_template,
    sample_regions,
    sample_task,
    task_seed,
    template_group,
)
from src.grasp_stl.config import TEMPLATE_IDS, BenchConfig, PlannerConfig, RunConfig
from src.grasp_stl.graph.builder import hop_diameter
from src.grasp_stl.models.predicates import PredicateDef
from src.grasp_stl.models.task import TaskRecord, TaskSpec
from src.grasp_stl.stl.analysis import horizon, predicate_ids
from src.grasp_stl.stl.parser import parse_formula

ROOMY = BenchConfig(max_horizon=200)
SEQUENCED = ("T1", "T4", "T5", "T6", "T8", "T9", "T10")


def simple_task(template_id: str = "T1", seed: int = 0) -> TaskSpec:
    return TaskSpec(
        template_id=template_id,
        predicates=[PredicateDef(id="m1", center=(1.5, 1.5), radius=0.5)],
        x0=(3.5, 3.5),
        formula="F[0,2] m1",
        rng_seed=seed,
    )


def record(template_id: str, plan_ok: bool, exec_ok: bool, pt: float) -> TaskRecord:
    return TaskRecord(
        task=simple_task(template_id),
        plan_ok=plan_ok,
        exec_ok=exec_ok,
        plan_time_s=pt,
        tracking_error=0.1 if plan_ok else None,
        executed_robustness=0.2 if exec_ok else None,
    )


def far_node(graph) -> int:
    start = np.asarray(graph.position(0))
    return max(
        range(1, len(graph)),
        key=lambda v: float(np.linalg.norm(np.asarray(graph.position(v)) - start)),
    )


def reach_task(graph, steps: int) -> TaskSpec:
    """Reach a small disk around the node farthest from node 0 within ``steps``."""
    goal = graph.position(far_node(graph))
    return TaskSpec(
        template_id="T2",
        predicates=[PredicateDef(id="m1", center=goal, radius=0.3)],
        x0=graph.position(0),
        formula=f"F[0,{steps}] m1",
    )


class TestTemplates:
    """Test cases for template text and time bounds."""

    def test_groups_cover_every_template(self) -> None:
        """Test that each template belongs to exactly one group."""
        members = [t for group in TEMPLATE_GROUPS.values() for t in group]
        assert sorted(members, key=TEMPLATE_IDS.index) == TEMPLATE_IDS
        assert template_group("T1") == "Basic"
        assert template_group("T5") == "Intermediate"
        assert template_group("T12") == "Advanced"
        with pytest.raises(ValueError):
            template_group("T13")

    def test_render(self) -> None:
        """Test placeholder substitution."""
        assert render_template("T1", {"t1": 3, "t2": 7}) == "F[0,3] m1 & F[3,7] m2"
        assert render_template("T8", {"t1": 4, "t3": 9}) == "F[0,4] m1 & G[4,9] m1"

    def test_render_errors(self) -> None:
        """Test unknown templates and missing placeholders."""
        with pytest.raises(ValueError, match="Unknown template"):
            render_template("T0", {})
        with pytest.raises(ValueError, match="t2"):
            render_template("T1", {"t1": 3})

    def test_every_template_parses(self) -> None:
        """Test that every template renders to a well-formed formula."""
        for template_id in TEMPLATE_IDS:
            bounds = {f"t{i}": 2 * i for i in range(1, 5)}
            phi = parse_formula(render_template(template_id, bounds))
            ids = predicate_ids(phi)
            assert ids == {f"m{i}" for i in range(1, len(ids) + 1)}

    @pytest.mark.parametrize("diameter", [1, 4, 9])
    def test_drawn_bounds(self, diameter: int) -> None:
        """Test that drawn bounds fill every placeholder in increasing order."""
        rng = np.random.default_rng(diameter)
        for template_id in TEMPLATE_IDS:
            phi, bounds = build_template(template_id, rng, diameter)
            assert set(re.findall(r"\bt[1-4]\b", TEMPLATE_TEXT[template_id])) == set(bounds)
            values = [bounds[k] for k in sorted(bounds)]
            assert all(v >= 1 for v in values)
            if template_id in SEQUENCED:
                assert values == sorted(set(values))
            assert horizon(phi) >= max(values)

    def test_reach_windows_cover_the_diameter(self) -> None:
        """Test that the first reach window is longer than the hop diameter."""
        rng = np.random.default_rng(0)
        for _ in range(20):
            _, bounds = build_template("T2", rng, 7)
            assert bounds["t1"] >= 8

    def test_nested_template_bounds(self) -> None:
        """Test that the outer T12 window spans the diameter and leaves a slot to hold m2."""
        rng = np.random.default_rng(4)
        for _ in range(20):
            phi, bounds = build_template("T12", rng, 9)
            assert bounds["t1"] >= 9
            assert bounds["t2"] >= 10
            assert bounds["t3"] - bounds["t2"] - bounds["t1"] >= 9
            assert horizon(phi) == bounds["t1"] + bounds["t3"]

    def test_unknown_template(self) -> None:
        """Test that unknown ids are rejected."""
        with pytest.raises(ValueError):
            build_template("T99", np.random.default_rng(0), 3)


class TestSampling:
    """Test cases for region and task sampling."""

    def test_task_invariants(self, world, small_graph) -> None:
        """Test regions, start state and horizon of one task per template."""
        diameter = hop_diameter(small_graph)
        nodes = np.asarray([n.pos for n in small_graph.nodes])
        for template_id in TEMPLATE_IDS:
            task = sample_task(template_id, world, small_graph, ROOMY, 0, diameter)
            regions = task.predicates
            assert task.template_id == template_id
            assert {r.id for r in regions} == predicate_ids(task.phi)
            assert horizon(task.phi) <= ROOMY.max_horizon
            assert world.is_free(task.x0)
            for i, r in enumerate(regions):
                assert ROOMY.radius_min <= r.radius <= ROOMY.radius_max
                assert world.disk_free(r.center, r.radius)
                assert np.any(np.linalg.norm(nodes - np.asarray(r.center), axis=1) < r.radius)
                assert math.dist(task.x0, r.center) > r.radius
                for other in regions[i + 1 :]:
                    assert math.dist(r.center, other.center) > r.radius + other.radius

    def test_deterministic(self, world, small_graph) -> None:
        """Test that the base seed and index fix the task."""
        a = sample_task("T4", world, small_graph, ROOMY, 3)
        b = sample_task("T4", world, small_graph, ROOMY, 3)
        c = sample_task("T4", world, small_graph, ROOMY, 4)
        assert a == b
        assert a != c

    def test_task_seed(self) -> None:
        """Test that seeds differ per template, index and attempt."""
        seeds = {
            task_seed(0, t, idx, attempt)
            for t in ("T1", "T2")
            for idx in range(3)
            for attempt in range(2)
        }
        assert len(seeds) == 12
        assert task_seed(5, "T3", 1) == task_seed(5, "T3", 1, 0)

    def test_horizon_limit(self, world, small_graph) -> None:
        """Test that a task over the horizon limit is discarded."""
        tight = BenchConfig(max_horizon=1, task_retries=2)
        with pytest.raises(SamplingError, match="exceeds"):
            instantiate_template("T1", world, small_graph, tight, rng_seed=0)
        with pytest.raises(SamplingError, match="no task after 2 seeds"):
            sample_task("T1", world, small_graph, tight, 0)

    def test_region_budget(self, world, small_graph) -> None:
        """Test that too few attempts cannot place several regions."""
        config = BenchConfig(region_attempts=1)
        with pytest.raises(SamplingError, match="Placed"):
            sample_regions(2, world, small_graph, config, np.random.default_rng(0))

    def test_unknown_template(self, world, small_graph) -> None:
        """Test that instantiation validates the template id."""
        with pytest.raises(ValueError):
            instantiate_template("T0", world, small_graph, ROOMY, rng_seed=0)

    def test_generate_tasks(self, world, small_graph) -> None:
        """Test task counts and template order."""
        config = BenchConfig(templates=["T1", "T2"], configs_per_template=2, max_horizon=200)
        tasks = generate_tasks(world, small_graph, config)
        assert [t.template_id for t in tasks] == ["T1", "T1", "T2", "T2"]
        assert generate_tasks(world, small_graph, config) == tasks


class TestTaskModels:
    """Test cases for TaskSpec and TaskRecord."""

    def test_file_round_trip(self, tmp_path) -> None:
        """Test the task JSON file."""
        task = simple_task(seed=11)
        path = tmp_path / "task.json"
        task.to_file(str(path))
        assert TaskSpec.from_file(str(path)) == task

    def test_undefined_predicate_rejected(self) -> None:
        """Test that formulae must only use defined regions."""
        with pytest.raises(ValidationError, match="m2"):
            TaskSpec(
                template_id="custom",
                predicates=[PredicateDef(id="m1", center=(1.5, 1.5), radius=0.5)],
                x0=(3.5, 3.5),
                formula="F[0,2] m1 & F[0,3] m2",
            )

    def test_malformed_formula_rejected(self) -> None:
        """Test that unparsable formulae are rejected."""
        with pytest.raises(ValidationError):
            TaskSpec(template_id="custom", predicates=[], x0=(0.0, 0.0), formula="F[3,1] m1")

    def test_execution_needs_a_plan(self) -> None:
        """Test that exec_ok implies plan_ok."""
        with pytest.raises(ValidationError):
            TaskRecord(task=simple_task(), plan_ok=False, exec_ok=True)


class TestRunner:
    """Test cases for single-task runs and the concurrent runner."""

    def test_planned_task(self, world, small_graph) -> None:
        """Test a reachable region is planned, executed and judged."""
        task = reach_task(small_graph, hop_diameter(small_graph) + 1)
        rec = run_task(task, small_graph, world, PlannerConfig())
        assert rec.plan_ok
        assert rec.plan_time_s > 0.0
        assert rec.plan_stats.expanded >= 1
        assert rec.executed_robustness is not None
        assert rec.exec_ok == (rec.executed_robustness > 0)
        assert rec.tracking_error is not None and rec.tracking_error >= 0.0

    def test_failed_plan_is_recorded(self, world, small_graph) -> None:
        """Test that an unreachable window gives a failure record instead of an error."""
        rec = run_task(reach_task(small_graph, 1), small_graph, world, PlannerConfig())
        assert not rec.plan_ok and not rec.exec_ok
        assert rec.executed_robustness is None
        assert rec.tracking_error is None

    async def test_run_bench_keeps_task_order(self, world, small_graph) -> None:
        """Test that records follow task order and every record reaches the callback."""
        far = hop_diameter(small_graph) + 1
        tasks = [reach_task(small_graph, far), reach_task(small_graph, 1)]
        tasks.append(tasks[0].model_copy(update={"rng_seed": 9}))
        seen = []
        records = await run_bench(
            tasks,
            small_graph,
            world,
            PlannerConfig(),
            workers=2,
            on_record=lambda idx, rec: seen.append(idx),
        )
        assert [r.task for r in records] == tasks
        assert [r.plan_ok for r in records] == [True, False, True]
        assert sorted(seen) == [0, 1, 2]

    async def test_run_bench_validates_workers(self, world, small_graph) -> None:
        """Test that at least one worker is required."""
        with pytest.raises(ValueError):
            await run_bench([], small_graph, world, PlannerConfig(), workers=0)

    async def test_run_bench_empty(self, world, small_graph) -> None:
        """Test that no tasks give no records."""
        assert await run_bench([], small_graph, world, PlannerConfig()) == []

    @pytest.mark.slow
    async def test_small_benchmark(self, world, small_graph) -> None:
        """Test a short benchmark run end to end on the desk maze."""
        config = BenchConfig(templates=["T2", "T9", "T12"], configs_per_template=10, seed=3)
        tasks = generate_tasks(world, small_graph, config)
        planner = PlannerConfig(max_expansions=20000)
        records = await run_bench(tasks, small_graph, world, planner, workers=4)
        report = aggregate(records)
        assert [r.name for r in report.groups] == ["Basic", "Advanced"]
        for row in [*report.templates, *report.groups, report.overall]:
            assert row.esr <= row.psr
        assert report.row("T2").psr == 100.0
        assert report.overall.tasks == len(tasks)

    @pytest.mark.slow
    async def test_default_benchmark(self, world, desk_graph) -> None:
        """Test rates, planning time and template orderings of the default desk benchmark."""
        config = RunConfig()
        tasks = generate_tasks(world, desk_graph, config.bench)
        assert {t.template_id for t in tasks} == set(TEMPLATE_IDS)
        records = await run_bench(tasks, desk_graph, world, config.planner, workers=1)
        report = aggregate(records)
        assert report.overall.psr >= 90.0
        assert report.overall.esr >= 80.0
        assert report.overall.pt_mean <= 5.0
        esr = {row.name: row.esr for row in report.templates}
        pt = {row.name: row.pt_mean for row in report.templates if row.pt_mean is not None}
        assert esr["T9"] == min(esr.values())
        assert pt["T12"] == max(pt.values())


class TestReport:
    """Test cases for aggregation and report files."""

    def test_rates_and_times(self) -> None:
        """Test PSR, ESR and PT over ten records."""
        records = [record("T1", i < 9, i < 8, float(i + 1)) for i in range(10)]
        row = summarize("T1", records)
        assert (row.tasks, row.psr, row.esr) == (10, 90.0, 80.0)
        assert row.pt_mean == pytest.approx(5.0)
        assert row.pt_std == pytest.approx(math.sqrt(60.0 / 9.0))
        assert row.tracking_error == pytest.approx(0.1)

    def test_single_planned_task(self) -> None:
        """Test that one planned task has zero PT spread."""
        row = summarize("T2", [record("T2", True, True, 0.3)])
        assert row.pt_mean == pytest.approx(0.3)
        assert row.pt_std == 0.0

    def test_nothing_planned(self) -> None:
        """Test rows without planned tasks."""
        row = summarize("T3", [record("T3", False, False, 1.0)])
        assert (row.psr, row.esr) == (0.0, 0.0)
        assert row.pt_mean is None and row.pt_std is None

    def test_empty_rejected(self) -> None:
        """Test that empty record sets raise ValueError."""
        with pytest.raises(ValueError):
            summarize("T1", [])
        with pytest.raises(ValueError):
            aggregate([])

    def test_grouping(self) -> None:
        """Test row order across templates, groups and the overall row."""
        records = [
            record("T9", True, True, 1.0),
            record("custom", False, False, 1.0),
            record("T1", True, False, 2.0),
            record("T2", False, False, 1.0),
        ]
        report = aggregate(records)
        assert [r.name for r in report.templates] == ["T1", "T2", "T9", "custom"]
        assert [r.name for r in report.groups] == ["Basic", "Advanced"]
        assert report.row("Basic").psr == 50.0
        assert report.overall.tasks == 4
        assert report.row("Overall").esr == 25.0
        with pytest.raises(KeyError):
            report.row("Intermediate")

    def test_format_report(self) -> None:
        """Test the text table."""
        records = [record("T1", i < 9, i < 8, float(i + 1)) for i in range(10)]
        text = format_report(aggregate(records))
        lines = text.splitlines()
        assert "PSR (%)" in lines[0] and "ESR (%)" in lines[0]
        t1 = next(line for line in lines if line.startswith("T1"))
        assert "90.00" in t1 and "80.00" in t1 and "5.00 +- 2.58" in t1
        assert lines[-1].startswith("Overall")

    def test_format_report_without_plans(self) -> None:
        """Test that missing PT statistics render as a dash."""
        text = format_report(aggregate([record("T5", False, False, 1.0)]))
        t5 = next(line for line in text.splitlines() if line.startswith("T5"))
        assert t5.rstrip().endswith("-")

    def test_csv_files(self, tmp_path) -> None:
        """Test the per-task and per-row CSV layouts."""
        records = [record("T1", True, True, 0.5), record("T4", False, False, 0.25)]
        results = tmp_path / "results.csv"
        report_csv = tmp_path / "report.csv"
        write_results_csv(str(results), records)
        write_report_csv(str(report_csv), aggregate(records))

        with open(results, newline="") as f:
            reader = csv.DictReader(f)
            assert reader.fieldnames == RESULT_COLUMNS
            rows = list(reader)
        assert [r["template"] for r in rows] == ["T1", "T4"]
        assert (rows[0]["plan_ok"], rows[0]["exec_ok"]) == ("1", "1")
        assert rows[1]["robustness"] == "-" and rows[1]["tracking_error"] == "-"

        with open(report_csv, newline="") as f:
            reader = csv.DictReader(f)
            assert reader.fieldnames == REPORT_COLUMNS
            names = [r["row"] for r in reader]
        assert names == ["T1", "T4", "Basic", "Intermediate", "Overall"]
