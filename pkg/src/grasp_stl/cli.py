"""Command-line entry point.

Subcommands cover the whole pipeline: ``gen-data``, ``build-graph``, ``plan``, ``bench``
and ``monitor``. Exit codes are 0 on success, 1 for usage, parse or validation errors
and 2 when planning finds no plan.
"""

import argparse
import asyncio
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from .bench.report import aggregate, format_report, write_report_csv, write_results_csv
from .bench.runner import generate_tasks, run_bench
from .config import RunConfig
from .graph.builder import build_graph
from .models.graph import ReachGraph
from .models.predicates import UnknownPredicateError, parse_predicate_arg, predicate_table
from .models.task import TaskSpec
from .planner.search import STLGraphSearch
from .robustness.agm import agm_robustness, interval_robustness
from .robustness.monitor import monitor_prefix
from .sim.controller import execute_plan, subsample_signal, tracking_error
from .sim.dataset import OfflineDataset, coverage, generate_dataset, load_dataset, save_dataset
from .sim.oracle import BfsOracle
from .sim.world import MazeWorld, desk_world, load_maze
from .stl.parser import parse_formula
from .traces import (
    read_signal,
    write_interval_trace,
    write_predicate_trace,
    write_search_trace,
    write_signal,
    write_trajectory,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_PLAN = 2

CHECK_TOLERANCE = 1e-9


class UsageError(ValueError):
    """Raised for argument combinations argparse cannot rule out by itself."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _point(text: str) -> Tuple[float, float]:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y, got {text!r}")
    return (x, y)


def _top_k(text: str) -> Optional[int]:
    if text.lower() in ("none", "inf", "unlimited"):
        return None
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'none', got {text!r}")


def _templates(values: List[str]) -> List[str]:
    return [t.strip() for v in values for t in v.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="Path to configuration JSON file")
    common.add_argument("--maze", type=str, default=None, help="Maze text file")
    common.add_argument("--seed", type=int, default=None, help="Seed for data, graph and tasks")
    common.add_argument("--out-dir", type=str, default=".", help="Directory for output files")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings only")

    graph_opts = argparse.ArgumentParser(add_help=False)
    graph_opts.add_argument("--dataset", type=str, default=None, help="Dataset JSONL file")
    graph_opts.add_argument("--k", type=int, default=None, help="Control steps per edge")
    graph_opts.add_argument("--delta", type=float, default=None, help="Edge feasibility margin")

    planner_opts = argparse.ArgumentParser(add_help=False)
    planner_opts.add_argument("--graph", type=str, default=None, help="Graph JSON file")
    planner_opts.add_argument("--lambda0", type=float, default=None)
    planner_opts.add_argument("--lambda1", type=float, default=None)
    planner_opts.add_argument("--lambda2", type=float, default=None)
    planner_opts.add_argument(
        "--top-k", type=_top_k, default=argparse.SUPPRESS, help="Bucket size K, or 'none'"
    )
    planner_opts.add_argument("--eps", type=float, default=None, help="Dominance tolerance")
    planner_opts.add_argument("--max-expansions", type=int, default=None)
    planner_opts.add_argument("--frontier", choices=["score", "fifo", "lifo"], default=None)

    formula_opts = argparse.ArgumentParser(add_help=False)
    formula_opts.add_argument(
        "--predicate",
        action="append",
        default=[],
        metavar="NAME=X,Y,R",
        help="Disk predicate; repeat for each region",
    )

    parser = _Parser(prog="grasp-stl", description="Graph-based STL planning in a 2D maze")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen-data", parents=[common], help="Generate an offline dataset")
    gen.add_argument("--dataset", type=str, default=None, help="Output dataset file")
    gen.add_argument("--n-traj", type=int, default=None)
    gen.add_argument("--traj-len", type=int, default=None)

    build = sub.add_parser(
        "build-graph", parents=[common, graph_opts], help="Build the reachability graph"
    )
    build.add_argument("--graph", type=str, default=None, help="Output graph file")
    build.add_argument("--budget", type=int, default=None, help="Subsampling budget")
    build.add_argument("--threshold", type=float, default=None, help="Clustering threshold")

    plan = sub.add_parser(
        "plan",
        parents=[common, graph_opts, planner_opts, formula_opts],
        help="Plan and execute a single task",
    )
    source = plan.add_mutually_exclusive_group(required=True)
    source.add_argument("--formula", type=str, help="STL formula text")
    source.add_argument("--task", type=str, help="Task JSON file")
    plan.add_argument("--x0", type=_point, default=None, help="Initial state x,y")

    bench = sub.add_parser(
        "bench", parents=[common, graph_opts, planner_opts], help="Run the template benchmark"
    )
    bench.add_argument("--templates", nargs="+", default=None, help="Template ids, e.g. T1 T9")
    bench.add_argument("--configs-per-template", type=int, default=None)
    bench.add_argument("--workers", type=int, default=None, help="Concurrent searches")
    bench.add_argument(
        "--dump-tasks", action="store_true", help="Write every sampled task as a JSON file"
    )

    monitor = sub.add_parser(
        "monitor", parents=[common, formula_opts], help="Monitor a signal CSV"
    )
    monitor.add_argument("--formula", type=str, required=True, help="STL formula text")
    monitor.add_argument("--signal", type=str, required=True, help="CSV with x and y columns")
    monitor.add_argument("--out", type=str, default=None, help="Output interval CSV")
    monitor.add_argument(
        "--check", action="store_true", help="Compare against the from-scratch intervals"
    )
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """Configuration file (or the bundled default) with command-line overrides applied."""
    if args.config:
        config = RunConfig.from_file(args.config)
        logger.info(f"Loaded configuration from {args.config}")
    else:
        default_config = os.path.join(os.path.dirname(__file__), "config.json")
        if os.path.exists(default_config):
            config = RunConfig.from_file(default_config)
            logger.debug(f"Loaded configuration from {default_config}")
        else:
            config = RunConfig()
            logger.info("Using default configuration")

    get = lambda name: getattr(args, name, None)  # noqa: E731
    overrides: Dict[str, Dict[str, Any]] = {
        "maze": {"path": get("maze")},
        "dataset": {"n_traj": get("n_traj"), "traj_len": get("traj_len"), "seed": get("seed")},
        "graph": {
            "k": get("k"),
            "delta": get("delta"),
            "budget": get("budget"),
            "threshold": get("threshold"),
            "seed": get("seed"),
        },
        "planner": {
            "lambda0": get("lambda0"),
            "lambda1": get("lambda1"),
            "lambda2": get("lambda2"),
            "top_k": get("top_k"),
            "eps": get("eps"),
            "max_expansions": get("max_expansions"),
            "frontier": get("frontier"),
        },
        "bench": {
            "templates": _templates(args.templates) if get("templates") else None,
            "configs_per_template": get("configs_per_template"),
            "workers": get("workers"),
            "seed": get("seed"),
        },
    }
    config = config.with_overrides(overrides)
    if "top_k" in vars(args) and args.top_k is None:
        config.planner = config.planner.model_copy(update={"top_k": None})
    return config


def load_world(config: RunConfig) -> MazeWorld:
    if config.maze.path:
        return load_maze(config.maze.path, config.maze.cell_size, config.maze.max_speed)
    return desk_world(config.maze.cell_size, config.maze.max_speed)


def _out(args: argparse.Namespace, name: str) -> str:
    os.makedirs(args.out_dir, exist_ok=True)
    return os.path.join(args.out_dir, name)


def _dataset_for(args: argparse.Namespace, config: RunConfig, world: MazeWorld) -> OfflineDataset:
    if args.dataset:
        dataset = load_dataset(args.dataset)
        logger.info(f"Loaded {len(dataset)} transitions from {args.dataset}")
        return dataset
    d = config.dataset
    return generate_dataset(world, d.n_traj, d.traj_len, d.seed, d.turn_sigma)


def _build(dataset: OfflineDataset, config: RunConfig, world: MazeWorld) -> ReachGraph:
    oracle = BfsOracle(world, k=config.graph.k)
    return build_graph(dataset.states(), oracle, config.graph)


def _graph_for(args: argparse.Namespace, config: RunConfig, world: MazeWorld) -> ReachGraph:
    if args.graph:
        graph = ReachGraph.from_file(args.graph)
        if graph.config_hash and graph.config_hash != config.graph.config_hash():
            logger.warning(f"{args.graph} was built with different graph parameters")
        logger.info(f"Loaded graph with {len(graph)} nodes from {args.graph}")
        return graph
    logger.info("No --graph given; building one from the configured dataset")
    return _build(_dataset_for(args, config, world), config, world)


def cmd_gen_data(args: argparse.Namespace, config: RunConfig) -> int:
    world = load_world(config)
    d = config.dataset
    dataset = generate_dataset(world, d.n_traj, d.traj_len, d.seed, d.turn_sigma)
    path = args.dataset or _out(args, "dataset.jsonl")
    save_dataset(path, dataset)
    print(f"wrote {len(dataset)} transitions to {path}")
    print(f"coverage: {100.0 * coverage(world, dataset):.1f}% of free cells")
    return EXIT_OK


def cmd_build_graph(args: argparse.Namespace, config: RunConfig) -> int:
    world = load_world(config)
    graph = _build(_dataset_for(args, config, world), config, world)
    path = args.graph or _out(args, "graph.json")
    graph.to_file(path)
    s = graph.stats
    print(f"wrote graph to {path}")
    print(f"nodes: {s.node_count}")
    print(f"edges: {s.edge_count}")
    print(f"mean degree: {s.mean_degree:.2f}")
    print(f"mean edge length: {s.mean_edge_length:.2f}")
    return EXIT_OK


def _plan_inputs(args: argparse.Namespace) -> TaskSpec:
    if args.task:
        if args.predicate or args.x0 is not None:
            raise UsageError("--task already defines predicates and x0")
        return TaskSpec.from_file(args.task)
    if args.x0 is None:
        raise UsageError("--x0 is required with --formula")
    preds = [parse_predicate_arg(p) for p in args.predicate]
    return TaskSpec(template_id="custom", predicates=preds, x0=args.x0, formula=args.formula)


def cmd_plan(args: argparse.Namespace, config: RunConfig) -> int:
    task = _plan_inputs(args)
    world = load_world(config)
    if not world.is_free(task.x0):
        raise UsageError(f"x0 {task.x0} is not in free space")
    graph = _graph_for(args, config, world)
    phi, table = task.phi, task.table

    searcher = STLGraphSearch(graph, phi, table, config.planner)
    plan = searcher.search(task.x0)
    write_search_trace(_out(args, "search_trace.csv"), searcher.stats)
    if plan is None:
        s = searcher.stats
        print(f"no plan found ({s.expanded} expanded, {s.pruned_upper} pruned by bound)")
        return EXIT_NO_PLAN

    plan.to_file(_out(args, "plan.json"))
    trajectory = execute_plan(world, task.x0, plan.waypoints, graph.k)
    signal = subsample_signal(trajectory, graph.k)
    write_interval_trace(_out(args, "interval_trace.csv"), monitor_prefix(phi, table, signal))
    write_predicate_trace(_out(args, "predicate_trace.csv"), table, signal)
    write_trajectory(_out(args, "trajectory.csv"), trajectory)
    write_signal(_out(args, "signal.csv"), signal, plan.waypoints)

    rho = agm_robustness(phi, table, signal)
    lo, hi = plan.final_interval
    print(f"plan: {plan.horizon_steps} steps, interval [{lo:.6f}, {hi:.6f}]")
    print(f"search: {plan.stats.expanded} expanded in {plan.stats.elapsed_seconds:.3f}s")
    print(f"executed robustness: {rho:.6f} ({'satisfied' if rho > 0 else 'violated'})")
    print(f"tracking error: {tracking_error(signal, plan.waypoints):.3f}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace, config: RunConfig) -> int:
    world = load_world(config)
    graph = _graph_for(args, config, world)
    tasks = generate_tasks(world, graph, config.bench)
    if not tasks:
        raise UsageError("No task could be sampled")
    if args.dump_tasks:
        task_dir = _out(args, "tasks")
        os.makedirs(task_dir, exist_ok=True)
        for n, task in enumerate(tasks):
            task.to_file(os.path.join(task_dir, f"{n:04d}_{task.template_id}.json"))

    records = asyncio.run(run_bench(tasks, graph, world, config.planner, config.bench.workers))
    report = aggregate(records)
    write_results_csv(_out(args, "results.csv"), records)
    write_report_csv(_out(args, "report.csv"), report)
    text = format_report(report)
    with open(_out(args, "report.txt"), "w") as f:
        f.write(text)
    print(text, end="")
    return EXIT_OK


def cmd_monitor(args: argparse.Namespace, config: RunConfig) -> int:
    phi = parse_formula(args.formula)
    table = predicate_table(parse_predicate_arg(p) for p in args.predicate)
    signal = read_signal(args.signal)
    intervals = monitor_prefix(phi, table, signal)
    write_interval_trace(args.out or _out(args, "monitor.csv"), intervals)

    if args.check:
        for t, iv in enumerate(intervals):
            ref = interval_robustness(phi, table, signal[: t + 1])
            if max(abs(ref.lower - iv.lower), abs(ref.upper - iv.upper)) > CHECK_TOLERANCE:
                logger.error(f"Step {t}: incremental {iv} differs from from-scratch {ref}")
                return EXIT_USAGE
        print(f"check: {len(intervals)} steps agree with the from-scratch intervals")
    final = intervals[-1]
    print(f"final interval after {len(intervals)} steps: [{final.lower:.6f}, {final.upper:.6f}]")
    return EXIT_OK


COMMANDS = {
    "gen-data": cmd_gen_data,
    "build-graph": cmd_build_graph,
    "plan": cmd_plan,
    "bench": cmd_bench,
    "monitor": cmd_monitor,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    try:
        config = load_config(args)
        return COMMANDS[args.command](args, config)
    except (ValidationError, ValueError, UnknownPredicateError, OSError) as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
