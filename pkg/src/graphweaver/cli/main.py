"""CLI entry point for graphweaver.

Uses Click to expose the ``graphweaver`` command group.  Commands read
graphs and schedules from files, delegate to ``graphweaver.core`` and print
machine-readable output on stdout; diagnostics go to stderr.

Exit codes: 0 success, 2 input error, 3 capacity error.
"""

from __future__ import annotations

import io
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Tuple, TypeVar

import click

import graphweaver
from graphweaver.core import store
from graphweaver.core.entangler_sim import EntanglerConfig, run_schedule
from graphweaver.core.errors import CapacityError, DomainError, GraphWeaverError, PlanningError
from graphweaver.core.graph_model import (
    Cubic,
    GraphSpec,
    Square,
    make_lattice,
    parse_graph_text,
    parse_lattice,
    to_dot,
)
from graphweaver.core.linear_optics import LinearTrialConfig, simulate_string
from graphweaver.core.qubus_model import (
    QubusParams,
    SweepRow,
    linspace_arg,
    save_sweep,
    sweep,
    write_sweep_csv,
)
from graphweaver.core.register import DEFAULT_CAPACITY
from graphweaver.core.weave_planner import (
    PlannerOptions,
    WeaveSchedule,
    count_operations,
    count_report,
    load_schedule,
    plan_schedule,
    row_chain_blocks,
    schedule_to_dict,
    validate_schedule,
)

T = TypeVar("T")

EXIT_INPUT_ERROR = 2
EXIT_CAPACITY = 3

_LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


@dataclass(frozen=True)
class Config:
    """Resolved options shared by the simulation commands."""

    backend: str = "auto"
    seed: int = 0
    capacity: int = DEFAULT_CAPACITY
    output: Optional[Path] = None

    def resolve_backend(self, vertex_count: int) -> str:
        """``auto`` picks the vector backend iff the graph plus one spider fits the cap."""
        if self.backend != "auto":
            return self.backend
        return "vector" if vertex_count + 1 <= self.capacity else "symbolic"


def _run(action: Callable[[], T]) -> T:
    """Execute *action*, converting library errors to exit codes.

    ``CapacityError`` exits with 3, every other ``GraphWeaverError`` with 2.
    The message is printed to stderr.
    """
    try:
        return action()
    except CapacityError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CAPACITY)
    except GraphWeaverError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT_ERROR)


def _emit(text: str, output: Optional[Path]) -> None:
    if output is None:
        click.echo(text, nl=False)
    else:
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(text, encoding="utf-8")


def _load_graph(graph_file: Optional[Path], lattice: Optional[str]) -> GraphSpec:
    if (graph_file is None) == (lattice is None):
        raise click.UsageError("give exactly one of GRAPH_FILE or --lattice")
    if lattice is not None:
        shorthand = lattice
        return _run(lambda: make_lattice(parse_lattice(shorthand)))
    assert graph_file is not None
    path = graph_file
    return _run(lambda: parse_graph_text(store.read_text(path)))


def _parse_outcomes(
    ctx: click.Context, param: click.Parameter, value: Optional[str]  # noqa: ARG001
) -> Optional[Tuple[int, ...]]:
    if value is None or not value.strip():
        return None
    try:
        outcomes = tuple(int(part) for part in value.split(","))
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}") from None
    if any(n < 0 for n in outcomes):
        raise click.BadParameter("photon numbers must be >= 0")
    return outcomes


@click.group()
@click.version_option(version=graphweaver.__version__, prog_name="graphweaver")
@click.option("-v", "--verbose", count=True, help="Log progress to stderr (-vv for debug).")
def cli(verbose: int) -> None:
    """graphweaver: plan and simulate photonic graph-state weaving."""
    logging.basicConfig(
        level=_LOG_LEVELS[min(verbose, len(_LOG_LEVELS) - 1)],
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


@cli.command()
@click.argument(
    "graph_file", required=False, type=click.Path(exists=True, dir_okay=False, path_type=Path)
)
@click.option("--lattice", help="Lattice shorthand: square:RxC, honeycomb:RxC or cubic:N.")
@click.option(
    "--row-blocks", is_flag=True, help="Prepare the rows of a square lattice as linked blocks."
)
@click.option(
    "-o", "--output", type=click.Path(dir_okay=False, path_type=Path), help="Schedule JSON file."
)
@click.option(
    "--dot", "dot_path", type=click.Path(dir_okay=False, path_type=Path), help="Also write DOT."
)
def plan(
    graph_file: Optional[Path],
    lattice: Optional[str],
    row_blocks: bool,
    output: Optional[Path],
    dot_path: Optional[Path],
) -> None:
    """Plan a weave schedule for GRAPH_FILE (edge list or DOT) or a lattice."""
    graph = _load_graph(graph_file, lattice)
    opts = PlannerOptions()
    if row_blocks:
        kind = _run(lambda: parse_lattice(lattice or ""))
        if not isinstance(kind, Square):
            raise click.UsageError("--row-blocks needs --lattice square:RxC")
        opts = PlannerOptions(row_chain_blocks(kind.rows, kind.cols))

    def build() -> WeaveSchedule:
        schedule = plan_schedule(graph, opts)
        violations = validate_schedule(schedule, graph)
        if violations:
            raise PlanningError(f"planned schedule is invalid: {violations[0]}")
        return schedule

    schedule = _run(build)
    _emit(store.dumps(schedule_to_dict(schedule)), output)
    if dot_path is not None:
        _emit(to_dot(graph), dot_path)


@cli.command()
@click.option("--lattice", help="Cubic lattice shorthand cubic:N (N >= 2).")
@click.option(
    "--schedule",
    "schedule_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Count the entangler operations of a saved schedule.",
)
def count(lattice: Optional[str], schedule_file: Optional[Path]) -> None:
    """Compare entangler operation counts."""
    if (lattice is None) == (schedule_file is None):
        raise click.UsageError("give exactly one of --lattice or --schedule")
    if schedule_file is not None:
        path = schedule_file
        schedule = _run(lambda: load_schedule(path))
        click.echo(f"schedule {_run(lambda: count_operations(schedule))}")
        return

    def formula() -> Tuple[int, int, int, int]:
        kind = parse_lattice(lattice or "")
        if not isinstance(kind, Cubic):
            raise DomainError(f"operation counts need a cubic lattice, got {lattice!r}")
        report = count_report(kind.n)
        planned = count_operations(plan_schedule(make_lattice(kind)))
        return report.cascade_ops, report.box_ops, report.direct_ops, planned

    cascade, box, direct, planned = _run(formula)
    click.echo(f"cascade {cascade}")
    click.echo(f"box {box}")
    click.echo(f"direct {direct}")
    click.echo(f"planned {planned}")


@cli.command()
@click.argument("schedule_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option(
    "--backend",
    type=click.Choice(["vector", "symbolic", "auto"]),
    default="auto",
    show_default=True,
)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option(
    "--force-outcomes",
    callback=_parse_outcomes,
    help="Comma-separated photon numbers pinned to the entangler firings in order.",
)
@click.option(
    "--capacity",
    type=click.IntRange(1, 30),
    default=DEFAULT_CAPACITY,
    envvar="GRAPHWEAVER_CAPACITY",
    show_default=True,
    help="Maximum qubits of the vector backend.",
)
@click.option("--qnd-errors", is_flag=True, help="Sample detector misreadings of the QND module.")
@click.option("--debug-checks", is_flag=True, help="Check the spider correlation at every link.")
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--timing", is_flag=True, help="Include wall-clock time in the report.")
def simulate(
    schedule_file: Path,
    backend: str,
    seed: int,
    force_outcomes: Optional[Tuple[int, ...]],
    capacity: int,
    qnd_errors: bool,
    debug_checks: bool,
    output: Optional[Path],
    timing: bool,
) -> None:
    """Run SCHEDULE_FILE and print the run report as JSON."""
    config = Config(backend=backend, seed=seed, capacity=capacity, output=output)
    schedule = _run(lambda: load_schedule(schedule_file))
    resolved = config.resolve_backend(len(schedule.graph.vertices))
    entangler = EntanglerConfig(
        params=QubusParams(), qnd_errors=qnd_errors, debug_checks=debug_checks, capacity=capacity
    )
    report = _run(
        lambda: run_schedule(schedule, resolved, config.seed, force_outcomes, entangler)
    )
    _emit(store.dumps(report.to_dict(include_timing=timing)), config.output)


@cli.command("qnd-sweep")
@click.option("--alpha", default="400", show_default=True, help="Value or start:stop:num.")
@click.option("--theta", default="0.01", show_default=True, help="Value or start:stop:num.")
@click.option("--gamma", default="1000", show_default=True, help="Value or start:stop:num.")
@click.option("--eta", default="1.0", show_default=True, help="Value or start:stop:num.")
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path))
def qnd_sweep(alpha: str, theta: str, gamma: str, eta: str, output: Optional[Path]) -> None:
    """Tabulate the QND error probability over a parameter grid as CSV."""

    def build() -> List[SweepRow]:
        grids = [linspace_arg(text) for text in (alpha, theta, gamma, eta)]
        return list(sweep(*grids))

    rows = _run(build)
    if output is None:
        buffer = io.StringIO()
        write_sweep_csv(rows, buffer)
        click.echo(buffer.getvalue(), nl=False)
    else:
        save_sweep(rows, output)


@cli.command()
@click.option("--n", "n", type=int, required=True, help="Photons in the string.")
@click.option("--trials", type=int, default=10_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--no-state-checks", is_flag=True, help="Skip the state-vector fidelity check.")
@click.option(
    "--capacity",
    type=click.IntRange(1, 30),
    default=DEFAULT_CAPACITY,
    envvar="GRAPHWEAVER_CAPACITY",
    show_default=True,
)
def linear(n: int, trials: int, seed: int, no_state_checks: bool, capacity: int) -> None:
    """Monte-Carlo the linear-optics cascade for an N-photon string."""

    def build() -> LinearTrialConfig:
        return LinearTrialConfig(
            n=n, trials=trials, seed=seed, state_checks=not no_state_checks, capacity=capacity
        )

    report = _run(lambda: simulate_string(build()))
    click.echo(store.dumps(report.to_dict()), nl=False)
