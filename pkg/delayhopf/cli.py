"""Command-line interface for the delay-hopf tool."""

import functools
import logging
import sys
from pathlib import Path

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn
from rich.table import Table

from delayhopf import __version__
from delayhopf.charpoly import char_spec_p1
from delayhopf.critical_delay import critical_delay_p0, critical_delay_p1
from delayhopf.diagnostics import Trend, analyze_oscillation, classify, cross_check
from delayhopf.errors import (
    ConsistencyFailure,
    DelayHopfError,
    NoCrossing,
    ParseError,
    StepTooLarge,
    ValidationError,
)
from delayhopf.model import (
    STATE_NAMES,
    Label,
    equilibria,
    equilibrium_residual,
    find_equilibrium,
    shift_from_origin,
)
from delayhopf.scenario import (
    critical_delay_to_dict,
    cross_check_to_dict,
    equilibria_to_dict,
    load_scenario,
    simulation_to_dict,
    verdict_to_dict,
    write_plot_stub,
    write_report,
    write_timeseries,
)
from delayhopf.solver import HistoryFunction, integrate, shift_trajectory

console = Console()

EXIT_ERROR = 1
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_CONSISTENCY = 4

TREND_STYLES = {
    Trend.DECAYING: "green",
    Trend.SUSTAINED: "yellow",
    Trend.GROWING: "red",
}


def format_value(value, digits: int = 6) -> str:
    """Format an optional number for tables."""
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.{digits}g}"
    return str(value)


def _handle_errors(command):
    """Map library errors onto exit codes."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (ParseError, ValidationError, StepTooLarge) as e:
            console.print(f"[bold red]Invalid scenario:[/bold red] {e}")
            sys.exit(EXIT_VALIDATION)
        except OSError as e:
            console.print(f"[bold red]I/O error:[/bold red] {e}")
            sys.exit(EXIT_IO)
        except ConsistencyFailure as e:
            console.print(f"[bold red]Consistency failure:[/bold red] {e}")
            sys.exit(EXIT_CONSISTENCY)
        except DelayHopfError as e:
            console.print(f"[bold red]Error:[/bold red] {e}")
            sys.exit(EXIT_ERROR)

    return wrapper


def scenario_options(command):
    """Options shared by every subcommand."""
    command = click.option(
        "--jobs", "-j", type=int, default=None, help="Worker threads for sweeps"
    )(command)
    command = click.option(
        "--tau", type=float, default=None, help="Override the scenario delay"
    )(command)
    command = click.option(
        "--out",
        "-o",
        type=click.Path(file_okay=False),
        default=".",
        help="Directory for output files (default: current directory)",
    )(command)
    command = click.option(
        "--scenario",
        "-s",
        type=click.Path(dir_okay=False),
        required=True,
        help="Scenario file (TOML)",
    )(command)
    return command


def _prepare(scenario_path, out, tau):
    scenario = load_scenario(scenario_path)
    if tau is not None:
        scenario = scenario.with_tau(tau)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return scenario, out_dir


def _original_initial(scenario):
    if scenario.coordinates == "shifted":
        return shift_from_origin(scenario.initial, scenario.params)
    return scenario.initial


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Show debug logging")
@click.version_option(version=__version__)
def main(verbose):
    """Stability and Hopf bifurcation analysis of a delayed financial system."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


@main.command("equilibria")
@scenario_options
@_handle_errors
def equilibria_command(scenario, out, tau, jobs):
    """List the equilibria of the scenario parameters."""
    scenario, out_dir = _prepare(scenario, out, tau)
    found = equilibria(scenario.params)
    residuals = [equilibrium_residual(eq, scenario.params) for eq in found]

    table = Table(title=f"Equilibria ({scenario.name})")
    table.add_column("label", style="bold")
    for name in STATE_NAMES:
        table.add_column(name, justify="right")
    table.add_column("residual", justify="right")
    for eq, residual in zip(found, residuals):
        table.add_row(
            eq.label.value,
            *(format_value(v) for v in eq.point),
            format_value(residual, 3),
        )
    console.print(table)

    if "report" in scenario.outputs:
        path = write_report(
            equilibria_to_dict(found, residuals), out_dir / f"{scenario.name}_equilibria.json"
        )
        console.print(f"Report written to {path}")


@main.command("stability")
@scenario_options
@_handle_errors
def stability_command(scenario, out, tau, jobs):
    """Classify the scenario equilibrium and show the Routh-Hurwitz gate."""
    scenario, out_dir = _prepare(scenario, out, tau)
    verdict = classify(scenario.params, scenario.equilibrium)

    gate = Table(title=f"Routh-Hurwitz gate at {verdict.label.value}")
    gate.add_column("condition")
    gate.add_column("holds", justify="center")
    for name, holds in verdict.gate.items():
        gate.add_row(name, "[green]yes[/green]" if holds else "[red]no[/red]")
    console.print(gate)

    console.print(f"[bold]Regime:[/bold] {verdict.regime.value}")
    console.print(f"[bold]Regimes:[/bold] {', '.join(r.value for r in verdict.regimes)}")
    console.print(f"tau0 = {format_value(verdict.tau0)}, tau1 = {format_value(verdict.tau1)}")
    console.print(f"[dim]{verdict.provenance}[/dim]")

    if "report" in scenario.outputs:
        path = write_report(
            verdict_to_dict(verdict), out_dir / f"{scenario.name}_stability.json"
        )
        console.print(f"Report written to {path}")


@main.command("critical-delay")
@scenario_options
@_handle_errors
def critical_delay_command(scenario, out, tau, jobs):
    """Compute the crossing frequency and the critical delay ladder."""
    scenario, out_dir = _prepare(scenario, out, tau)
    params = scenario.params
    try:
        if scenario.equilibrium == Label.P0:
            report = critical_delay_p0(params)
        else:
            eq = find_equilibrium(params, scenario.equilibrium)
            report = critical_delay_p1(
                char_spec_p1(params, eq), label=scenario.equilibrium.value
            )
    except NoCrossing as e:
        console.print(f"[green]No crossing:[/green] {e}")
        return

    console.print(f"[bold]omega0[/bold] = {report.omega0:.6f}")
    console.print(f"[bold]tau0[/bold]   = {report.tau0:.6f}")
    console.print(f"[bold]tau1[/bold]   = {format_value(report.tau1)}")
    console.print(
        f"transversality sign {report.transversality_sign:+d}, "
        f"rate {report.transversality_rate:.6g}"
    )

    table = Table(title="Critical delay ladder")
    for column in ("k", "j", "tau", "omega", "residual", "direction", "branch"):
        table.add_column(column, justify="right")
    for entry in report.tau_ladder:
        table.add_row(
            str(entry.k),
            str(entry.j),
            format_value(entry.tau, 8),
            format_value(entry.omega, 8),
            format_value(entry.residual, 2),
            f"{entry.direction:+d}",
            entry.branch,
        )
    console.print(table)

    if "report" in scenario.outputs:
        path = write_report(
            critical_delay_to_dict(report), out_dir / f"{scenario.name}_critical_delay.json"
        )
        console.print(f"Report written to {path}")


@main.command("simulate")
@scenario_options
@_handle_errors
def simulate_command(scenario, out, tau, jobs):
    """Integrate the system and write the requested series."""
    scenario, out_dir = _prepare(scenario, out, tau)
    history = HistoryFunction.constant(_original_initial(scenario))
    with console.status(f"Integrating tau={scenario.tau:g} to t={scenario.horizon:g}"):
        trajectory = integrate(
            scenario.params, scenario.tau, history, scenario.horizon, scenario.step
        )
    if scenario.coordinates == "shifted":
        trajectory = shift_trajectory(trajectory)
    if trajectory.blew_up:
        console.print(
            f"[red]Solution blew up at t={trajectory.blow_up_time:.6g}[/red]"
        )

    for kind in ("timeseries", "phase2d", "phase3d"):
        if kind in scenario.outputs:
            csv_path = write_timeseries(trajectory, out_dir / f"{scenario.name}_{kind}.csv")
            write_plot_stub(csv_path, kind)
            console.print(f"Wrote {csv_path}")

    eq = find_equilibrium(scenario.params, scenario.equilibrium)
    reports = []
    table = Table(title=f"Envelopes around {eq.label.value} (tau={scenario.tau:g})")
    for column in ("component", "trend", "ratio", "period"):
        table.add_column(column)
    for index, name in enumerate(STATE_NAMES):
        try:
            report = analyze_oscillation(trajectory, index, eq)
        except DelayHopfError as e:
            console.print(f"[yellow]{name}: {e}[/yellow]")
            continue
        reports.append(report)
        style = TREND_STYLES[report.envelope_trend]
        table.add_row(
            name,
            f"[{style}]{report.envelope_trend.value}[/{style}]",
            format_value(report.amplitude_ratio, 4),
            format_value(report.period_estimate, 5),
        )
    console.print(table)

    if "report" in scenario.outputs:
        path = write_report(
            simulation_to_dict(trajectory, reports, scenario.name),
            out_dir / f"{scenario.name}_simulation.json",
        )
        console.print(f"Report written to {path}")


def _run_grid(scenario, jobs):
    params = scenario.params
    eq = find_equilibrium(params, scenario.equilibrium)
    with Progress(
        SpinnerColumn(),
        TextColumn("[bold blue]{task.description}"),
        BarColumn(),
        TextColumn("[bold]{task.completed}/{task.total}"),
        console=console,
    ) as progress:
        task = progress.add_task("Checking delays", total=len(scenario.taus))

        def update_progress(done, total, tau):
            progress.update(task, completed=done, description=f"tau={tau:.6g}")

        return cross_check(
            params,
            eq,
            list(scenario.taus),
            initial=_original_initial(scenario),
            horizon=scenario.horizon,
            step=scenario.step,
            jobs=jobs,
            progress_callback=update_progress,
        )


def _print_grid(report, title):
    table = Table(title=title)
    for column in ("tau", "analytic", "RHP roots", "envelope", "ratio"):
        table.add_column(column, justify="right")
    for row in report.rows:
        style = TREND_STYLES[row.trend]
        table.add_row(
            format_value(row.tau, 8),
            row.regime.value,
            str(row.rhp_count),
            f"[{style}]{row.trend.value}[/{style}]",
            format_value(row.amplitude_ratio, 4),
        )
    console.print(table)
    for tau, error in report.failures:
        console.print(f"[yellow]tau={tau:.6g} failed: {error}[/yellow]")


@main.command("sweep")
@scenario_options
@_handle_errors
def sweep_command(scenario, out, tau, jobs):
    """Tabulate verdict, oracle count and envelope over the delay grid."""
    scenario, out_dir = _prepare(scenario, out, tau)
    report = _run_grid(scenario, jobs)
    _print_grid(report, f"Delay sweep ({scenario.name})")
    if "report" in scenario.outputs:
        path = write_report(
            cross_check_to_dict(report, kind="sweep"),
            out_dir / f"{scenario.name}_sweep.json",
        )
        console.print(f"Report written to {path}")


@main.command("cross-check")
@scenario_options
@_handle_errors
def cross_check_command(scenario, out, tau, jobs):
    """Fail unless analytic, oracle and simulation agree on every delay."""
    scenario, out_dir = _prepare(scenario, out, tau)
    report = _run_grid(scenario, jobs)
    _print_grid(report, f"Cross-check ({scenario.name})")
    if "report" in scenario.outputs:
        path = write_report(
            cross_check_to_dict(report), out_dir / f"{scenario.name}_cross_check.json"
        )
        console.print(f"Report written to {path}")
    for tau_value, problem in report.disagreements:
        console.print(f"[red]tau={tau_value:.6g}: {problem}[/red]")
    if not report.passed:
        raise ConsistencyFailure(
            f"{len(report.disagreements)} disagreements, {len(report.failures)} failures"
        )
    console.print("[green]All layers agree[/green]")


if __name__ == "__main__":
    main()
