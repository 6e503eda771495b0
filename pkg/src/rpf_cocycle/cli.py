"""CLI entry point for the RPF Cocycle tool."""

import logging
from typing import Callable, Optional

import click
from rich.console import Console
from rich.logging import RichHandler

from rpf_cocycle import __version__
from rpf_cocycle.config.loader import ConfigLoader
from rpf_cocycle.core.errors import EXIT_INVALID, EXIT_VERIFICATION, RpfError
from rpf_cocycle.experiment import run_experiment
from rpf_cocycle.report import write_report
from rpf_cocycle.results import display_report, write_trace

console = Console()
err_console = Console(stderr=True)


@click.group()
@click.version_option(
    version=__version__,
    prog_name="rpf-cocycle",
    message="%(prog)s, version %(version)s",
)
@click.option(
    "--verbose",
    "-v",
    is_flag=True,
    help="Enable verbose output",
)
@click.pass_context
def app(ctx: click.Context, verbose: bool) -> None:
    """RPF Cocycle - Transfer operator cocycles over sofic factors."""
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


def command_options(func: Callable) -> Callable:
    """Options shared by every command."""
    options = [
        click.option(
            "--config",
            "-c",
            "config_path",
            required=True,
            type=click.Path(exists=False, dir_okay=False),
            help="Path to configuration file (JSON or YAML)",
        ),
        click.option(
            "--output",
            "-o",
            type=click.Path(dir_okay=False, writable=True),
            default=None,
            help="Write the JSON report to this path",
        ),
        click.option(
            "--trace",
            type=click.Path(dir_okay=False, writable=True),
            default=None,
            help="Write per-batch estimates as CSV to this path",
        ),
        click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Override run.seed"),
        click.option("--steps", type=click.IntRange(min=1), default=None, help="Override run.steps"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def run_command(
    command: str,
    config_path: str,
    output: Optional[str] = None,
    trace: Optional[str] = None,
    seed: Optional[int] = None,
    steps: Optional[int] = None,
    verbose: bool = False,
) -> int:
    """
    Load the configuration, run the command, write outputs and return the exit code.

    Returns:
        0 on success, 1 for invalid input, 2 for a failed verification clause,
        3 for a failed structural check
    """
    try:
        config = ConfigLoader().load(config_path)
        outcome = run_experiment(config, command, seed=seed, steps=steps)
    except RpfError as e:
        err_console.print(f"[bold red]Error:[/bold red] {e}")
        return e.exit_code
    except OSError as e:
        err_console.print(f"[bold red]Error:[/bold red] {e}")
        return EXIT_INVALID

    if output:
        write_report(outcome.report, output)
    if trace and outcome.trace is not None:
        write_trace(trace, outcome.trace)
    elif trace:
        logging.getLogger(__name__).warning("Command %s produces no trace", command)

    display_report(outcome.report, console=console)
    if verbose:
        console.print(f"[dim]Finished in {outcome.report.wall_clock_seconds:.2f}s[/dim]")
    if outcome.report.passed is False:
        return EXIT_VERIFICATION
    return 0


def _make_command(name: str, help_text: str) -> None:
    @app.command(name=name, help=help_text)
    @command_options
    @click.pass_context
    def command(
        ctx: click.Context,
        config_path: str,
        output: Optional[str],
        trace: Optional[str],
        seed: Optional[int],
        steps: Optional[int],
    ) -> None:
        verbose = (ctx.obj or {}).get("verbose", False)
        code = run_command(name, config_path, output, trace, seed, steps, verbose)
        ctx.exit(code)


_make_command("validate", "Validate a configuration and build its image presentation.")
_make_command("class-degree", "Compute the class degree and its minimal transition block.")
_make_command("lyapunov", "Estimate the top Lyapunov exponents of the operator cocycle.")
_make_command("pressure", "Estimate the relative pressure from fiber partition functions.")
_make_command("cones", "Report cone parameters and the block contraction diagnostics.")
_make_command("decompose", "Check the windowed decomposition of a cocycle product.")
_make_command("verify", "Check that the top exponent equals the pressure with bounded multiplicity.")


if __name__ == "__main__":
    app()
