"""Batch statistics, trace export and display of experiment reports."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, List, Optional, Union

import numpy as np
import pandas as pd
from rich.console import Console
from rich.table import Table

if TYPE_CHECKING:
    from rpf_cocycle.report import Report


@dataclass
class BatchStatistics:
    """Batch-means summary of one estimated quantity."""

    index: int
    mean: float
    stderr: float
    batches: int


class BatchAnalyzer:
    """
    Batch-means analysis of per-batch estimates.

    Takes a (batches x quantities) array and computes, per quantity, the mean and the
    standard error std / sqrt(batches).
    """

    def __init__(self, estimates: np.ndarray) -> None:
        """
        Initialize BatchAnalyzer with per-batch estimates.

        Args:
            estimates: Array of shape (batches, quantities)
        """
        self.estimates = np.atleast_2d(np.asarray(estimates, dtype=float))

    def frame(self) -> pd.DataFrame:
        """Long-format table with columns batch, exponent_index, estimate."""
        batches, quantities = self.estimates.shape
        return pd.DataFrame(
            {
                "batch": np.repeat(np.arange(batches), quantities),
                "exponent_index": np.tile(np.arange(quantities), batches),
                "estimate": self.estimates.reshape(-1),
            }
        )

    def analyze(self) -> List[BatchStatistics]:
        """
        Compute batch statistics per quantity.

        Returns:
            List of BatchStatistics ordered by quantity index
        """
        df = self.frame().replace([np.inf, -np.inf], np.nan)
        grouped = df.groupby("exponent_index").agg(
            mean=("estimate", "mean"),
            std=("estimate", "std"),
            count=("estimate", "count"),
        )
        stats = []
        for row in grouped.itertuples():
            count = int(row.count)
            stderr = float(row.std) / math.sqrt(count) if count > 1 else math.nan
            stats.append(
                BatchStatistics(index=int(row.Index), mean=float(row.mean), stderr=stderr, batches=count)
            )
        return stats


def write_trace(path: Union[str, Path], estimates: Union[np.ndarray, pd.DataFrame]) -> None:
    """Write per-batch estimates, or a trace frame, as CSV with header batch,exponent_index,estimate."""
    frame = estimates if isinstance(estimates, pd.DataFrame) else BatchAnalyzer(estimates).frame()
    frame.to_csv(path, index=False)


def _fmt(value: Optional[float], digits: int = 6, missing: str = "-inf") -> str:
    if value is None:
        return missing
    return f"{value:.{digits}f}"


def display_report(report: "Report", console: Optional[Console] = None) -> None:
    """
    Display an experiment report as tables with a short summary.

    Args:
        report: Report produced by a command
        console: Optional Rich Console instance (creates new one if not provided)
    """
    if console is None:
        console = Console()

    console.print(
        f"[bold]{report.command}[/bold] on [cyan]{report.config_name}[/cyan] (seed {report.seed})"
    )

    if report.class_degree is not None:
        cert = report.class_degree
        table = Table(title="Class Degree")
        table.add_column("Degree", justify="right", style="cyan")
        table.add_column("Block", justify="left")
        table.add_column("Position", justify="right")
        table.add_column("Representatives", justify="left")
        table.add_column("Stabilized", justify="center")
        table.add_row(
            str(cert.class_degree),
            " ".join(cert.block),
            str(cert.position),
            ", ".join(cert.representatives),
            "[green]yes[/green]" if cert.stabilized else "[yellow]no[/yellow]",
        )
        console.print(table)

    if report.lyapunov is not None:
        table = Table(title="Lyapunov Exponents")
        table.add_column("Index", justify="right", style="dim")
        table.add_column("Exponent", justify="right", style="cyan")
        table.add_column("Std. Error", justify="right")
        for i, (value, error) in enumerate(zip(report.lyapunov.exponents, report.lyapunov.stderr)):
            table.add_row(str(i + 1), _fmt(value), _fmt(error, 2) if error is not None else "-")
        console.print(table)

    if report.cones is not None:
        cones = report.cones
        table = Table(title="Cone Parameters")
        for name in ("a", "b", "D", "k_bound", "empirical_diameter", "contraction_coeff"):
            table.add_column(name, justify="right")
        table.add_row(
            _fmt(cones.a, 4),
            _fmt(cones.b, 4),
            _fmt(cones.D, 4),
            _fmt(cones.k_bound, 2, missing="-"),
            _fmt(cones.empirical_diameter, 4, missing="inf"),
            _fmt(cones.contraction_coeff, 4, missing="-"),
        )
        console.print(table)

    if report.clauses:
        table = Table(title="Verification")
        table.add_column("Clause", justify="left")
        table.add_column("Result", justify="center")
        table.add_column("Detail", justify="left", style="dim")
        for clause in report.clauses:
            mark = "[green]pass[/green]" if clause.passed else "[red]FAIL[/red]"
            table.add_row(clause.name, mark, clause.detail)
        console.print(table)

    console.print()
    console.print("[bold]Summary:[/bold]")
    if report.pressure is not None:
        stderr = report.pressure.stderr
        spread = f"± {stderr:.2e}, " if stderr is not None else ""
        console.print(
            f"  • Pressure: [cyan]{_fmt(report.pressure.value)}[/cyan] "
            f"({spread}{report.pressure.steps} steps)"
        )
    if report.multiplicity is not None:
        console.print(f"  • Top multiplicity: [cyan]{report.multiplicity.count}[/cyan]")
    if report.decomposition is not None:
        status = "holds" if report.decomposition.passed else "fails"
        console.print(
            f"  • Decomposition identity {status} "
            f"({report.decomposition.nonzero}/{report.decomposition.assignments} nonzero terms)"
        )
    if report.passed is not None:
        verdict = "[green]passed[/green]" if report.passed else "[red]failed[/red]"
        console.print(f"  • Verification {verdict}")
