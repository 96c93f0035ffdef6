"""
Console Module

Logging setup and rich tables for command-line output.
"""

import logging
from typing import Iterable, Optional

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

console = Console()


def configure_logging(verbose: bool = False) -> None:
    """Attach a RichHandler to the jitstar logger (WARNING, or DEBUG when verbose)."""
    logger = logging.getLogger("jitstar")
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING)
    if not any(isinstance(h, RichHandler) for h in logger.handlers):
        logger.addHandler(RichHandler(console=Console(stderr=True), show_path=False))
    logger.propagate = False


def _cell(value: Optional[float], fmt: str = ".4f") -> str:
    return "-" if value is None else format(value, fmt)


def summary_table(summaries: Iterable, title: str = "Benchmark summary") -> Table:
    """Table with one row per planner summary."""
    table = Table(title=title)
    table.add_column("planner", style="cyan")
    table.add_column("trials", justify="right")
    table.add_column("success", justify="right")
    table.add_column("t_init med [s]", justify="right")
    table.add_column("c_init med", justify="right")
    table.add_column("c_final med", justify="right")
    for s in summaries:
        table.add_row(
            s.planner,
            str(s.trials),
            f"{s.success_rate:.0%}",
            _cell(s.t_init_median),
            _cell(s.c_init_median),
            _cell(s.c_final_median),
        )
    return table


def key_value_table(rows: Iterable[tuple[str, str]], title: str = "") -> Table:
    table = Table(title=title or None, show_header=False)
    table.add_column("key", style="bold")
    table.add_column("value")
    for key, value in rows:
        table.add_row(key, value)
    return table
