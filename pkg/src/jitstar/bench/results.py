"""
Results Module

Aggregation of run records into summaries, and CSV/JSON/SVG output.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path as FilePath
from typing import Any, Optional, Sequence, Union

import numpy as np

from jitstar.bench.harness import RunRecord

TIME_BINS = 100
CSV_COLUMNS = ["scenario", "dim", "planner", "seed", "t_init", "c_init", "c_final", "success"]

PathLike = Union[str, FilePath]


class ResultsWriteError(Exception):
    """Raised when results cannot be written or read back."""
    pass


@dataclass
class Summary:
    """Aggregate of the runs of one planner."""

    planner: str
    trials: int
    success_rate: float
    t_init_median: Optional[float] = None
    c_init_median: Optional[float] = None
    c_final_median: Optional[float] = None
    time_grid: list[float] = field(default_factory=list)
    quantile_bands: dict[str, list[float]] = field(default_factory=dict)
    success_curve: list[float] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "planner": self.planner,
            "trials": self.trials,
            "success_rate": self.success_rate,
            "t_init_median": self.t_init_median,
            "c_init_median": self.c_init_median,
            "c_final_median": self.c_final_median,
            "time_grid": self.time_grid,
            "quantile_bands": {
                k: [None if math.isnan(v) else v for v in vals]
                for k, vals in self.quantile_bands.items()
            },
            "success_curve": self.success_curve,
        }


def lower_median(values: Sequence[float]) -> Optional[float]:
    """Lower median (element (n - 1) // 2 of the sorted values); None when empty."""
    if not values:
        return None
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def cost_at(trace: Sequence[tuple[float, float]], t: float) -> float:
    """Last cost reported at or before t; nan before the first solution."""
    cost = math.nan
    for elapsed, c in trace:
        if elapsed > t:
            break
        cost = c
    return cost


def summarize(records: Sequence[RunRecord], max_time: Optional[float] = None) -> Summary:
    """
    Summarize the runs of one planner.

    Medians use successful runs only. Cost bands are the 25/50/75% quantiles, on a
    uniform grid of 100 bins, of each successful run's last reported cost
    (runs without a solution yet are left out of a bin). The success curve is
    the fraction of all runs that have a solution by each bin.

    Raises:
        ValueError: If records is empty
    """
    if not records:
        raise ValueError("Cannot summarize an empty record list")
    successes = [r for r in records if r.success]
    summary = Summary(
        planner=records[0].planner,
        trials=len(records),
        success_rate=len(successes) / len(records),
        t_init_median=lower_median([r.t_init for r in successes if r.t_init is not None]),
        c_init_median=lower_median([r.c_init for r in successes if r.c_init is not None]),
        c_final_median=lower_median([r.c_final for r in successes if r.c_final is not None]),
    )
    horizon = max_time
    if horizon is None:
        horizon = max((r.trace[-1][0] for r in successes if r.trace), default=0.0)
    if horizon <= 0.0:
        return summary
    grid = [horizon * (k + 1) / TIME_BINS for k in range(TIME_BINS)]
    costs = np.array([[cost_at(r.trace, t) for t in grid] for r in successes]).reshape(
        len(successes), TIME_BINS
    )
    bands: dict[str, list[float]] = {"q25": [], "q50": [], "q75": []}
    for k in range(TIME_BINS):
        column = costs[:, k]
        column = column[~np.isnan(column)]
        for name, q in (("q25", 25), ("q50", 50), ("q75", 75)):
            bands[name].append(float(np.percentile(column, q)) if len(column) else math.nan)
    summary.time_grid = grid
    summary.quantile_bands = bands
    summary.success_curve = [
        sum(1 for r in successes if r.t_init is not None and r.t_init <= t) / len(records)
        for t in grid
    ]
    return summary


def summarize_by_planner(
    records: Sequence[RunRecord], max_time: Optional[float] = None
) -> dict[str, Summary]:
    """One summary per planner label, in first-appearance order."""
    groups: dict[str, list[RunRecord]] = {}
    for record in records:
        groups.setdefault(record.planner, []).append(record)
    return {name: summarize(group, max_time) for name, group in groups.items()}


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.9g}"


def records_to_csv(records: Sequence[RunRecord]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow(
            [
                r.scenario,
                r.dim,
                r.planner,
                r.seed,
                _fmt(r.t_init),
                _fmt(r.c_init),
                _fmt(r.c_final),
                "true" if r.success else "false",
            ]
        )
    return buffer.getvalue()


def _parse_optional(field_value: str) -> Optional[float]:
    return float(field_value) if field_value != "" else None


def records_from_csv(text: str) -> list[RunRecord]:
    """Parse CSV produced by records_to_csv (traces are not part of the CSV)."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != CSV_COLUMNS:
        raise ResultsWriteError(f"Unexpected CSV header: {reader.fieldnames}")
    return [
        RunRecord(
            scenario=row["scenario"],
            dim=int(row["dim"]),
            planner=row["planner"],
            seed=int(row["seed"]),
            t_init=_parse_optional(row["t_init"]),
            c_init=_parse_optional(row["c_init"]),
            c_final=_parse_optional(row["c_final"]),
            success=row["success"] == "true",
        )
        for row in reader
    ]


def _write_text(path: PathLike, text: str) -> None:
    path = FilePath(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            f.write(text)
    except OSError as e:
        raise ResultsWriteError(f"Failed to write {path}: {e}") from e


def write_csv(records: Sequence[RunRecord], path: PathLike) -> None:
    _write_text(path, records_to_csv(records))


def read_csv(path: PathLike) -> list[RunRecord]:
    path = FilePath(path)
    try:
        with open(path, "r", newline="") as f:
            return records_from_csv(f.read())
    except OSError as e:
        raise ResultsWriteError(f"Failed to read {path}: {e}") from e


def write_json(
    records: Sequence[RunRecord], summaries: dict[str, Summary], path: PathLike
) -> None:
    payload = {
        "records": [r.to_dict() for r in records],
        "summaries": {name: s.to_dict() for name, s in summaries.items()},
    }
    _write_text(path, json.dumps(payload, indent=2))


def write_results(
    records: Sequence[RunRecord], summaries: dict[str, Summary], out_dir: PathLike
) -> tuple[FilePath, FilePath]:
    """
    Write records.csv and results.json into out_dir.

    Raises:
        ResultsWriteError: On any I/O failure, with the offending path
    """
    out = FilePath(out_dir)
    csv_path, json_path = out / "records.csv", out / "results.json"
    write_csv(records, csv_path)
    write_json(records, summaries, json_path)
    return csv_path, json_path


def emit_plot(summaries: dict[str, Summary], path: PathLike, title: str = "") -> None:
    """
    SVG with median cost over time (25-75% band) and success rate over time,
    one labelled series per planner.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax_cost, ax_success) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for name, summary in summaries.items():
        if not summary.time_grid:
            continue
        t = np.array(summary.time_grid)
        median = np.array(summary.quantile_bands["q50"], dtype=float)
        (line,) = ax_cost.plot(t, median, label=name)
        ax_cost.fill_between(
            t,
            np.array(summary.quantile_bands["q25"], dtype=float),
            np.array(summary.quantile_bands["q75"], dtype=float),
            color=line.get_color(),
            alpha=0.25,
        )
        ax_success.plot(t, np.array(summary.success_curve) * 100.0, label=name, color=line.get_color())
    ax_cost.set_ylabel("solution cost")
    ax_cost.legend()
    ax_success.set_ylabel("success [%]")
    ax_success.set_xlabel("time [s]")
    ax_success.set_ylim(0, 105)
    if title:
        ax_cost.set_title(title)
    fig.tight_layout()
    path = FilePath(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        # keep labels as searchable text
        with plt.rc_context({"svg.fonttype": "none"}):
            fig.savefig(path, format="svg")
    except OSError as e:
        raise ResultsWriteError(f"Failed to write {path}: {e}") from e
    finally:
        plt.close(fig)
