import json
import math

import pytest

from jitstar.bench.harness import RunRecord
from jitstar.bench.results import (
    CSV_COLUMNS,
    ResultsWriteError,
    cost_at,
    emit_plot,
    lower_median,
    read_csv,
    records_from_csv,
    records_to_csv,
    summarize,
    summarize_by_planner,
    write_csv,
    write_results,
)


def success(planner: str, seed: int, t: float, c_init: float, c_final: float) -> RunRecord:
    return RunRecord("np", 4, planner, seed, t, c_init, c_final, True, [(t, c_init), (2 * t, c_final)])


def failure(planner: str, seed: int) -> RunRecord:
    return RunRecord("np", 4, planner, seed)


class TestMedians:
    def test_lower_median(self):
        assert lower_median([3.0, 1.0, 2.0]) == 2.0
        assert lower_median([4.0, 1.0, 3.0, 2.0]) == 2.0
        assert lower_median([]) is None

    def test_cost_at(self):
        trace = [(0.1, 2.0), (0.5, 1.5)]
        assert math.isnan(cost_at(trace, 0.05))
        assert cost_at(trace, 0.1) == 2.0
        assert cost_at(trace, 0.7) == 1.5


class TestSummarize:
    def test_all_failures(self):
        summary = summarize([failure("jit", s) for s in range(4)], max_time=1.0)
        assert summary.success_rate == 0.0
        assert summary.t_init_median is None and summary.c_final_median is None
        assert summary.success_curve == [0.0] * 100
        assert all(math.isnan(v) for v in summary.quantile_bands["q50"])

    def test_single_success(self):
        summary = summarize([success("jit", 0, 0.2, 1.5, 1.2), failure("jit", 1)], max_time=1.0)
        assert summary.success_rate == 0.5
        assert (summary.t_init_median, summary.c_init_median, summary.c_final_median) == (0.2, 1.5, 1.2)
        assert summary.success_curve[-1] == 0.5
        assert summary.quantile_bands["q50"][-1] == 1.2

    def test_grid(self):
        summary = summarize([success("jit", 0, 0.2, 1.5, 1.2)], max_time=2.0)
        assert len(summary.time_grid) == 100
        assert summary.time_grid[-1] == pytest.approx(2.0)

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            summarize([])

    def test_groups_by_planner(self):
        records = [success("jit", 0, 0.1, 1.0, 0.9), failure("ablation", 0), success("jit", 1, 0.3, 1.1, 1.0)]
        summaries = summarize_by_planner(records, max_time=1.0)
        assert list(summaries) == ["jit", "ablation"]
        assert summaries["jit"].trials == 2 and summaries["ablation"].success_rate == 0.0


class TestCsv:
    def test_header_only(self):
        assert records_to_csv([]) == ",".join(CSV_COLUMNS) + "\n"
        assert records_from_csv(records_to_csv([])) == []

    def test_booleans_and_blanks(self):
        lines = records_to_csv([failure("jit", 3)]).splitlines()
        assert lines[1] == "np,4,jit,3,,,,false"

    def test_round_trip_is_byte_identical(self, tmp_path):
        records = [success("jit", 0, 0.123456789, 1.5, 1.25), failure("ablation", 0)]
        path = tmp_path / "records.csv"
        write_csv(records, path)
        first = path.read_text()
        write_csv(read_csv(path), path)
        assert path.read_text() == first

    def test_bad_header(self):
        with pytest.raises(ResultsWriteError):
            records_from_csv("a,b\n1,2\n")

    def test_unwritable_location(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        with pytest.raises(ResultsWriteError):
            write_csv([], blocker / "records.csv")


class TestOutputs:
    def test_write_results(self, tmp_path):
        records = [success("jit", 0, 0.1, 1.0, 0.9), failure("ablation", 0)]
        summaries = summarize_by_planner(records, max_time=1.0)
        csv_path, json_path = write_results(records, summaries, tmp_path / "out")
        payload = json.loads(json_path.read_text())
        assert len(payload["records"]) == 2
        assert payload["summaries"]["ablation"]["quantile_bands"]["q50"][0] is None
        assert csv_path.read_text().startswith("scenario,")

    def test_plot_has_both_series(self, tmp_path):
        records = [success("jit", 0, 0.1, 1.0, 0.9), success("ablation", 0, 0.3, 1.4, 1.2)]
        path = tmp_path / "plot.svg"
        emit_plot(summarize_by_planner(records, max_time=1.0), path, title="NP-R4")
        svg = path.read_text()
        assert svg.lstrip().startswith("<?xml") and "<svg" in svg
        assert "jit" in svg and "ablation" in svg
