import csv

import numpy as np
import orjson
import pytest

from services import reporting
from services.trace import RegretTrace


def benchmarked_trace(rewards, benchmark):
    trace = RegretTrace.allocate("mono_fw", 1, len(rewards), len(rewards), {}, 0)
    for t, r in enumerate(rewards):
        trace.record(t, t // 2 + 1, 1, False, np.array([0.5]), r, True)
    trace.benchmark = benchmark
    return trace


def test_slope_of_a_square_root_curve():
    ts = np.arange(1, 10_001)
    assert reporting.fit_loglog_slope(ts, np.sqrt(ts)) == pytest.approx(0.5)


def test_slope_ignores_non_positive_values():
    assert reporting.fit_loglog_slope([1, 10, 100], [0.0, 10.0, 100.0]) == pytest.approx(1.0)


def test_slope_needs_two_positive_points():
    with pytest.raises(ValueError):
        reporting.fit_loglog_slope([1, 2, 4], [-1.0, 0.0, 3.0])
    with pytest.raises(ValueError):
        reporting.fit_loglog_slope([1, 2], [-1.0, -2.0])
    with pytest.raises(ValueError):
        reporting.fit_loglog_slope([5, 5], [1.0, 2.0])


def test_trace_csv(tmp_path):
    trace = benchmarked_trace([0.5, 0.25, 1.0], 2.0)
    path = reporting.write_trace_csv(trace, tmp_path / "trace.csv")
    rows = list(csv.reader(path.open()))
    assert rows[0] == reporting.TRACE_COLUMNS
    assert rows[1] == ["1", "1", "exploit", "0.5", "0.5", "true"]
    assert rows[3][4] == "1.75"


def test_json_is_sorted_and_indented(tmp_path):
    path = reporting.write_json(tmp_path / "doc.json", {"b": 1, "a": np.float64(0.5)})
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert orjson.loads(text) == {"a": 0.5, "b": 1}


def test_plot_has_a_slope_label(tmp_path):
    trace = benchmarked_trace([0.1] * 200, 100.0)
    rows = reporting.emit_plot([("mono", trace)], tmp_path / "regret.svg", tmp_path / "slopes.csv")
    svg = (tmp_path / "regret.svg").read_text()
    assert "slope" in svg
    assert rows[0].horizon == 200
    table = list(csv.DictReader((tmp_path / "slopes.csv").open()))
    assert table[0]["label"] == "mono"


def test_plot_without_slope_table(tmp_path):
    reporting.emit_plot([("a", benchmarked_trace([0.1] * 10, 5.0))], tmp_path / "only.svg")
    assert not (tmp_path / "slopes.csv").exists()


def test_negative_regret_has_no_slope(tmp_path):
    # every round earns B / T, above the (1 - 1/e) share
    trace = benchmarked_trace([10.0 / 50] * 50, 10.0)
    rows = reporting.emit_plot([("ahead", trace)], tmp_path / "ahead.svg", tmp_path / "ahead.csv")
    assert rows[0].slope is None
    assert rows[0].final_regret < 0
    assert "slope n/a" in (tmp_path / "ahead.svg").read_text()
    table = list(csv.DictReader((tmp_path / "ahead.csv").open()))
    assert table[0]["slope"] == ""


def test_plot_needs_traces(tmp_path):
    with pytest.raises(ValueError):
        reporting.emit_plot([], tmp_path / "none.svg")
