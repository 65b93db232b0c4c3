import json
import math

import numpy as np
import pandas as pd

from ghlab.utils.parallel import parallel_map
from ghlab.utils.report_writer import ReportWriter, dumps, to_jsonable


def test_non_finite_floats_become_strings():
    data = to_jsonable({"a": math.inf, "b": -np.inf, "c": float("nan"), "d": np.float64(0.5)})
    assert data == {"a": "inf", "b": "-inf", "c": "nan", "d": 0.5}


def test_numpy_values_and_sets():
    data = to_jsonable({1: np.int64(3), "flag": np.bool_(True), "ids": {"b", "a"}, "arr": np.arange(2)})
    assert data == {"1": 3, "flag": True, "ids": ["a", "b"], "arr": [0, 1]}


def test_dumps_is_sorted_and_newline_terminated():
    text = dumps({"b": 1, "a": [math.inf]})
    assert text.endswith("\n")
    assert list(json.loads(text)) == ["a", "b"]


def test_json_and_csv_files(tmp_path):
    writer = ReportWriter(str(tmp_path / "out"))
    path = writer.write_json({"passed": True}, "run")
    assert json.loads(path.read_text()) == {"passed": True}
    csv = writer.write_csv([{"z": 1, "a": 0.1 + 0.2}, {"z": 2, "a": 0.5}], "rows")
    frame = pd.read_csv(csv)
    assert list(frame.columns) == ["a", "z"]
    assert frame["a"][0] == 0.3
    assert writer.written == [path, csv]


def test_plots_are_byte_identical(tmp_path):
    rows = [{"k": k, "lifts": k * 2, "family": f} for k in (3, 4, 5) for f in ("u", "n")]
    first = ReportWriter(str(tmp_path / "one")).write_plot(rows, "k", "lifts", "p", group="family")
    second = ReportWriter(str(tmp_path / "two")).write_plot(rows, "k", "lifts", "p", group="family")
    assert first.read_bytes() == second.read_bytes()


def test_plot_skips_non_numeric_columns(tmp_path):
    writer = ReportWriter(str(tmp_path))
    assert writer.write_plot([{"k": "x", "v": 1}], "k", "v") is None
    assert writer.written == []


def test_parallel_map_keeps_order():
    items = list(range(40))
    assert parallel_map(lambda x: x * x, items, threads=4) == [x * x for x in items]
    assert parallel_map(str, [], threads=4) == []
