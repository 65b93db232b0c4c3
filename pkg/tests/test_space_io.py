import json

import numpy as np
import pytest

from ghlab.core.complexes import build_flat_torus
from ghlab.core.covers import universal_cover_ball
from ghlab.core.errors import InputError
from ghlab.core.metric_core import DiscretizedLengthSpace, FiniteMetricSpace
from ghlab.utils.generators import grid_space
from ghlab.utils.space_io import dump_cover, dump_space, load_space, load_space_dir, space_to_dict


def test_graph_space_survives_a_file(tmp_path):
    grid = grid_space(4)
    loaded = load_space(dump_space(grid, tmp_path / "grid.json"))
    assert isinstance(loaded, DiscretizedLengthSpace)
    assert loaded.points == grid.points
    assert loaded.basepoint == "g00_00"
    assert loaded.boundary == grid.boundary
    assert np.array_equal(loaded.matrix, grid.matrix)


def test_matrix_space_survives_a_file(tmp_path, equilateral):
    weighted = FiniteMetricSpace("w", equilateral.points, equilateral.matrix, basepoint="a",
                                 measure={"a": 1.0, "b": 2.0, "c": 3.0})
    loaded = load_space(dump_space(weighted, tmp_path / "w.json"))
    assert isinstance(loaded, FiniteMetricSpace)
    assert loaded.measure == {"a": 1.0, "b": 2.0, "c": 3.0}
    assert loaded.distance("a", "c") == 1.0


def test_dump_is_sorted_json(tmp_path, path_abc):
    path = dump_space(path_abc, tmp_path / "abc.json")
    data = json.loads(path.read_text())
    assert list(data) == sorted(data)
    assert data["metric"]["type"] == "graph"
    assert "fibers" not in data
    assert json.loads(json.dumps(space_to_dict(path_abc))) == data


def test_hand_written_files_load(tmp_path):
    matrix = tmp_path / "pair.json"
    matrix.write_text(json.dumps({"id": "x", "points": ["a", "b"],
                                  "metric": {"type": "matrix", "data": [[0, 1], [1, 0]]}}))
    pair = load_space(matrix)
    assert isinstance(pair, FiniteMetricSpace)
    assert pair.distance("a", "b") == 1.0

    graph = tmp_path / "path.json"
    graph.write_text(json.dumps({"id": "p", "points": ["a", "b", "c"], "basepoint": "a", "boundary": ["c"],
                                 "metric": {"type": "graph", "edges": [["a", "b", 1.5], ["b", "c", 2]]}}))
    path = load_space(graph)
    assert isinstance(path, DiscretizedLengthSpace)
    assert path.distance("a", "c") == 3.5
    assert path.boundary == frozenset({"c"})


def test_missing_file(tmp_path):
    with pytest.raises(InputError, match="not found"):
        load_space(tmp_path / "nope.json")


def test_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(InputError, match="not valid JSON"):
        load_space(path)


def test_schema_errors(tmp_path):
    path = tmp_path / "extra.json"
    path.write_text(json.dumps({"id": "x", "points": ["a"], "metric": {"type": "matrix", "data": [[0]]},
                                "colour": "red"}))
    with pytest.raises(InputError, match="schema"):
        load_space(path)
    path.write_text(json.dumps({"id": "x", "points": ["a"], "metric": {"type": "tree", "edges": []}}))
    with pytest.raises(InputError, match="schema"):
        load_space(path)


def test_edges_outside_point_list(tmp_path):
    path = tmp_path / "stray.json"
    path.write_text(json.dumps({"id": "x", "points": ["a", "b"],
                                "metric": {"type": "graph", "edges": [["a", "b", 1.0], ["b", "z", 1.0]]}}))
    with pytest.raises(InputError):
        load_space(path)


def test_load_directory_in_name_order(tmp_path, path_abc, four_cycle):
    dump_space(four_cycle, tmp_path / "b.json")
    dump_space(path_abc, tmp_path / "a.json")
    assert [s.id for s in load_space_dir(tmp_path)] == ["abc", "cycle-4"]
    with pytest.raises(InputError):
        load_space_dir(tmp_path / "empty")


def test_cover_file_carries_fibers(tmp_path):
    torus = build_flat_torus(1.0, 1.0, shape=(10, 10))[0]
    cover = universal_cover_ball(torus, "t000_000", 0.3, 0.6)
    data = json.loads(dump_cover(cover, tmp_path / "cover.json").read_text())
    assert data["basepoint"] == "t000_000~0"
    assert data["fibers"]["t000_000"] == ["t000_000~0"]
    assert load_space(tmp_path / "cover.json").n == len(cover.lifted)
