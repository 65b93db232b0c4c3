import json

import pytest

import ghlab
from ghlab.cli.experiment_config import build_config
from ghlab.cli.main import main
from ghlab.cli.runner import run
from ghlab.core.errors import InputError
from ghlab.utils.report_writer import ReportWriter


def _stdout_report(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


def test_gen_then_invariants(tmp_path, capsys):
    space = tmp_path / "path.json"
    assert main(["gen", "--kind", "path", "--params", '{"n": 6}', "--out", str(space)]) == 0
    assert space.exists()
    assert main(["invariants", "--space", str(space), "--epsilon", "1.5"]) == 0
    report = _stdout_report(capsys)
    assert report["tool"] == "ghlab"
    assert report["version"] == ghlab.__version__
    assert report["command"] == "invariants"
    assert report["passed"] is True
    result = report["results"][0]
    assert (result["cov"], result["cap"], result["cov_half"]) == (2, 3, 6)


def test_report_written_to_output_dir(tmp_path, capsys):
    space = tmp_path / "cycle.json"
    main(["gen", "--kind", "cycle", "--params", '{"n": 8}', "--out", str(space)])
    out = tmp_path / "reports"
    code = main(["invariants", "--space", str(space), "--epsilon", "1", "--what", "cap", "--output", str(out),
                 "--format", "csv"])
    assert code == 0
    assert (out / "invariants.json").exists()
    assert (out / "invariants.csv").exists()
    assert capsys.readouterr().out == ""


def test_bad_generator_params_exit_2(capsys):
    assert main(["gen", "--kind", "path", "--params", '{"m": 3}']) == 2
    assert "InputError" in capsys.readouterr().err
    assert main(["gen", "--kind", "klein-bottle"]) == 2


def test_missing_space_file_exit_2(tmp_path):
    assert main(["invariants", "--space", str(tmp_path / "none.json"), "--epsilon", "1"]) == 2


def test_packing_bound_without_epsilon_exit_2(tmp_path, capsys):
    space = tmp_path / "path.json"
    main(["gen", "--kind", "path", "--params", '{"n": 6}', "--out", str(space)])
    capsys.readouterr()
    assert main(["doubling", "--space", str(space), "--what", "lemma21", "--rho", "4", "--p", "p00"]) == 2
    assert "--epsilon" in capsys.readouterr().err
    assert main(["doubling", "--space", str(space), "--what", "lemma21", "--rho", "4", "--p", "p00",
                 "--epsilon", "1"]) == 0


def test_gh_exact_between_files(tmp_path, capsys):
    for n in (2, 3):
        main(["gen", "--kind", "path", "--params", json.dumps({"n": n}), "--out", str(tmp_path / f"p{n}.json")])
    capsys.readouterr()
    assert main(["gh", "--x", str(tmp_path / "p2.json"), "--y", str(tmp_path / "p3.json")]) == 0
    result = _stdout_report(capsys)["results"][0]
    assert result["exact"] is True
    assert result["value"] == pytest.approx(0.5)


def test_gh_family_verdict(tmp_path, capsys):
    family = tmp_path / "paths"
    for n in (5, 10, 20, 40):
        main(["gen", "--kind", "path", "--params", json.dumps({"n": n}), "--out", str(family / f"path{n:03d}.json")])
    capsys.readouterr()
    assert main(["gh", "family", "--dir", str(family), "--eps", "1"]) == 0
    result = _stdout_report(capsys)["results"][0]
    assert result["verdict"] == "divergent"


def test_cover_of_a_torus_disk(capsys):
    assert main(["cover", "--base", "torus:1,1", "--r", "0.3", "--mesh-h", "0.1"]) == 0
    summary = _stdout_report(capsys)["results"][0]
    assert summary["center"] == "t000_000"
    assert summary["sheets"] == 1


def test_cone_certificate_on_generated_square(capsys):
    code = main(["domain-cert", "--domain", "square", "--what", "cone", "--params", '{"spacing": 0.05}'])
    assert code == 0
    assert _stdout_report(capsys)["results"][0]["passed"] is True


def test_sandwich_experiment_on_bundled_spaces(capsys):
    assert main(["experiment", "--name", "sandwich"]) == 0
    report = _stdout_report(capsys)
    rows = report["results"][0]["rows"]
    assert len(rows) == 10
    assert all(row["passed"] for row in rows)
    assert report["config"]["params"]["eps_grid"] == [0.5]


def test_same_config_gives_identical_files(tmp_path):
    config_file = tmp_path / "sandwich.json"
    config_file.write_text(json.dumps({"name": "sandwich", "params": {"source": "random", "count": 12},
                                       "output": str(tmp_path / "out"), "seed": 7, "plot": False}))
    assert main(["experiment", "--config", str(config_file)]) == 0
    first = (tmp_path / "out" / "sandwich.json").read_bytes()
    assert main(["experiment", "--config", str(config_file)]) == 0
    assert (tmp_path / "out" / "sandwich.json").read_bytes() == first


def test_unknown_config_keys_are_rejected(tmp_path):
    with pytest.raises(InputError):
        build_config({"name": "sandwich", "colour": "red"})
    with pytest.raises(InputError):
        build_config({"name": "sandwich", "params": {"bogus": 1}})
    config_file = tmp_path / "bad.json"
    config_file.write_text(json.dumps({"name": "petersen", "params": {"detour": 2.0}}))
    assert main(["experiment", "--config", str(config_file)]) == 2


def test_config_overrides_skip_none():
    config = build_config({"name": "gh-axioms", "seed": 3}, seed=None, threads=2)
    assert config.seed == 3
    assert config.threads == 2
    assert config.params == {"spaces": 30, "max_points": 5, "two_point_pairs": 50}


def test_torus_experiment_writes_plot(tmp_path):
    config = build_config({"name": "torus-covers", "params": {"radii": [0.3, 0.45], "mesh_h": 0.1, "R": 1.0},
                           "plot": True})
    writer = ReportWriter(str(tmp_path))
    report = run(config, writer)
    assert report["passed"]
    assert report["schema_version"] == "1.0"
    assert (tmp_path / "torus-covers.svg").exists()


def test_package_metadata():
    assert ghlab.__author__ == "ghlab developers"
    assert ghlab.__version__.count(".") == 2
