#!/usr/bin/env python3
"""End-to-end tests of the command line entry point"""

import csv
import io
import json
import math

import numpy as np
import pytest

from datasets import load_csv, write_csv
from errors import InputError
from fksum_cli import _int_list, _penalty, main


def rows(text):
    return list(csv.reader(io.StringIO(text)))


@pytest.fixture
def sample_csv(tmp_path):
    path = str(tmp_path / "sample.csv")
    assert main(["simulate", "--kind", "sine_kink", "--n", "300", "--seed", "2", "--out", path]) == 0
    return path


def test_kernel_constants(capsys):
    assert main(["kernel"]) == 0
    out = rows(capsys.readouterr().out)
    assert out[0] == ["order", "normalizer", "variance", "roughness"]
    assert [float(v) for v in out[1]] == pytest.approx([1.0, 1.0, 4.0, 0.15625])


def test_kernel_curve_table(capsys):
    assert main(["kernel", "--smooth", "2", "--curve", "--grid", "11", "--format", "table"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].split() == ["u", "density"]
    assert len(lines) == 12


def test_kernel_curve_action(capsys):
    assert main(["kernel", "curve", "--beta", "0.25,0.25", "--n", "21"]) == 0
    out = rows(capsys.readouterr().out)
    assert out[0] == ["u", "density"]
    assert len(out) == 22


def test_sum_matches_naive(sample_csv, capsys):
    assert main(["sum", "--data", sample_csv, "--x", "x", "--h", "0.5", "--mode", "both"]) == 0
    fast = np.array(rows(capsys.readouterr().out)[1:], dtype=float)
    assert main(["sum", "--data", sample_csv, "--x", "x", "--h", "0.5", "--mode", "both", "--naive"]) == 0
    naive = np.array(rows(capsys.readouterr().out)[1:], dtype=float)
    assert fast.shape == (300, 3)
    np.testing.assert_allclose(fast, naive, rtol=1e-9, atol=1e-9)


def test_density_on_grid_and_eval_points(sample_csv, tmp_path, capsys):
    assert main(["density", "--data", sample_csv, "--x", "x", "--grid", "64"]) == 0
    captured = capsys.readouterr()
    assert len(rows(captured.out)) == 65
    assert "Bandwidth" in captured.err

    points = str(tmp_path / "points.csv")
    write_csv(points, ["t"], [2.0, 5.0])
    assert main(["density", "--data", sample_csv, "--x", "x", "--h", "0.4", "--eval", points, "--eval-col", "t"]) == 0
    out = rows(capsys.readouterr().out)
    assert [float(r[0]) for r in out[1:]] == [2.0, 5.0]
    assert all(float(r[1]) > 0 for r in out[1:])


@pytest.mark.parametrize("method", ["nw", "loclin"])
def test_regress_with_cv_bandwidth(sample_csv, tmp_path, method):
    out = str(tmp_path / "fit.csv")
    code = main(["regress", "--data", sample_csv, "--x", "x", "--y", "y", "--bw", "cv",
                 "--bracket", "0.05", "3", "--method", method, "--grid", "50", "--out", out])
    assert code == 0
    fit = load_csv(out)
    assert fit.columns == ("x", "fitted")
    assert fit.n_rows == 50
    assert np.all(np.isfinite(fit.data))


def test_density_by_column_number(sample_csv, capsys):
    assert main(["density", "--data", sample_csv, "--col", "1", "--h", "0.4", "--grid", "32"]) == 0
    by_number = rows(capsys.readouterr().out)
    assert main(["density", "--data", sample_csv, "--x", "x", "--h", "0.4", "--grid", "32"]) == 0
    assert rows(capsys.readouterr().out) == by_number


@pytest.mark.parametrize("rule, expected", [
    (["--silverman", "2"], "silverman"),
    (["--cv", "--bracket", "0.05", "3"], "cv"),
])
def test_density_bandwidth_rules(sample_csv, capsys, rule, expected):
    assert main(["density", "--data", sample_csv, "--col", "1", "--grid", "16", *rule]) == 0
    err = capsys.readouterr().err
    h = float(err.split("h = ")[1].split()[0])
    assert main(["density", "--data", sample_csv, "--x", "x", "--grid", "16", "--bw", expected,
                 *(["--hmult", "2"] if expected == "silverman" else ["--bracket", "0.05", "3"])]) == 0
    assert float(capsys.readouterr().err.split("h = ")[1].split()[0]) == h


def test_bandwidth_rules_are_exclusive(sample_csv):
    with pytest.raises(SystemExit):
        main(["density", "--data", sample_csv, "--col", "1", "--h", "0.3", "--cv"])


def test_regress_by_column_number(sample_csv, capsys):
    assert main(["regress", "--data", sample_csv, "--x", "1", "--y", "2", "--cv",
                 "--bracket", "0.05", "3", "--method", "loclin", "--grid", "20"]) == 0
    by_number = rows(capsys.readouterr().out)
    assert main(["regress", "--data", sample_csv, "--x", "x", "--y", "y", "--bw", "cv",
                 "--bracket", "0.05", "3", "--method", "loclin", "--grid", "20"]) == 0
    assert rows(capsys.readouterr().out) == by_number
    assert len(by_number) == 21


def test_ica_writes_model_and_sources(tmp_path):
    data = str(tmp_path / "mix.csv")
    assert main(["simulate", "--kind", "ica", "--n", "300", "--d", "3", "--out", data]) == 0
    model, sources = str(tmp_path / "model.json"), str(tmp_path / "sources.csv")
    assert main(["ica", "--data", data, "--ncomp", "2", "--it", "2", "--out", f"{model},{sources}"]) == 0
    with open(model) as f:
        assert json.load(f)["model"] == "ica"
    assert load_csv(sources).columns == ("s1", "s2")


def test_mdh_reports_split(tmp_path, capsys):
    data = str(tmp_path / "clusters.csv")
    assert main(["simulate", "--kind", "clusters", "--n", "400", "--d", "2", "--seed", "3", "--out", data]) == 0
    capsys.readouterr()
    assert main(["mdh", "--data", data, "--labels", "label", "--alphamax", "0.5"]) == 0
    captured = capsys.readouterr()
    payload = json.loads(captured.out)
    assert payload["model"] == "mdh"
    assert len(payload["v"]) == 2
    assert "split error" in captured.err


def test_ppr_fit_then_predict(tmp_path, capsys):
    data = str(tmp_path / "ppr.csv")
    model = str(tmp_path / "ppr.json")
    assert main(["simulate", "--kind", "ppr", "--n", "200", "--d", "3", "--out", data]) == 0
    assert main(["ppr", "fit", "--data", data, "--y", "y", "--nterms", "1", "--out", model]) == 0
    capsys.readouterr()
    assert main(["ppr", "predict", "--model", model, "--data", data, "--columns", "x1,x2,x3"]) == 0
    out = rows(capsys.readouterr().out)
    assert out[0] == ["prediction"]
    assert len(out) == 201


def test_ppr_predict_missing_model_is_an_input_error(sample_csv, tmp_path, capsys):
    model = str(tmp_path / "absent.json")
    assert main(["ppr", "predict", "--model", model, "--data", sample_csv]) == 2
    assert f"model file not found: {model}" in capsys.readouterr().err


@pytest.mark.parametrize("text", [
    "{not json",
    '{"model": "ppr"}',
    '{"model": "mdh", "v": []}',
    "[1, 2]",
])
def test_ppr_predict_invalid_model_is_an_input_error(sample_csv, tmp_path, capsys, text):
    model = tmp_path / "broken.json"
    model.write_text(text)
    assert main(["ppr", "predict", "--model", str(model), "--data", sample_csv]) == 2
    assert str(model) in capsys.readouterr().err


def test_bench_scaling_writes_csv(tmp_path, capsys):
    out = str(tmp_path / "bench.csv")
    assert main(["bench", "scaling", "--sizes", "128,256", "--reps", "1", "--naive-cap", "128", "--out", out]) == 0
    assert "fast" in capsys.readouterr().out
    report = load_csv(out, missing=math.nan)
    assert report.n_rows == 2
    assert "naive_doubling_ratio" in report.columns


def test_missing_file_is_an_input_error(tmp_path, capsys):
    assert main(["density", "--data", str(tmp_path / "absent.csv"), "--x", "x", "--h", "1"]) == 2
    assert "file not found" in capsys.readouterr().err


def test_unknown_column_is_an_input_error(sample_csv, capsys):
    assert main(["density", "--data", sample_csv, "--x", "z", "--h", "1"]) == 2
    assert "unknown column 'z'" in capsys.readouterr().err


def test_bad_penalty_is_an_input_error(sample_csv):
    assert main(["mdh", "--data", sample_csv, "--C", "lots"]) == 2


def test_rank_deficient_ica_is_a_numeric_error(tmp_path):
    data = str(tmp_path / "flat.csv")
    x = np.linspace(0.0, 1.0, 50)
    write_csv(data, ["a", "b"], np.column_stack([x, 2.0 * x]))
    assert main(["ica", "--data", data, "--ncomp", "2"]) == 3


def test_argument_helpers():
    assert _int_list("1-3,7") == [1, 2, 3, 7]
    assert _penalty("auto") is None
    assert _penalty("2.5") == 2.5
    with pytest.raises(InputError):
        _int_list("one")
    with pytest.raises(InputError):
        _int_list(",")
