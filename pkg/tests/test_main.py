import json
import logging
import os

import pandas as pd
import portalocker
import pytest

from drfpca import main as cli
from drfpca.main import IgnoreSolverNoise, build_parser, experiment_config, main

FAST = ["--iters", "200", "--restarts", "3", "--workers", "1"]


@pytest.fixture
def toy_csv(tmp_path):
    path = str(tmp_path / "toy.csv")
    assert main(["toy", "--input", path, "--out", str(tmp_path / "toy_out"), "--seed", "0"]) == 0
    return path


def _read(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def run(tmp_path, name, *argv):
    out = str(tmp_path / name)
    code = main(list(argv) + ["--out", out])
    return code, out


class TestArguments:
    def test_sweep_defaults_to_no_split(self):
        cfg = experiment_config(build_parser().parse_args(["sweep", "--input", "x.csv", "--attr", "g"]))
        assert cfg.split is None
        assert cfg.repeats == 5

    def test_split_flag_overrides(self):
        cfg = experiment_config(build_parser().parse_args(["sweep", "--split", "0.5"]))
        assert cfg.split == 0.5

    def test_no_split(self):
        assert experiment_config(build_parser().parse_args(["fit", "--no-split"])).split is None

    def test_radius_defaults(self):
        cfg = experiment_config(build_parser().parse_args(["radius"]))
        assert cfg.lam == 0.1
        assert cfg.alpha_grid[0] == 0.0 and cfg.alpha_grid[-1] == 10.0 and len(cfg.alpha_grid) == 21

    def test_grids_and_eps0(self):
        args = build_parser().parse_args(["radius", "--alpha-grid", "0,0.5", "--eps0", "scaled", "--n0", "50"])
        cfg = experiment_config(args)
        assert cfg.alpha_grid == (0.0, 0.5)
        assert cfg.eps0 is None
        assert cfg.toy_sizes == (50, 100)

    def test_config_file_supplies_solver_values(self, tmp_path):
        path = tmp_path / "settings.json"
        path.write_text(json.dumps({"solver": {"iterations": 77}}), encoding="utf-8")
        cfg = experiment_config(build_parser().parse_args(["fit", "--config", str(path)]))
        assert cfg.iterations == 77
        cfg = experiment_config(build_parser().parse_args(["fit", "--config", str(path), "--iters", "5"]))
        assert cfg.iterations == 5

    def test_bad_grid_is_a_usage_error(self):
        with pytest.raises(SystemExit) as info:
            build_parser().parse_args(["sweep", "--lambda-grid", "a,b"])
        assert info.value.code == 2

    def test_save_config_writes_effective_settings(self, tmp_path):
        target = tmp_path / "effective.json"
        code = main(["toy", "--input", str(tmp_path / "toy.csv"), "--out", str(tmp_path / "out"), "--seed", "7",
                     "--k", "1", "--log-level", "warning", "--save-config", str(target)])
        assert code == 0
        saved = _read(target)
        assert saved["solver"]["seed"] == 7
        assert saved["experiment"]["k"] == 1
        assert saved["output"]["directory"] == str(tmp_path / "out")
        assert saved["log"]["level"] == "WARNING"
        cfg = experiment_config(build_parser().parse_args(["fit", "--config", str(target)]))
        assert cfg.seed == 7 and cfg.k == 1

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["--version"])
        assert info.value.code == 0
        assert "drfpca" in capsys.readouterr().out


def test_solver_trace_filter():
    quiet, loud = IgnoreSolverNoise(False), IgnoreSolverNoise(True)
    trace = logging.LogRecord("drfpca.optimizer.subgradient", logging.DEBUG, __file__, 1, "iter restart=0 t=1", None,
                              None)
    other = logging.LogRecord("drfpca.optimizer.subgradient", logging.INFO, __file__, 1, "Solved", None, None)
    assert not quiet.filter(trace)
    assert quiet.filter(other)
    assert loud.filter(trace)


class TestCommands:
    def test_toy_csv(self, toy_csv):
        frame = pd.read_csv(toy_csv)
        assert list(frame.columns) == ["group", "x1", "x2"]
        assert len(frame) == 300

    def test_missing_attribute_column(self, tmp_path, toy_csv, caplog):
        code, _ = run(tmp_path, "out", "fit", "--input", toy_csv, "--attr", "sex", "--k", "1")
        assert code == 2
        assert "'sex'" in caplog.text

    def test_missing_input(self, tmp_path):
        code, _ = run(tmp_path, "out", "pca", "--attr", "group")
        assert code == 2

    def test_pca_is_deterministic(self, tmp_path, toy_csv):
        args = ["pca", "--input", toy_csv, "--attr", "group", "--k", "1", "--seed", "3"]
        assert run(tmp_path, "a", *args)[0] == 0
        assert run(tmp_path, "b", *args)[0] == 0
        for name in ("pca_model.json", "pca_report.json"):
            with open(tmp_path / "a" / name, "rb") as fa, open(tmp_path / "b" / name, "rb") as fb:
                assert fa.read() == fb.read()
        model = _read(tmp_path / "a" / "pca_model.json")
        assert model["provenance"] == "nominal-pca"
        assert not os.path.exists(tmp_path / "a" / ".drfpca.lock")

    def test_zero_penalty_fit_matches_pca(self, tmp_path, toy_csv):
        base = ["--input", toy_csv, "--attr", "group", "--k", "1"]
        assert run(tmp_path, "pca", "pca", *base)[0] == 0
        assert run(tmp_path, "fit", "fit", *base, "--lambda", "0", "--alpha", "0", *FAST)[0] == 0
        pca = _read(tmp_path / "pca" / "pca_report.json")
        fit = _read(tmp_path / "fit" / "fit_report.json")
        assert fit["train"]["are"] == pytest.approx(pca["train"]["are"], abs=1e-6)
        assert fit["test"]["are"] == pytest.approx(pca["test"]["are"], abs=1e-6)
        assert fit["conditions"]["valid"] is True
        assert fit["solver"]["lipschitz"] > 0
        assert fit["solver"]["convergence_proxy"] >= 0
        model = _read(tmp_path / "fit" / "fit_model.json")
        assert model["provenance"] == "robust-fair"
        assert len(model["U"]) == 2 and len(model["U"][0]) == 1

    def test_large_penalty_is_fairer(self, tmp_path, toy_csv):
        base = ["fit", "--input", toy_csv, "--attr", "group", "--k", "1", *FAST, "--restarts", "5"]
        assert run(tmp_path, "plain", *base, "--lambda", "0", "--alpha", "0.1")[0] == 0
        assert run(tmp_path, "fair", *base, "--lambda", "2.5", "--alpha", "0.1")[0] == 0
        plain = _read(tmp_path / "plain" / "fit_report.json")
        fair = _read(tmp_path / "fair" / "fit_report.json")
        assert fair["train"]["abdiff"] < plain["train"]["abdiff"]

    def test_condition_failure_exit_code(self, tmp_path, toy_csv, caplog):
        code, _ = run(tmp_path, "out", "fit", "--input", toy_csv, "--attr", "group", "--k", "1",
                      "--lambda", "0.5", "--alpha", "100", *FAST)
        assert code == 3
        assert "group 1" in caplog.text

    def test_base64_model(self, tmp_path, toy_csv):
        code, out = run(tmp_path, "out", "pca", "--input", toy_csv, "--attr", "group", "--k", "1",
                        "--encoding", "base64")
        assert code == 0
        assert _read(os.path.join(out, "pca_model.json"))["V"]["dtype"] == "<f8"

    def test_sweep(self, tmp_path, toy_csv):
        code, out = run(tmp_path, "sweep", "sweep", "--input", toy_csv, "--attr", "group", "--k", "1",
                        "--lambda-grid", "0,0.5,2.5", "--alpha-grid", "0", "--repeats", "1", *FAST)
        assert code == 0
        frame = pd.read_csv(os.path.join(out, "sweep.csv"))
        assert list(frame.columns) == ["lambda", "alpha", "are", "abdiff", "objective", "seconds", "status"]
        assert frame["status"].tolist() == ["ok", "ok", "ok"]
        assert frame["lambda"].tolist() == [0.0, 0.5, 2.5]
        abdiff = frame["abdiff"].tolist()
        assert abdiff[1] < 0.5 * abdiff[0] and abdiff[2] < 0.5 * abdiff[0]
        assert os.path.exists(os.path.join(out, "sweep.svg"))

        assert run(tmp_path, "pca", "pca", "--input", toy_csv, "--attr", "group", "--k", "1", "--no-split")[0] == 0
        pca = _read(tmp_path / "pca" / "pca_report.json")
        assert frame["are"][0] == pytest.approx(pca["train"]["are"], abs=1e-6)
        assert frame["abdiff"][0] == pytest.approx(pca["train"]["abdiff"], abs=1e-6)

    def test_sweep_records_failed_points(self, tmp_path, toy_csv):
        code, out = run(tmp_path, "sweep", "sweep", "--input", toy_csv, "--attr", "group", "--k", "1",
                        "--lambda-grid", "0,0.5", "--alpha-grid", "100", "--repeats", "1", "--iters", "10",
                        "--restarts", "1")
        assert code == 0
        frame = pd.read_csv(os.path.join(out, "sweep.csv"))
        assert frame["status"].tolist() == ["ok", "condition_failed"]

    def test_cv_single_point(self, tmp_path, toy_csv):
        code, out = run(tmp_path, "cv", "cv", "--input", toy_csv, "--attr", "group", "--k", "1",
                        "--lambda-grid", "0.5", "--alpha-grid", "0.1", "--folds", "3", *FAST)
        assert code == 0
        report = _read(os.path.join(out, "cv_report.json"))
        assert report["selected"]["lambda"] == 0.5 and report["selected"]["alpha"] == 0.1
        assert set(report) >= {"train", "test", "objective"}
        frame = pd.read_csv(os.path.join(out, "cv.csv"))
        assert list(frame.columns) == ["repeat", "lambda", "alpha", "mean_score", "status", "fold0", "fold1", "fold2"]
        assert frame["repeat"].tolist() == [0]
        assert frame["mean_score"][0] == pytest.approx(frame[["fold0", "fold1", "fold2"]].iloc[0].mean())

    def test_cv_all_points_fail(self, tmp_path, toy_csv):
        code, _ = run(tmp_path, "cv", "cv", "--input", toy_csv, "--attr", "group", "--k", "1",
                      "--lambda-grid", "0.5", "--alpha-grid", "100", "--iters", "5", "--restarts", "1")
        assert code == 3

    def test_cv_repeats_resplit_and_summarise(self, tmp_path, toy_csv):
        code, out = run(tmp_path, "cv", "cv", "--input", toy_csv, "--attr", "group", "--k", "1",
                        "--lambda-grid", "0,0.5", "--alpha-grid", "0.1", "--folds", "3", "--repeats", "2", *FAST)
        assert code == 0
        report = _read(os.path.join(out, "cv_report.json"))
        assert report["repeats"] == 2
        assert [run["seed"] for run in report["runs"]] == [0, 1]
        test_are = [run["test"]["are"] for run in report["runs"]]
        assert report["summary"]["test"]["are"]["mean"] == pytest.approx(sum(test_are) / 2)
        assert report["summary"]["test"]["are"]["std"] == pytest.approx(abs(test_are[0] - test_are[1]) / 2)
        assert report["test"] == report["runs"][0]["test"]
        frame = pd.read_csv(os.path.join(out, "cv.csv"))
        assert frame["repeat"].tolist() == [0, 0, 1, 1]
        assert frame["lambda"].tolist() == [0.0, 0.5, 0.0, 0.5]

    @pytest.mark.parametrize("command", ["cv", "sweep"])
    def test_k_not_below_dimension_is_invalid(self, tmp_path, toy_csv, caplog, command):
        code, out = run(tmp_path, command, command, "--input", toy_csv, "--attr", "group", "--k", "2",
                        "--lambda-grid", "0,0.5", "--alpha-grid", "0.1", "--repeats", "1", *FAST)
        assert code == 2
        assert "d-1 = 1" in caplog.text
        assert not os.path.exists(os.path.join(out, f"{command}.csv"))

    def test_invalid_utf8_input(self, tmp_path, caplog):
        path = tmp_path / "bad.csv"
        path.write_bytes(b"sex,x1,x2\nM,1,2\n\xff\xfe,3,4\nF,5,7\n")
        code, _ = run(tmp_path, "out", "pca", "--input", str(path), "--attr", "sex", "--k", "1")
        assert code == 2
        assert "line 3" in caplog.text

    def test_fairtest(self, tmp_path, toy_csv):
        code, out = run(tmp_path, "ft", "fairtest", "--input", toy_csv, "--attr", "group", "--k", "1")
        assert code == 0
        result = _read(os.path.join(out, "fairtest.json"))
        assert result["exists"] is False
        assert result["pairs"][0]["rank"] == 2

    def test_radius(self, tmp_path):
        code, out = run(tmp_path, "radius", "radius", "--alpha-grid", "0,1", "--repeats", "2", "--iters", "20",
                        "--restarts", "1", "--workers", "1")
        assert code == 0
        frame = pd.read_csv(os.path.join(out, "radius.csv"))
        assert list(frame.columns) == ["alpha", "mean_score", "std_score"]
        assert frame["alpha"].tolist() == [0.0, 1.0]
        assert os.path.exists(os.path.join(out, "radius.svg"))

    def test_components(self, tmp_path):
        code, out = run(tmp_path, "comp", "components", "--repeats", "1", "--iters", "20", "--restarts", "1",
                        "--workers", "1")
        assert code == 0
        frame = pd.read_csv(os.path.join(out, "components.csv"))
        assert list(frame.columns) == ["method", "k", "group", "mean_error"]
        assert sorted(frame["method"].unique()) == ["nominal-pca", "robust-fair"]
        assert len(frame) == 4

    def test_locked_output_directory(self, tmp_path, toy_csv):
        out = tmp_path / "busy"
        out.mkdir()
        with open(out / cli.LOCK_NAME, "w") as handle:
            portalocker.lock(handle, portalocker.LOCK_EX | portalocker.LOCK_NB)
            code = main(["pca", "--input", toy_csv, "--attr", "group", "--k", "1", "--out", str(out)])
            portalocker.unlock(handle)
        assert code == 1
        assert os.path.exists(out / cli.LOCK_NAME)
