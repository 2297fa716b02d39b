from weakcoupling import ConfigError, ExperimentConfig, run
from weakcoupling.cli import COMMANDS, build_parser, main
import json
import numpy as np
import pandas as pd
import pytest


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


class TestExperimentConfig:
    def test_defaults(self):
        config = ExperimentConfig.load()
        assert config.get("potential", "model") == "gaussian"
        assert config.number("symbol", "dimension", int) == 3
        assert config.numbers("run", "e_values") == [1e-2, 1e-3, 1e-4]
        assert config.threads == 1
        assert config.symbol().dimension == 3
        assert config.potential().dimension == 3

    def test_file_and_overrides(self, tmp_path):
        path = tmp_path / "experiment.cfg"
        path.write_text("[symbol]\ndimension = 2\n\n[grid]\nbox_size = 16\npoints = 32\n", encoding="utf-8")
        config = ExperimentConfig.load(path, ["potential.model=ball", "potential.radius=0.5"])
        assert config.grid().points == 32
        V = config.potential()
        assert V.dimension == 2
        assert V.to_dict()["model"] == "ball"

    def test_invalid(self, tmp_path):
        with pytest.raises(ConfigError):
            ExperimentConfig.load(tmp_path / "missing.cfg")
        with pytest.raises(ConfigError):
            ExperimentConfig.load(overrides=["symbol.dimension"])
        with pytest.raises(ConfigError):
            ExperimentConfig.load(overrides=["symbol.tau=2"]).symbol()
        with pytest.raises(ConfigError):
            ExperimentConfig.load(overrides=["run.k=three"]).number("run", "k", int)
        with pytest.raises(ConfigError):
            ExperimentConfig.load().get("missing", "key")

    def test_hash(self):
        base = ExperimentConfig.load()
        assert base.hash == ExperimentConfig.load().hash
        assert len(base.hash) == 64
        assert ExperimentConfig.load(overrides=["run.threads=8"]).hash == base.hash
        assert ExperimentConfig.load(overrides=["run.k=4"]).hash != base.hash
        assert "threads" not in base.text
        assert "threads" in base.to_dict()["run"]


def test_parser():
    args = build_parser().parse_args(["norms", "--override", "run.k=2", "--override", "symbol.tau=0.4"])
    assert args.command == "norms"
    assert args.override == ["run.k=2", "symbol.tau=0.4"]
    assert set(COMMANDS) >= {"norms", "bs-curve", "knapp", "riesz-count"}
    with pytest.raises(SystemExit):
        build_parser().parse_args(["unknown"])


def test_run_norms(tmp_path):
    config = ExperimentConfig.load()
    assert run("norms", config, tmp_path) == 0
    manifest = read_json(tmp_path / "manifest.json")
    assert manifest["status"] == 0
    assert manifest["config_hash"] == config.hash
    assert "norms.json" in manifest["artifacts"]
    assert set(manifest["versions"]) == {"python", "numpy", "scipy", "pandas"}
    assert read_json(tmp_path / "norms.json")["config_hash"] == config.hash
    assert not (tmp_path / "error.json").exists()


def test_fit_without_curve(tmp_path):
    assert run("fit", ExperimentConfig.load(), tmp_path) == 2
    assert read_json(tmp_path / "manifest.json")["status"] == 2
    assert read_json(tmp_path / "error.json")["error"] == "ConfigError"


def test_fit_from_curve(tmp_path):
    lambdas = np.array([0.2, 0.1, 0.05])
    curve = pd.DataFrame({"lambda": lambdas, "e": np.exp(-1 / (0.5 * lambdas)), "index": 0})
    curve.to_csv(tmp_path / "curve.csv", index=False)
    config = ExperimentConfig.load(overrides=[f"fit.curve={tmp_path / 'curve.csv'}", "fit.a=0.5"])
    assert run("fit", config, tmp_path / "out") == 0
    report = read_json(tmp_path / "out" / "fit.json")["reports"][0]
    assert report["fitted_a"] == pytest.approx(0.5, rel=1e-8)
    table = pd.read_csv(tmp_path / "out" / "fit_0.csv")
    assert np.allclose(table["r1"], 0.0, atol=1e-10)
    assert (table["config_hash"] == config.hash).all()


def test_oracle_compare(tmp_path):
    overrides = ["--override", "symbol.dimension=2", "--override", "run.e_values=1e-2"]
    assert main(["oracle-compare", "--out", str(tmp_path), *overrides]) == 0
    assert read_json(tmp_path / "oracle_compare.json")["max_difference"] <= 1e-6
    table = pd.read_csv(tmp_path / "oracle_compare.csv")
    assert len(table) == 3


def test_threads_do_not_change_artifacts(tmp_path):
    overrides = ["--override", "symbol.dimension=2", "--override", "run.e_values=1e-2, 1e-3"]
    assert main(["kernel-bounds", "--out", str(tmp_path / "one"), "--threads", "1", *overrides]) == 0
    assert main(["kernel-bounds", "--out", str(tmp_path / "four"), "--threads", "4", *overrides]) == 0
    for name in ("kernel_difference.csv", "uniform_decay.csv", "log_weights.csv", "kernel_bounds.json"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "four" / name).read_bytes()


def test_invalid_config_exit_status(tmp_path):
    assert main(["kernel-bounds", "--out", str(tmp_path), "--override", "symbol.tau=2"]) == 2
    assert main(["norms", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize(
    "content",
    ["", "lambda,e\n", "lambda,e,index\n0.05,1e-9,0\n0.1,1e-5,0\n", "lambda,e\nsmall,1e-3\n"],
    ids=["empty_file", "header_only", "increasing_lambda", "non_numeric"]
)
def test_fit_bad_curve(tmp_path, content):
    path = tmp_path / "curve.csv"
    path.write_text(content, encoding="utf-8")
    config = ExperimentConfig.load(overrides=[f"fit.curve={path}", "fit.a=0.5"])
    assert run("fit", config, tmp_path / "out") == 2
    assert read_json(tmp_path / "out" / "manifest.json")["status"] == 2
    assert read_json(tmp_path / "out" / "error.json")["error"] == "ConfigError"
