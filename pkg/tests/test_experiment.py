"""Experiment configs, artifact layout, aggregation math, and the CLI."""

import json
import subprocess
import sys

import numpy as np
import pytest

from ksubmax.environments import generate_coverage, save_instance
from ksubmax.errors import ConfigError, NoSeries, UnsupportedFormat
from ksubmax.experiment import (
    AggregateReport,
    ExperimentConfig,
    emit_plot_data,
    load_report,
    run_experiment,
)


def _config(tmp_path, **overrides):
    base = dict(
        env="coverage:n=3,k=2,seed=4",
        policies=["random", "cetc:greedy-matroid"],
        horizon=120,
        constraint="ts:2",
        seeds=[0, 1],
        out=str(tmp_path / "out"),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def _read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


# --- config parsing -------------------------------------------------------------


def test_config_from_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# demo config\n"
        "env = coverage:n=3,k=2,seed=4\n"
        "policies = random, cetc:greedy-matroid\n"
        "horizon = 50\n"
        "constraint = ts:2\n"
        "seeds = 0,1,2\n"
        "reference = brute-force\n"
        "out = results\n"
    )
    config = ExperimentConfig.from_file(path)
    assert config.policies == ["random", "cetc:greedy-matroid"]
    assert config.seeds == [0, 1, 2]
    assert config.horizon == 50
    assert config.base_dir == str(tmp_path)


def test_config_seed_count_expansion():
    config = ExperimentConfig.from_mapping(
        {"env": "coverage:n=2,k=2,seed=1", "policies": "random", "horizon": "10",
         "seeds": "3", "master_seed": "100"}
    )
    assert config.seeds == [100, 101, 102]
    solo = ExperimentConfig.from_mapping(
        {"env": "coverage:n=2,k=2,seed=1", "policies": "random", "horizon": "10"}
    )
    assert solo.seeds == [0]


def test_config_validation_errors():
    good = {"env": "coverage:n=2,k=2,seed=1", "policies": "random", "horizon": "10"}
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({**good, "bogus_key": "1"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({k: v for k, v in good.items() if k != "env"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({**good, "policies": "thompson"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({**good, "horizon": "0"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({**good, "seeds": "0"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({**good, "reference": "oracle"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({**good, "workers": "0"})


def test_config_file_syntax_error(tmp_path):
    path = tmp_path / "broken.cfg"
    path.write_text("env coverage:n=2,k=2,seed=1\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(path)


# --- running --------------------------------------------------------------------


def test_run_experiment_artifacts_and_aggregation(tmp_path):
    config = _config(tmp_path)
    report = run_experiment(config)
    out = tmp_path / "out"
    expected_files = {
        "random_seed0.csv",
        "random_seed1.csv",
        "cetc-greedy-matroid_seed0.csv",
        "cetc-greedy-matroid_seed1.csv",
        "aggregate.csv",
        "summary.json",
    }
    assert expected_files <= {p.name for p in out.iterdir()}

    # independent recomputation of the aggregate from the cell files
    header, rows = _read_csv(out / "aggregate.csv")
    assert header == ["t", "policy", "mean_reward", "std_reward", "mean_cum_regret"]
    cells = {}
    for seed in (0, 1):
        _, cell_rows = _read_csv(out / f"random_seed{seed}.csv")
        cells[seed] = [float(r[2]) for r in cell_rows]
    random_rows = [r for r in rows if r[1] == "random"]
    assert len(random_rows) == config.horizon
    for t, row in enumerate(random_rows):
        mean = np.mean([cells[0][t], cells[1][t]])
        assert float(row[2]) == mean  # byte-for-byte same float path

    # per-cell regret column consistent with the labeled reference
    summary = json.loads((out / "summary.json").read_text())
    ref = summary["reference"]
    assert ref["mode"] == "brute-force"
    _, cell_rows = _read_csv(out / "random_seed0.csv")
    for t, row in enumerate(cell_rows):
        recomputed = ref["alpha"] * ref["value"] * (t + 1) - float(row[3])
        assert abs(float(row[4]) - recomputed) < 1e-9

    assert set(report.series) == {"random", "cetc:greedy-matroid"}
    assert report.series["random"].rewards.shape == (2, config.horizon)


def test_run_experiment_reference_none(tmp_path):
    config = _config(tmp_path, reference="none", policies=["random"], seeds=[0])
    run_experiment(config)
    out = tmp_path / "out"
    header, rows = _read_csv(out / "aggregate.csv")
    assert header == ["t", "policy", "mean_reward", "std_reward"]
    _, cell_rows = _read_csv(out / "random_seed0.csv")
    assert all(r[4] == "" for r in cell_rows)  # regret column left blank
    summary = json.loads((out / "summary.json").read_text())
    assert summary["reference"]["mode"] == "none"
    assert "notice" in summary["reference"]


def test_run_experiment_offline_greedy_reference(tmp_path):
    config = _config(tmp_path, reference="offline-greedy", policies=["random"], seeds=[0])
    run_experiment(config)
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    ref = summary["reference"]
    assert ref["mode"] == "offline-greedy"
    assert ref["alpha"] == 1.0
    assert ref["algorithm"] == "greedy-matroid"


def test_run_experiment_cetc_metadata(tmp_path):
    config = _config(tmp_path, seeds=[0])
    run_experiment(config)
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    meta = summary["cetc"]["cetc:greedy-matroid"]["0"]
    assert meta["query_bound"] == 3 * 2 * 2
    assert meta["m"] >= 1
    assert meta["phase_boundary"] <= config.horizon
    assert len(meta["committed"]) == 3


def test_run_experiment_byte_identical_reruns(tmp_path):
    config_a = _config(tmp_path, out=str(tmp_path / "a"))
    config_b = _config(tmp_path, out=str(tmp_path / "b"))
    run_experiment(config_a)
    run_experiment(config_b)
    for name in (
        "aggregate.csv",
        "random_seed0.csv",
        "random_seed1.csv",
        "cetc-greedy-matroid_seed0.csv",
        "cetc-greedy-matroid_seed1.csv",
    ):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_experiment_workers_match_serial(tmp_path):
    serial = _config(tmp_path, out=str(tmp_path / "serial"), workers=1)
    parallel = _config(tmp_path, out=str(tmp_path / "parallel"), workers=2)
    run_experiment(serial)
    run_experiment(parallel)
    for name in ("aggregate.csv", "random_seed1.csv"):
        assert (tmp_path / "serial" / name).read_bytes() == (
            tmp_path / "parallel" / name
        ).read_bytes()


# --- reports and plots ------------------------------------------------------------


def test_load_report_round_trip(tmp_path):
    config = _config(tmp_path)
    original = run_experiment(config)
    loaded = load_report(tmp_path / "out")
    assert loaded.horizon == original.horizon
    assert loaded.seeds == original.seeds
    for token in original.series:
        assert np.allclose(loaded.series[token].rewards, original.series[token].rewards)
        assert np.allclose(loaded.series[token].regrets, original.series[token].regrets)


def test_load_report_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_report(tmp_path)  # no summary.json
    config = _config(tmp_path)
    run_experiment(config)
    (tmp_path / "out" / "random_seed1.csv").unlink()
    with pytest.raises(ConfigError):
        load_report(tmp_path / "out")


def test_emit_plot_data(tmp_path):
    config = _config(tmp_path, window=10)
    report = run_experiment(config)
    svg_paths = emit_plot_data(report, fmt="svg")
    assert svg_paths[0].name == "curves.svg"
    content = svg_paths[0].read_bytes()
    assert content.startswith(b"<?xml") and len(content) > 1000
    csv_paths = emit_plot_data(report, fmt="csv", out_dir=tmp_path / "elsewhere")
    assert csv_paths[0] == tmp_path / "elsewhere" / "aggregate.csv"
    assert csv_paths[0].read_bytes() == (tmp_path / "out" / "aggregate.csv").read_bytes()


def test_emit_plot_data_errors(tmp_path):
    empty = AggregateReport(10, [0], 5, None, {}, tmp_path)
    with pytest.raises(NoSeries):
        emit_plot_data(empty, fmt="csv")
    config = _config(tmp_path, policies=["random"], seeds=[0], horizon=30)
    report = run_experiment(config)
    with pytest.raises(UnsupportedFormat):
        emit_plot_data(report, fmt="pdf")


# --- CLI -----------------------------------------------------------------------


def _cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "ksubmax.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


def test_cli_check_command(tmp_path):
    instance = generate_coverage(3, 2, np.random.default_rng(4))
    path = tmp_path / "cov.ksub"
    save_instance(instance, path)
    proc = _cli("check", "--instance", str(path))
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["k_submodular"] is True
    assert payload["monotone"] is True
    assert payload["orthant_witness"] is None


def test_cli_offline_command(tmp_path):
    instance = generate_coverage(4, 2, np.random.default_rng(6))
    path = tmp_path / "cov.ksub"
    save_instance(instance, path)
    proc = _cli(
        "offline", "--instance", str(path), "--algorithm", "greedy-matroid",
        "--constraint", "ts:2", "--epsilon", "0.01", "--trials", "2",
    )
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["queries_used"] <= payload["query_bound"]
    assert payload["robustness"]["passed"] is True
    assert payload["alpha"] == 0.5


def test_cli_bandit_command(tmp_path):
    out = tmp_path / "bandit_out"
    proc = _cli(
        "bandit", "--env", "coverage:n=3,k=2,seed=4", "--policy", "cetc",
        "--constraint", "ts:2", "--horizon", "150", "--seeds", "0,1",
        "--out", str(out),
    )
    assert proc.returncode == 0, proc.stderr
    summary = json.loads((out / "summary.json").read_text())
    assert summary["reference"]["mode"] == "brute-force"
    assert set(summary["per_seed"]) == {"0", "1"}
    header, rows = _read_csv(out / "seed_0.csv")
    assert header == ["t", "action", "reward", "cum_reward", "cum_alpha_regret"]
    assert len(rows) == 150


def test_cli_exit_code_validation_error(tmp_path):
    proc = _cli("check", "--instance", str(tmp_path / "nope.ksub"))
    assert proc.returncode == 3  # missing file is an OSError
    bad = tmp_path / "bad.ksub"
    bad.write_text("ksub v9\n")
    proc = _cli("check", "--instance", str(bad))
    assert proc.returncode == 2
    assert "error" in proc.stderr
    proc = _cli("report", "--in", str(tmp_path / "missing"), "--format", "csv")
    assert proc.returncode == 2


def test_cli_exit_code_runtime_error():
    proc = _cli(
        "bandit", "--env", "coverage:n=2,k=2,seed=1", "--policy", "cetc",
        "--horizon", "3", "--seeds", "1", "--out", "/tmp/ksubmax_doomed",
        "--algorithm", "unc-monotone",
    )
    assert proc.returncode == 3  # horizon too small to answer all queries
    assert "runtime error" in proc.stderr


def test_cli_experiment_and_report(tmp_path):
    config_path = tmp_path / "run.cfg"
    out = tmp_path / "results"
    config_path.write_text(
        "env = coverage:n=3,k=2,seed=4\n"
        "policies = random,cetc:greedy-matroid\n"
        "constraint = ts:2\n"
        "horizon = 100\n"
        "seeds = 0,1\n"
        f"out = {out}\n"
    )
    proc = _cli("experiment", "--config", str(config_path))
    assert proc.returncode == 0, proc.stderr
    assert (out / "aggregate.csv").exists()
    proc = _cli("report", "--in", str(out), "--format", "svg")
    assert proc.returncode == 0
    assert (out / "curves.svg").exists()
