"""Experiment orchestration: policy grids over seeds, CSV/JSON artifacts.

A run is fully determined by its config: every cell (policy, seed) gets its
own seeded generator, cells are aggregated in config order, and floats are
written with round-tripping repr, so two runs of the same config produce
byte-identical CSVs.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bandit import (
    DEFAULT_ACTION_CAP,
    Trajectory,
    compute_alpha_regret,
    enumerate_maximal_actions,
    run_cetc,
    run_naive_ucb,
    run_random,
)
from .constraints import IndividualBudgets, MatroidOracle, parse_constraint
from .core import Dims, FunctionOracle, label_string
from .environments import build_environment
from .errors import ConfigError, NoSeries, UnsupportedFormat
from .solvers import SolverSpec, brute_force_opt

REFERENCE_MODES = ("brute-force", "offline-greedy", "none")


@dataclass
class ExperimentConfig:
    env: str
    policies: list[str]
    horizon: int
    constraint: str = "unconstrained"
    seeds: list[int] = field(default_factory=lambda: [0])
    reference: str = "brute-force"
    algorithm: str | None = None
    monotone: bool = True
    out: str = "experiment_out"
    window: int = 100
    workers: int = 1
    action_cap: int = DEFAULT_ACTION_CAP
    base_dir: str = "."

    def validate(self) -> None:
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")
        if not self.policies:
            raise ConfigError("need at least one policy")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.reference not in REFERENCE_MODES:
            raise ConfigError(f"reference must be one of {REFERENCE_MODES}")
        for token in self.policies:
            kind = token.split(":", 1)[0]
            if kind not in ("cetc", "ucb", "random"):
                raise ConfigError(f"unknown policy {token!r}")

    @classmethod
    def from_mapping(cls, raw: dict, base_dir: str = ".") -> "ExperimentConfig":
        known = {
            "env",
            "constraint",
            "policies",
            "horizon",
            "seeds",
            "master_seed",
            "reference",
            "algorithm",
            "monotone",
            "out",
            "window",
            "workers",
            "action_cap",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            env = raw["env"]
            policies = [p.strip() for p in raw["policies"].split(",") if p.strip()]
            horizon = int(raw["horizon"])
        except KeyError as exc:
            raise ConfigError(f"missing required config key {exc.args[0]!r}") from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        seeds_text = raw.get("seeds", "1")
        master = int(raw.get("master_seed", "0"))
        if "," in seeds_text:
            seeds = [int(t) for t in seeds_text.split(",") if t.strip()]
        else:
            count_or_seed = seeds_text.strip()
            # a bare integer means "this many seeds from the master seed"
            seeds = [master + i for i in range(int(count_or_seed))]
            if not seeds:
                raise ConfigError("seed count must be positive")
        config = cls(
            env=env,
            policies=policies,
            horizon=horizon,
            constraint=raw.get("constraint", "unconstrained"),
            seeds=seeds,
            reference=raw.get("reference", "brute-force"),
            algorithm=raw.get("algorithm"),
            monotone=raw.get("monotone", "true").lower() != "false",
            out=raw.get("out", "experiment_out"),
            window=int(raw.get("window", "100")),
            workers=int(raw.get("workers", "1")),
            action_cap=int(raw.get("action_cap", str(DEFAULT_ACTION_CAP))),
            base_dir=base_dir,
        )
        config.validate()
        return config

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        raw = {}
        for line_no, raw_line in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw_line.split("#", 1)[0].strip()
            if not line:
                continue
            key, eq, value = line.partition("=")
            if not eq:
                raise ConfigError(f"line {line_no}: expected key = value, got {raw_line!r}")
            raw[key.strip()] = value.strip()
        return cls.from_mapping(raw, base_dir=str(Path(path).parent))

    def echo(self) -> dict:
        return {
            "env": self.env,
            "constraint": self.constraint,
            "policies": self.policies,
            "horizon": self.horizon,
            "seeds": self.seeds,
            "reference": self.reference,
            "algorithm": self.algorithm,
            "monotone": self.monotone,
            "out": self.out,
            "window": self.window,
            "workers": self.workers,
        }


@dataclass
class PolicySeries:
    rewards: np.ndarray  # (seeds, horizon)
    regrets: np.ndarray | None = None


@dataclass
class AggregateReport:
    horizon: int
    seeds: list[int]
    window: int
    reference: dict | None
    series: dict[str, PolicySeries]
    out_dir: Path | None = None


def _default_algorithm(config: ExperimentConfig, constraint) -> str:
    for token in config.policies:
        kind, _, algo = token.partition(":")
        if kind == "cetc" and algo:
            return algo
    if config.algorithm:
        return config.algorithm
    if isinstance(constraint, MatroidOracle):
        return "greedy-matroid"
    if isinstance(constraint, IndividualBudgets):
        return "greedy-is"
    return "unc-monotone" if config.monotone else "unc-nonmonotone"


def _compute_reference(config: ExperimentConfig, env, constraint) -> dict | None:
    """Reference for the regret curve, labeled with how it was computed.

    brute-force: alpha * exact optimum of the expected values.
    offline-greedy: the configured algorithm's value on the expected
    values, used with alpha = 1 (a stand-in for the alpha-optimal value).
    """
    if config.reference == "none":
        return None
    algo = _default_algorithm(config, constraint)
    spec = SolverSpec(algo, monotone=config.monotone)
    dims: Dims = env.dims
    mean_oracle = FunctionOracle(env.expected_value)
    if config.reference == "brute-force":
        _, opt_value = brute_force_opt(mean_oracle, dims, constraint)
        return {
            "mode": "brute-force",
            "alpha": float(spec.alpha(dims)),
            "value": opt_value,
            "algorithm": algo,
        }
    out = spec.solve(mean_oracle, dims, constraint, np.random.default_rng(0))
    return {
        "mode": "offline-greedy",
        "alpha": 1.0,
        "value": env.expected_value(out.solution),
        "algorithm": algo,
    }


def _run_cell(
    env_spec: str,
    constraint_spec: str,
    policy_token: str,
    horizon: int,
    seed: int,
    policy_index: int,
    base_dir: str,
    action_cap: int,
    monotone: bool,
    default_algorithm: str,
) -> tuple[np.ndarray, list[str], dict]:
    """One (policy, seed) episode, self-contained so it can run in a worker."""
    env = build_environment(env_spec, base_dir)
    dims = env.dims
    constraint = parse_constraint(constraint_spec, dims.n, dims.k, base_dir)
    rng = np.random.default_rng([seed, policy_index])
    kind, _, algo = policy_token.partition(":")
    meta: dict = {}
    if kind == "cetc":
        spec = SolverSpec(algo or default_algorithm, monotone=monotone)
        trajectory: Trajectory = run_cetc(spec, env, horizon, rng, constraint)
        meta = {
            "m": trajectory.schedule.m,
            "query_bound": trajectory.schedule.query_bound,
            "phase_boundary": trajectory.phase_boundary,
            "committed": label_string(trajectory.committed),
        }
    else:
        actions = enumerate_maximal_actions(dims, constraint, action_cap)
        if kind == "ucb":
            trajectory = run_naive_ucb(env, actions, horizon, rng, cap=action_cap)
        else:
            trajectory = run_random(env, actions, horizon, rng)
    action_strings = [label_string(labels) for labels in trajectory.actions]
    return trajectory.rewards, action_strings, meta


def _write_cell_csv(
    path: Path,
    rewards: np.ndarray,
    actions: list[str],
    regret: np.ndarray | None,
) -> None:
    lines = ["t,action,reward,cum_reward,cum_alpha_regret"]
    cum = 0.0
    for t in range(len(rewards)):
        cum += float(rewards[t])
        reg = repr(float(regret[t])) if regret is not None else ""
        lines.append(f"{t + 1},{actions[t]},{float(rewards[t])!r},{cum!r},{reg}")
    path.write_text("\n".join(lines) + "\n")


def _cell_label(token: str) -> str:
    return token.replace(":", "-")


def run_experiment(config: ExperimentConfig) -> AggregateReport:
    """Run every (policy, seed) cell, write per-cell CSVs, an aggregate CSV,
    and a summary JSON under config.out; returns the in-memory report."""
    config.validate()
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    env = build_environment(config.env, config.base_dir)
    dims = env.dims
    constraint = parse_constraint(config.constraint, dims.n, dims.k, config.base_dir)
    reference = _compute_reference(config, env, constraint)
    default_algo = _default_algorithm(config, constraint)

    jobs = []
    for policy_index, token in enumerate(config.policies):
        for seed in config.seeds:
            jobs.append((token, seed, policy_index))
    args = [
        (
            config.env,
            config.constraint,
            token,
            config.horizon,
            seed,
            policy_index,
            config.base_dir,
            config.action_cap,
            config.monotone,
            default_algo,
        )
        for token, seed, policy_index in jobs
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_run_cell, *zip(*args)))
    else:
        results = [_run_cell(*a) for a in args]

    series: dict[str, PolicySeries] = {}
    cetc_meta: dict[str, dict] = {}
    for (token, seed, _), (rewards, actions, meta) in zip(jobs, results):
        label = _cell_label(token)
        regret = None
        if reference is not None:
            regret = compute_alpha_regret(rewards, reference["alpha"], reference["value"])
        _write_cell_csv(out_dir / f"{label}_seed{seed}.csv", rewards, actions, regret)
        bucket = series.setdefault(
            token, PolicySeries(np.empty((0, config.horizon)), None)
        )
        bucket.rewards = np.vstack([bucket.rewards, rewards[None, :]])
        if regret is not None:
            stacked = regret[None, :]
            bucket.regrets = (
                stacked if bucket.regrets is None else np.vstack([bucket.regrets, stacked])
            )
        if meta:
            cetc_meta.setdefault(token, {})[str(seed)] = meta

    report = AggregateReport(
        config.horizon, list(config.seeds), config.window, reference, series, out_dir
    )
    _write_aggregate_csv(out_dir / "aggregate.csv", report)

    summary = {
        "config": config.echo(),
        "reference": reference
        if reference is not None
        else {"mode": "none", "notice": "regret columns omitted (no reference)"},
        "policies": {},
        "cetc": cetc_meta,
    }
    for token, bucket in series.items():
        entry = {
            "mean_final_cum_reward": float(bucket.rewards.sum(axis=1).mean()),
            "mean_reward_last_window": float(
                bucket.rewards[:, -config.window :].mean()
            ),
        }
        if bucket.regrets is not None:
            entry["mean_final_regret"] = float(bucket.regrets[:, -1].mean())
        summary["policies"][token] = entry
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return report


def _write_aggregate_csv(path: Path, report: AggregateReport) -> None:
    with_regret = report.reference is not None and all(
        s.regrets is not None for s in report.series.values()
    )
    header = "t,policy,mean_reward,std_reward"
    if with_regret:
        header += ",mean_cum_regret"
    lines = [header]
    for token, bucket in report.series.items():
        mean = bucket.rewards.mean(axis=0)
        if bucket.rewards.shape[0] > 1:
            std = bucket.rewards.std(axis=0, ddof=1)
        else:
            std = np.zeros(report.horizon)
        regret_mean = bucket.regrets.mean(axis=0) if with_regret else None
        for t in range(report.horizon):
            row = f"{t + 1},{token},{float(mean[t])!r},{float(std[t])!r}"
            if with_regret:
                row += f",{float(regret_mean[t])!r}"
            lines.append(row)
    path.write_text("\n".join(lines) + "\n")


def load_report(out_dir: str | Path) -> AggregateReport:
    """Rebuild an AggregateReport from a finished run's directory."""
    out_dir = Path(out_dir)
    summary_path = out_dir / "summary.json"
    if not summary_path.exists():
        raise ConfigError(f"no summary.json under {out_dir}")
    summary = json.loads(summary_path.read_text())
    config = summary["config"]
    horizon = int(config["horizon"])
    seeds = [int(s) for s in config["seeds"]]
    reference = summary.get("reference")
    if reference and reference.get("mode") == "none":
        reference = None
    series: dict[str, PolicySeries] = {}
    for token in config["policies"]:
        label = _cell_label(token)
        rewards_rows, regret_rows = [], []
        for seed in seeds:
            cell = out_dir / f"{label}_seed{seed}.csv"
            if not cell.exists():
                raise ConfigError(f"missing cell file {cell}")
            rewards, regrets = [], []
            for line in cell.read_text().splitlines()[1:]:
                parts = line.split(",")
                rewards.append(float(parts[2]))
                if reference is not None and parts[4]:
                    regrets.append(float(parts[4]))
            rewards_rows.append(rewards)
            if regrets:
                regret_rows.append(regrets)
        series[token] = PolicySeries(
            np.asarray(rewards_rows),
            np.asarray(regret_rows) if regret_rows else None,
        )
    return AggregateReport(
        horizon, seeds, int(config["window"]), reference, series, out_dir
    )


def _smooth(values: np.ndarray, window: int) -> np.ndarray:
    if window <= 1:
        return values
    kernel = np.ones(window) / window
    return np.convolve(values, kernel, mode="valid")


def emit_plot_data(
    report: AggregateReport, fmt: str = "csv", out_dir: str | Path | None = None
) -> list[Path]:
    """Render the aggregate as csv or svg; svg smooths rewards with the
    report's moving-average window (raw data stays in the CSVs)."""
    if not report.series:
        raise NoSeries("report has no data series")
    out = Path(out_dir) if out_dir is not None else (report.out_dir or Path("."))
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        path = out / "aggregate.csv"
        _write_aggregate_csv(path, report)
        return [path]
    if fmt != "svg":
        raise UnsupportedFormat(f"unknown format {fmt!r}")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with_regret = report.reference is not None and all(
        s.regrets is not None for s in report.series.values()
    )
    n_panels = 2 if with_regret else 1
    fig, axes = plt.subplots(1, n_panels, figsize=(6 * n_panels, 4.5), squeeze=False)
    ax_reward = axes[0][0]
    for token, bucket in report.series.items():
        mean = bucket.rewards.mean(axis=0)
        smoothed = _smooth(mean, report.window)
        xs = np.arange(len(smoothed)) + report.window
        ax_reward.plot(xs, smoothed, label=token)
        if bucket.rewards.shape[0] > 1:
            std = _smooth(bucket.rewards.std(axis=0, ddof=1), report.window)
            ax_reward.fill_between(xs, smoothed - std, smoothed + std, alpha=0.2)
    ax_reward.set_xlabel("step")
    ax_reward.set_ylabel(f"reward (window {report.window})")
    ax_reward.legend()
    if with_regret:
        ax_regret = axes[0][1]
        for token, bucket in report.series.items():
            ax_regret.plot(
                np.arange(1, report.horizon + 1), bucket.regrets.mean(axis=0), label=token
            )
        ref = report.reference
        ax_regret.set_xlabel("step")
        ax_regret.set_ylabel(f"cumulative regret ({ref['mode']} reference)")
        ax_regret.legend()
    fig.tight_layout()
    path = out / "curves.svg"
    fig.savefig(path, format="svg")
    plt.close(fig)
    return [path]
