"""Command-line entry point.

Subcommands: check (property suites on an instance), offline (run one
solver), bandit (online episodes), experiment (config-driven grid), report
(re-render plot data from a finished run).  Exit codes: 0 success, 2
validation failure, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bandit import compute_alpha_regret, enumerate_maximal_actions, run_cetc, run_naive_ucb, run_random
from .constraints import parse_constraint
from .core import (
    BoundedNoisyOracle,
    FunctionOracle,
    check_k_submodular,
    check_monotone,
    label_string,
)
from .environments import build_environment, exact_oracle, load_instance
from .errors import ConfigError, FormatError, KsubError
from .experiment import ExperimentConfig, emit_plot_data, load_report, run_experiment
from .solvers import SolverSpec, brute_force_opt, verify_robustness

_VALIDATION_ERRORS = (ConfigError, FormatError, ValueError)


def _add_check(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("check", help="exhaustive property checks on an instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--limit", type=int, default=10**6)
    p.set_defaults(handler=_cmd_check)


def _cmd_check(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    dims = instance.dims
    report = check_k_submodular(exact_oracle(instance), dims, limit=args.limit)
    monotone = check_monotone(exact_oracle(instance), dims, limit=args.limit)
    payload = {
        "n": dims.n,
        "k": dims.k,
        "kind": type(instance).__name__,
        "orthant_ok": report.orthant_ok,
        "pairwise_ok": report.pairwise_ok,
        "k_submodular": report.ok,
        "monotone": monotone,
        "orthant_witness": report.orthant_witness,
        "pairwise_witness": report.pairwise_witness,
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _add_offline(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("offline", help="run one offline solver on an instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--algorithm", required=True,
                   choices=("unc-nonmonotone", "unc-monotone", "greedy-is", "greedy-matroid"))
    p.add_argument("--constraint", default="unconstrained")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--nonmonotone-guarantee", action="store_true",
                   help="use the non-monotone guarantee row for the matroid greedy")
    p.set_defaults(handler=_cmd_offline)


def _cmd_offline(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    dims = instance.dims
    constraint = parse_constraint(args.constraint, dims.n, dims.k,
                                  Path(args.instance).parent)
    spec = SolverSpec(args.algorithm, monotone=not args.nonmonotone_guarantee)
    truth = exact_oracle(instance)
    noisy = BoundedNoisyOracle(exact_oracle(instance), args.epsilon, seed=args.seed)
    out = spec.solve(noisy, dims, constraint, np.random.default_rng(args.seed))
    payload = {
        "solution": label_string(out.solution.labels),
        "labels": list(out.solution.labels),
        "value": truth.evaluate(out.solution),
        "queries_used": out.queries_used,
        "query_bound": spec.query_bound(dims, constraint),
        "alpha": float(spec.alpha(dims)),
        "delta": spec.delta(dims, constraint),
        "epsilon": args.epsilon,
    }
    if args.epsilon > 0:
        rob = verify_robustness(
            spec, exact_oracle(instance), dims, constraint,
            epsilon=args.epsilon, trials=args.trials, seed=args.seed,
        )
        payload["robustness"] = {
            "lhs": rob.lhs,
            "rhs": rob.rhs,
            "passed": rob.passed,
            "trials": rob.trials,
            "opt_value": rob.opt_value,
        }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _add_bandit(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("bandit", help="run online policies against an environment")
    p.add_argument("--env", required=True)
    p.add_argument("--policy", required=True, choices=("cetc", "ucb", "random"))
    p.add_argument("--algorithm", default=None)
    p.add_argument("--constraint", default="unconstrained")
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--seeds", default="0", help="comma list, or a count")
    p.add_argument("--out", required=True)
    p.add_argument("--reference", default="auto",
                   choices=("auto", "brute-force", "offline-greedy"))
    p.add_argument("--nonmonotone-guarantee", action="store_true")
    p.set_defaults(handler=_cmd_bandit)


def _parse_seeds(text: str) -> list[int]:
    if "," in text:
        return [int(t) for t in text.split(",") if t.strip()]
    count = int(text)
    if count < 1:
        raise ConfigError("seed count must be positive")
    return list(range(count))


def _cmd_bandit(args: argparse.Namespace) -> int:
    env = build_environment(args.env)
    dims = env.dims
    constraint = parse_constraint(args.constraint, dims.n, dims.k)
    if args.algorithm:
        algorithm = args.algorithm
    elif constraint is None:
        algorithm = "unc-monotone"
    else:
        algorithm = "greedy-is" if not hasattr(constraint, "is_independent") else "greedy-matroid"
    spec = SolverSpec(algorithm, monotone=not args.nonmonotone_guarantee)
    seeds = _parse_seeds(args.seeds)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    mode = args.reference
    if mode == "auto":
        mode = "brute-force" if dims.lattice_size <= 10**5 else "offline-greedy"
    mean_oracle = FunctionOracle(env.expected_value)
    if mode == "brute-force":
        _, ref_value = brute_force_opt(mean_oracle, dims, constraint)
        alpha = float(spec.alpha(dims))
    else:
        ref_out = spec.solve(mean_oracle, dims, constraint, np.random.default_rng(0))
        ref_value = env.expected_value(ref_out.solution)
        alpha = 1.0

    summary: dict = {
        "config": {
            "env": args.env,
            "policy": args.policy,
            "algorithm": algorithm,
            "constraint": args.constraint,
            "horizon": args.horizon,
            "seeds": seeds,
        },
        "reference": {"mode": mode, "alpha": alpha, "value": ref_value},
        "per_seed": {},
    }
    actions = None
    if args.policy in ("ucb", "random"):
        actions = enumerate_maximal_actions(dims, constraint)
    for seed in seeds:
        rng = np.random.default_rng(seed)
        if args.policy == "cetc":
            trajectory = run_cetc(spec, env, args.horizon, rng, constraint)
        elif args.policy == "ucb":
            trajectory = run_naive_ucb(env, actions, args.horizon, rng)
        else:
            trajectory = run_random(env, actions, args.horizon, rng)
        regret = compute_alpha_regret(trajectory, alpha, ref_value)
        lines = ["t,action,reward,cum_reward,cum_alpha_regret"]
        cum = 0.0
        for t in range(args.horizon):
            cum += float(trajectory.rewards[t])
            lines.append(
                f"{t + 1},{label_string(trajectory.actions[t])},"
                f"{float(trajectory.rewards[t])!r},{cum!r},{float(regret[t])!r}"
            )
        (out_dir / f"seed_{seed}.csv").write_text("\n".join(lines) + "\n")
        entry = {"final_regret": float(regret[-1]), "final_cum_reward": cum}
        if trajectory.schedule is not None:
            entry["m"] = trajectory.schedule.m
            entry["query_bound"] = trajectory.schedule.query_bound
            entry["phase_boundary"] = trajectory.phase_boundary
        summary["per_seed"][str(seed)] = entry
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps({"out": str(out_dir), "seeds": len(seeds)}, sort_keys=True))
    return 0


def _add_experiment(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("experiment", help="run a config-driven policy grid")
    p.add_argument("--config", required=True)
    p.set_defaults(handler=_cmd_experiment)


def _cmd_experiment(args: argparse.Namespace) -> int:
    config = ExperimentConfig.from_file(args.config)
    report = run_experiment(config)
    print(json.dumps({"out": str(report.out_dir), "policies": list(report.series)},
                     sort_keys=True))
    return 0


def _add_report(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("report", help="re-render plot data from a finished run")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--format", default="svg", choices=("csv", "svg"))
    p.set_defaults(handler=_cmd_report)


def _cmd_report(args: argparse.Namespace) -> int:
    report = load_report(args.in_dir)
    paths = emit_plot_data(report, fmt=args.format)
    print(json.dumps({"written": [str(p) for p in paths]}, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ksubmax",
        description="k-submodular maximization: offline solvers and bandit policies",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_check(sub)
    _add_offline(sub)
    _add_bandit(sub)
    _add_experiment(sub)
    _add_report(sub)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KsubError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
