"""Explore-then-commit bandit engine for combinatorial assignment actions.

The engine answers an offline solver's oracle queries with empirical means
of m pulls each, then commits to the solver's output for the rest of the
horizon.  The solver is unaware it is online: it sees an ordinary value
oracle.  Naive UCB1 over enumerated maximal actions and a uniform-random
policy serve as baselines.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Sequence

import numpy as np

from .constraints import IndividualBudgets, MatroidOracle, matroid_rank
from .core import Assignment, Dims, ValueOracle
from .errors import ActionSpaceTooLarge, ConfigError, HorizonExhausted
from .solvers import SolverOutput, SolverSpec

DEFAULT_ACTION_CAP = 10**6


class BanditEnvironment:
    """Stochastic environment: pull() returns a reward in [0, 1].

    expected_value() exposes the mean reward of an action and exists for
    instrumentation (regret references, diagnostics); policies never call
    it.
    """

    dims: Dims

    def pull(self, x: Assignment, rng: np.random.Generator) -> float:
        raise NotImplementedError

    def expected_value(self, x: Assignment) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class ExplorationSchedule:
    """Pull-count plan for the exploration phase.

    m is the number of pulls answering each oracle query, chosen so that
    Hoeffding confidence radii balance exploration cost against commitment
    error over horizon T.
    """

    m: int
    query_bound: int
    delta: float
    horizon: int
    capped: bool = False

    @classmethod
    def plan(cls, delta: float, query_bound: int, horizon: int) -> "ExplorationSchedule":
        if delta <= 0 or query_bound < 1 or horizon < 1:
            raise ConfigError(
                f"need delta > 0, N >= 1, T >= 1; got {delta}, {query_bound}, {horizon}"
            )
        minimum = max(query_bound, 2.0 * math.sqrt(2.0) * query_bound / delta)
        if horizon < minimum:
            warnings.warn(
                f"horizon {horizon} below recommended minimum {minimum:.1f}; "
                "capping exploration pulls",
                stacklevel=2,
            )
        raw = (
            delta ** (2.0 / 3.0)
            * horizon ** (2.0 / 3.0)
            * math.log(horizon) ** (1.0 / 3.0)
            / (2.0 * query_bound ** (2.0 / 3.0))
        )
        m = max(1, math.ceil(raw))
        capped = False
        if m * query_bound > horizon:
            m = max(1, horizon // query_bound)
            capped = True
        return cls(m, query_bound, float(delta), horizon, capped)


def confidence_radius(horizon: int, m: int) -> float:
    """Hoeffding radius sqrt(ln T / (2m)) for [0,1] rewards."""
    return math.sqrt(math.log(horizon) / (2.0 * m))


@dataclass
class QueryRecord:
    """One answered oracle query: which pulls produced which mean."""

    labels: tuple[int, ...]
    start: int
    count: int
    mean: float


@dataclass
class Trajectory:
    """Per-step log of one bandit episode (length == horizon)."""

    actions: list[tuple[int, ...]]
    rewards: np.ndarray
    phase_boundary: int
    queries: list[QueryRecord] = field(default_factory=list)
    committed: tuple[int, ...] | None = None
    schedule: ExplorationSchedule | None = None

    def __len__(self) -> int:
        return len(self.actions)

    def cumulative_reward(self) -> np.ndarray:
        return np.cumsum(self.rewards)

    def mean_reward(self) -> float:
        return float(self.rewards.mean())


class _ExplorationOracle(ValueOracle):
    """Answers each query with the empirical mean of m fresh pulls."""

    def __init__(
        self,
        env: BanditEnvironment,
        rng: np.random.Generator,
        m: int,
        horizon: int,
        actions: list[tuple[int, ...]],
        rewards: list[float],
        queries: list[QueryRecord],
    ) -> None:
        super().__init__()
        self.env = env
        self.rng = rng
        self.m = m
        self.horizon = horizon
        self.actions = actions
        self.rewards = rewards
        self.queries = queries

    def _value(self, x: Assignment) -> float:
        if len(self.actions) + self.m > self.horizon:
            raise HorizonExhausted(
                f"query needs {self.m} pulls but only "
                f"{self.horizon - len(self.actions)} steps remain"
            )
        start = len(self.actions)
        batch = np.empty(self.m)
        for j in range(self.m):
            batch[j] = self.env.pull(x, self.rng)
        self.actions.extend([x.labels] * self.m)
        self.rewards.extend(batch.tolist())
        mean = float(batch.mean())
        self.queries.append(QueryRecord(x.labels, start, self.m, mean))
        return mean


def run_cetc(
    spec: SolverSpec,
    env: BanditEnvironment,
    horizon: int,
    rng: np.random.Generator,
    constraint=None,
    schedule: ExplorationSchedule | None = None,
) -> Trajectory:
    """Explore-then-commit: solver queries cost m pulls each, then the
    solver's solution is played for the remaining steps.

    Repeated queries of the same assignment draw fresh batches; a
    randomized solver runs once per episode.
    """
    dims = env.dims
    if schedule is None:
        schedule = ExplorationSchedule.plan(
            spec.delta(dims, constraint), spec.query_bound(dims, constraint), horizon
        )
    solver_rng, env_rng = rng.spawn(2)
    actions: list[tuple[int, ...]] = []
    rewards: list[float] = []
    queries: list[QueryRecord] = []
    oracle = _ExplorationOracle(env, env_rng, schedule.m, horizon, actions, rewards, queries)
    output: SolverOutput = spec.solve(oracle, dims, constraint, solver_rng)
    boundary = len(actions)
    committed = output.solution
    for _ in range(horizon - boundary):
        actions.append(committed.labels)
        rewards.append(env.pull(committed, env_rng))
    return Trajectory(
        actions,
        np.asarray(rewards),
        boundary,
        queries,
        committed.labels,
        schedule,
    )


def enumerate_maximal_actions(
    dims: Dims, constraint=None, cap: int = DEFAULT_ACTION_CAP
) -> list[Assignment]:
    """All feasible assignments that exhaust the constraint.

    Unconstrained: every full assignment.  Individual budgets: supports
    with exactly B_i elements of each type.  Matroid: every basis, with
    types free over it.  Deterministic lexicographic order.
    """
    n, k = dims.n, dims.k
    if constraint is None:
        if k**n > cap:
            raise ActionSpaceTooLarge(f"{k}^{n} actions exceed cap {cap}")
        return [Assignment(dims, labels) for labels in product(range(1, k + 1), repeat=n)]
    if isinstance(constraint, IndividualBudgets):
        budgets = constraint.per_type
        if len(budgets) != k:
            raise ConfigError(f"{len(budgets)} budgets for k={k}")
        if constraint.total > n:
            raise ConfigError(f"budgets sum to {constraint.total} > n={n}")
        count = 1
        remaining = n
        for b in budgets:
            count *= math.comb(remaining, b)
            remaining -= b
        if count > cap:
            raise ActionSpaceTooLarge(f"{count} actions exceed cap {cap}")
        out: list[Assignment] = []

        def fill(labels: list[int], pool: list[int], type_index: int) -> None:
            if type_index > k:
                out.append(Assignment(dims, tuple(labels)))
                return
            b = budgets[type_index - 1]
            for chosen in combinations(pool, b):
                for e in chosen:
                    labels[e] = type_index
                rest = [e for e in pool if e not in chosen]
                fill(labels, rest, type_index + 1)
                for e in chosen:
                    labels[e] = 0

        fill([0] * n, list(range(n)), 1)
        out.sort(key=lambda a: a.labels)
        return out
    if isinstance(constraint, MatroidOracle):
        rank = matroid_rank(constraint)
        if math.comb(n, rank) > cap or math.comb(n, rank) * k**rank > cap:
            raise ActionSpaceTooLarge(f"too many candidate bases for cap {cap}")
        bases = [
            s for s in combinations(range(n), rank) if constraint.is_independent(s)
        ]
        out = []
        for basis in bases:
            for types in product(range(1, k + 1), repeat=rank):
                labels = [0] * n
                for e, t in zip(basis, types):
                    labels[e] = t
                out.append(Assignment(dims, tuple(labels)))
        out.sort(key=lambda a: a.labels)
        if len(out) > cap:
            raise ActionSpaceTooLarge(f"{len(out)} actions exceed cap {cap}")
        return out
    raise ConfigError(f"unsupported constraint {constraint!r}")


def run_naive_ucb(
    env: BanditEnvironment,
    actions: Sequence[Assignment],
    horizon: int,
    rng: np.random.Generator,
    cap: int = DEFAULT_ACTION_CAP,
) -> Trajectory:
    """UCB1 treating each action as an independent arm.

    Plays every arm once, then maximizes mean + sqrt(2 ln t / pulls); ties
    go to the lowest action index.  With more arms than steps this never
    leaves the initialization sweep.
    """
    if not actions:
        raise ActionSpaceTooLarge("empty action list")
    if len(actions) > cap:
        raise ActionSpaceTooLarge(f"{len(actions)} actions exceed cap {cap}")
    n_arms = len(actions)
    counts = np.zeros(n_arms, dtype=np.int64)
    means = np.zeros(n_arms)
    chosen_actions: list[tuple[int, ...]] = []
    rewards = np.empty(horizon)
    for t in range(1, horizon + 1):
        if t <= n_arms:
            arm = t - 1
        else:
            bonus = np.sqrt(2.0 * math.log(t) / counts)
            arm = int(np.argmax(means + bonus))
        x = actions[arm]
        r = env.pull(x, rng)
        counts[arm] += 1
        means[arm] += (r - means[arm]) / counts[arm]
        chosen_actions.append(x.labels)
        rewards[t - 1] = r
    return Trajectory(chosen_actions, rewards, 0)


def run_random(
    env: BanditEnvironment,
    actions: Sequence[Assignment],
    horizon: int,
    rng: np.random.Generator,
) -> Trajectory:
    """Uniform random choice among the given actions at every step."""
    if not actions:
        raise ActionSpaceTooLarge("empty action list")
    chosen_actions: list[tuple[int, ...]] = []
    rewards = np.empty(horizon)
    for t in range(horizon):
        x = actions[int(rng.integers(len(actions)))]
        chosen_actions.append(x.labels)
        rewards[t] = env.pull(x, rng)
    return Trajectory(chosen_actions, rewards, 0)


def compute_alpha_regret(
    trajectory: Trajectory | np.ndarray, alpha: float, reference_value: float
) -> np.ndarray:
    """Cumulative regret curve R(t) = alpha * t * reference - sum of rewards.

    reference_value is the exact optimum when it is enumerable, or an
    offline-greedy stand-in for the alpha-optimal value on larger
    instances; reports should say which one produced the curve.
    """
    rewards = trajectory.rewards if isinstance(trajectory, Trajectory) else np.asarray(trajectory)
    steps = np.arange(1, len(rewards) + 1)
    return alpha * reference_value * steps - np.cumsum(rewards)
