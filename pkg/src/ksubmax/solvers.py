"""Offline approximation solvers and their robustness guarantees.

Each solver consumes a (possibly noisy) value oracle and returns a solution
with its query trace.  SolverSpec packages the guarantee triple: the
approximation ratio alpha, the noise-amplification slope delta, and the
query budget N, all as functions of the instance dimensions and constraint.
A solver with those parameters turns a surrogate oracle within epsilon of
the true function into a solution whose expected true value is at least
alpha * OPT - delta * epsilon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .constraints import (
    IndividualBudgets,
    MatroidOracle,
    available_elements,
    matroid_rank,
)
from .core import (
    DEFAULT_EXHAUSTION_LIMIT,
    Assignment,
    BoundedNoisyOracle,
    Dims,
    ValueOracle,
    check_k_submodular_values,
    lattice_points,
    lattice_values,
)
from .errors import (
    BudgetInfeasible,
    ConfigError,
    InstanceTooLarge,
    InvalidProbability,
    NotKSubmodular,
)

ALGORITHMS = ("unc-nonmonotone", "unc-monotone", "greedy-is", "greedy-matroid")

_PROB_TOL = 1e-12


@dataclass
class SolverOutput:
    solution: Assignment
    queries_used: int
    trace: list[tuple[Assignment, float]] = field(default_factory=list)


class _Recorder:
    """Wraps an oracle to log (assignment, value) per fresh query."""

    def __init__(self, oracle: ValueOracle) -> None:
        self.oracle = oracle
        self.trace: list[tuple[Assignment, float]] = []

    def evaluate(self, x: Assignment) -> float:
        v = self.oracle.evaluate(x)
        self.trace.append((x, v))
        return v


def _check_distribution(p: np.ndarray) -> None:
    if np.any(p < 0) or abs(float(p.sum()) - 1.0) > _PROB_TOL:
        raise InvalidProbability(f"not a probability vector: {p.tolist()}")


def nonmonotone_type_probabilities(sorted_gains: Sequence[float]) -> np.ndarray:
    """Sampling distribution over types ordered by descending gain.

    With i+ = number of strictly positive gains: a single-or-no positive
    gain is deterministic on the top type; two positive gains split
    proportionally; three or more use the halving profile (1/2, 1/4, ...,
    with the last positive position getting the same mass as the one before
    it so the vector sums to 1).
    """
    k = len(sorted_gains)
    i_plus = sum(1 for g in sorted_gains if g > 0)
    p = np.zeros(k)
    if i_plus <= 1:
        p[0] = 1.0
    elif i_plus == 2:
        total = sorted_gains[0] + sorted_gains[1]
        p[0] = sorted_gains[0] / total
        p[1] = sorted_gains[1] / total
    else:
        for pos in range(1, i_plus):
            p[pos - 1] = 0.5**pos
        p[i_plus - 1] = 0.5 ** (i_plus - 1)
    return p


def monotone_type_probabilities(
    gains: Sequence[float], power: int, literal: bool = False
) -> np.ndarray:
    """Sampling distribution proportional to clamped gains raised to `power`.

    Negative gains (possible only under oracle noise) contribute zero
    weight.  literal=True skips the clamp in the numerator, reproducing the
    power rule exactly as classically stated; under noise that can yield
    weights that are not a distribution, which raises InvalidProbability.
    """
    g = np.asarray(gains, dtype=float)
    clamped = np.maximum(g, 0.0)
    beta = float(np.power(clamped, power).sum())
    p = np.zeros(len(g))
    if beta == 0.0:
        p[0] = 1.0
        return p
    if literal:
        p = np.power(g, power) / beta
        _check_distribution(p)
        return p
    return np.power(clamped, power) / beta


def solve_unconstrained_nonmonotone(
    oracle: ValueOracle, dims: Dims, rng: np.random.Generator
) -> SolverOutput:
    """Randomized full-assignment pass for non-monotone objectives.

    Visits elements in index order, queries the k extension values against
    the cached current value (the empty assignment counts as 0), and samples
    the type from the descending-gain distribution.  Uses exactly n*k
    queries and achieves expected value >= OPT/2 - 20*n*epsilon under
    epsilon-bounded oracle error.
    """
    rec = _Recorder(oracle)
    labels = [0] * dims.n
    base = 0.0
    for e in range(dims.n):
        values = []
        for i in range(1, dims.k + 1):
            labels[e] = i
            values.append(rec.evaluate(Assignment(dims, tuple(labels))))
        labels[e] = 0
        gains = [v - base for v in values]
        order = sorted(range(dims.k), key=lambda t: (-gains[t], t))
        p = nonmonotone_type_probabilities([gains[t] for t in order])
        _check_distribution(p)
        chosen = order[int(rng.choice(dims.k, p=p))]
        labels[e] = chosen + 1
        base = values[chosen]
    return SolverOutput(Assignment(dims, tuple(labels)), len(rec.trace), rec.trace)


def solve_unconstrained_monotone(
    oracle: ValueOracle,
    dims: Dims,
    rng: np.random.Generator,
    literal_probabilities: bool = False,
) -> SolverOutput:
    """Randomized full-assignment pass for monotone objectives.

    Samples each element's type proportionally to its gain raised to the
    power k-1 (clamping negative noisy gains to zero weight); when every
    gain is non-positive the first type is chosen deterministically.  Uses
    exactly n*k queries; the guarantee ratio is k/(2k-1).
    """
    rec = _Recorder(oracle)
    labels = [0] * dims.n
    base = 0.0
    power = dims.k - 1
    for e in range(dims.n):
        values = []
        for i in range(1, dims.k + 1):
            labels[e] = i
            values.append(rec.evaluate(Assignment(dims, tuple(labels))))
        labels[e] = 0
        gains = [v - base for v in values]
        p = monotone_type_probabilities(gains, power, literal=literal_probabilities)
        _check_distribution(p)
        chosen = int(rng.choice(dims.k, p=p))
        labels[e] = chosen + 1
        base = values[chosen]
    return SolverOutput(Assignment(dims, tuple(labels)), len(rec.trace), rec.trace)


def greedy_individual_size(
    oracle: ValueOracle, dims: Dims, budgets: IndividualBudgets
) -> SolverOutput:
    """Deterministic greedy filling per-type budgets exactly.

    Runs sum(B_i) iterations; each evaluates every (unassigned element,
    non-exhausted type) extension and takes the best, ties broken toward
    the lowest element then the lowest type.  Candidate values are compared
    directly: the current value is a shared offset inside one iteration, so
    the argmax never needs a base query.
    """
    if len(budgets.per_type) != dims.k:
        raise ConfigError(f"{len(budgets.per_type)} budgets for k={dims.k}")
    if budgets.total > dims.n:
        raise BudgetInfeasible(f"budgets sum to {budgets.total} > n={dims.n}")
    rec = _Recorder(oracle)
    labels = [0] * dims.n
    counts = [0] * dims.k
    base = 0.0
    for _ in range(budgets.total):
        open_types = [i for i in range(1, dims.k + 1) if counts[i - 1] < budgets.per_type[i - 1]]
        best_gain, best_elem, best_type, best_value = None, None, None, None
        for e in range(dims.n):
            if labels[e] != 0:
                continue
            for i in open_types:
                labels[e] = i
                v = rec.evaluate(Assignment(dims, tuple(labels)))
                labels[e] = 0
                gain = v - base
                if best_gain is None or gain > best_gain:
                    best_gain, best_elem, best_type, best_value = gain, e, i, v
        labels[best_elem] = best_type
        counts[best_type - 1] += 1
        base = best_value
    return SolverOutput(Assignment(dims, tuple(labels)), len(rec.trace), rec.trace)


def greedy_matroid(
    oracle: ValueOracle, dims: Dims, matroid: MatroidOracle
) -> SolverOutput:
    """Deterministic greedy over a matroid; output support is a basis.

    Extends while any element keeps the support independent, evaluating all
    (available element, type) extensions per round, ties toward the lowest
    element then type.
    """
    if matroid.ground_size != dims.n:
        raise ConfigError(f"matroid ground size {matroid.ground_size} != n={dims.n}")
    rec = _Recorder(oracle)
    labels = [0] * dims.n
    base = 0.0
    current = Assignment(dims, tuple(labels))
    while True:
        pool = available_elements(matroid, current)
        if not pool:
            break
        best_gain, best_elem, best_type, best_value = None, None, None, None
        for e in pool:
            for i in range(1, dims.k + 1):
                labels[e] = i
                v = rec.evaluate(Assignment(dims, tuple(labels)))
                labels[e] = 0
                gain = v - base
                if best_gain is None or gain > best_gain:
                    best_gain, best_elem, best_type, best_value = gain, e, i, v
        labels[best_elem] = best_type
        base = best_value
        current = Assignment(dims, tuple(labels))
    return SolverOutput(current, len(rec.trace), rec.trace)


@dataclass(frozen=True)
class SolverSpec:
    """An algorithm tag plus its guarantee triple (alpha, delta, N).

    For the matroid greedy the guarantee depends on whether the objective
    is assumed monotone (alpha=1/2, delta=M+1) or not (alpha=1/3,
    delta=4/3*(M+1)); `monotone` selects the row.
    """

    algorithm: str
    monotone: bool = True

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}, pick from {ALGORITHMS}")

    @property
    def is_deterministic(self) -> bool:
        return self.algorithm in ("greedy-is", "greedy-matroid")

    def alpha(self, dims: Dims) -> Fraction:
        if self.algorithm == "unc-nonmonotone":
            return Fraction(1, 2)
        if self.algorithm == "unc-monotone":
            return Fraction(dims.k, 2 * dims.k - 1)
        if self.algorithm == "greedy-is":
            return Fraction(1, 3)
        return Fraction(1, 2) if self.monotone else Fraction(1, 3)

    def delta(self, dims: Dims, constraint=None) -> float:
        if self.algorithm == "unc-nonmonotone":
            return 20.0 * dims.n
        if self.algorithm == "unc-monotone":
            return (16.0 - 2.0 / dims.k) * dims.n
        if self.algorithm == "greedy-is":
            budgets = self._budgets(constraint)
            return 4.0 / 3.0 * (budgets.total + 1)
        rank = matroid_rank(self._matroid(constraint))
        return float(rank + 1) if self.monotone else 4.0 / 3.0 * (rank + 1)

    def query_bound(self, dims: Dims, constraint=None) -> int:
        if self.algorithm in ("unc-nonmonotone", "unc-monotone"):
            return dims.n * dims.k
        if self.algorithm == "greedy-is":
            return dims.n * dims.k * self._budgets(constraint).total
        return dims.n * dims.k * matroid_rank(self._matroid(constraint))

    def solve(
        self,
        oracle: ValueOracle,
        dims: Dims,
        constraint=None,
        rng: np.random.Generator | None = None,
    ) -> SolverOutput:
        if self.algorithm == "unc-nonmonotone":
            self._no_constraint(constraint)
            out = solve_unconstrained_nonmonotone(oracle, dims, self._rng(rng))
        elif self.algorithm == "unc-monotone":
            self._no_constraint(constraint)
            out = solve_unconstrained_monotone(oracle, dims, self._rng(rng))
        elif self.algorithm == "greedy-is":
            out = greedy_individual_size(oracle, dims, self._budgets(constraint))
        else:
            out = greedy_matroid(oracle, dims, self._matroid(constraint))
        assert out.queries_used <= self.query_bound(dims, constraint)
        return out

    @staticmethod
    def _rng(rng: np.random.Generator | None) -> np.random.Generator:
        if rng is None:
            raise ConfigError("randomized solver needs an rng")
        return rng

    @staticmethod
    def _no_constraint(constraint) -> None:
        if constraint is not None:
            raise ConfigError("unconstrained solver got a constraint")

    @staticmethod
    def _budgets(constraint) -> IndividualBudgets:
        if not isinstance(constraint, IndividualBudgets):
            raise ConfigError(f"expected individual budgets, got {constraint!r}")
        return constraint

    @staticmethod
    def _matroid(constraint) -> MatroidOracle:
        if not isinstance(constraint, MatroidOracle):
            raise ConfigError(f"expected a matroid, got {constraint!r}")
        return constraint


def _feasible(labels: tuple[int, ...], constraint, matroid_cache: dict | None) -> bool:
    if constraint is None:
        return True
    if isinstance(constraint, IndividualBudgets):
        for i, cap in enumerate(constraint.per_type, start=1):
            if sum(1 for lab in labels if lab == i) > cap:
                return False
        return True
    support = frozenset(e for e, lab in enumerate(labels) if lab != 0)
    hit = matroid_cache.get(support) if matroid_cache is not None else None
    if hit is None:
        hit = constraint.is_independent(support)
        if matroid_cache is not None:
            matroid_cache[support] = hit
    return hit


def brute_force_opt(
    oracle: ValueOracle,
    dims: Dims,
    constraint=None,
    limit: int = DEFAULT_EXHAUSTION_LIMIT,
) -> tuple[Assignment, float]:
    """Exact maximizer by lattice enumeration; ties keep the first point
    in mixed-radix order."""
    if dims.lattice_size > limit:
        raise InstanceTooLarge(f"lattice has {dims.lattice_size} points, limit {limit}")
    matroid_cache: dict | None = {} if isinstance(constraint, MatroidOracle) else None
    best, best_value = None, None
    for x in lattice_points(dims):
        if not _feasible(x.labels, constraint, matroid_cache):
            continue
        v = oracle.evaluate(x)
        if best_value is None or v > best_value:
            best, best_value = x, v
    if best is None:
        raise ConfigError("constraint admits no feasible assignment")
    return best, float(best_value)


def check_partition_optimality(
    oracle: ValueOracle,
    dims: Dims,
    limit: int = DEFAULT_EXHAUSTION_LIMIT,
    tol: float = 1e-9,
) -> bool:
    """True iff some full-support assignment attains the global maximum.

    Requires k >= 2 and a k-submodular instance (pairwise monotonicity is
    what lets a maximizer be extended type by type without loss).
    """
    if dims.k < 2:
        raise ValueError("partition optimality needs k >= 2")
    values = lattice_values(oracle, dims, limit)
    report = check_k_submodular_values(values, dims)
    if not report.ok:
        raise NotKSubmodular(f"instance fails the exhaustive check: {report}")
    full_mask = np.array(
        [all(lab != 0 for lab in x.labels) for x in lattice_points(dims)], dtype=bool
    )
    return bool(values[full_mask].max() >= values.max() - tol)


@dataclass
class RobustnessReport:
    lhs: float
    rhs: float
    passed: bool
    alpha: float
    delta: float
    epsilon: float
    opt_value: float
    trials: int
    stderr: float = 0.0


def verify_robustness(
    spec: SolverSpec,
    oracle: ValueOracle,
    dims: Dims,
    constraint=None,
    epsilon: float = 0.0,
    trials: int = 1,
    seed: int = 0,
    noise_table=None,
    limit: int = DEFAULT_EXHAUSTION_LIMIT,
    tol: float = 1e-9,
) -> RobustnessReport:
    """Check mean true value of solver outputs against alpha*OPT - delta*eps.

    One fixed surrogate oracle (seeded or adversarial via noise_table) is
    built; the solver runs `trials` times against it and each output is
    scored under the true oracle.  Deterministic solvers must satisfy the
    bound on every run; randomized solvers pass when mean + 3*SE clears it.
    """
    _, opt_value = brute_force_opt(oracle, dims, constraint, limit)
    alpha = float(spec.alpha(dims))
    delta = spec.delta(dims, constraint)
    rhs = alpha * opt_value - delta * epsilon
    noisy = BoundedNoisyOracle(oracle, epsilon, seed=seed, table=noise_table)
    seeds = np.random.SeedSequence(seed).spawn(trials)
    scores = []
    for trial_seed in seeds:
        rng = np.random.default_rng(trial_seed)
        out = spec.solve(noisy, dims, constraint, rng)
        scores.append(oracle.evaluate(out.solution))
    scores_arr = np.asarray(scores)
    lhs = float(scores_arr.mean())
    stderr = float(scores_arr.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    if spec.is_deterministic:
        passed = bool(scores_arr.min() >= rhs - tol)
    else:
        passed = bool(lhs + 3.0 * stderr >= rhs - tol)
    return RobustnessReport(lhs, rhs, passed, alpha, delta, epsilon, opt_value, trials, stderr)
