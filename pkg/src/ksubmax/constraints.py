"""Feasibility structures: per-type budgets and matroids over the ground set.

An assignment is feasible for a matroid constraint when its support is an
independent set.  Individual budgets cap each type's support size separately
and are consumed directly by the budgeted greedy solver rather than being
encoded as a matroid.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import chain, combinations
from pathlib import Path
from typing import Iterable

from .core import Assignment
from .errors import (
    ConfigError,
    FormatError,
    InfeasibleState,
    InstanceTooLarge,
)


@dataclass(frozen=True)
class IndividualBudgets:
    """Per-type support-size caps B_1..B_k."""

    per_type: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.per_type:
            raise ValueError("need at least one budget")
        if any(b < 0 for b in self.per_type):
            raise ValueError(f"budgets must be non-negative, got {self.per_type}")

    @property
    def total(self) -> int:
        return sum(self.per_type)


class MatroidOracle:
    """Independence oracle over ground set {0..n-1}."""

    def __init__(self, ground_size: int) -> None:
        if ground_size < 1:
            raise ValueError(f"ground size must be positive, got {ground_size}")
        self.ground_size = ground_size

    def is_independent(self, subset: Iterable[int]) -> bool:
        raise NotImplementedError


class UniformMatroid(MatroidOracle):
    """Independent sets are those of size at most B (total size constraint)."""

    def __init__(self, ground_size: int, budget: int) -> None:
        super().__init__(ground_size)
        if budget < 0:
            raise ValueError(f"budget must be non-negative, got {budget}")
        self.budget = budget

    def is_independent(self, subset: Iterable[int]) -> bool:
        return len(set(subset)) <= self.budget


class PartitionMatroid(MatroidOracle):
    """At most cap_b elements from each block of a partition of the ground set."""

    def __init__(self, blocks: list[list[int]], caps: list[int]) -> None:
        flattened = sorted(chain.from_iterable(blocks))
        n = len(flattened)
        super().__init__(n)
        if flattened != list(range(n)):
            raise ValueError("blocks must partition 0..n-1 without gaps or repeats")
        if len(caps) != len(blocks):
            raise ValueError(f"{len(blocks)} blocks but {len(caps)} caps")
        if any(c < 0 for c in caps):
            raise ValueError(f"caps must be non-negative, got {caps}")
        self.blocks = [sorted(b) for b in blocks]
        self.caps = list(caps)
        self._block_of = {}
        for b_index, block in enumerate(self.blocks):
            for e in block:
                self._block_of[e] = b_index

    def is_independent(self, subset: Iterable[int]) -> bool:
        counts = [0] * len(self.blocks)
        for e in set(subset):
            counts[self._block_of[e]] += 1
        return all(c <= cap for c, cap in zip(counts, self.caps))


class ExplicitMatroid(MatroidOracle):
    """Matroid given by an explicit family of independent sets.

    The family is checked against the matroid axioms at construction unless
    validate=False (useful for exercising the axiom checker on bad input).
    """

    def __init__(
        self, ground_size: int, family: Iterable[Iterable[int]], validate: bool = True
    ) -> None:
        super().__init__(ground_size)
        self.family = frozenset(frozenset(s) for s in family)
        if validate:
            report = check_matroid_axioms(self)
            if not report.ok:
                raise ValueError(f"family violates matroid axioms: {report.summary()}")

    def is_independent(self, subset: Iterable[int]) -> bool:
        return frozenset(subset) in self.family


@dataclass
class MatroidAxiomReport:
    """Per-axiom outcome with a witness for the first failure of each."""

    nonempty_ok: bool
    downward_ok: bool
    exchange_ok: bool
    downward_witness: tuple | None = None  # (subset, superset)
    exchange_witness: tuple | None = None  # (smaller, larger)

    @property
    def ok(self) -> bool:
        return self.nonempty_ok and self.downward_ok and self.exchange_ok

    def summary(self) -> str:
        parts = []
        if not self.nonempty_ok:
            parts.append("empty set not independent")
        if not self.downward_ok:
            parts.append(f"not downward closed, witness {self.downward_witness}")
        if not self.exchange_ok:
            parts.append(f"exchange fails for {self.exchange_witness}")
        return "; ".join(parts) if parts else "all axioms hold"


def check_matroid_axioms(
    matroid: MatroidOracle, limit: int = 2**20
) -> MatroidAxiomReport:
    """Exhaustively verify the three matroid axioms over all 2^n subsets."""
    n = matroid.ground_size
    if 2**n > limit:
        raise InstanceTooLarge(f"2^{n} subsets exceed limit {limit}")
    ground = list(range(n))
    independent = []
    for r in range(n + 1):
        for subset in combinations(ground, r):
            if matroid.is_independent(subset):
                independent.append(frozenset(subset))
    indep_set = set(independent)

    nonempty_ok = frozenset() in indep_set

    downward_ok, downward_witness = True, None
    for s in independent:
        for e in sorted(s):
            smaller = s - {e}
            if smaller not in indep_set:
                downward_ok, downward_witness = False, (tuple(sorted(smaller)), tuple(sorted(s)))
                break
        if not downward_ok:
            break

    exchange_ok, exchange_witness = True, None
    for a in independent:
        for b in independent:
            if len(a) >= len(b):
                continue
            if not any(a | {e} in indep_set for e in sorted(b - a)):
                exchange_ok, exchange_witness = False, (tuple(sorted(a)), tuple(sorted(b)))
                break
        if not exchange_ok:
            break

    return MatroidAxiomReport(nonempty_ok, downward_ok, exchange_ok, downward_witness, exchange_witness)


def available_elements(matroid: MatroidOracle, x: Assignment) -> list[int]:
    """Unassigned elements whose addition keeps the support independent."""
    support = x.support()
    if not matroid.is_independent(support):
        raise InfeasibleState(f"support {sorted(support)} is not independent")
    return [
        e
        for e in range(matroid.ground_size)
        if e not in support and matroid.is_independent(support | {e})
    ]


def matroid_rank(matroid: MatroidOracle) -> int:
    """Rank via greedy extension from the empty set, lowest index first.

    Matroid exchange makes any maximal independent set maximum, so the
    greedy chain's length is the rank.
    """
    current: set[int] = set()
    for e in range(matroid.ground_size):
        if matroid.is_independent(current | {e}):
            current.add(e)
    return len(current)


def load_partition_matroid(path: str | Path) -> PartitionMatroid:
    """Parse `block <cap>: e1 e2 ...` lines into a partition matroid."""
    blocks: list[list[int]] = []
    caps: list[int] = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, tail = line.partition(":")
        tokens = head.split()
        if len(tokens) != 2 or tokens[0] != "block":
            raise FormatError(f"expected 'block <cap>: ...', got {raw!r}")
        try:
            caps.append(int(tokens[1]))
            blocks.append([int(tok) for tok in tail.split()])
        except ValueError as exc:
            raise FormatError(f"bad partition line {raw!r}") from exc
    if not blocks:
        raise FormatError(f"no blocks found in {path}")
    try:
        return PartitionMatroid(blocks, caps)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def parse_constraint(
    text: str, n: int, k: int, base_dir: str | Path = "."
) -> None | IndividualBudgets | MatroidOracle:
    """Parse a constraint spec string.

    Accepted forms: `unconstrained`, `ts:<B>` (uniform matroid),
    `is:<B1,...,Bk>` (individual budgets), `partition:<file>`.
    """
    text = text.strip()
    if text == "unconstrained":
        return None
    kind, _, rest = text.partition(":")
    if kind == "ts":
        try:
            budget = int(rest)
        except ValueError as exc:
            raise ConfigError(f"bad total-size budget {rest!r}") from exc
        if budget < 0:
            raise ConfigError(f"total-size budget must be non-negative, got {budget}")
        return UniformMatroid(n, budget)
    if kind == "is":
        try:
            budgets = tuple(int(tok) for tok in rest.split(","))
        except ValueError as exc:
            raise ConfigError(f"bad budget list {rest!r}") from exc
        if len(budgets) != k:
            raise ConfigError(f"expected {k} budgets, got {len(budgets)}")
        try:
            return IndividualBudgets(budgets)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if kind == "partition":
        matroid = load_partition_matroid(Path(base_dir) / rest)
        if matroid.ground_size != n:
            raise ConfigError(
                f"partition covers {matroid.ground_size} elements, instance has {n}"
            )
        return matroid
    raise ConfigError(f"unknown constraint spec {text!r}")
