"""Lattice model for assigning one of k types to each ground-set element.

An assignment lives in {0, 1, ..., k}^n where label 0 means "unassigned" and
labels 1..k are the k types.  Values come from black-box oracles that count
queries.  Exhaustive checkers for orthant submodularity, pairwise
monotonicity, and monotonicity operate on desk-scale instances by tabulating
the full lattice; a function is k-submodular exactly when the first two
properties hold.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from itertools import product
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    DimsMismatch,
    ElementAlreadyAssigned,
    InstanceTooLarge,
    TypeOutOfRange,
)

DEFAULT_EXHAUSTION_LIMIT = 10**6

# Tolerance for comparisons between floating-point lattice values.  The
# checkers certify inequalities up to this slack so that instances whose
# values are sums of floats do not flake on last-ulp noise.
VALUE_TOL = 1e-9


@dataclass(frozen=True)
class Dims:
    """Problem dimensions: n ground-set elements, k assignable types."""

    n: int
    k: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"need at least one element, got n={self.n}")
        if self.k < 1:
            raise ValueError(f"need at least one type, got k={self.k}")

    @property
    def lattice_size(self) -> int:
        return (self.k + 1) ** self.n


@dataclass(frozen=True)
class Assignment:
    """An immutable label vector over the ground set.

    labels[e] == 0 means element e is unassigned; labels[e] == i in 1..k
    assigns type i.  Assignments are hashable and ordered by their position
    in the mixed-radix enumeration of the lattice (labels[0] is the most
    significant digit), which is also lexicographic order of the tuples.
    """

    dims: Dims
    labels: tuple[int, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.labels, tuple):
            object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) != self.dims.n:
            raise DimsMismatch(
                f"expected {self.dims.n} labels, got {len(self.labels)}"
            )
        for e, lab in enumerate(self.labels):
            if not 0 <= lab <= self.dims.k:
                raise TypeOutOfRange(f"label {lab} at element {e} outside 0..{self.dims.k}")

    @classmethod
    def zeros(cls, dims: Dims) -> "Assignment":
        return cls(dims, (0,) * dims.n)

    @classmethod
    def from_index(cls, dims: Dims, index: int) -> "Assignment":
        """Inverse of lattice_index."""
        if not 0 <= index < dims.lattice_size:
            raise ValueError(f"lattice index {index} out of range")
        radix = dims.k + 1
        labels = [0] * dims.n
        for e in range(dims.n - 1, -1, -1):
            index, labels[e] = divmod(index, radix)
        return cls(dims, tuple(labels))

    def lattice_index(self) -> int:
        idx = 0
        radix = self.dims.k + 1
        for lab in self.labels:
            idx = idx * radix + lab
        return idx

    def with_label(self, element: int, label: int) -> "Assignment":
        """Copy with one label replaced (label 0 clears the element)."""
        labels = list(self.labels)
        labels[element] = label
        return Assignment(self.dims, tuple(labels))

    def support(self) -> frozenset[int]:
        return frozenset(e for e, lab in enumerate(self.labels) if lab != 0)

    def support_of(self, type_index: int) -> frozenset[int]:
        if not 1 <= type_index <= self.dims.k:
            raise TypeOutOfRange(f"type {type_index} outside 1..{self.dims.k}")
        return frozenset(e for e, lab in enumerate(self.labels) if lab == type_index)

    @property
    def support_size(self) -> int:
        return sum(1 for lab in self.labels if lab != 0)

    def unassigned(self) -> list[int]:
        return [e for e, lab in enumerate(self.labels) if lab == 0]

    def __str__(self) -> str:
        return label_string(self.labels)


def label_string(labels: Sequence[int]) -> str:
    """Compact text form of a label vector: digits when k <= 9, else CSV."""
    if all(lab <= 9 for lab in labels):
        return "".join(str(lab) for lab in labels)
    return ",".join(str(lab) for lab in labels)


def parse_label_string(text: str, dims: Dims) -> tuple[int, ...]:
    if "," in text:
        labels = tuple(int(tok) for tok in text.split(","))
    else:
        labels = tuple(int(ch) for ch in text)
    if len(labels) != dims.n:
        raise DimsMismatch(f"label string {text!r} has {len(labels)} digits, expected {dims.n}")
    return labels


def lattice_points(dims: Dims) -> Iterator[Assignment]:
    """All assignments in mixed-radix order."""
    for labels in product(range(dims.k + 1), repeat=dims.n):
        yield Assignment(dims, labels)


class ValueOracle:
    """Black-box set-function access with a per-instance query counter.

    Subclasses implement _value.  Every evaluate() call counts as exactly
    one query, whatever the subclass does internally.
    """

    def __init__(self) -> None:
        self.query_count = 0

    def evaluate(self, x: Assignment) -> float:
        self.query_count += 1
        return self._value(x)

    def _value(self, x: Assignment) -> float:
        raise NotImplementedError

    def reset_count(self) -> None:
        self.query_count = 0


class FunctionOracle(ValueOracle):
    """Oracle wrapping a plain callable on assignments."""

    def __init__(self, fn: Callable[[Assignment], float]) -> None:
        super().__init__()
        self.fn = fn

    def _value(self, x: Assignment) -> float:
        return float(self.fn(x))


class TableOracle(ValueOracle):
    """Oracle backed by a dense table indexed in mixed-radix lattice order."""

    def __init__(self, dims: Dims, values: Sequence[float]) -> None:
        super().__init__()
        if len(values) != dims.lattice_size:
            raise DimsMismatch(
                f"table has {len(values)} entries, lattice needs {dims.lattice_size}"
            )
        self.dims = dims
        self.values = np.asarray(values, dtype=float)

    def _value(self, x: Assignment) -> float:
        if x.dims != self.dims:
            raise DimsMismatch(f"assignment dims {x.dims} != table dims {self.dims}")
        return float(self.values[x.lattice_index()])


class BoundedNoisyOracle(ValueOracle):
    """Fixed surrogate f̂ with |f̂(x) - f(x)| <= epsilon for every x.

    The perturbation is a deterministic function of the assignment: either
    drawn once per assignment from a generator seeded by (seed, labels), so
    the surrogate does not depend on query order, or supplied explicitly as
    a mapping from label tuples to offsets (an adversarial table).
    """

    def __init__(
        self,
        base: ValueOracle,
        epsilon: float,
        seed: int = 0,
        table: Mapping[tuple[int, ...], float] | None = None,
    ) -> None:
        super().__init__()
        if epsilon < 0:
            raise ValueError(f"epsilon must be non-negative, got {epsilon}")
        self.base = base
        self.epsilon = float(epsilon)
        self.seed = int(seed)
        self.table = dict(table) if table is not None else None
        if self.table is not None:
            for labels, off in self.table.items():
                if abs(off) > self.epsilon + 1e-15:
                    raise ValueError(
                        f"perturbation {off} at {labels} exceeds epsilon={self.epsilon}"
                    )
        self._draws: dict[tuple[int, ...], float] = {}

    def perturbation(self, x: Assignment) -> float:
        if self.table is not None:
            return self.table.get(x.labels, 0.0)
        if self.epsilon == 0.0:
            return 0.0
        cached = self._draws.get(x.labels)
        if cached is None:
            rng = np.random.default_rng((self.seed, *x.labels))
            cached = self.epsilon * (2.0 * rng.random() - 1.0)
            self._draws[x.labels] = cached
        return cached

    def _value(self, x: Assignment) -> float:
        return self.base.evaluate(x) + self.perturbation(x)


def marginal_gain(
    oracle: ValueOracle,
    x: Assignment,
    element: int,
    type_index: int,
    cached_base: float | None = None,
) -> float:
    """Gain of assigning `type_index` to the unassigned `element` of x.

    When cached_base is given it is used as the value of x and exactly one
    fresh query (for the extended assignment) is issued.
    """
    if not 1 <= type_index <= x.dims.k:
        raise TypeOutOfRange(f"type {type_index} outside 1..{x.dims.k}")
    if x.labels[element] != 0:
        raise ElementAlreadyAssigned(f"element {element} already has type {x.labels[element]}")
    base = oracle.evaluate(x) if cached_base is None else cached_base
    return oracle.evaluate(x.with_label(element, type_index)) - base


def precedes(x: Assignment, y: Assignment) -> bool:
    """Partial order: x precedes y iff every assigned label of x agrees with y."""
    if x.dims != y.dims:
        raise DimsMismatch(f"cannot compare assignments over {x.dims} and {y.dims}")
    return all(a == 0 or a == b for a, b in zip(x.labels, y.labels))


def lattice_values(
    oracle: ValueOracle, dims: Dims, limit: int = DEFAULT_EXHAUSTION_LIMIT
) -> np.ndarray:
    """Evaluate the oracle on every lattice point, in mixed-radix order."""
    size = dims.lattice_size
    if size > limit:
        raise InstanceTooLarge(f"lattice has {size} points, limit is {limit}")
    return np.array([oracle.evaluate(x) for x in lattice_points(dims)], dtype=float)


@functools.lru_cache(maxsize=32)
def _digits(dims: Dims) -> np.ndarray:
    """Digit matrix D[idx, e] = label of element e at lattice index idx."""
    idx = np.arange(dims.lattice_size)
    out = np.empty((dims.lattice_size, dims.n), dtype=np.int64)
    radix = dims.k + 1
    for e in range(dims.n):
        out[:, e] = (idx // radix ** (dims.n - 1 - e)) % radix
    return out


def _stride(dims: Dims, element: int) -> int:
    return (dims.k + 1) ** (dims.n - 1 - element)


@dataclass
class PropertyReport:
    """Outcome of the exhaustive k-submodularity check.

    Witnesses are the first violating tuples found in a fixed scan order:
    orthant_witness = (x_labels, y_labels, element, type_index, gain_at_x,
    gain_at_y) with x preceding y; pairwise_witness = (labels, element,
    type_i, type_j, gain_i, gain_j).
    """

    orthant_ok: bool
    pairwise_ok: bool
    orthant_witness: tuple | None = None
    pairwise_witness: tuple | None = None

    @property
    def ok(self) -> bool:
        return self.orthant_ok and self.pairwise_ok


def _check_pairwise(values: np.ndarray, dims: Dims, tol: float) -> tuple[bool, tuple | None]:
    if dims.k < 2:
        return True, None  # no type pairs to compare
    digits = _digits(dims)
    for e in range(dims.n):
        stride = _stride(dims, e)
        sel = np.flatnonzero(digits[:, e] == 0)
        base = values[sel]
        gains = np.stack([values[sel + i * stride] - base for i in range(1, dims.k + 1)])
        two_smallest = np.partition(gains, 1, axis=0)[:2].sum(axis=0)
        bad = np.flatnonzero(two_smallest < -tol)
        if bad.size:
            idx = int(sel[bad[0]])
            col = gains[:, bad[0]]
            for i in range(dims.k):
                for j in range(i + 1, dims.k):
                    if col[i] + col[j] < -tol:
                        labels = Assignment.from_index(dims, idx).labels
                        return False, (labels, e, i + 1, j + 1, float(col[i]), float(col[j]))
    return True, None


def _check_orthant(values: np.ndarray, dims: Dims, tol: float) -> tuple[bool, tuple | None]:
    # Comparing each point against its immediate predecessors (one assigned
    # coordinate cleared) is equivalent to comparing all ordered pairs: any
    # violating pair forces a violating single-step pair along the chain.
    digits = _digits(dims)
    for c in range(dims.n):
        stride_c = _stride(dims, c)
        for j in range(1, dims.k + 1):
            y_sel = np.flatnonzero(digits[:, c] == j)
            x_sel = y_sel - j * stride_c
            for e in range(dims.n):
                if e == c:
                    continue
                stride_e = _stride(dims, e)
                mask = digits[y_sel, e] == 0
                yy = y_sel[mask]
                xx = x_sel[mask]
                if not yy.size:
                    continue
                for i in range(1, dims.k + 1):
                    gain_y = values[yy + i * stride_e] - values[yy]
                    gain_x = values[xx + i * stride_e] - values[xx]
                    bad = np.flatnonzero(gain_x < gain_y - tol)
                    if bad.size:
                        b = bad[0]
                        return False, (
                            Assignment.from_index(dims, int(xx[b])).labels,
                            Assignment.from_index(dims, int(yy[b])).labels,
                            e,
                            i,
                            float(gain_x[b]),
                            float(gain_y[b]),
                        )
    return True, None


def check_k_submodular(
    oracle: ValueOracle,
    dims: Dims,
    limit: int = DEFAULT_EXHAUSTION_LIMIT,
    tol: float = VALUE_TOL,
) -> PropertyReport:
    """Exhaustively test orthant submodularity and pairwise monotonicity.

    Together the two properties characterize k-submodularity.  Queries the
    oracle once per lattice point; raises InstanceTooLarge past `limit`.
    """
    values = lattice_values(oracle, dims, limit)
    return check_k_submodular_values(values, dims, tol)


def check_k_submodular_values(
    values: np.ndarray, dims: Dims, tol: float = VALUE_TOL
) -> PropertyReport:
    """Same check, from a precomputed mixed-radix value table."""
    pairwise_ok, pairwise_wit = _check_pairwise(values, dims, tol)
    orthant_ok, orthant_wit = _check_orthant(values, dims, tol)
    return PropertyReport(orthant_ok, pairwise_ok, orthant_wit, pairwise_wit)


def first_negative_marginal(
    values: np.ndarray, dims: Dims, tol: float = VALUE_TOL
) -> tuple | None:
    """First (labels, element, type_index, gain) with gain < -tol, or None."""
    digits = _digits(dims)
    for e in range(dims.n):
        stride = _stride(dims, e)
        sel = np.flatnonzero(digits[:, e] == 0)
        for i in range(1, dims.k + 1):
            gains = values[sel + i * stride] - values[sel]
            bad = np.flatnonzero(gains < -tol)
            if bad.size:
                idx = int(sel[bad[0]])
                return (Assignment.from_index(dims, idx).labels, e, i, float(gains[bad[0]]))
    return None


def check_monotone(
    oracle: ValueOracle,
    dims: Dims,
    limit: int = DEFAULT_EXHAUSTION_LIMIT,
    tol: float = VALUE_TOL,
) -> bool:
    """True iff every marginal gain over the whole lattice is non-negative."""
    values = lattice_values(oracle, dims, limit)
    return first_negative_marginal(values, dims, tol) is None
