"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

from ksubmax.core import Assignment, Dims, FunctionOracle, TableOracle


def additive_oracle(weights):
    """f(x) = sum of w[e][x_e - 1] over assigned elements; w[e] has k entries."""
    n = len(weights)
    k = len(weights[0])
    dims = Dims(n, k)

    def value(x: Assignment) -> float:
        return sum(weights[e][lab - 1] for e, lab in enumerate(x.labels) if lab)

    return dims, FunctionOracle(value)


def table_oracle_from(dims: Dims, values) -> TableOracle:
    return TableOracle(dims, np.asarray(values, dtype=float))


def assignment(dims: Dims, *labels: int) -> Assignment:
    return Assignment(dims, tuple(labels))
