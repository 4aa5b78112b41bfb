"""Problem instances and reward environments.

Three instance families share one text format: dense value tables, weighted
coverage (monotone by construction), and coupled coverage-plus-offsets
instances whose first type carries a negative per-element offset (orthant
submodular and pairwise monotone by the offset condition, non-monotone once
some coverage marginal drops below the offset's magnitude).  Influence
graphs with per-topic edge probabilities drive a multi-topic independent
cascade whose expected spread is the canonical monotone objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .bandit import BanditEnvironment
from .core import (
    DEFAULT_EXHAUSTION_LIMIT,
    Assignment,
    Dims,
    FunctionOracle,
    ValueOracle,
    first_negative_marginal,
    label_string,
    lattice_values,
    parse_label_string,
)
from .errors import (
    ConfigError,
    DimsMismatch,
    FormatError,
    InvalidSchemeParams,
    ValueOutOfRange,
)


@dataclass(frozen=True)
class TableInstance:
    """Dense lattice table in mixed-radix order."""

    dims: Dims
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.values) != self.dims.lattice_size:
            raise DimsMismatch(
                f"{len(self.values)} values for a lattice of {self.dims.lattice_size}"
            )


@dataclass(frozen=True)
class CoverageInstance:
    """Weighted coverage: assigning type i to element e covers covers[e][i-1].

    The value of an assignment is the total weight of the union of the
    covered subsets, which is monotone and k-submodular by construction.
    """

    dims: Dims
    universe_size: int
    weights: tuple[float, ...]
    covers: tuple[tuple[frozenset[int], ...], ...]

    def __post_init__(self) -> None:
        if len(self.weights) != self.universe_size:
            raise DimsMismatch(f"{len(self.weights)} weights for universe {self.universe_size}")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be non-negative")
        if len(self.covers) != self.dims.n or any(len(row) != self.dims.k for row in self.covers):
            raise DimsMismatch("covers must be indexed [element][type-1]")
        for row in self.covers:
            for subset in row:
                if any(not 0 <= p < self.universe_size for p in subset):
                    raise ValueError("covered point outside the universe")


@dataclass(frozen=True)
class CoupledInstance:
    """Coverage over the union of supports plus per-type modular offsets.

    offsets[0] < 0 <= offsets[0] + offsets[i] for i >= 1 keeps the function
    orthant submodular and pairwise monotone while allowing negative
    marginals for the first type.
    """

    dims: Dims
    universe_size: int
    weights: tuple[float, ...]
    element_covers: tuple[frozenset[int], ...]
    offsets: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.weights) != self.universe_size:
            raise DimsMismatch(f"{len(self.weights)} weights for universe {self.universe_size}")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be non-negative")
        if len(self.element_covers) != self.dims.n:
            raise DimsMismatch("one cover set per element required")
        if len(self.offsets) != self.dims.k:
            raise DimsMismatch(f"{len(self.offsets)} offsets for k={self.dims.k}")
        if self.offsets[0] >= 0:
            raise ValueError("first offset must be negative")
        if any(self.offsets[0] + off < 0 for off in self.offsets[1:]):
            raise ValueError("offsets must satisfy offsets[0] + offsets[i] >= 0")


Instance = TableInstance | CoverageInstance | CoupledInstance


def _mask(points: frozenset[int]) -> int:
    m = 0
    for p in points:
        m |= 1 << p
    return m


def _mask_weight_fn(weights: Sequence[float]) -> Callable[[int], float]:
    weights = list(weights)
    cache: dict[int, float] = {0: 0.0}

    def total(mask: int) -> float:
        v = cache.get(mask)
        if v is None:
            v = 0.0
            m = mask
            while m:
                low = m & -m
                v += weights[low.bit_length() - 1]
                m ^= low
            cache[mask] = v
        return v

    return total


def exact_oracle(instance: Instance) -> ValueOracle:
    """Closed-form deterministic oracle for any instance kind."""
    if isinstance(instance, TableInstance):
        from .core import TableOracle

        return TableOracle(instance.dims, instance.values)
    if isinstance(instance, CoverageInstance):
        masks = [[_mask(s) for s in row] for row in instance.covers]
        weight_of = _mask_weight_fn(instance.weights)

        def coverage_value(x: Assignment) -> float:
            union = 0
            for e, lab in enumerate(x.labels):
                if lab:
                    union |= masks[e][lab - 1]
            return weight_of(union)

        return FunctionOracle(coverage_value)
    if isinstance(instance, CoupledInstance):
        masks_e = [_mask(s) for s in instance.element_covers]
        weight_of = _mask_weight_fn(instance.weights)
        offsets = instance.offsets

        def coupled_value(x: Assignment) -> float:
            union = 0
            total = 0.0
            for e, lab in enumerate(x.labels):
                if lab:
                    union |= masks_e[e]
                    total += offsets[lab - 1]
            return weight_of(union) + total

        return FunctionOracle(coupled_value)
    raise ConfigError(f"unknown instance type {type(instance).__name__}")


def generate_coverage(
    n: int,
    k: int,
    rng: np.random.Generator,
    universe_size: int | None = None,
    density: float = 0.4,
) -> CoverageInstance:
    """Random weighted-coverage instance; monotone k-submodular for free."""
    dims = Dims(n, k)
    universe = universe_size if universe_size is not None else max(4, 2 * n)
    weights = tuple(float(w) for w in rng.uniform(0.25, 1.0, universe))
    covers = tuple(
        tuple(
            frozenset(p for p in range(universe) if rng.random() < density)
            for _ in range(k)
        )
        for _ in range(n)
    )
    return CoverageInstance(dims, universe, weights, covers)


def generate_coupled(
    n: int,
    k: int,
    rng: np.random.Generator,
    universe_size: int | None = None,
    density: float = 0.55,
    max_tries: int = 500,
) -> CoupledInstance:
    """Random coupled instance, redrawn until it is non-monotone (some
    marginal strictly negative) while every lattice value stays
    non-negative; the ratio guarantees presuppose a non-negative objective.
    """
    dims = Dims(n, k)
    universe = universe_size if universe_size is not None else n + 2
    for _ in range(max_tries):
        weights = tuple(float(w) for w in rng.uniform(0.25, 1.0, universe))
        element_covers = tuple(
            frozenset(p for p in range(universe) if rng.random() < density)
            for _ in range(n)
        )
        first = -float(rng.uniform(0.15, 0.45))
        offsets = (first,) + tuple(-first + float(rng.uniform(0.0, 0.4)) for _ in range(k - 1))
        instance = CoupledInstance(dims, universe, weights, element_covers, offsets)
        values = lattice_values(exact_oracle(instance), dims)
        if values.min() < -1e-12:
            continue
        if first_negative_marginal(values, dims) is None:
            continue
        return instance
    raise RuntimeError(f"no valid coupled instance after {max_tries} draws")


# ---------------------------------------------------------------------------
# instance file format


def save_instance(instance: Instance, path: str | Path) -> None:
    dims = instance.dims
    lines = []
    if isinstance(instance, TableInstance):
        lines.append(f"ksub v1 n={dims.n} k={dims.k} kind=table")
        from .core import lattice_points

        for x, v in zip(lattice_points(dims), instance.values):
            lines.append(f"{label_string(x.labels)} {float(v)!r}")
    elif isinstance(instance, CoverageInstance):
        lines.append(f"ksub v1 n={dims.n} k={dims.k} kind=coverage")
        lines.append(f"universe {instance.universe_size}")
        lines.append("weights " + " ".join(repr(float(w)) for w in instance.weights))
        for e, row in enumerate(instance.covers):
            for i, subset in enumerate(row, start=1):
                lines.append(f"cover {e} {i}: " + " ".join(str(p) for p in sorted(subset)))
    elif isinstance(instance, CoupledInstance):
        lines.append(f"ksub v1 n={dims.n} k={dims.k} kind=coupled")
        lines.append(f"universe {instance.universe_size}")
        lines.append("weights " + " ".join(repr(float(w)) for w in instance.weights))
        for e, subset in enumerate(instance.element_covers):
            lines.append(f"cover {e}: " + " ".join(str(p) for p in sorted(subset)))
        lines.append("offsets " + " ".join(repr(float(o)) for o in instance.offsets))
    else:
        raise ConfigError(f"cannot save {type(instance).__name__}")
    Path(path).write_text("\n".join(lines) + "\n")


def _content_lines(path: str | Path) -> list[str]:
    out = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(line)
    return out


def _parse_header(line: str) -> tuple[Dims, str]:
    tokens = line.split()
    if len(tokens) != 5 or tokens[0] != "ksub" or tokens[1] != "v1":
        raise FormatError(f"bad header {line!r}")
    fields = {}
    for tok in tokens[2:]:
        key, _, val = tok.partition("=")
        fields[key] = val
    try:
        dims = Dims(int(fields["n"]), int(fields["k"]))
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad header {line!r}") from exc
    kind = fields.get("kind")
    if kind not in ("table", "coverage", "coupled"):
        raise FormatError(f"unknown kind {kind!r}")
    return dims, kind


def load_instance(path: str | Path) -> Instance:
    """Parse the `ksub v1` text format (whitespace tolerant, # comments)."""
    lines = _content_lines(path)
    if not lines:
        raise FormatError(f"{path} is empty")
    dims, kind = _parse_header(lines[0])
    body = lines[1:]
    if kind == "table":
        values = [math.nan] * dims.lattice_size
        seen = 0
        for line in body:
            tokens = line.split()
            if len(tokens) != 2:
                raise FormatError(f"expected '<labels> <value>', got {line!r}")
            labels = parse_label_string(tokens[0], dims)
            idx = Assignment(dims, labels).lattice_index()
            values[idx] = float(tokens[1])
            seen += 1
        if seen != dims.lattice_size or any(math.isnan(v) for v in values):
            raise FormatError(
                f"table needs all {dims.lattice_size} lattice points, got {seen}"
            )
        return TableInstance(dims, tuple(values))

    universe_size = None
    weights: tuple[float, ...] | None = None
    offsets: tuple[float, ...] | None = None
    pair_covers: dict[tuple[int, int], frozenset[int]] = {}
    elem_covers: dict[int, frozenset[int]] = {}
    for line in body:
        head, _, tail = line.partition(":")
        tokens = head.split()
        if tokens[0] == "universe":
            universe_size = int(tokens[1])
        elif tokens[0] == "weights":
            weights = tuple(float(t) for t in tokens[1:])
        elif tokens[0] == "offsets":
            offsets = tuple(float(t) for t in tokens[1:])
        elif tokens[0] == "cover":
            points = frozenset(int(t) for t in tail.split())
            if len(tokens) == 3:
                pair_covers[(int(tokens[1]), int(tokens[2]))] = points
            elif len(tokens) == 2:
                elem_covers[int(tokens[1])] = points
            else:
                raise FormatError(f"bad cover line {line!r}")
        else:
            raise FormatError(f"unknown directive {line!r}")
    if universe_size is None or weights is None:
        raise FormatError(f"{kind} instance needs universe and weights lines")
    try:
        if kind == "coverage":
            covers = tuple(
                tuple(pair_covers.get((e, i), frozenset()) for i in range(1, dims.k + 1))
                for e in range(dims.n)
            )
            return CoverageInstance(dims, universe_size, weights, covers)
        if offsets is None:
            raise FormatError("coupled instance needs an offsets line")
        element_covers = tuple(elem_covers.get(e, frozenset()) for e in range(dims.n))
        return CoupledInstance(dims, universe_size, weights, element_covers, offsets)
    except (ValueError, DimsMismatch) as exc:
        raise FormatError(str(exc)) from exc


# ---------------------------------------------------------------------------
# edge-weight schemes


def parse_scheme(text: str) -> tuple:
    """Parse 'uniform(a,b)' | 'normal(mu,sigma)' | 'exponential(rate)'."""
    text = text.strip()
    name, _, rest = text.partition("(")
    if not rest.endswith(")"):
        raise InvalidSchemeParams(f"bad scheme {text!r}")
    try:
        params = tuple(float(t) for t in rest[:-1].split(","))
    except ValueError as exc:
        raise InvalidSchemeParams(f"bad scheme {text!r}") from exc
    return (name.strip(), *params)


def _validate_scheme(scheme: tuple) -> tuple:
    if not scheme:
        raise InvalidSchemeParams("empty scheme")
    name = scheme[0]
    params = scheme[1:]
    if name == "uniform":
        if len(params) != 2 or not (0.0 <= params[0] <= params[1] <= 1.0):
            raise InvalidSchemeParams(f"uniform needs 0 <= a <= b <= 1, got {params}")
    elif name == "normal":
        if len(params) != 2 or params[1] <= 0:
            raise InvalidSchemeParams(f"normal needs (mu, sigma > 0), got {params}")
    elif name == "exponential":
        if len(params) != 1 or params[0] <= 0:
            raise InvalidSchemeParams(f"exponential needs rate > 0, got {params}")
    else:
        raise InvalidSchemeParams(f"unknown scheme {name!r}")
    return scheme


def _draw_scheme(scheme: tuple, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw `size` probabilities; out-of-range draws are redrawn, never
    clamped (clamping would pile mass at the bounds and bias means)."""
    name, *params = scheme
    if name == "uniform":
        return rng.uniform(params[0], params[1], size)
    out = np.empty(size)
    pending = np.arange(size)
    while pending.size:
        if name == "normal":
            sample = rng.normal(params[0], params[1], pending.size)
        else:  # exponential with the given rate
            sample = rng.exponential(1.0 / params[0], pending.size)
        ok = (sample >= 0.0) & (sample <= 1.0)
        out[pending[ok]] = sample[ok]
        pending = pending[~ok]
    return out


def generate_weights(
    edge_count: int, k: int, schemes: Sequence, rng: np.random.Generator
) -> np.ndarray:
    """Per-topic edge probabilities, shape (k, edge_count).

    schemes is one spec per topic, each a tuple like ('uniform', 0, 0.2) or
    its text form accepted by parse_scheme.
    """
    if len(schemes) != k:
        raise InvalidSchemeParams(f"{len(schemes)} schemes for k={k}")
    parsed = [
        _validate_scheme(parse_scheme(s) if isinstance(s, str) else tuple(s))
        for s in schemes
    ]
    return np.stack([_draw_scheme(s, edge_count, rng) for s in parsed])


# ---------------------------------------------------------------------------
# influence graphs and the multi-topic cascade


@dataclass(frozen=True)
class InfluenceGraph:
    """Directed graph with per-topic activation probabilities per edge."""

    node_count: int
    edges: tuple[tuple[int, int], ...]
    probs: tuple[tuple[float, ...], ...]  # [topic][edge]

    def __post_init__(self) -> None:
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < self.node_count and 0 <= v < self.node_count):
                raise ValueError(f"edge ({u},{v}) outside 0..{self.node_count - 1}")
            if (u, v) in seen:
                raise ValueError(f"parallel edge ({u},{v})")
            seen.add((u, v))
        if len(self.probs) < 1:
            raise ValueError("need at least one topic")
        for row in self.probs:
            if len(row) != len(self.edges):
                raise DimsMismatch(f"{len(row)} probabilities for {len(self.edges)} edges")
            if any(not 0.0 <= p <= 1.0 for p in row):
                raise ValueOutOfRange("edge probabilities must lie in [0,1]")

    @property
    def topic_count(self) -> int:
        return len(self.probs)

    @property
    def dims(self) -> Dims:
        return Dims(self.node_count, self.topic_count)

    def adjacency(self) -> list[list[list[tuple[int, float]]]]:
        """Per-topic out-neighbour lists, sorted for deterministic replay."""
        adj = [[[] for _ in range(self.node_count)] for _ in range(self.topic_count)]
        for t in range(self.topic_count):
            for (u, v), p in zip(self.edges, self.probs[t]):
                adj[t][u].append((v, p))
        for t in range(self.topic_count):
            for u in range(self.node_count):
                adj[t][u].sort()
        return adj


def make_influence_graph(
    node_count: int,
    edges: Sequence[tuple[int, int]],
    probs: np.ndarray | Sequence[Sequence[float]],
) -> InfluenceGraph:
    probs_t = tuple(tuple(float(p) for p in row) for row in np.asarray(probs))
    return InfluenceGraph(node_count, tuple((int(u), int(v)) for u, v in edges), probs_t)


def random_influence_graph(
    node_count: int,
    edge_count: int,
    k: int,
    schemes: Sequence,
    rng: np.random.Generator,
) -> InfluenceGraph:
    """Uniformly sampled distinct directed edges with scheme-drawn weights."""
    population = node_count * (node_count - 1)
    if edge_count > population:
        raise ConfigError(f"{edge_count} edges exceed {population} possible")
    codes = rng.choice(population, size=edge_count, replace=False)
    edges = []
    for c in sorted(int(c) for c in codes):
        u, r = divmod(c, node_count - 1)
        v = r if r < u else r + 1
        edges.append((u, v))
    probs = generate_weights(edge_count, k, schemes, rng)
    return make_influence_graph(node_count, edges, probs)


def simulate_k_ic(
    graph: InfluenceGraph,
    seeds: Assignment,
    rng: np.random.Generator,
    adjacency: list | None = None,
) -> int:
    """One multi-topic independent cascade; returns the spread.

    Topic i starts from the elements assigned type i; each newly activated
    node tries each out-edge once with that topic's probability.  The
    spread is the number of nodes activated by at least one topic.
    """
    if seeds.dims != graph.dims:
        raise DimsMismatch(f"seed dims {seeds.dims} != graph dims {graph.dims}")
    adj = adjacency if adjacency is not None else graph.adjacency()
    activated: set[int] = set()
    for t in range(graph.topic_count):
        seed_nodes = sorted(seeds.support_of(t + 1))
        if not seed_nodes:
            continue
        active = set(seed_nodes)
        frontier = seed_nodes
        while frontier:
            nxt = []
            for u in frontier:
                for v, p in adj[t][u]:
                    if v not in active and rng.random() < p:
                        active.add(v)
                        nxt.append(v)
            frontier = nxt
        activated |= active
    return len(activated)


def estimate_sigma(
    graph: InfluenceGraph,
    seeds: Assignment,
    n_sims: int,
    rng: np.random.Generator,
    adjacency: list | None = None,
) -> float:
    """Monte-Carlo mean spread over n_sims cascades."""
    adj = adjacency if adjacency is not None else graph.adjacency()
    total = 0
    for _ in range(n_sims):
        total += simulate_k_ic(graph, seeds, rng, adjacency=adj)
    return total / n_sims


# ---------------------------------------------------------------------------
# reward environments


class InfluenceEnvironment(BanditEnvironment):
    """Each pull runs one cascade; rewards are spread / node_count so they
    lie in [0,1].  expected_value is a seeded Monte-Carlo estimate, fixed
    per assignment regardless of call order (instrumentation only)."""

    def __init__(
        self,
        graph: InfluenceGraph,
        normalize: bool = True,
        expected_sims: int = 100,
        instrument_seed: int = 0,
    ) -> None:
        self.graph = graph
        self.dims = graph.dims
        self.normalize = normalize
        self.expected_sims = expected_sims
        self.instrument_seed = instrument_seed
        self._adj = graph.adjacency()
        self._expected_cache: dict[tuple[int, ...], float] = {}

    def _scale(self) -> float:
        return float(self.graph.node_count) if self.normalize else 1.0

    def pull(self, x: Assignment, rng: np.random.Generator) -> float:
        return simulate_k_ic(self.graph, x, rng, adjacency=self._adj) / self._scale()

    def expected_value(self, x: Assignment) -> float:
        cached = self._expected_cache.get(x.labels)
        if cached is None:
            rng = np.random.default_rng((self.instrument_seed, *x.labels))
            cached = (
                estimate_sigma(self.graph, x, self.expected_sims, rng, adjacency=self._adj)
                / self._scale()
            )
            self._expected_cache[x.labels] = cached
        return cached


def influence_env(
    graph: InfluenceGraph,
    normalize: bool = True,
    expected_sims: int = 100,
    instrument_seed: int = 0,
) -> InfluenceEnvironment:
    return InfluenceEnvironment(graph, normalize, expected_sims, instrument_seed)


class BernoulliEnvironment(BanditEnvironment):
    """Reward ~ Bernoulli(f(x)); f must map into [0,1] (caller rescales)."""

    def __init__(self, oracle: ValueOracle, dims: Dims, tol: float = 1e-9) -> None:
        self.oracle = oracle
        self.dims = dims
        self.tol = tol
        self._cache: dict[tuple[int, ...], float] = {}

    def _p(self, x: Assignment) -> float:
        p = self._cache.get(x.labels)
        if p is None:
            p = self.oracle.evaluate(x)
            if p < -self.tol or p > 1.0 + self.tol:
                raise ValueOutOfRange(f"value {p} at {x} outside [0,1]")
            p = min(1.0, max(0.0, float(p)))
            self._cache[x.labels] = p
        return p

    def pull(self, x: Assignment, rng: np.random.Generator) -> float:
        return 1.0 if rng.random() < self._p(x) else 0.0

    def expected_value(self, x: Assignment) -> float:
        return self._p(x)


def bernoulli_env(oracle: ValueOracle, dims: Dims) -> BernoulliEnvironment:
    return BernoulliEnvironment(oracle, dims)


class DeterministicEnvironment(BernoulliEnvironment):
    """Zero-variance environment: every pull returns f(x) itself."""

    def pull(self, x: Assignment, rng: np.random.Generator) -> float:
        return self._p(x)


def deterministic_env(oracle: ValueOracle, dims: Dims) -> DeterministicEnvironment:
    return DeterministicEnvironment(oracle, dims)


# ---------------------------------------------------------------------------
# graph file format


def save_graph(graph: InfluenceGraph, path: str | Path) -> None:
    lines = [f"nodes {graph.node_count}"]
    for j, (u, v) in enumerate(graph.edges):
        probs = " ".join(repr(float(graph.probs[t][j])) for t in range(graph.topic_count))
        lines.append(f"{u} {v} {probs}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_graph(
    path: str | Path,
    schemes: Sequence | None = None,
    seed: int = 0,
) -> InfluenceGraph:
    """Parse `u v p_1 ... p_k` edge lines (0-indexed), or bare `u v` lines
    plus per-topic schemes used to draw the probabilities.

    An optional `nodes <N>` line pins the node count; otherwise it is
    max index + 1.
    """
    node_count = None
    edges: list[tuple[int, int]] = []
    prob_rows: list[tuple[float, ...]] = []
    for line in _content_lines(path):
        tokens = line.split()
        if tokens[0] == "nodes":
            node_count = int(tokens[1])
            continue
        if len(tokens) < 2:
            raise FormatError(f"bad edge line {line!r}")
        try:
            u, v = int(tokens[0]), int(tokens[1])
            probs = tuple(float(t) for t in tokens[2:])
        except ValueError as exc:
            raise FormatError(f"bad edge line {line!r}") from exc
        edges.append((u, v))
        prob_rows.append(probs)
    if not edges:
        raise FormatError(f"no edges in {path}")
    widths = {len(r) for r in prob_rows}
    if len(widths) != 1:
        raise FormatError("inconsistent column counts across edge lines")
    width = widths.pop()
    if node_count is None:
        node_count = 1 + max(max(u, v) for u, v in edges)
    if width == 0:
        if not schemes:
            raise FormatError("unweighted graph file needs weight schemes")
        rng = np.random.default_rng(seed)
        probs = generate_weights(len(edges), len(schemes), schemes, rng)
    else:
        probs = np.array(prob_rows).T
    return make_influence_graph(node_count, edges, probs)


# ---------------------------------------------------------------------------
# environment spec strings


def scaled_exact_oracle(
    instance: Instance, limit: int = DEFAULT_EXHAUSTION_LIMIT
) -> tuple[ValueOracle, float]:
    """Exact oracle divided by the lattice maximum when that exceeds 1, so
    values fit a Bernoulli environment.  Returns (oracle, scale)."""
    values = lattice_values(exact_oracle(instance), instance.dims)
    top = float(values.max())
    scale = top if top > 1.0 else 1.0
    inner = exact_oracle(instance)
    return FunctionOracle(lambda x: inner.evaluate(x) / scale), scale


def _parse_kv(segments: list[str]) -> dict[str, str]:
    out = {}
    for seg in segments:
        key, eq, val = seg.partition("=")
        if not eq:
            out[key.strip()] = "true"
        else:
            out[key.strip()] = val.strip()
    return out


def build_environment(spec: str, base_dir: str | Path = ".") -> BanditEnvironment:
    """Build an environment from a spec string.

    Forms: `coverage:<file>` or `coverage:n=..,k=..,seed=..[,universe=..][,density=..]`
    (likewise `coupled:`), `bernoulli:<instancefile>`, and
    `influence:<graphfile>[,raw][,sims=..][,seed=..][,schemes=a|b|c]`.
    Instance-backed environments are Bernoulli draws on values scaled into
    [0,1] by the lattice maximum.
    """
    kind, _, rest = spec.strip().partition(":")
    if not rest:
        raise ConfigError(f"environment spec {spec!r} needs a payload")
    segments = [s for s in rest.split(",") if s]
    if kind in ("coverage", "coupled"):
        if "=" in segments[0]:
            opts = _parse_kv(segments)
            try:
                n, k = int(opts.pop("n")), int(opts.pop("k"))
                seed = int(opts.pop("seed", "0"))
                universe = int(opts["universe"]) if "universe" in opts else None
                opts.pop("universe", None)
                density = float(opts.pop("density")) if "density" in opts else None
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"bad generator params in {spec!r}") from exc
            if opts:
                raise ConfigError(f"unknown keys {sorted(opts)} in {spec!r}")
            rng = np.random.default_rng(seed)
            kwargs = {"universe_size": universe}
            if density is not None:
                kwargs["density"] = density
            if kind == "coverage":
                instance = generate_coverage(n, k, rng, **kwargs)
            else:
                instance = generate_coupled(n, k, rng, **kwargs)
        else:
            instance = load_instance(Path(base_dir) / segments[0])
            expected = {"coverage": CoverageInstance, "coupled": CoupledInstance}[kind]
            if not isinstance(instance, expected):
                raise ConfigError(f"{segments[0]} is not a {kind} instance")
        oracle, _ = scaled_exact_oracle(instance)
        return bernoulli_env(oracle, instance.dims)
    if kind == "bernoulli":
        instance = load_instance(Path(base_dir) / segments[0])
        oracle, _ = scaled_exact_oracle(instance)
        return bernoulli_env(oracle, instance.dims)
    if kind == "influence":
        path = Path(base_dir) / segments[0]
        opts = _parse_kv(segments[1:])
        normalize = opts.pop("raw", None) is None
        sims = int(opts.pop("sims", "100"))
        seed = int(opts.pop("seed", "0"))
        schemes = opts.pop("schemes", None)
        if opts:
            raise ConfigError(f"unknown keys {sorted(opts)} in {spec!r}")
        scheme_list = schemes.split("|") if schemes else None
        graph = load_graph(path, schemes=scheme_list, seed=seed)
        return influence_env(graph, normalize=normalize, expected_sims=sims)
    raise ConfigError(f"unknown environment kind {kind!r}")
