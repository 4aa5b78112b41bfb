"""k-submodular maximization: offline solvers, robustness checks, bandits."""

from .bandit import (
    BanditEnvironment,
    ExplorationSchedule,
    Trajectory,
    compute_alpha_regret,
    confidence_radius,
    enumerate_maximal_actions,
    run_cetc,
    run_naive_ucb,
    run_random,
)
from .constraints import (
    ExplicitMatroid,
    IndividualBudgets,
    MatroidOracle,
    PartitionMatroid,
    UniformMatroid,
    available_elements,
    check_matroid_axioms,
    matroid_rank,
    parse_constraint,
)
from .core import (
    Assignment,
    BoundedNoisyOracle,
    Dims,
    FunctionOracle,
    TableOracle,
    ValueOracle,
    check_k_submodular,
    check_monotone,
    lattice_points,
    lattice_values,
    marginal_gain,
    precedes,
)
from .environments import (
    CoupledInstance,
    CoverageInstance,
    InfluenceGraph,
    TableInstance,
    bernoulli_env,
    build_environment,
    deterministic_env,
    estimate_sigma,
    exact_oracle,
    generate_coupled,
    generate_coverage,
    generate_weights,
    influence_env,
    load_graph,
    load_instance,
    random_influence_graph,
    save_graph,
    save_instance,
    simulate_k_ic,
)
from .experiment import (
    AggregateReport,
    ExperimentConfig,
    emit_plot_data,
    load_report,
    run_experiment,
)
from .solvers import (
    SolverOutput,
    SolverSpec,
    brute_force_opt,
    check_partition_optimality,
    greedy_individual_size,
    greedy_matroid,
    solve_unconstrained_monotone,
    solve_unconstrained_nonmonotone,
    verify_robustness,
)

__version__ = "0.1.0"
