"""Simulations of decentralized multi-objective bandits with gossip."""

from .environment import (
    ConfigError,
    Environment,
    ExperimentConfig,
    centered_mean,
    centered_means,
    centered_scalar_means,
    generate_environment,
    sample_reward,
    scalar_mean,
)
from .network import (
    BaseGraph,
    RoundGraph,
    WeightMatrix,
    build_weight_matrix,
    estimate_spectral_gap,
    gossip_mix,
    sample_round_graph,
)
from .pareto import (
    ParetoMetrics,
    dominates,
    eps_distance,
    pareto_front,
    pareto_gaps,
    pareto_regret_step,
)
from .nsw import (
    BenchmarkError,
    NswBenchmark,
    maximize_nsw,
    nsw_regret_step,
    nsw_value,
    optimal_distribution,
    project_to_simplex,
)
from .algorithms import (
    ALGORITHMS,
    NSW_SUITE,
    PARETO_SUITE,
    TrialStreams,
    elimination_half_width,
    exploration_radius,
    explore_bonus,
)
from .harness import (
    AggregateResult,
    ExperimentError,
    ExperimentResult,
    RegretTrace,
    consensus_diagnostic,
    derive_stream,
    run_experiment,
    run_trial,
    unbiasedness_diagnostic,
)

__version__ = "0.1.0"
