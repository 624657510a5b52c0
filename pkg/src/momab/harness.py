"""Trial and experiment runners with deterministic stream derivation.

Randomness discipline: every stream is derived from (master seed, trial,
algorithm, purpose), so the environment of a trial is shared by all
algorithms, while graph draws, arm choices, reward draws, and solver restarts
are independent of each other and of everything in other trials.  Replaying a
configuration reproduces every trace bit for bit.
"""

from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .algorithms import ALGORITHMS, TrialStreams
from .environment import Environment, ExperimentConfig, centered_scalar_means, generate_environment
from .nsw import NswBenchmark, nsw_regret_step, optimal_distribution
from .pareto import ParetoMetrics, pareto_gaps, pareto_regret_step

log = logging.getLogger(__name__)

# algorithm_id used when deriving streams that belong to the trial itself
# (environment, benchmark) rather than to any one algorithm's run.
SHARED_ALGORITHM = "__trial__"

# Agent averages of the mixed state must track agent averages of the local
# means exactly (double stochasticity); anything above this is a mixing bug.
MIXING_TOLERANCE = 1e-6


class ExperimentError(RuntimeError):
    """Every trial of some algorithm failed; aggregates would be meaningless."""


def _stable_hash64(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "little")


def derive_stream(
    master_seed: int, trial: int, algorithm_id: str, purpose: str
) -> np.random.Generator:
    """Deterministic, collision-resistant stream for one role in one run."""
    if trial < 0:
        raise ValueError("trial index must be nonnegative")
    entropy = (
        int(master_seed) & 0xFFFFFFFFFFFFFFFF,
        int(trial),
        _stable_hash64(algorithm_id),
        _stable_hash64(purpose),
    )
    return np.random.default_rng(np.random.SeedSequence(entropy))


def trial_environment(config: ExperimentConfig, trial: int) -> Environment:
    """The environment every algorithm shares within a trial."""
    rng = derive_stream(config.master_seed, trial, SHARED_ALGORITHM, "env")
    return generate_environment(config, rng)


def trial_streams(config: ExperimentConfig, trial: int, algorithm_id: str) -> TrialStreams:
    seed = config.master_seed
    return TrialStreams(
        graph=derive_stream(seed, trial, algorithm_id, "graph"),
        choice=derive_stream(seed, trial, algorithm_id, "choice"),
        reward=derive_stream(seed, trial, algorithm_id, "reward"),
        solver=derive_stream(seed, trial, algorithm_id, "solver"),
    )


def consensus_diagnostic(global_avgs: np.ndarray) -> float:
    """Largest deviation of any agent's mixed state from the agent average."""
    centered = global_avgs - global_avgs.mean(axis=0, keepdims=True)
    return float(np.abs(centered).max()) if centered.size else 0.0


def unbiasedness_diagnostic(global_avgs: np.ndarray, local_means: np.ndarray) -> float:
    """Max gap between agent-averaged mixed state and agent-averaged means.

    Taken right after a round, the mixed state is one update ahead of the
    local means, which is exactly the alignment under which the two agent
    averages coincide for doubly stochastic mixing.
    """
    gap = global_avgs.mean(axis=0) - local_means.mean(axis=0)
    return float(np.abs(gap).max()) if gap.size else 0.0


@dataclass(frozen=True)
class RegretTrace:
    """Cumulative regret of one (algorithm, trial) run at recorded rounds."""

    algorithm: str
    trial: int
    samples: tuple[tuple[int, float], ...]

    def final(self) -> float:
        return self.samples[-1][1]

    def at(self, t: int) -> float:
        for when, value in self.samples:
            if when == t:
                return value
        raise KeyError(f"round {t} was not recorded")


@dataclass(frozen=True)
class TrialFailure:
    algorithm: str
    trial: int
    message: str


@dataclass(frozen=True)
class AggregateResult:
    """Across-trial mean/std of cumulative regret on the shared record grid."""

    algorithm: str
    ts: tuple[int, ...]
    mean: np.ndarray
    std: np.ndarray
    band: np.ndarray

    def __post_init__(self) -> None:
        self.mean.flags.writeable = False
        self.std.flags.writeable = False
        self.band.flags.writeable = False


@dataclass(frozen=True)
class ExperimentResult:
    traces: tuple[RegretTrace, ...]
    aggregates: dict[str, AggregateResult]
    failures: tuple[TrialFailure, ...] = field(default_factory=tuple)

    @property
    def all_succeeded(self) -> bool:
        return not self.failures


def record_grid(config: ExperimentConfig) -> tuple[int, ...]:
    """Rounds at which cumulative regret is recorded: every stride, plus T."""
    stride = config.record_every
    grid = list(range(stride, config.horizon + 1, stride))
    if not grid or grid[-1] != config.horizon:
        grid.append(config.horizon)
    return tuple(grid)


def run_trial(config: ExperimentConfig, algorithm_id: str, trial: int) -> RegretTrace:
    """Run one algorithm for one trial and return its regret trace."""
    if algorithm_id not in ALGORITHMS:
        raise KeyError(f"unknown algorithm '{algorithm_id}'")
    info = ALGORITHMS[algorithm_id]
    env = trial_environment(config, trial)

    metrics: ParetoMetrics | None = None
    bench: NswBenchmark | None = None
    if info.suite == "pareto":
        metrics = pareto_gaps(env)
    else:
        bench_rng = derive_stream(config.master_seed, trial, SHARED_ALGORITHM, "benchmark")
        bench = optimal_distribution(centered_scalar_means(env), bench_rng)

    engine = info.factory(env, config, trial_streams(config, trial, algorithm_id))
    record_at = set(record_grid(config))
    samples: list[tuple[int, float]] = []
    cumulative = 0.0
    for t in range(1, config.horizon + 1):
        arms = engine.step(t)
        if metrics is not None:
            cumulative += pareto_regret_step(metrics, arms)
        else:
            cumulative += nsw_regret_step(bench, engine.dists, config.solver_tol)
        if t in record_at:
            samples.append((t, cumulative))
            if engine.global_avgs is not None:
                drift = unbiasedness_diagnostic(engine.global_avgs, engine.local_means)
                if drift > MIXING_TOLERANCE:
                    raise RuntimeError(
                        f"mixing lost mass at t={t}: average drift {drift:.3e}"
                    )
    return RegretTrace(algorithm=algorithm_id, trial=trial, samples=tuple(samples))


def aggregate_traces(
    algorithm_id: str, traces: list[RegretTrace]
) -> AggregateResult:
    """Pointwise mean/std over trials; the shaded band is std / 4."""
    if not traces:
        raise ValueError("cannot aggregate zero traces")
    ts = tuple(t for t, _ in traces[0].samples)
    for trace in traces[1:]:
        if tuple(t for t, _ in trace.samples) != ts:
            raise ValueError("traces share a config and must share a record grid")
    values = np.array([[v for _, v in trace.samples] for trace in traces])
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    return AggregateResult(
        algorithm=algorithm_id, ts=ts, mean=mean, std=std, band=std / 4.0
    )


def _run_trial_task(
    args: tuple[ExperimentConfig, str, int]
) -> "RegretTrace | TrialFailure":
    config, algorithm_id, trial = args
    try:
        return run_trial(config, algorithm_id, trial)
    except Exception as exc:  # noqa: BLE001 - a bad trial must not sink the run
        return TrialFailure(algorithm_id, trial, str(exc))


def run_experiment(
    config: ExperimentConfig, algorithm_ids: tuple[str, ...] | list[str]
) -> ExperimentResult:
    """All requested algorithms across all trials, trial-level parallelism.

    A failed trial is logged and excluded from the aggregates; an algorithm
    whose every trial fails aborts the experiment.
    """
    for algorithm_id in algorithm_ids:
        if algorithm_id not in ALGORITHMS:
            raise KeyError(f"unknown algorithm '{algorithm_id}'")
    jobs = [
        (config, algorithm_id, trial)
        for algorithm_id in algorithm_ids
        for trial in range(config.n_trials)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_run_trial_task, jobs))
    else:
        outcomes = [_run_trial_task(job) for job in jobs]

    traces = tuple(o for o in outcomes if isinstance(o, RegretTrace))
    failures = tuple(o for o in outcomes if isinstance(o, TrialFailure))
    for failure in failures:
        log.warning(
            "trial %d of %s failed: %s", failure.trial, failure.algorithm, failure.message
        )
    aggregates: dict[str, AggregateResult] = {}
    for algorithm_id in algorithm_ids:
        ok = [t for t in traces if t.algorithm == algorithm_id]
        if not ok:
            raise ExperimentError(f"every trial of '{algorithm_id}' failed")
        aggregates[algorithm_id] = aggregate_traces(algorithm_id, ok)
    return ExperimentResult(traces=traces, aggregates=aggregates, failures=failures)
