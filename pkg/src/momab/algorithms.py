"""Round engines for the bandit algorithms under comparison.

Two proposed algorithms (Pareto UCB with gossip, simulated NSW UCB with
gossip) and four ablations.  Every engine advances one synchronous round per
``step(t)`` call: sample the round's communication graph, pick arms, observe
rewards, update running means, then mix the gossip state.  State is held as
stacked arrays with one row per agent; ``agent_state(i)`` hands out views for
inspection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .environment import ConfigError, Environment, ExperimentConfig
from .network import (
    BaseGraph,
    RoundGraph,
    WeightMatrix,
    build_weight_matrix,
    gossip_mix,
    sample_round_graph,
)
from .nsw import solve_nsw_batch


@dataclass
class TrialStreams:
    """Independent random streams for one (trial, algorithm) run."""

    graph: np.random.Generator
    choice: np.random.Generator
    reward: np.random.Generator
    solver: np.random.Generator


def _consensus_constant(n_agents: int, link_prob: float, kappa: float) -> float:
    if kappa < 0.0:
        raise ConfigError("config key 'consensus-coeff': must be nonnegative")
    if kappa == 0.0:
        return 0.0
    if link_prob >= 1.0:
        raise ConfigError(
            "config key 'link-prob': consensus term divides by 1 - sqrt(link-prob); "
            "use a consensus coefficient of 0 when link-prob is 1"
        )
    return kappa * 2.0 * math.sqrt(n_agents) / (1.0 - math.sqrt(link_prob))


def exploration_radius(
    t: int,
    counts: np.ndarray,
    n_dims: int,
    front_size_proxy: int,
    n_agents: int,
    link_prob: float,
    kappa: float,
) -> np.ndarray:
    """Optimism radius added to every coordinate of an arm's gossip estimate.

    sqrt(8 log(t (D * proxy)^(1/4)) / T) plus kappa * 2 sqrt(N) / (1 - sqrt(p)).
    The log argument is floored at e so the radicand stays positive at t = 1.
    The consensus term is identical for every arm, which shifts all candidate
    vectors equally and therefore never changes which arms are non-dominated.
    """
    counts = np.asarray(counts)
    if np.any(counts < 1):
        raise ValueError("every arm needs at least one pull before the radius exists")
    arg = max(math.e, t * (n_dims * front_size_proxy) ** 0.25)
    constant = _consensus_constant(n_agents, link_prob, kappa)
    return np.sqrt(8.0 * math.log(arg) / counts) + constant


def explore_bonus(t: int, own_counts: np.ndarray, n_agents: int, n_arms: int) -> np.ndarray:
    """Per-arm exploration bonus sqrt(log(N K t) / T_own), log floored at 0."""
    own_counts = np.asarray(own_counts)
    if np.any(own_counts < 1):
        raise ValueError("every arm needs at least one pull before the bonus exists")
    return np.sqrt(max(0.0, math.log(n_agents * n_arms * t)) / own_counts)


def elimination_half_width(
    horizon: int,
    counts: np.ndarray,
    n_dims: int,
    n_agents: int,
    link_prob: float,
    kappa: float,
) -> np.ndarray:
    """Confidence half-width for the successive-elimination baseline.

    sqrt(2 log(T sqrt(D)) / T_ik) plus the same optional consensus constant as
    the optimism radius.  Unlike there, the constant is not behaviorally
    neutral here: it widens intervals on both sides of the dominance test, so
    any positive kappa delays every elimination.
    """
    counts = np.asarray(counts)
    if np.any(counts < 1):
        raise ValueError("every arm needs at least one pull before the width exists")
    constant = _consensus_constant(n_agents, link_prob, kappa)
    return np.sqrt(2.0 * math.log(horizon * math.sqrt(n_dims)) / counts) + constant


def _front_masks(vectors: np.ndarray) -> np.ndarray:
    """(N, K) mask of rows' non-dominated arms, computed for all agents at once."""
    a = vectors[:, :, None, :]
    b = vectors[:, None, :, :]
    dominated = (np.all(a >= b, axis=-1) & np.any(a > b, axis=-1)).any(axis=1)
    return ~dominated


def _pick_uniform(masks: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One uniformly random True column per row."""
    sizes = masks.sum(axis=1)
    draws = np.floor(rng.random(masks.shape[0]) * sizes).astype(np.int64)
    running = masks.cumsum(axis=1)
    return np.argmax(running > draws[:, None], axis=1)


@dataclass
class ParetoAgentState:
    """Views into one agent's slice of a Pareto engine's stacked state."""

    counts: np.ndarray
    local_means: np.ndarray
    global_avgs: np.ndarray | None


@dataclass
class NswAgentState:
    """Views into one agent's slice of an NSW engine's stacked state."""

    counts: np.ndarray
    local_means: np.ndarray
    global_avgs: np.ndarray | None
    dist: np.ndarray


class _ParetoEngine:
    """Shared plumbing for the vector-reward (Pareto suite) engines."""

    suite = "pareto"
    mixes = True

    def __init__(
        self,
        env: Environment,
        config: ExperimentConfig,
        streams: TrialStreams,
        base: BaseGraph | None = None,
    ) -> None:
        self.env = env
        self.config = config
        self.streams = streams
        self.base = base if base is not None else BaseGraph.complete(env.n_agents)
        if self.base.n_agents != env.n_agents:
            raise ValueError("base graph size does not match the environment")
        n, k, d = env.n_agents, env.n_arms, env.n_dims
        self.counts = np.zeros((n, k), dtype=np.int64)
        self.local_means = np.zeros((n, k, d))
        self.global_avgs = np.zeros((n, k, d)) if self.mixes else None
        self._inc = np.zeros((n, k, d))
        self._rows = np.arange(n)
        self._check_radius_config()

    def _check_radius_config(self) -> None:
        _consensus_constant(
            self.env.n_agents, self.config.link_prob, self.config.consensus_coeff
        )

    def agent_state(self, agent: int) -> ParetoAgentState:
        return ParetoAgentState(
            counts=self.counts[agent],
            local_means=self.local_means[agent],
            global_avgs=None if self.global_avgs is None else self.global_avgs[agent],
        )

    def step(self, t: int) -> np.ndarray:
        weights: WeightMatrix | None = None
        if self.mixes:
            graph = sample_round_graph(self.base, self.config.link_prob, self.streams.graph)
            weights = build_weight_matrix(graph)
        arms = self._select(t)
        means = self.env.means[self._rows, arms]
        rewards = (
            self.streams.reward.random((self.env.n_agents, self.env.n_dims)) < means
        ).astype(np.float64)
        self._update(arms, rewards)
        if self.mixes:
            self.global_avgs = gossip_mix(weights, self.global_avgs, self._inc)
        self._after_mix(t)
        return arms

    def _update(self, arms: np.ndarray, rewards: np.ndarray) -> None:
        rows = self._rows
        self.counts[rows, arms] += 1
        new_counts = self.counts[rows, arms]
        old = self.local_means[rows, arms]
        delta = (rewards - old) / new_counts[:, None]
        self.local_means[rows, arms] = old + delta
        if self.mixes:
            self._inc.fill(0.0)
            self._inc[rows, arms] = delta

    def _select(self, t: int) -> np.ndarray:
        raise NotImplementedError

    def _after_mix(self, t: int) -> None:
        pass


class _ParetoUcbEngine(_ParetoEngine):
    """Optimistic front sampling; subclasses choose the estimate source."""

    radius_kappa: float | None = None  # None means take the config value

    def _estimates(self) -> np.ndarray:
        raise NotImplementedError

    def _select(self, t: int) -> np.ndarray:
        k = self.env.n_arms
        if t <= k:
            return np.full(self.env.n_agents, t - 1, dtype=np.int64)
        kappa = (
            self.config.consensus_coeff if self.radius_kappa is None else self.radius_kappa
        )
        radius = exploration_radius(
            t,
            self.counts,
            self.env.n_dims,
            k,
            self.env.n_agents,
            self.config.link_prob,
            kappa,
        )
        optimistic = self._estimates() + radius[:, :, None]
        return _pick_uniform(_front_masks(optimistic), self.streams.choice)


class ParetoUcbGossip(_ParetoUcbEngine):
    """Proposed algorithm: optimism over gossip-mixed centered estimates."""

    mixes = True

    def _estimates(self) -> np.ndarray:
        return self.global_avgs


class IndependentParetoUcb(_ParetoUcbEngine):
    """Ablation: no communication, optimism over the agent's own means."""

    mixes = False
    radius_kappa = 0.0

    def _check_radius_config(self) -> None:
        pass  # no consensus term, so link_prob = 1 is fine here

    def _estimates(self) -> np.ndarray:
        return self.local_means


class MoGossipElimination(_ParetoEngine):
    """Baseline: round-robin over active arms with successive elimination.

    Each agent pulls its least-pulled active arm (lowest index on ties) and
    drops an active arm once some arm's lower-confidence vector dominates its
    upper-confidence vector, both built from the gossip-mixed estimates.
    """

    mixes = True

    def __init__(self, *args, **kwargs) -> None:
        super().__init__(*args, **kwargs)
        self.active = np.ones((self.env.n_agents, self.env.n_arms), dtype=bool)
        _consensus_constant(
            self.env.n_agents, self.config.link_prob, self.config.elim_consensus_coeff
        )

    def agent_active_set(self, agent: int) -> np.ndarray:
        return np.flatnonzero(self.active[agent])

    def _select(self, t: int) -> np.ndarray:
        blocked = np.where(self.active, self.counts, np.iinfo(np.int64).max)
        return np.argmin(blocked, axis=1)  # argmin takes the lowest index on ties

    def _after_mix(self, t: int) -> None:
        if self.counts.min() < 1:
            return  # still warming up; half-widths are undefined at count 0
        half = elimination_half_width(
            self.config.horizon,
            self.counts,
            self.env.n_dims,
            self.env.n_agents,
            self.config.link_prob,
            self.config.elim_consensus_coeff,
        )
        upper = self.global_avgs + half[:, :, None]
        lower = self.global_avgs - half[:, :, None]
        lo_m = lower[:, :, None, :]
        dom_ll = (
            np.all(lo_m >= lower[:, None, :, :], axis=-1)
            & np.any(lo_m > lower[:, None, :, :], axis=-1)
        )
        dom_lu = (
            np.all(lo_m >= upper[:, None, :, :], axis=-1)
            & np.any(lo_m > upper[:, None, :, :], axis=-1)
        )
        front = self.active & ~(dom_ll & self.active[:, :, None]).any(axis=1)
        eliminated = (dom_lu & front[:, :, None]).any(axis=1) & self.active
        remaining = self.active & ~eliminated
        if not remaining.any(axis=1).all():
            raise RuntimeError("every arm was eliminated; half-widths are broken")
        self.active = remaining


class _NswEngine:
    """Shared plumbing for the scalarized-simulation (NSW suite) engines."""

    suite = "nsw"
    mixes = True
    sim_mode = "neighbors"  # which rows of the local matrix a pull refreshes
    uses_global = True

    def __init__(
        self,
        env: Environment,
        config: ExperimentConfig,
        streams: TrialStreams,
        base: BaseGraph | None = None,
    ) -> None:
        self.env = env
        self.config = config
        self.streams = streams
        self.base = base if base is not None else BaseGraph.complete(env.n_agents)
        if self.base.n_agents != env.n_agents:
            raise ValueError("base graph size does not match the environment")
        n, k = env.n_agents, env.n_arms
        self.counts = np.zeros((n, n, k), dtype=np.int64)
        self.local_means = np.zeros((n, n, k))
        self.global_avgs = np.zeros((n, n, k)) if self.mixes else None
        self.dists = np.zeros((n, k))
        self._inc = np.zeros((n, n, k))
        self._rows = np.arange(n)
        self._static_pairs: tuple[np.ndarray, np.ndarray] | None = None
        if self.sim_mode == "all":
            grid = np.indices((n, n))
            self._static_pairs = (grid[0].ravel(), grid[1].ravel())
        elif self.sim_mode == "self":
            self._static_pairs = (self._rows, self._rows)

    def agent_state(self, agent: int) -> NswAgentState:
        return NswAgentState(
            counts=self.counts[agent],
            local_means=self.local_means[agent],
            global_avgs=None if self.global_avgs is None else self.global_avgs[agent],
            dist=self.dists[agent],
        )

    def own_counts(self) -> np.ndarray:
        return self.counts[self._rows, self._rows]

    def step(self, t: int) -> np.ndarray:
        n, k = self.env.n_agents, self.env.n_arms
        weights: WeightMatrix | None = None
        graph: RoundGraph | None = None
        if self.mixes:
            graph = sample_round_graph(self.base, self.config.link_prob, self.streams.graph)
            weights = build_weight_matrix(graph)
        if t <= k:
            dists = np.zeros((n, k))
            dists[:, t - 1] = 1.0
            arms = np.full(n, t - 1, dtype=np.int64)
        else:
            source = self.global_avgs if self.uses_global else self.local_means
            # Mixing can momentarily push an estimate a hair below zero; the
            # welfare objective needs nonnegative utilities.
            utilities = np.maximum(source, 0.0)
            bonus = self.config.nsw_alpha(t) * explore_bonus(t, self.own_counts(), n, k)
            dists = solve_nsw_batch(
                utilities,
                bonus,
                self.streams.solver,
                self.config.solver_restarts,
                self.config.solver_max_iters,
                self.config.solver_tol,
            )
            draws = self.streams.choice.random(n)
            running = dists.cumsum(axis=1)
            arms = np.minimum((running < draws[:, None]).sum(axis=1), k - 1)
        self.dists = dists
        means = self.env.means[self._rows, arms]
        rewards = (self.streams.reward.random((n, self.env.n_dims)) < means).astype(
            np.float64
        )
        scalarized = rewards @ self.env.prefs.T  # [i, j] = <w_j, X_i>
        self._update(arms, scalarized, graph)
        if self.mixes:
            self.global_avgs = gossip_mix(weights, self.global_avgs, self._inc)
        return arms

    def _update(
        self, arms: np.ndarray, scalarized: np.ndarray, graph: RoundGraph | None
    ) -> None:
        if self._static_pairs is not None:
            i_idx, j_idx = self._static_pairs
        else:
            mask = graph.adjacency | np.eye(self.env.n_agents, dtype=bool)
            i_idx, j_idx = np.nonzero(mask)
        a_idx = arms[i_idx]
        self.counts[i_idx, j_idx, a_idx] += 1
        new_counts = self.counts[i_idx, j_idx, a_idx]
        old = self.local_means[i_idx, j_idx, a_idx]
        delta = (scalarized[i_idx, j_idx] - old) / new_counts
        self.local_means[i_idx, j_idx, a_idx] = old + delta
        if self.mixes:
            self._inc.fill(0.0)
            self._inc[i_idx, j_idx, a_idx] = delta


class SimulatedNswGossip(_NswEngine):
    """Proposed algorithm: simulate rewards for reachable peers and gossip."""

    mixes = True
    sim_mode = "neighbors"
    uses_global = True


class NoGossipNsw(_NswEngine):
    """Ablation: simulate every peer each round but never communicate."""

    mixes = False
    sim_mode = "all"
    uses_global = False


class NoSimNsw(_NswEngine):
    """Ablation: communicate every round but only simulate oneself."""

    mixes = True
    sim_mode = "self"
    uses_global = True


@dataclass(frozen=True)
class AlgorithmInfo:
    name: str
    suite: str
    factory: type


ALGORITHMS: dict[str, AlgorithmInfo] = {
    "pareto_ucb_gossip": AlgorithmInfo("pareto_ucb_gossip", "pareto", ParetoUcbGossip),
    "pareto_gossip": AlgorithmInfo("pareto_gossip", "pareto", MoGossipElimination),
    "pareto_ucb": AlgorithmInfo("pareto_ucb", "pareto", IndependentParetoUcb),
    "nsw_ucb_gossip": AlgorithmInfo("nsw_ucb_gossip", "nsw", SimulatedNswGossip),
    "no_gossip": AlgorithmInfo("no_gossip", "nsw", NoGossipNsw),
    "no_sim": AlgorithmInfo("no_sim", "nsw", NoSimNsw),
}

PARETO_SUITE = ("pareto_ucb_gossip", "pareto_gossip", "pareto_ucb")
NSW_SUITE = ("nsw_ucb_gossip", "no_gossip", "no_sim")
