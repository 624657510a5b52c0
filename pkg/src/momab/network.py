"""Time-varying gossip graphs and the mixing they induce.

Each round an independent random subgraph of a fixed base graph is drawn:
every base edge is kept with probability p.  The round's weight matrix puts
1/N on each surviving edge and the leftover mass on the diagonal, which makes
it symmetric and doubly stochastic by construction, so mixing preserves the
network average of whatever the agents are averaging.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class PowerIterationError(RuntimeError):
    """Power iteration failed to settle within its iteration budget."""


def _validate_edges(n_agents: int, edges: tuple[tuple[int, int], ...]) -> None:
    seen = set()
    adjacency = [[] for _ in range(n_agents)]
    for u, v in edges:
        if not (0 <= u < n_agents and 0 <= v < n_agents):
            raise ValueError(f"edge ({u}, {v}) out of range")
        if u == v:
            raise ValueError(f"self loop at node {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise ValueError(f"duplicate edge {key}")
        seen.add(key)
        adjacency[u].append(v)
        adjacency[v].append(u)
    if n_agents > 1:
        # BFS connectivity check; a disconnected base graph can never reach
        # consensus no matter how often edges fire.
        reached = {0}
        frontier = [0]
        while frontier:
            node = frontier.pop()
            for nxt in adjacency[node]:
                if nxt not in reached:
                    reached.add(nxt)
                    frontier.append(nxt)
        if len(reached) != n_agents:
            raise ValueError("base graph must be connected")


@dataclass(frozen=True)
class BaseGraph:
    """Undirected simple connected graph the round graphs are sampled from."""

    n_agents: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if self.n_agents < 1:
            raise ValueError("need at least one agent")
        canonical = tuple(sorted((min(u, v), max(u, v)) for u, v in self.edges))
        object.__setattr__(self, "edges", canonical)
        _validate_edges(self.n_agents, canonical)

    @classmethod
    def complete(cls, n_agents: int) -> "BaseGraph":
        edges = tuple(
            (i, j) for i in range(n_agents) for j in range(i + 1, n_agents)
        )
        return cls(n_agents=n_agents, edges=edges)

    def edge_array(self) -> np.ndarray:
        """(E, 2) int array; empty edge sets come back with shape (0, 2)."""
        if not self.edges:
            return np.empty((0, 2), dtype=np.int64)
        return np.asarray(self.edges, dtype=np.int64)


@dataclass(frozen=True)
class RoundGraph:
    """One round's realized communication graph, as a boolean adjacency."""

    adjacency: np.ndarray

    def __post_init__(self) -> None:
        adj = np.asarray(self.adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(adj)):
            raise ValueError("adjacency must have an empty diagonal")
        adj.flags.writeable = False
        object.__setattr__(self, "adjacency", adj)

    @property
    def n_agents(self) -> int:
        return self.adjacency.shape[0]

    def neighbors(self, agent: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[agent])


def sample_round_graph(
    base: BaseGraph, link_prob: float, rng: np.random.Generator
) -> RoundGraph:
    """Keep each base edge independently with probability link_prob."""
    if not 0.0 < link_prob <= 1.0:
        raise ValueError("link_prob must lie in (0, 1]")
    edges = base.edge_array()
    adj = np.zeros((base.n_agents, base.n_agents), dtype=bool)
    if edges.shape[0]:
        keep = rng.random(edges.shape[0]) < link_prob
        live = edges[keep]
        adj[live[:, 0], live[:, 1]] = True
        adj[live[:, 1], live[:, 0]] = True
    return RoundGraph(adjacency=adj)


@dataclass(frozen=True)
class WeightMatrix:
    """Symmetric doubly stochastic mixing weights for one round."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.entries, dtype=np.float64)
        w.flags.writeable = False
        object.__setattr__(self, "entries", w)

    @property
    def n_agents(self) -> int:
        return self.entries.shape[0]


def build_weight_matrix(graph: RoundGraph) -> WeightMatrix:
    """1/N on live edges, remaining mass on the diagonal."""
    n = graph.n_agents
    w = graph.adjacency.astype(np.float64) / n
    degrees = graph.adjacency.sum(axis=1)
    w[np.arange(n), np.arange(n)] = 1.0 - degrees / n
    return WeightMatrix(entries=w)


def gossip_mix(
    weights: WeightMatrix, values: np.ndarray, increments: np.ndarray
) -> np.ndarray:
    """One synchronous mixing step: W @ values + increments.

    values and increments carry one row per agent; trailing dimensions are
    mixed independently.
    """
    values = np.asarray(values, dtype=np.float64)
    increments = np.asarray(increments, dtype=np.float64)
    if values.shape != increments.shape:
        raise ValueError("values and increments must have the same shape")
    n = weights.n_agents
    if values.shape[0] != n:
        raise ValueError("leading dimension must equal the number of agents")
    flat = values.reshape(n, -1)
    mixed = weights.entries @ flat + increments.reshape(n, -1)
    return mixed.reshape(values.shape)


def estimate_spectral_gap(
    base: BaseGraph,
    link_prob: float,
    n_samples: int,
    rng: np.random.Generator,
    max_iters: int = 20_000,
    tol: float = 1e-12,
) -> float:
    """Second eigenvalue of the Monte-Carlo average of W_t squared.

    The all-ones direction always has eigenvalue 1, so the average is deflated
    against it and the leading remaining eigenvalue is found by power
    iteration.  Values near 0 mean fast consensus, values near 1 mean the
    network barely mixes.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    n = base.n_agents
    avg = np.zeros((n, n))
    for _ in range(n_samples):
        w = build_weight_matrix(sample_round_graph(base, link_prob, rng)).entries
        avg += w @ w
    avg /= n_samples
    deflated = avg - np.full((n, n), 1.0 / n)

    vec = rng.standard_normal(n)
    vec -= vec.mean()
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        vec = np.zeros(n)
        vec[0] = 1.0
        vec -= vec.mean()
        norm = np.linalg.norm(vec)
    vec /= norm
    estimate = 0.0
    for _ in range(max_iters):
        nxt = deflated @ vec
        norm = np.linalg.norm(nxt)
        if norm < 1e-15:
            return 0.0
        nxt /= norm
        new_estimate = float(nxt @ (deflated @ nxt))
        if abs(new_estimate - estimate) < tol:
            return abs(new_estimate)
        estimate = new_estimate
        vec = nxt
    raise PowerIterationError(
        f"eigenvalue estimate still moving after {max_iters} iterations"
    )
