"""Nash social welfare over arm distributions, and its maximization.

The welfare of a distribution p given a nonnegative utility matrix U is the
product over agents of their expected utilities (U @ p).  Maximization is by
projected gradient ascent on the simplex with random restarts; with a zero
exploration bonus the objective is log-concave, so the multi-start solver is
effectively exact, and the bonus case only adds a linear term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

UTIL_FLOOR = 1e-12
ETA0 = 0.5


class BenchmarkError(RuntimeError):
    """An agent beat the precomputed welfare optimum by more than solver slack."""


def nsw_value(dist: np.ndarray, utilities: np.ndarray) -> float:
    """prod_j (sum_k p_k * U[j, k]) for one distribution."""
    dist = np.asarray(dist, dtype=np.float64)
    utilities = np.asarray(utilities, dtype=np.float64)
    if utilities.ndim != 2 or dist.shape != (utilities.shape[1],):
        raise ValueError("need U of shape (M, K) and a K-vector distribution")
    return float(np.prod(utilities @ dist))


def _project_rows(points: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex."""
    k = points.shape[-1]
    u = np.sort(points, axis=-1)[..., ::-1]
    css = np.cumsum(u, axis=-1) - 1.0
    idx = np.arange(1, k + 1, dtype=np.float64)
    rho = np.sum(u - css / idx > 0.0, axis=-1)
    theta = np.take_along_axis(css, rho[..., None] - 1, axis=-1) / rho[..., None]
    return np.maximum(points - theta, 0.0)


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Closest point of the probability simplex to v."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] == 0:
        raise ValueError("expected a nonempty vector")
    return _project_rows(v[None, :])[0]


@njit(cache=True)
def _objective_at(us: np.ndarray, bs: np.ndarray, p: np.ndarray) -> float:
    total = 1.0
    for j in range(us.shape[0]):
        acc = 0.0
        for k in range(us.shape[1]):
            acc += us[j, k] * p[k]
        total *= acc
    linear = 0.0
    for k in range(bs.shape[0]):
        linear += bs[k] * p[k]
    return total + linear


@njit(cache=True)
def _project_chain(v: np.ndarray, scratch: np.ndarray) -> None:
    """In-place Euclidean projection of a single K-vector onto the simplex.

    scratch is a K-buffer reused across calls; arms counts are small enough
    that an insertion sort beats allocating for np.sort every ascent step.
    """
    k = v.shape[0]
    for j in range(k):
        scratch[j] = v[j]
    for j in range(1, k):
        key = scratch[j]
        i = j - 1
        while i >= 0 and scratch[i] < key:
            scratch[i + 1] = scratch[i]
            i -= 1
        scratch[i + 1] = key
    css = 0.0
    theta = 0.0
    for j in range(k):
        css += scratch[j]
        candidate = (css - 1.0) / (j + 1)
        if scratch[j] - candidate > 0.0:
            theta = candidate
    for j in range(k):
        clipped = v[j] - theta
        v[j] = clipped if clipped > 0.0 else 0.0


@njit(cache=True)
def _pga_chains(
    us: np.ndarray,
    bs: np.ndarray,
    points: np.ndarray,
    max_iters: int,
    tol: float,
) -> np.ndarray:
    """Run every restart chain of every problem to its stopping point.

    Chains are independent; each stops once one ascent step changes its
    objective by less than tol, or at the iteration cap.  The (compiled) loop
    mutates the start points in place and returns final objective values.
    """
    n_problems, restarts, n_arms = points.shape
    n_rows = us.shape[1]
    values = np.empty((n_problems, restarts))
    u = np.empty(n_rows)
    grad = np.empty(n_arms)
    cand = np.empty(n_arms)
    scratch = np.empty(n_arms)
    for b in range(n_problems):
        ub = us[b]
        bb = bs[b]
        for r in range(restarts):
            p = points[b, r]
            f = _objective_at(ub, bb, p)
            for s in range(1, max_iters + 1):
                # d/dp_k of prod_j u_j is sum_j U[j,k] * prod_{l != j} u_l;
                # utilities are floored so a vanishing one cannot zero out or
                # blow up the whole gradient.
                total = 1.0
                for j in range(n_rows):
                    acc = 0.0
                    for k in range(n_arms):
                        acc += ub[j, k] * p[k]
                    if acc < UTIL_FLOOR:
                        acc = UTIL_FLOOR
                    u[j] = acc
                    total *= acc
                for k in range(n_arms):
                    g = bb[k]
                    for j in range(n_rows):
                        g += ub[j, k] * (total / u[j])
                    grad[k] = g
                eta = ETA0 / math.sqrt(s)
                for k in range(n_arms):
                    cand[k] = p[k] + eta * grad[k]
                _project_chain(cand, scratch)
                f_new = _objective_at(ub, bb, cand)
                delta = abs(f_new - f)
                for k in range(n_arms):
                    p[k] = cand[k]
                f = f_new
                if delta < tol:
                    break
            values[b, r] = f
    return values


def solve_nsw_batch(
    utility_batch: np.ndarray,
    bonus_batch: np.ndarray,
    rng: np.random.Generator,
    restarts: int,
    max_iters: int,
    tol: float,
) -> np.ndarray:
    """Maximize NSW(p, U_b) + bonus_b . p for every problem b in the batch.

    Restart chains start from the uniform distribution plus Dirichlet(1)
    draws; each problem keeps the best final iterate across its chains.
    """
    us = np.ascontiguousarray(utility_batch, dtype=np.float64)
    bs = np.ascontiguousarray(bonus_batch, dtype=np.float64)
    if us.ndim != 3:
        raise ValueError("utility batch must have shape (B, M, K)")
    n_problems, _, n_arms = us.shape
    if bs.shape != (n_problems, n_arms):
        raise ValueError("bonus batch must have shape (B, K)")
    if not np.all(np.isfinite(us)) or not np.all(np.isfinite(bs)):
        raise ValueError("utilities and bonuses must be finite")
    if np.any(us < 0.0):
        raise ValueError("utilities must be nonnegative")
    if restarts < 1 or max_iters < 1 or tol <= 0.0:
        raise ValueError("restarts and max_iters must be positive, tol > 0")

    points = np.empty((n_problems, restarts, n_arms))
    points[:, 0, :] = 1.0 / n_arms
    if restarts > 1:
        points[:, 1:, :] = rng.dirichlet(np.ones(n_arms), size=(n_problems, restarts - 1))
    values = _pga_chains(us, bs, points, int(max_iters), float(tol))
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("welfare objective became non-finite")
    best = np.argmax(values, axis=1)
    return points[np.arange(n_problems), best]


def maximize_nsw(
    utilities: np.ndarray,
    bonus: np.ndarray | None,
    rng: np.random.Generator,
    restarts: int = 5,
    max_iters: int = 2000,
    tol: float = 1e-8,
) -> np.ndarray:
    """Best arm distribution for one utility matrix.

    Restart chains start from the uniform distribution plus Dirichlet(1)
    draws; the best final iterate across chains is returned.
    """
    utilities = np.asarray(utilities, dtype=np.float64)
    if utilities.ndim != 2:
        raise ValueError("utilities must have shape (M, K)")
    if bonus is None:
        bonus = np.zeros(utilities.shape[1])
    bonus = np.asarray(bonus, dtype=np.float64)
    if bonus.shape != (utilities.shape[1],):
        raise ValueError("bonus must be a K-vector")
    return solve_nsw_batch(
        utilities[None, :, :], bonus[None, :], rng, restarts, max_iters, tol
    )[0]


@dataclass(frozen=True)
class NswBenchmark:
    """Welfare optimum of a trial's centered scalarized means."""

    utilities: np.ndarray
    p_star: np.ndarray
    nsw_star: float

    def __post_init__(self) -> None:
        self.utilities.flags.writeable = False
        self.p_star.flags.writeable = False


def _multiplicative_polish(
    utilities: np.ndarray, start: np.ndarray, max_iters: int = 50_000
) -> np.ndarray:
    """Monotone ascent to the exact zero-bonus optimum.

    The welfare product is a polynomial with nonnegative coefficients, so the
    growth transform p_k <- p_k * (1/M) sum_j U[j,k] / u_j(p) never decreases
    it and its fixed points are the KKT points; by log-concavity an interior
    start converges to the global maximum.  Used to polish the benchmark far
    beyond what a stepped ascent can certify.
    """
    p = np.asarray(start, dtype=np.float64).copy()
    m = utilities.shape[0]
    value = float(np.prod(utilities @ p))
    for _ in range(max_iters):
        per_agent = utilities @ p
        if np.any(per_agent <= 0.0):
            break  # a zero-utility agent pins the product at 0 everywhere
        p *= (utilities / per_agent[:, None]).sum(axis=0) / m
        p /= p.sum()
        new_value = float(np.prod(utilities @ p))
        if new_value - value < 1e-16:
            break
        value = new_value
    return p


def optimal_distribution(
    centered_utilities: np.ndarray,
    rng: np.random.Generator,
    restarts: int = 8,
    max_iters: int = 20_000,
    tol: float = 1e-13,
) -> NswBenchmark:
    """Solve the zero-bonus problem once per trial, at benchmark quality.

    Settings are deliberately tighter than the in-loop solver's, and the
    ascent result is polished with the multiplicative growth transform from
    two interior starts: every per-round regret term is measured against
    nsw_star, so the benchmark must sit above anything the agents can reach.
    """
    centered_utilities = np.ascontiguousarray(centered_utilities, dtype=np.float64)
    n_arms = centered_utilities.shape[1]
    uniform = np.full(n_arms, 1.0 / n_arms)
    ascent = maximize_nsw(
        centered_utilities, None, rng, restarts=restarts, max_iters=max_iters, tol=tol
    )
    candidates = [
        ascent,
        _multiplicative_polish(centered_utilities, 0.99 * ascent + 0.01 * uniform),
        _multiplicative_polish(centered_utilities, uniform),
    ]
    values = [nsw_value(p, centered_utilities) for p in candidates]
    best = int(np.argmax(values))
    return NswBenchmark(
        utilities=centered_utilities,
        p_star=candidates[best],
        nsw_star=values[best],
    )


def nsw_regret_step(
    bench: NswBenchmark, dists: np.ndarray, tol: float = 1e-8
) -> float:
    """Team welfare regret for one round: sum_i (nsw_star - NSW(p_i)).

    Terms that dip negative within 10 * tol are treated as solver slack and
    clamped to zero; anything below that means the benchmark is not actually
    the optimum, which is a bug worth crashing on.
    """
    dists = np.asarray(dists, dtype=np.float64)
    if dists.ndim != 2 or dists.shape[1] != bench.utilities.shape[1]:
        raise ValueError("dists must have shape (n_agents, K)")
    per_agent = bench.utilities @ dists.T
    terms = bench.nsw_star - np.prod(per_agent, axis=0)
    worst = terms.min() if terms.size else 0.0
    if worst < -10.0 * tol:
        raise BenchmarkError(
            f"a played distribution beat the benchmark by {-worst:.3e}"
        )
    return float(np.maximum(terms, 0.0).sum())
