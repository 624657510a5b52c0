"""Pareto dominance geometry and the regret it induces.

A vector dominates another when it is at least as large in every coordinate
and strictly larger in at least one.  An arm's suboptimality gap is the
smallest uniform boost that would lift its centered mean vector beyond every
Pareto-optimal arm's reach.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .environment import Environment, centered_means


def dominates(x: np.ndarray, y: np.ndarray) -> bool:
    """True when x weakly improves on y everywhere and strictly somewhere."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("vectors must have the same shape")
    return bool(np.all(x >= y) and np.any(x > y))


def _dominance_table(vectors: np.ndarray) -> np.ndarray:
    """(K, K) boolean table where [a, b] means row a dominates row b."""
    a = vectors[:, None, :]
    b = vectors[None, :, :]
    return np.all(a >= b, axis=-1) & np.any(a > b, axis=-1)


def pareto_front(vectors: np.ndarray) -> np.ndarray:
    """Indices of non-dominated rows, ascending.

    Exact duplicates of a front vector never dominate each other, so all
    copies are kept.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] == 0:
        raise ValueError("expected a nonempty (K, D) array")
    dominated = _dominance_table(vectors).any(axis=0)
    return np.flatnonzero(~dominated)


def eps_distance(x: np.ndarray, front: np.ndarray) -> float:
    """Smallest eps >= 0 such that no front vector dominates x + eps.

    Closed form: max(0, max over front rows y of min over coordinates of
    (y - x)).  At exactly that eps the tie resolves to the non-dominated side.
    """
    x = np.asarray(x, dtype=np.float64)
    front = np.asarray(front, dtype=np.float64)
    if front.ndim != 2 or front.shape[0] == 0:
        raise ValueError("front must be a nonempty (M, D) array")
    if x.shape != (front.shape[1],):
        raise ValueError("x must be a D-vector matching the front")
    margins = np.min(front - x[None, :], axis=1)
    return float(max(0.0, margins.max()))


@dataclass(frozen=True)
class ParetoMetrics:
    """Frozen per-trial benchmark for the Pareto suite."""

    centered: np.ndarray
    front_indices: tuple[int, ...]
    gaps: np.ndarray

    def __post_init__(self) -> None:
        self.centered.flags.writeable = False
        self.gaps.flags.writeable = False


def pareto_gaps(env: Environment) -> ParetoMetrics:
    """Centered means, their Pareto front, and per-arm gaps.

    Front arms have gap exactly 0; with a single objective dimension the gap
    degenerates to max centered mean minus the arm's centered mean.
    """
    centered = centered_means(env)
    front_idx = pareto_front(centered)
    front_vectors = centered[front_idx]
    gaps = np.array(
        [eps_distance(centered[k], front_vectors) for k in range(centered.shape[0])]
    )
    return ParetoMetrics(
        centered=centered,
        front_indices=tuple(int(i) for i in front_idx),
        gaps=gaps,
    )


def pareto_regret_step(metrics: ParetoMetrics, arms: np.ndarray) -> float:
    """Team regret for one round: sum of pulled arms' gaps."""
    arms = np.asarray(arms)
    if np.any(arms < 0) or np.any(arms >= metrics.gaps.shape[0]):
        raise IndexError("arm index out of range")
    return float(metrics.gaps[arms].sum())
