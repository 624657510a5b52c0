"""Bandit environments: heterogeneous per-agent arm means plus agent preferences.

Every agent sees the same arms, but its reward distribution for an arm is a
perturbed copy of a shared base mean, so "good" arms differ slightly from agent
to agent.  The quantity the team is ultimately judged on is the network-wide
centered mean of each arm.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields
from typing import Any

import numpy as np

MEAN_LOW = 0.05
MEAN_HIGH = 0.95
BASE_LOW = 0.2
BASE_HIGH = 0.8


class ConfigError(ValueError):
    """Raised when an experiment configuration value is out of range."""


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs shared by every run.

    ``nsw_explore_alpha`` is either a nonnegative number (constant multiplier)
    or the string ``"sqrt:<c>"`` meaning a c/sqrt(t) schedule.
    """

    n_agents: int = 8
    n_arms: int = 8
    n_dims: int = 3
    horizon: int = 150_000
    link_prob: float = 0.8
    het_scale: float = 0.2
    n_trials: int = 10
    master_seed: int = 0
    record_every: int | None = None
    nsw_explore_alpha: float | str = 0.1
    consensus_coeff: float = 1.0
    elim_consensus_coeff: float = 0.0
    solver_restarts: int = 5
    solver_max_iters: int = 2000
    solver_tol: float = 1e-8
    workers: int = 1

    def __post_init__(self) -> None:
        if self.record_every is None:
            object.__setattr__(self, "record_every", max(1, self.horizon // 1000))
        self.validate()

    def validate(self) -> None:
        def require(ok: bool, key: str, why: str) -> None:
            if not ok:
                raise ConfigError(f"config key '{key}': {why}")

        require(int(self.n_agents) >= 1, "n-agents", "must be a positive integer")
        require(int(self.n_arms) >= 1, "n-arms", "must be a positive integer")
        require(int(self.n_dims) >= 1, "dims", "must be a positive integer")
        require(
            int(self.horizon) >= int(self.n_arms),
            "horizon",
            "must be at least n-arms (one warm-up round per arm)",
        )
        require(0.0 < float(self.link_prob) <= 1.0, "link-prob", "must lie in (0, 1]")
        require(float(self.het_scale) >= 0.0, "het-scale", "must be nonnegative")
        require(int(self.n_trials) >= 1, "trials", "must be a positive integer")
        require(int(self.record_every) >= 1, "record-every", "must be a positive integer")
        require(float(self.consensus_coeff) >= 0.0, "consensus-coeff", "must be nonnegative")
        require(
            float(self.elim_consensus_coeff) >= 0.0,
            "elim-consensus-coeff",
            "must be nonnegative",
        )
        require(int(self.solver_restarts) >= 1, "solver-restarts", "must be a positive integer")
        require(int(self.solver_max_iters) >= 1, "solver-max-iters", "must be a positive integer")
        require(float(self.solver_tol) > 0.0, "solver-tol", "must be positive")
        require(int(self.workers) >= 1, "workers", "must be a positive integer")
        # Schedule tags are validated eagerly so a typo fails at parse time,
        # not thousands of rounds into a run.
        self.nsw_alpha(1)

    def nsw_alpha(self, t: int) -> float:
        """Exploration multiplier for round ``t`` (1-indexed)."""
        spec = self.nsw_explore_alpha
        if isinstance(spec, str):
            if not spec.startswith("sqrt:"):
                raise ConfigError(
                    "config key 'nsw-explore-alpha': expected a number or 'sqrt:<c>'"
                )
            try:
                c = float(spec.split(":", 1)[1])
            except ValueError as exc:
                raise ConfigError(
                    "config key 'nsw-explore-alpha': bad schedule constant"
                ) from exc
            if c < 0.0:
                raise ConfigError("config key 'nsw-explore-alpha': must be nonnegative")
            return c / np.sqrt(t)
        a = float(spec)
        if a < 0.0:
            raise ConfigError("config key 'nsw-explore-alpha': must be nonnegative")
        return a

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class Environment:
    """Fixed ground truth for one trial.

    means
        (N, K, D) per-agent, per-arm, per-dimension Bernoulli means.
    base_means
        (K, D) shared base means before per-agent perturbation.
    prefs
        (N, D) preference vectors, one point of the D-simplex per agent.
    """

    means: np.ndarray
    base_means: np.ndarray
    prefs: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "means", _as_readonly(self.means))
        object.__setattr__(self, "base_means", _as_readonly(self.base_means))
        object.__setattr__(self, "prefs", _as_readonly(self.prefs))
        n, k, d = self.means.shape
        if self.base_means.shape != (k, d):
            raise ValueError("base_means shape does not match means")
        if self.prefs.shape != (n, d):
            raise ValueError("prefs shape does not match means")
        if np.any(self.means < 0.0) or np.any(self.means > 1.0):
            raise ValueError("arm means must lie in [0, 1]")
        if np.any(self.prefs < 0.0) or np.any(np.abs(self.prefs.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("preference vectors must lie on the simplex")

    @property
    def n_agents(self) -> int:
        return self.means.shape[0]

    @property
    def n_arms(self) -> int:
        return self.means.shape[1]

    @property
    def n_dims(self) -> int:
        return self.means.shape[2]

    def to_json(self) -> str:
        payload = {
            "means": self.means.tolist(),
            "base_means": self.base_means.tolist(),
            "prefs": self.prefs.tolist(),
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "Environment":
        payload = json.loads(text)
        return cls(
            means=np.asarray(payload["means"], dtype=np.float64),
            base_means=np.asarray(payload["base_means"], dtype=np.float64),
            prefs=np.asarray(payload["prefs"], dtype=np.float64),
        )

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()


def generate_environment(config: ExperimentConfig, rng: np.random.Generator) -> Environment:
    """Draw a fresh environment.

    Draw order is fixed (base means, then perturbations, then preferences) so a
    given stream always yields the same environment:

    1. base means ~ Uniform(0.2, 0.8) per (arm, dimension);
    2. per-agent means = base + Uniform(-het_scale, het_scale), clipped to
       [0.05, 0.95];
    3. preference vectors ~ Dirichlet(1, ..., 1) on the D-simplex.
    """
    n, k, d = config.n_agents, config.n_arms, config.n_dims
    base = rng.uniform(BASE_LOW, BASE_HIGH, size=(k, d))
    jitter = rng.uniform(-config.het_scale, config.het_scale, size=(n, k, d))
    means = np.clip(base[None, :, :] + jitter, MEAN_LOW, MEAN_HIGH)
    prefs = rng.dirichlet(np.ones(d), size=n)
    return Environment(means=means, base_means=base, prefs=prefs)


def sample_reward(
    env: Environment, agent: int, arm: int, rng: np.random.Generator
) -> np.ndarray:
    """One D-vector of independent Bernoulli draws for (agent, arm)."""
    if not 0 <= agent < env.n_agents:
        raise IndexError(f"agent index {agent} out of range")
    if not 0 <= arm < env.n_arms:
        raise IndexError(f"arm index {arm} out of range")
    return (rng.random(env.n_dims) < env.means[agent, arm]).astype(np.float64)


def centered_mean(env: Environment, arm: int) -> np.ndarray:
    """Network-wide mean vector of one arm: (1/N) sum_i mu_{i,arm}."""
    if not 0 <= arm < env.n_arms:
        raise IndexError(f"arm index {arm} out of range")
    return env.means[:, arm, :].mean(axis=0)


def centered_means(env: Environment) -> np.ndarray:
    """(K, D) matrix of centered arm means."""
    return env.means.mean(axis=0)


def scalar_mean(env: Environment, agent: int, other: int, arm: int) -> float:
    """Expected scalarized reward <w_other, mu_{agent,arm}>."""
    if not 0 <= agent < env.n_agents:
        raise IndexError(f"agent index {agent} out of range")
    if not 0 <= other < env.n_agents:
        raise IndexError(f"agent index {other} out of range")
    if not 0 <= arm < env.n_arms:
        raise IndexError(f"arm index {arm} out of range")
    return float(env.prefs[other] @ env.means[agent, arm])


def centered_scalar_means(env: Environment) -> np.ndarray:
    """(N, K) matrix with entry (j, k) = (1/N) sum_i <w_j, mu_{i,k}>.

    Row j is the utility vector the team would hand agent j if every agent's
    observations were pooled exactly.  By linearity this equals
    prefs @ centered_means(env).T, which is what the estimators in the
    simulation-based algorithms converge to.
    """
    return env.prefs @ centered_means(env).T
