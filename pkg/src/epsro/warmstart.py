"""Warm-start initialization for grown meta-strategies.

When a restricted set gains a policy, the new meta-strategy weights are
optimized so that the substitute strategy preserves the previous run's
average utility against the average responder, with an entropy bonus that
keeps the new support sampleable.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .contexts import meta_owner_return, responder_entry_utility
from .meta import BoltzmannMeta, softmax


@dataclasses.dataclass(frozen=True)
class WarmStartProblem:
    """Inputs for one warm-start solve.

    ``old_sigma_bar`` and ``avg_loss`` summarize the previous run over k-1
    supports; ``new_policy_payoff`` is the restricted player's utility of the
    new policy against the average responder.
    """

    old_sigma_bar: np.ndarray
    avg_loss: np.ndarray
    new_policy_payoff: float
    entropy_weight: float = 1e-2
    tolerance: float = 1e-6

    def __post_init__(self):
        sigma = np.asarray(self.old_sigma_bar, dtype=float)
        loss = np.asarray(self.avg_loss, dtype=float)
        if sigma.ndim != 1 or sigma.size == 0 or sigma.shape != loss.shape:
            raise ValueError("old_sigma_bar and avg_loss must be equal-length vectors")
        if sigma.min() < -1e-12 or abs(sigma.sum() - 1.0) > 1e-9:
            raise ValueError("old_sigma_bar must be a simplex")
        if self.entropy_weight < 0.0 or self.tolerance < 0.0:
            raise ValueError("entropy weight and tolerance must be >= 0")
        sigma = sigma.copy()
        loss = loss.copy()
        sigma.setflags(write=False)
        loss.setflags(write=False)
        object.__setattr__(self, "old_sigma_bar", sigma)
        object.__setattr__(self, "avg_loss", loss)

    @property
    def n_supports(self) -> int:
        return self.old_sigma_bar.size + 1


def _utility_error(problem: WarmStartProblem, sigma: np.ndarray) -> float:
    """|u_new_epoch(avg responder, sigma) - u_old_epoch(avg responder, old sigma)|."""
    head = sigma[:-1]
    return abs(float((head - problem.old_sigma_bar) @ problem.avg_loss
                     - sigma[-1] * problem.new_policy_payoff))


def warm_start_objective(problem: WarmStartProblem, beta) -> float:
    """Utility-preservation error minus the entropy bonus at softmax(beta)."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (problem.n_supports,):
        raise ValueError(f"beta must have length {problem.n_supports}")
    sigma = softmax(beta)
    entropy = -float(sigma @ np.log(np.maximum(sigma, 1e-300)))
    return _utility_error(problem, sigma) - problem.entropy_weight * entropy


def _objective_gradient(problem: WarmStartProblem, beta: np.ndarray) -> np.ndarray:
    sigma = softmax(beta)
    coeffs = np.concatenate([problem.avg_loss, [-problem.new_policy_payoff]])
    error = float(sigma @ coeffs) - float(problem.old_sigma_bar @ problem.avg_loss)
    # d/dbeta of (sigma @ c) is sigma * (c - sigma @ c)
    grad_error = sigma * (coeffs - sigma @ coeffs)
    log_sigma = np.log(np.maximum(sigma, 1e-300))
    entropy = -float(sigma @ log_sigma)
    grad_entropy = sigma * (-log_sigma - entropy)
    return np.sign(error) * grad_error - problem.entropy_weight * grad_entropy


def default_init_beta(problem: WarmStartProblem) -> np.ndarray:
    """Starts near the old solution with 1/k mass on the new support."""
    k = problem.n_supports
    seed = np.concatenate([problem.old_sigma_bar * (k - 1) / k, [1.0 / k]])
    return np.log(np.maximum(seed, 1e-12))


def warm_start_beta(problem: WarmStartProblem, init_beta=None, step: float = 0.1,
                    max_iters: int = 10_000):
    """Gradient descent on the warm-start objective.

    Stops once the unregularized utility error drops to the problem tolerance
    (checked before each step, so an infinite tolerance returns the initial
    weights untouched).  Returns ``(beta, achieved_error)`` for the best-seen
    iterate.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    beta = default_init_beta(problem) if init_beta is None \
        else np.asarray(init_beta, dtype=float).copy()
    if beta.shape != (problem.n_supports,):
        raise ValueError(f"init_beta must have length {problem.n_supports}")
    best_beta = beta.copy()
    best_error = _utility_error(problem, softmax(beta))
    for _ in range(max_iters):
        error = _utility_error(problem, softmax(beta))
        if error <= best_error:
            best_error = error
            best_beta = beta.copy()
        if best_error <= problem.tolerance:
            break
        gradient = _objective_gradient(problem, beta)
        if not np.all(np.isfinite(gradient)):
            raise FloatingPointError("non-finite warm-start gradient")
        beta = beta - step * gradient
    return BoltzmannMeta(best_beta), best_error


def estimate_new_entry(game, full_side, responder_avg, new_policy,
                       mode: str = "exact", episodes: int = 1000, seed=None) -> float:
    """Restricted player's utility of its new policy against the average responder.

    Exact mode evaluates the utility directly; sampled mode averages seeded
    episodes (the caller accounts the ``episodes`` simulation cost).
    """
    if mode == "exact":
        return -responder_entry_utility(game, full_side, responder_avg, new_policy)
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    if episodes <= 0:
        raise ValueError("sampled mode requires episodes >= 1")
    rng = np.random.default_rng(seed)
    total = sum(meta_owner_return(game, full_side, responder_avg, new_policy, rng)
                for _ in range(episodes))
    return total / episodes


def loss_weighted_average(strategies, losses) -> np.ndarray:
    """Average strategy for substitute warm-starts.

    Componentwise loss-weighted average of the played strategies; falls back
    to the plain time average whenever the weighting is degenerate (zero or
    sign-flipping loss sums).
    """
    strategies = [np.asarray(s, dtype=float) for s in strategies]
    losses = [np.asarray(l, dtype=float) for l in losses]
    if not strategies or len(strategies) != len(losses):
        raise ValueError("need matching non-empty strategy and loss histories")
    width = strategies[-1].size
    steps = len(strategies)
    num = np.zeros(width)
    den = np.zeros(width)
    time_avg = np.zeros(width)
    for strategy, loss in zip(strategies, losses):
        num[: strategy.size] += strategy * loss
        den[: loss.size] += loss
        time_avg[: strategy.size] += strategy
    time_avg /= steps
    if np.any(np.abs(den) < 1e-12):
        return time_avg
    weighted = num / (steps * den)
    if not np.all(np.isfinite(weighted)) or weighted.min() < 0.0 or weighted.sum() <= 0.0:
        return time_avg
    return weighted / weighted.sum()
