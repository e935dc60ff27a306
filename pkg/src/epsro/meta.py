"""Boltzmann meta-strategies with multiplicative-weights updates.

The meta-strategy over a restricted policy set is the softmax of a weight
vector; updates subtract scaled loss vectors from the weights, which is the
multiplicative-weights rule on the induced simplex.  A loss buffer tracks the
played-loss history for empirical regret measurement and, in sampled mode,
the episode window that denoises per-support return estimates.
"""

from __future__ import annotations

import dataclasses
import math
import os

import numpy as np

from .contexts import responder_entry_utility
from .games import MixedStrategy


@dataclasses.dataclass(frozen=True)
class BoltzmannMeta:
    """Softmax-parameterized meta-strategy weights, one per support."""

    beta: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim != 1 or beta.size == 0:
            raise ValueError("beta must be a non-empty 1-D vector")
        if not np.all(np.isfinite(beta)):
            raise ValueError("beta must be finite")
        beta = beta.copy()
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)

    def __len__(self) -> int:
        return self.beta.size

    def sigma(self) -> MixedStrategy:
        return sigma_from_beta(self.beta)

    @staticmethod
    def uniform(n: int) -> "BoltzmannMeta":
        return BoltzmannMeta(np.zeros(n))

    def grown(self, n: int, fill: float | None = None) -> "BoltzmannMeta":
        """Extends to ``n`` supports; new weights default to the current min."""
        if n < len(self):
            raise ValueError("support sets never shrink")
        if n == len(self):
            return self
        value = float(self.beta.min()) if fill is None else fill
        return BoltzmannMeta(np.concatenate([self.beta, np.full(n - len(self), value)]))


def softmax(beta: np.ndarray) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    shifted = np.exp(beta - beta.max())
    return shifted / shifted.sum()


def sigma_from_beta(beta) -> MixedStrategy:
    """Softmax of the weight vector, overflow-safe via max subtraction."""
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 1 or beta.size == 0:
        raise ValueError("beta must be a non-empty 1-D vector")
    return MixedStrategy(softmax(beta))


def mwu_step(meta: BoltzmannMeta, loss, eta: float) -> BoltzmannMeta:
    """One multiplicative-weights step: new sigma ~ sigma * exp(-eta * loss)."""
    loss = np.asarray(loss, dtype=float)
    if loss.shape != meta.beta.shape:
        raise ValueError(f"loss length {loss.size} != beta length {len(meta)}")
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    return BoltzmannMeta(meta.beta - eta * loss)


class LossBuffer:
    """Played-loss history for one meta-strategy learner.

    Maintains exact running aggregates (played loss and per-support loss sums,
    zero-padded across support growth so each support counts from its
    introduction) plus an optional full record trail for offline audits.  In
    sampled mode it also holds the episode-reward window and per-support
    counters that are reset at every window boundary.
    """

    def __init__(self, n_supports: int, window_size: int = 100,
                 record_cap: int | None = 50_000):
        if n_supports < 1:
            raise ValueError("need at least one support")
        if window_size < 1:
            raise ValueError("window size must be >= 1")
        self.n_supports = n_supports
        self.window_size = window_size
        self.record_cap = record_cap
        self.steps = 0
        self.played_loss = 0.0
        self.support_loss = np.zeros(n_supports)
        self.records: list[tuple[np.ndarray, np.ndarray]] = []
        self.window: list[tuple[float, int]] = []
        self.counts = np.zeros(n_supports, dtype=int)
        self.episodes = 0

    def grow(self, n_supports: int) -> None:
        if n_supports < self.n_supports:
            raise ValueError("support sets never shrink")
        if self.window:
            raise ValueError("cannot grow supports mid-window")
        extra = n_supports - self.n_supports
        self.support_loss = np.concatenate([self.support_loss, np.zeros(extra)])
        self.counts = np.concatenate([self.counts, np.zeros(extra, dtype=int)])
        self.n_supports = n_supports

    def record(self, loss: np.ndarray, sigma: np.ndarray) -> None:
        loss = np.asarray(loss, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        if loss.size != self.n_supports or sigma.size != self.n_supports:
            raise ValueError("record length must match the current support count")
        self.steps += 1
        self.played_loss += float(sigma @ loss)
        self.support_loss += loss
        if self.record_cap is None or len(self.records) < self.record_cap:
            self.records.append((loss.copy(), sigma.copy()))

    def average_loss(self, tail: int | None = None) -> np.ndarray:
        """Time-averaged recorded loss vectors (zero-padded), newest ``tail``."""
        if not self.records:
            raise ValueError("no recorded losses")
        records = self.records[-tail:] if tail else self.records
        out = np.zeros(self.n_supports)
        for loss, _ in records:
            out[: loss.size] += loss
        return out / len(records)


@dataclasses.dataclass(frozen=True)
class RegretReport:
    """Average regret against the best fixed support, with its theoretical bound."""

    average_regret: float
    bound: float
    iterations: int
    supports: int


def regret_bound(supports: int, iterations: int) -> float:
    return math.sqrt(math.log((supports + 1) * supports / 2.0) / (2.0 * iterations))


def measure_regret(buffer: LossBuffer) -> RegretReport:
    """Average regret of the played sequence versus the best fixed support.

    Supports introduced mid-run contribute losses only from their introduction
    (earlier entries are zero-padded).
    """
    if buffer.steps == 0:
        raise ValueError("empty loss history")
    comparator = float(buffer.support_loss.min())
    average = (buffer.played_loss - comparator) / buffer.steps
    return RegretReport(average, regret_bound(buffer.n_supports, buffer.steps),
                        buffer.steps, buffer.n_supports)


def exact_loss_vector(game, full_side, responder, restricted_set) -> np.ndarray:
    """Exact per-support loss for the restricted player against ``responder``.

    The restricted player's loss on support k is the negation of its utility,
    which in a zero-sum game equals the responder's utility against entry k.
    """
    entries = list(restricted_set.entries if hasattr(restricted_set, "entries")
                   else restricted_set)
    if not entries:
        raise ValueError("restricted set must be non-empty")
    return np.array([responder_entry_utility(game, full_side, responder, entry)
                     for entry in entries])


def flush_window(buffer: LossBuffer, meta: BoltzmannMeta, eta: float):
    """Turns the episode window into one loss vector and applies the MWU step.

    Supports with no samples in the window contribute zero loss.  Returns
    ``(new_meta, loss_vector)``.
    """
    if not buffer.window:
        raise ValueError("flush requested on an empty window")
    if len(meta) != buffer.n_supports:
        raise ValueError("meta length must match the buffer supports")
    sums = np.zeros(buffer.n_supports)
    for episode_return, support in buffer.window:
        sums[support] += episode_return
    mean_returns = np.divide(sums, buffer.counts,
                             out=np.zeros_like(sums), where=buffer.counts > 0)
    loss = -mean_returns
    sigma = meta.sigma().probs
    new_meta = mwu_step(meta, loss, eta)
    buffer.record(loss, sigma)
    buffer.window.clear()
    buffer.counts[:] = 0
    return new_meta, loss


def windowed_update(buffer: LossBuffer, meta: BoltzmannMeta, episode_return: float,
                    sampled_support: int, eta: float):
    """Adds one episode to the window; flushes it when full.

    Returns ``(meta, flushed_loss_or_None)``; the meta only changes on a flush.
    """
    if not 0 <= sampled_support < buffer.n_supports:
        raise ValueError(f"support {sampled_support} out of range")
    buffer.window.append((float(episode_return), int(sampled_support)))
    buffer.counts[sampled_support] += 1
    buffer.episodes += 1
    if len(buffer.window) < buffer.window_size:
        return meta, None
    return flush_window(buffer, meta, eta)


def save_loss_history_csv(buffer: LossBuffer, path) -> None:
    """Writes the recorded (t, sigma, loss) trail, zero-padded to the final width."""
    k = buffer.n_supports
    header = (["t"] + [f"sigma_{j}" for j in range(k)]
              + [f"loss_{j}" for j in range(k)])
    lines = [",".join(header)]
    for t, (loss, sigma) in enumerate(buffer.records, start=1):
        padded_sigma = np.zeros(k)
        padded_sigma[: sigma.size] = sigma
        padded_loss = np.zeros(k)
        padded_loss[: loss.size] = loss
        cells = [str(t)] + [repr(float(v)) for v in padded_sigma] \
            + [repr(float(v)) for v in padded_loss]
        lines.append(",".join(cells))
    tmp = f"{path}.tmp"
    with open(tmp, "w") as handle:
        handle.write("\n".join(lines) + "\n")
    os.replace(tmp, path)
