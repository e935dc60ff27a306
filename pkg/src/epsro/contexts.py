"""Dispatch helpers over the three supported game kinds.

Solvers and runners treat a game as one of: a ``MatrixGame`` (policies are
mixed strategies), a Kuhn ``GameTree`` (policies are behavior policies), or a
``MixtureGame`` (policies are points in the plane).  Utilities here are always
from the named player's perspective; the opponent's utility is the negation.
"""

from __future__ import annotations

import numpy as np

from . import kuhn
from .games import COL, ROW, MatrixGame, MixedStrategy, nash_conv, _side
from .generators import MixtureGame, clip_to_arena, density_vector, mixture_payoff, \
    mixture_payoff_gradient
from .kuhn import BehaviorPolicy, GameTree


def kind(game) -> str:
    if isinstance(game, MatrixGame):
        return "matrix"
    if isinstance(game, GameTree):
        return "tree"
    if isinstance(game, MixtureGame):
        return "mixture"
    raise TypeError(f"unsupported game context: {type(game).__name__}")


def responder_entry_utility(game, side, responder, entry) -> float:
    """Utility of the ``side`` player playing ``responder`` against ``entry``."""
    side = _side(side)
    game_kind = kind(game)
    if game_kind == "matrix":
        if side == ROW:
            return float(responder.probs @ game.payoff @ entry.probs)
        return -float(entry.probs @ game.payoff @ responder.probs)
    if game_kind == "tree":
        if side == ROW:
            return kuhn.expected_value(game, responder, entry)
        return -kuhn.expected_value(game, entry, responder)
    return mixture_payoff(game, responder, entry)


def responder_mixture_utility(game, side, responder, entries, weights) -> float:
    weights = np.asarray(weights, dtype=float)
    return float(sum(w * responder_entry_utility(game, side, responder, e)
                     for w, e in zip(weights, entries) if w != 0.0))


def meta_owner_return(game, side, responder, entry, rng: np.random.Generator) -> float:
    """One episode's return to the restricted player (the responder's opponent).

    Matrix and tree games sample one pure play; the mixture game is
    deterministic, so an episode is a single payoff evaluation.
    """
    side = _side(side)
    game_kind = kind(game)
    if game_kind == "matrix":
        row, col = (responder, entry) if side == ROW else (entry, responder)
        r = rng.choice(len(row), p=row.probs)
        c = rng.choice(len(col), p=col.probs)
        chips = float(game.payoff[r, c])
        return -chips if side == ROW else chips
    if game_kind == "tree":
        row, col = (responder, entry) if side == ROW else (entry, responder)
        chips = kuhn.sample_episode(game, row, col, rng)
        return -chips if side == ROW else chips
    return -mixture_payoff(game, responder, entry)


def uniform_responder(game, side):
    side = _side(side)
    game_kind = kind(game)
    if game_kind == "matrix":
        return MixedStrategy.uniform(game.n_strategies(side))
    if game_kind == "tree":
        return BehaviorPolicy.uniform(game, side)
    return np.zeros(2)


def initial_entry(game, side, rng: np.random.Generator | None = None):
    """Seed policy for a restricted set: first pure strategy, uniform behavior,
    or a random point in the inner arena."""
    side = _side(side)
    game_kind = kind(game)
    if game_kind == "matrix":
        return MixedStrategy.pure(game.n_strategies(side), 0)
    if game_kind == "tree":
        return BehaviorPolicy.uniform(game, side)
    if rng is None:
        return np.zeros(2)
    angle = rng.uniform(0.0, 2.0 * np.pi)
    radius = rng.uniform(0.0, 0.5)
    return np.array([radius * np.cos(angle), radius * np.sin(angle)])


def stack_matrix_entries(entries) -> np.ndarray:
    return np.stack([e.probs for e in entries])


def _mixture_flat_density(game: MixtureGame, entries, weights) -> np.ndarray:
    densities = np.stack([density_vector(game, e) for e in entries])
    return np.asarray(weights, dtype=float) @ densities


def _mixture_br(game: MixtureGame, entries, weights, steps: int = 200,
                step_size: float = 0.05):
    """Approximate full-space best response on the continuous game.

    The payoff against a fixed mixture collapses to a function of the point's
    own density vector, so candidates (hump centers and origin) are scanned
    and the best is polished by gradient ascent.  Returns ``(point, value)``.
    """
    weights = np.asarray(weights, dtype=float)
    flat = weights @ np.stack([density_vector(game, e) for e in entries])
    coeffs = game.skew @ flat + 1.0
    offset = float(flat.sum())

    def value_of(point) -> float:
        return float(density_vector(game, point) @ coeffs) - offset

    def grad_of(point) -> np.ndarray:
        own = density_vector(game, point)
        return ((own * coeffs) @ (game.centers - point)) / game.bandwidth**2

    candidates = [np.zeros(2)] + [c.copy() for c in game.centers]
    best = max(candidates, key=value_of)
    point = best.copy()
    for _ in range(steps):
        point = clip_to_arena(game, point + step_size * grad_of(point))
    if value_of(point) < value_of(best):
        point = best
    return point, value_of(point)


def full_best_response_value(game, side, entries, weights) -> float:
    """Best-response value of the unrestricted ``side`` player against a
    weighted mixture over opponent entries."""
    side = _side(side)
    game_kind = kind(game)
    weights = np.asarray(weights, dtype=float)
    if game_kind == "matrix":
        flat = weights @ stack_matrix_entries(entries)
        if side == ROW:
            return float((game.payoff @ flat).max())
        return float((-(flat @ game.payoff)).max())
    if game_kind == "tree":
        mixture = list(zip(entries, weights))
        _, value = kuhn.exact_best_response(game, side, mixture)
        return value
    _, value = _mixture_br(game, entries, weights)
    return value


def nashconv_of_sets(game, set_row, weights_row, set_col, weights_col) -> float:
    """NashConv of meta-strategy mixtures over two restricted sets.

    Exact for matrix and tree games; for the continuous mixture game the
    best-response terms use the center-scan approximation.
    """
    entries_row = list(set_row.entries if hasattr(set_row, "entries") else set_row)
    entries_col = list(set_col.entries if hasattr(set_col, "entries") else set_col)
    game_kind = kind(game)
    if game_kind == "matrix":
        sigma_row = MixedStrategy(np.asarray(weights_row) @ stack_matrix_entries(entries_row))
        sigma_col = MixedStrategy(np.asarray(weights_col) @ stack_matrix_entries(entries_col))
        return nash_conv(game, sigma_row, sigma_col)
    if game_kind == "tree":
        return kuhn.nash_conv_efg(game, entries_row, weights_row, entries_col, weights_col)
    cross = cross_payoff_matrix(game, entries_row, entries_col)
    value = float(np.asarray(weights_row) @ cross @ np.asarray(weights_col))
    br_row = full_best_response_value(game, ROW, entries_col, weights_col)
    br_col = full_best_response_value(game, COL, entries_row, weights_row)
    return (br_row - value) + (br_col - (-value))


def cross_payoff_matrix(game, entries_row, entries_col) -> np.ndarray:
    """Exact row-player payoffs between two entry lists."""
    game_kind = kind(game)
    if game_kind == "matrix":
        rows = stack_matrix_entries(entries_row)
        cols = stack_matrix_entries(entries_col)
        return rows @ game.payoff @ cols.T
    if game_kind == "mixture":
        d_rows = np.stack([density_vector(game, e) for e in entries_row])
        d_cols = np.stack([density_vector(game, e) for e in entries_col])
        return (d_rows @ game.skew @ d_cols.T
                + d_rows.sum(axis=1)[:, None] - d_cols.sum(axis=1)[None, :])
    out = np.empty((len(entries_row), len(entries_col)))
    for i, er in enumerate(entries_row):
        for j, ec in enumerate(entries_col):
            out[i, j] = responder_entry_utility(game, ROW, er, ec)
    return out
