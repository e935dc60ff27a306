"""Game constructors.

Seeded random symmetric zero-sum matrices, the continuous seven-hump
non-transitive mixture game, and loading of external empirical payoff
matrices.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .games import MatrixGame, load_matrix_csv, save_matrix_csv

__all__ = [
    "MixtureGame",
    "random_symmetric",
    "density_vector",
    "mixture_payoff",
    "mixture_payoff_gradient",
    "load_matrix_csv",
    "save_matrix_csv",
]

N_HUMPS = 7


def random_symmetric(n: int, seed) -> MatrixGame:
    """Random symmetric zero-sum matrix: upper triangle Uniform(-1, 1),
    lower triangle its negation, zero diagonal."""
    if n < 2:
        raise ValueError("need n >= 2")
    rng = np.random.default_rng(seed)
    payoff = np.zeros((n, n))
    upper = np.triu_indices(n, k=1)
    payoff[upper] = rng.uniform(-1.0, 1.0, size=len(upper[0]))
    payoff -= payoff.T
    return MatrixGame(payoff, symmetric=True)


def _cyclic_skew(n: int = N_HUMPS) -> np.ndarray:
    """Cyclic generalized rock-paper-scissors interaction matrix."""
    skew = np.zeros((n, n))
    half = n // 2
    for i in range(n):
        for k in range(1, n):
            skew[i][(i + k) % n] = 1.0 if k <= half else -1.0
    return skew


@dataclasses.dataclass(frozen=True)
class MixtureGame:
    """Continuous zero-sum game over points in the plane.

    A point is scored by its density under seven Gaussian humps arranged on a
    circle; payoffs combine a cyclic non-transitive interaction between humps
    with a transitive density bonus.
    """

    center_radius: float = 2.0
    bandwidth: float = 0.5
    arena_radius: float = 4.0
    skew: np.ndarray = dataclasses.field(default_factory=_cyclic_skew)

    def __post_init__(self):
        skew = np.asarray(self.skew, dtype=float)
        if skew.shape != (N_HUMPS, N_HUMPS):
            raise ValueError(f"skew must be {N_HUMPS}x{N_HUMPS}")
        if not np.allclose(skew, -skew.T, atol=0.0, rtol=0.0):
            raise ValueError("skew matrix must be antisymmetric")
        skew = skew.copy()
        skew.setflags(write=False)
        object.__setattr__(self, "skew", skew)
        angles = 2.0 * np.pi * np.arange(N_HUMPS) / N_HUMPS
        centers = self.center_radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)

    centers: np.ndarray = dataclasses.field(init=False)


def _check_point(game: MixtureGame, point) -> np.ndarray:
    point = np.asarray(point, dtype=float)
    if point.shape != (2,):
        raise ValueError("a point is a length-2 vector")
    if np.linalg.norm(point) > game.arena_radius + 1e-12:
        raise ValueError(f"point {point} outside arena of radius {game.arena_radius}")
    return point


def density_vector(game: MixtureGame, point) -> np.ndarray:
    """Unnormalized Gaussian density of the point under each hump."""
    point = _check_point(game, point)
    sq_dist = np.sum((game.centers - point) ** 2, axis=1)
    return np.exp(-sq_dist / (2.0 * game.bandwidth**2))


def mixture_payoff(game: MixtureGame, p_row, p_col) -> float:
    """Row point's payoff: skew interaction plus density advantage.

    Antisymmetric in its two arguments.
    """
    d_row = density_vector(game, p_row)
    d_col = density_vector(game, p_col)
    return float(d_row @ game.skew @ d_col + d_row.sum() - d_col.sum())


def mixture_payoff_gradient(game: MixtureGame, p_row, p_col) -> np.ndarray:
    """Analytic gradient of ``mixture_payoff`` in its first argument."""
    p_row = _check_point(game, p_row)
    d_row = density_vector(game, p_row)
    d_col = density_vector(game, p_col)
    # d(density_k)/dp = density_k * (center_k - p) / bandwidth^2
    coeff = d_row * (game.skew @ d_col + 1.0)
    return (coeff @ (game.centers - p_row)) / game.bandwidth**2


def clip_to_arena(game: MixtureGame, point) -> np.ndarray:
    """Projects a point back inside the playable disc."""
    point = np.asarray(point, dtype=float)
    norm = np.linalg.norm(point)
    if norm > game.arena_radius:
        return point * (game.arena_radius / norm)
    return point
