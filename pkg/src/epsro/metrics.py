"""Diversity and evaluation metrics for policy populations."""

from __future__ import annotations

import numpy as np

from . import contexts
from .games import PayoffTable


def expected_cardinality(table) -> float:
    """Expected selected-set size of the determinantal process with kernel M M^T.

    Accepts a filled payoff table or a raw matrix; returns a value in
    ``[0, n_rows]`` that is invariant to duplicated rows and nondecreasing as
    linearly independent rows are appended.
    """
    if isinstance(table, PayoffTable):
        matrix = table.matrix()
    else:
        matrix = np.asarray(table, dtype=float)
    if matrix.ndim != 2 or matrix.size == 0:
        raise ValueError("need a non-empty matrix")
    kernel = matrix @ matrix.T
    eigenvalues = np.clip(np.linalg.eigvalsh(kernel), 0.0, None)
    return float(np.sum(eigenvalues / (1.0 + eigenvalues)))


def center_coverage(trajectory, game, radius: float) -> int:
    """Number of hump centers with at least one policy point within ``radius``."""
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    points = [np.asarray(p, dtype=float) for p in trajectory]
    if not points:
        raise ValueError("empty trajectory")
    stacked = np.stack(points)
    covered = 0
    for center in game.centers:
        if np.min(np.linalg.norm(stacked - center, axis=1)) <= radius:
            covered += 1
    return covered


def score_eval(game, test_set, test_meta, ref_set, ref_meta, mode: str = "exact",
               episodes: int = 50, seed=None) -> list[float]:
    """Prefix scores of a policy set against a reference set.

    For each prefix of the test set, evaluates the cross-payoff block (exact,
    or averaged over seeded episodes per cell) and returns the meta-weighted
    score against the reference mixture.  Prefix metas are the given test meta
    truncated and renormalized.
    """
    test_entries = list(test_set.entries if hasattr(test_set, "entries") else test_set)
    ref_entries = list(ref_set.entries if hasattr(ref_set, "entries") else ref_set)
    if not test_entries or not ref_entries:
        raise ValueError("policy sets must be non-empty")
    test_meta = np.asarray(test_meta.probs if hasattr(test_meta, "probs") else test_meta,
                           dtype=float)
    ref_meta = np.asarray(ref_meta.probs if hasattr(ref_meta, "probs") else ref_meta,
                          dtype=float)
    if test_meta.size != len(test_entries) or ref_meta.size != len(ref_entries):
        raise ValueError("meta lengths must match their sets")
    if mode == "exact":
        cross = contexts.cross_payoff_matrix(game, test_entries, ref_entries)
    elif mode == "sampled":
        if episodes <= 0:
            raise ValueError("sampled mode requires episodes >= 1")
        rng = np.random.default_rng(seed)
        cross = np.empty((len(test_entries), len(ref_entries)))
        for i, test_entry in enumerate(test_entries):
            for j, ref_entry in enumerate(ref_entries):
                total = sum(
                    -contexts.meta_owner_return(game, 0, test_entry, ref_entry, rng)
                    for _ in range(episodes))
                cross[i, j] = total / episodes
    else:
        raise ValueError(f"unknown mode {mode!r}")
    scores = []
    for i in range(1, len(test_entries) + 1):
        prefix = test_meta[:i]
        mass = prefix.sum()
        weights = prefix / mass if mass > 0 else np.full(i, 1.0 / i)
        scores.append(float(weights @ cross[:i] @ ref_meta))
    return scores
