"""Two-player zero-sum normal-form games.

Exact utilities, best responses, NashConv, empirical payoff tables over
restricted policy sets, and empirical-gamescape membership tests.  The row
player maximizes ``payoff``; the column player's utility is its negation.
"""

from __future__ import annotations

import dataclasses
import os

import numpy as np
from scipy.optimize import linprog

ROW = 0
COL = 1

FIXED = "fixed"
ACTIVE = "active"

_SYMMETRY_TOL = 1e-12


def _side(player) -> int:
    if player in (ROW, "row"):
        return ROW
    if player in (COL, "col"):
        return COL
    raise ValueError(f"player must be 'row'/'col' (or 0/1), got {player!r}")


@dataclasses.dataclass(frozen=True)
class MatrixGame:
    """Zero-sum matrix game; ``payoff[i, j]`` is the row player's utility."""

    payoff: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        payoff = np.asarray(self.payoff, dtype=float)
        if payoff.ndim != 2 or payoff.size == 0:
            raise ValueError("payoff must be a non-empty 2-D matrix")
        if not np.all(np.isfinite(payoff)):
            raise ValueError("payoff entries must be finite")
        if self.symmetric:
            if payoff.shape[0] != payoff.shape[1]:
                raise ValueError("symmetric game must be square")
            if not np.allclose(payoff, -payoff.T, atol=_SYMMETRY_TOL, rtol=0.0):
                raise ValueError("symmetric game requires payoff == -payoff.T")
        payoff = payoff.copy()
        payoff.setflags(write=False)
        object.__setattr__(self, "payoff", payoff)

    @property
    def n_rows(self) -> int:
        return self.payoff.shape[0]

    @property
    def n_cols(self) -> int:
        return self.payoff.shape[1]

    def n_strategies(self, player) -> int:
        return self.n_rows if _side(player) == ROW else self.n_cols


@dataclasses.dataclass(frozen=True)
class MixedStrategy:
    """Probability vector over a finite strategy set."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a non-empty 1-D vector")
        if not np.all(np.isfinite(probs)):
            raise ValueError("probs must be finite")
        if probs.min() < -1e-12:
            raise ValueError(f"negative probability {probs.min()}")
        probs = np.maximum(probs, 0.0)
        if abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {probs.sum()}, expected 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def __len__(self) -> int:
        return self.probs.size

    @staticmethod
    def uniform(n: int) -> "MixedStrategy":
        return MixedStrategy(np.full(n, 1.0 / n))

    @staticmethod
    def pure(n: int, index: int) -> "MixedStrategy":
        probs = np.zeros(n)
        probs[index] = 1.0
        return MixedStrategy(probs)


class RestrictedPolicySet:
    """Ordered, append-only policy population with fixed/active pipeline status.

    Entries are policies in the underlying game (mixed strategies for matrix
    games, behavior policies for game trees, 2-D points for the continuous
    mixture game).  Active entries carry strictly increasing levels, all above
    every fixed entry's level; promotion converts the lowest active entry to
    fixed without changing its level.
    """

    def __init__(self, entries=()):
        self._entries: list = []
        self._status: list[str] = []
        self._levels: list[int] = []
        for entry in entries:
            self.append(entry)

    def __len__(self) -> int:
        return len(self._entries)

    def __getitem__(self, index):
        return self._entries[index]

    @property
    def entries(self) -> tuple:
        return tuple(self._entries)

    @property
    def statuses(self) -> tuple[str, ...]:
        return tuple(self._status)

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(self._levels)

    def _next_level(self) -> int:
        return max(self._levels, default=-1) + 1

    def append(self, policy, *, active: bool = False) -> int:
        """Appends a policy at the next level; returns its index."""
        if not active and any(s == ACTIVE for s in self._status):
            raise ValueError("cannot append a fixed entry above active entries")
        if isinstance(policy, np.ndarray):
            policy = policy.copy()
            policy.setflags(write=False)
        self._entries.append(policy)
        self._status.append(ACTIVE if active else FIXED)
        self._levels.append(self._next_level())
        return len(self._entries) - 1

    def replace_active(self, index: int, policy) -> None:
        """Overwrites an active entry in place (training progress)."""
        if self._status[index] != ACTIVE:
            raise ValueError(f"entry {index} is fixed and immutable")
        if isinstance(policy, np.ndarray):
            policy = policy.copy()
            policy.setflags(write=False)
        self._entries[index] = policy

    def promote_lowest_active(self) -> int:
        """Fixes the lowest-level active entry; returns its index."""
        active = self.active_indices()
        if not active:
            raise ValueError("no active entries to promote")
        index = min(active, key=lambda i: self._levels[i])
        self._status[index] = FIXED
        return index

    def fixed_indices(self) -> list[int]:
        return [i for i, s in enumerate(self._status) if s == FIXED]

    def active_indices(self) -> list[int]:
        return [i for i, s in enumerate(self._status) if s == ACTIVE]

    def fixed_entries(self) -> list:
        return [self._entries[i] for i in self.fixed_indices()]

    def indices_below(self, level: int) -> list[int]:
        """Indices of entries (fixed or active) with level strictly below."""
        return [i for i, lv in enumerate(self._levels) if lv < level]


class PayoffTable:
    """Empirical payoff table over two restricted policy sets.

    ``values[i, j]`` holds the row player's utility for (row entry i, column
    entry j); ``filled`` marks which cells have been evaluated.  ``episode_cost``
    counts simulation episodes spent filling cells; exact evaluations are
    tallied separately and cost zero episodes.
    """

    def __init__(self, n_rows: int = 0, n_cols: int = 0):
        self.values = np.zeros((n_rows, n_cols))
        self.filled = np.zeros((n_rows, n_cols), dtype=bool)
        self.episode_cost = 0
        self.exact_evals = 0

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "PayoffTable":
        matrix = np.asarray(matrix, dtype=float)
        table = cls(*matrix.shape)
        table.values[:] = matrix
        table.filled[:] = True
        return table

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def expand(self, n_rows: int, n_cols: int) -> None:
        if n_rows < self.shape[0] or n_cols < self.shape[1]:
            raise ValueError("payoff tables never shrink")
        values = np.zeros((n_rows, n_cols))
        filled = np.zeros((n_rows, n_cols), dtype=bool)
        old_r, old_c = self.shape
        values[:old_r, :old_c] = self.values
        filled[:old_r, :old_c] = self.filled
        self.values, self.filled = values, filled

    def set_entry(self, i: int, j: int, value: float, episodes: int = 0) -> None:
        self.values[i, j] = value
        self.filled[i, j] = True
        if episodes:
            self.episode_cost += episodes
        else:
            self.exact_evals += 1

    def matrix(self) -> np.ndarray:
        if not self.filled.all():
            raise ValueError("payoff table has unfilled cells")
        return self.values.copy()

    def column(self, j: int) -> np.ndarray:
        if not self.filled[:, j].all():
            raise ValueError(f"column {j} has unfilled cells")
        return self.values[:, j].copy()


def utility(game: MatrixGame, row: MixedStrategy, col: MixedStrategy) -> float:
    """Row player's expected utility ``row^T payoff col``."""
    if len(row) != game.n_rows or len(col) != game.n_cols:
        raise ValueError(
            f"strategy dims ({len(row)}, {len(col)}) do not match game "
            f"({game.n_rows}, {game.n_cols})"
        )
    return float(row.probs @ game.payoff @ col.probs)


def best_response(game: MatrixGame, player, opponent: MixedStrategy):
    """Best pure response for ``player`` against ``opponent``.

    Returns ``(index, value)``; ties break toward the lowest index.
    """
    side = _side(player)
    if side == ROW:
        if len(opponent) != game.n_cols:
            raise ValueError("opponent must be a column strategy")
        values = game.payoff @ opponent.probs
    else:
        if len(opponent) != game.n_rows:
            raise ValueError("opponent must be a row strategy")
        values = -(opponent.probs @ game.payoff)
    index = int(np.argmax(values))
    return index, float(values[index])


def nash_conv(game: MatrixGame, sigma_row: MixedStrategy, sigma_col: MixedStrategy) -> float:
    """Sum of best-response gains for both players; zero exactly at a Nash."""
    value = utility(game, sigma_row, sigma_col)
    _, br_row = best_response(game, ROW, sigma_col)
    _, br_col = best_response(game, COL, sigma_row)
    return (br_row - value) + (br_col - (-value))


def flatten_mixture(entries, weights: np.ndarray) -> MixedStrategy:
    """Collapses a weighted set of mixed strategies into one full-space mixture."""
    weights = np.asarray(weights, dtype=float)
    if len(entries) != weights.size:
        raise ValueError("one weight per entry required")
    stacked = np.stack([e.probs for e in entries])
    return MixedStrategy(weights @ stacked)


def sample_payoff(game: MatrixGame, row: MixedStrategy, col: MixedStrategy,
                  episodes: int, rng: np.random.Generator) -> float:
    """Average payoff over seeded plays, one pure action drawn per side."""
    if episodes <= 0:
        raise ValueError("episodes must be positive")
    rows = rng.choice(game.n_rows, size=episodes, p=row.probs)
    cols = rng.choice(game.n_cols, size=episodes, p=col.probs)
    return float(game.payoff[rows, cols].mean())


def fill_payoff_table(game: MatrixGame, set_row: RestrictedPolicySet,
                      set_col: RestrictedPolicySet, mode: str = "exact",
                      episodes: int = 1000, seed=None,
                      table: PayoffTable | None = None) -> PayoffTable:
    """Fills the missing cells of the restricted payoff table.

    Exact mode evaluates the bilinear form directly (zero simulation
    episodes); sampled mode averages ``episodes`` seeded plays per missing
    cell and charges them to ``episode_cost``.  Passing an existing table
    extends it in place.
    """
    if len(set_row) == 0 or len(set_col) == 0:
        raise ValueError("restricted sets must be non-empty")
    if mode not in ("exact", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "sampled" and episodes <= 0:
        raise ValueError("sampled mode requires episodes >= 1")
    if table is None:
        table = PayoffTable(len(set_row), len(set_col))
    if table.shape != (len(set_row), len(set_col)):
        table.expand(len(set_row), len(set_col))
    rng = np.random.default_rng(seed) if mode == "sampled" else None
    for i in range(len(set_row)):
        for j in range(len(set_col)):
            if table.filled[i, j]:
                continue
            if mode == "exact":
                table.set_entry(i, j, utility(game, set_row[i], set_col[j]))
            else:
                value = sample_payoff(game, set_row[i], set_col[j], episodes, rng)
                table.set_entry(i, j, value, episodes=episodes)
    return table


def solve_zero_sum(matrix: np.ndarray):
    """Exact Nash equilibrium of a zero-sum matrix game by linear programming.

    Returns ``(row_probs, col_probs, value)`` for the row maximizer; the two
    players' LP values must agree to 1e-8.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.size == 0:
        raise ValueError("need a non-empty payoff matrix")

    def one_side(payoff: np.ndarray):
        # maximize v subject to payoff^T x >= v on the simplex
        rows, cols = payoff.shape
        c = np.zeros(rows + 1)
        c[-1] = -1.0
        a_ub = np.hstack([-payoff.T, np.ones((cols, 1))])
        a_eq = np.zeros((1, rows + 1))
        a_eq[0, :rows] = 1.0
        bounds = [(0, None)] * rows + [(None, None)]
        result = linprog(c, A_ub=a_ub, b_ub=np.zeros(cols), A_eq=a_eq,
                         b_eq=[1.0], bounds=bounds, method="highs",
                         options={"primal_feasibility_tolerance": 1e-10,
                                  "dual_feasibility_tolerance": 1e-10})
        if not result.success:
            raise RuntimeError(f"zero-sum LP failed: {result.message}")
        probs = np.maximum(result.x[:rows], 0.0)
        return probs / probs.sum(), float(result.x[-1])

    row_probs, row_value = one_side(matrix)
    col_probs, col_value = one_side(-matrix.T)
    if abs(row_value + col_value) > 1e-8:
        raise RuntimeError(f"LP values inconsistent: {row_value} vs {-col_value}")
    return row_probs, col_probs, row_value


def in_gamescape(table, candidate_column, tol: float = 1e-7) -> bool:
    """Whether a payoff column lies within the convex hull of existing columns.

    True iff some convex combination of the table's columns is within L-inf
    distance ``tol`` of ``candidate_column``, decided by a feasibility LP.
    """
    if isinstance(table, PayoffTable):
        columns = table.matrix()
    else:
        columns = np.asarray(table, dtype=float)
    if columns.size == 0:
        raise ValueError("empty table")
    candidate = np.asarray(candidate_column, dtype=float)
    if candidate.shape != (columns.shape[0],):
        raise ValueError("candidate length must equal the table row count")
    n_rows, n_cols = columns.shape
    # min s  s.t.  -s <= (columns @ w - candidate) <= s,  sum w = 1,  w >= 0
    c = np.zeros(n_cols + 1)
    c[-1] = 1.0
    ones = np.ones((n_rows, 1))
    a_ub = np.block([[columns, -ones], [-columns, -ones]])
    b_ub = np.concatenate([candidate, -candidate])
    a_eq = np.zeros((1, n_cols + 1))
    a_eq[0, :n_cols] = 1.0
    result = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0],
                     bounds=[(0, None)] * (n_cols + 1), method="highs")
    if not result.success:
        raise RuntimeError(f"hull feasibility LP failed: {result.message}")
    return float(result.fun) <= tol


def save_matrix_csv(game: MatrixGame, path) -> None:
    """Writes a payoff matrix as CSV with full-precision decimal floats."""
    lines = []
    if game.symmetric:
        lines.append("# symmetric")
    lines.append(f"{game.n_rows},{game.n_cols}")
    for row in game.payoff:
        lines.append(",".join(repr(float(v)) for v in row))
    tmp = f"{path}.tmp"
    with open(tmp, "w") as handle:
        handle.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def load_matrix_csv(path) -> MatrixGame:
    """Loads a payoff-matrix CSV; rejects NaN/Inf and malformed rows."""
    with open(path) as handle:
        lines = [line.strip() for line in handle if line.strip()]
    symmetric = False
    while lines and lines[0].startswith("#"):
        if lines[0].lstrip("# ").lower() == "symmetric":
            symmetric = True
        lines.pop(0)
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    header = lines[0].split(",")
    if len(header) != 2:
        raise ValueError(f"{path}: header must be 'n_rows,n_cols'")
    try:
        n_rows, n_cols = int(header[0]), int(header[1])
    except ValueError as exc:
        raise ValueError(f"{path}: bad header {lines[0]!r}") from exc
    body = lines[1:]
    if len(body) != n_rows:
        raise ValueError(f"{path}: expected {n_rows} rows, found {len(body)}")
    payoff = np.empty((n_rows, n_cols))
    for i, line in enumerate(body):
        cells = line.split(",")
        if len(cells) != n_cols:
            raise ValueError(f"{path}: row {i} has {len(cells)} cells, expected {n_cols}")
        try:
            payoff[i] = [float(cell) for cell in cells]
        except ValueError as exc:
            raise ValueError(f"{path}: row {i} has a non-numeric cell") from exc
    if not np.all(np.isfinite(payoff)):
        raise ValueError(f"{path}: NaN/Inf entries rejected")
    return MatrixGame(payoff, symmetric=symmetric)
