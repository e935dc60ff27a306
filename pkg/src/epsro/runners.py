"""Outer training loops.

Vanilla PSRO, self-play, rectified PSRO, pipeline PSRO, and EPSRO, all over a
shared ledger so runs are directly comparable.  Baselines use exact
best-response oracles (matrix scan, tree traversal, or gradient ascent on the
continuous game) and pay per-cell simulation episodes to fill their meta-game
tables; EPSRO runs URR solves instead and fills no tables.
"""

from __future__ import annotations

import dataclasses
import os
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import contexts, kuhn
from .games import COL, ROW, MatrixGame, MixedStrategy, PayoffTable, \
    RestrictedPolicySet, best_response, sample_payoff, solve_zero_sum
from .generators import MixtureGame, clip_to_arena, density_vector, \
    mixture_payoff_gradient
from .kuhn import BehaviorPolicy, GameTree
from .meta import BoltzmannMeta
from .metrics import expected_cardinality
from .urr import URRConfig, URRGame, URRSolver
from .warmstart import WarmStartProblem, estimate_new_entry, warm_start_beta

LEDGER_COLUMNS = ("epoch", "algo", "seed", "nashconv", "cardinality",
                  "set_size_p1", "set_size_p2", "sim_episodes", "meta_iters",
                  "wall_ms")


@dataclasses.dataclass
class LedgerRow:
    epoch: int
    algo: str
    seed: int
    nashconv: float
    cardinality: float
    set_size_p1: int
    set_size_p2: int
    sim_episodes: int
    meta_iters: int
    wall_ms: float


class RunLedger:
    """Per-epoch record of one run plus the artifacts needed for audits."""

    def __init__(self, algo: str, seed: int):
        self.algo = algo
        self.seed = seed
        self.rows: list[LedgerRow] = []
        self.sets: tuple[RestrictedPolicySet, RestrictedPolicySet] | None = None
        self.metas: tuple[np.ndarray, np.ndarray] | None = None
        self.table: PayoffTable | None = None
        # per player: list of per-epoch URR solutions
        self.urr_history: dict[int, list[dict]] = {ROW: [], COL: []}
        self.regret_reports: dict[int, list] = {ROW: [], COL: []}
        self.loss_buffers: dict[int, list] = {ROW: [], COL: []}
        self.oracle_episodes = 0

    def add_row(self, epoch: int, nashconv: float, cardinality: float,
                sizes: tuple[int, int], sim_episodes: int, meta_iters: int,
                wall_ms: float) -> None:
        self.rows.append(LedgerRow(epoch, self.algo, self.seed, nashconv,
                                   cardinality, sizes[0], sizes[1],
                                   sim_episodes, meta_iters, wall_ms))

    @property
    def final_nashconv(self) -> float:
        return self.rows[-1].nashconv

    @property
    def sim_episodes(self) -> int:
        return self.rows[-1].sim_episodes if self.rows else 0

    def to_csv(self, path, deterministic: bool = False) -> None:
        lines = [",".join(LEDGER_COLUMNS)]
        for row in self.rows:
            wall = 0.0 if deterministic else row.wall_ms
            lines.append(",".join([
                str(row.epoch), row.algo, str(row.seed), repr(row.nashconv),
                repr(row.cardinality), str(row.set_size_p1), str(row.set_size_p2),
                str(row.sim_episodes), str(row.meta_iters), repr(wall),
            ]))
        tmp = f"{path}.tmp"
        with open(tmp, "w") as handle:
            handle.write("\n".join(lines) + "\n")
        os.replace(tmp, path)


def meta_solver_lp(table) -> tuple[MixedStrategy, MixedStrategy]:
    """Exact Nash equilibrium of a zero-sum restricted game via linear programs."""
    matrix = table.matrix() if isinstance(table, PayoffTable) else np.asarray(table, dtype=float)
    row_probs, col_probs, _ = solve_zero_sum(matrix)
    return MixedStrategy(row_probs), MixedStrategy(col_probs)


def _entry_equal(a, b) -> bool:
    if isinstance(a, MixedStrategy):
        return np.array_equal(a.probs, b.probs)
    if isinstance(a, BehaviorPolicy):
        return a.tables.keys() == b.tables.keys() and all(
            np.array_equal(a.tables[k], b.tables[k]) for k in a.tables)
    return np.array_equal(np.asarray(a), np.asarray(b))


def _append_unique(policy_set: RestrictedPolicySet, policy) -> bool:
    for existing in policy_set.entries:
        if _entry_equal(existing, policy):
            return False
    policy_set.append(policy)
    return True


def _exact_br(game, side, entries, weights, br_budget: int, rng):
    """Exact best-response oracle: matrix scan, tree traversal, or the
    deterministic multi-start climb on the continuous game."""
    game_kind = contexts.kind(game)
    if game_kind == "matrix":
        flat = MixedStrategy(np.asarray(weights, dtype=float)
                             @ contexts.stack_matrix_entries(entries))
        index, _ = best_response(game, side, flat)
        return MixedStrategy.pure(game.n_strategies(side), index)
    if game_kind == "tree":
        response, _ = kuhn.exact_best_response(game, side, list(zip(entries, weights)))
        return response
    point, _ = contexts._mixture_br(game, entries, weights, steps=br_budget)
    return point


def _ledger_metrics(game, set_row, set_col, weights_row, weights_col):
    nashconv = contexts.nashconv_of_sets(game, set_row, weights_row,
                                         set_col, weights_col)
    cross = contexts.cross_payoff_matrix(game, set_row.entries, set_col.entries)
    return nashconv, expected_cardinality(cross)


def _init_sets(game, rng) -> tuple[RestrictedPolicySet, RestrictedPolicySet]:
    return (RestrictedPolicySet([contexts.initial_entry(game, ROW, rng)]),
            RestrictedPolicySet([contexts.initial_entry(game, COL, rng)]))


def run_psro(game, epochs: int, meta_solver=None, br_budget: int = 200,
             sim_episodes: int = 1000, seed=None, table_mode: str = "sampled") -> RunLedger:
    """Vanilla PSRO: exact best responses to the restricted-game equilibrium,
    with the payoff table simulated at ``sim_episodes`` per missing cell."""
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if meta_solver is None:
        meta_solver = meta_solver_lp
    if not callable(meta_solver):
        raise ValueError("meta_solver must be callable")
    ledger = RunLedger("psro", _seed_int(seed))
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    set_row, set_col = _init_sets(game, rng)
    table = _fill(game, set_row, set_col, None, table_mode, sim_episodes, rng)
    meta_row, meta_col = meta_solver(table)
    for epoch in range(1, epochs + 1):
        br_row = _exact_br(game, ROW, set_col.entries, meta_col.probs, br_budget, rng)
        br_col = _exact_br(game, COL, set_row.entries, meta_row.probs, br_budget, rng)
        _append_unique(set_row, br_row)
        _append_unique(set_col, br_col)
        table = _fill(game, set_row, set_col, table, table_mode, sim_episodes, rng)
        meta_row, meta_col = meta_solver(table)
        nashconv, cardinality = _ledger_metrics(game, set_row, set_col,
                                                meta_row.probs, meta_col.probs)
        ledger.add_row(epoch, nashconv, cardinality, (len(set_row), len(set_col)),
                       table.episode_cost, 0,
                       (time.perf_counter() - start) * 1000.0)
    ledger.sets = (set_row, set_col)
    ledger.metas = (meta_row.probs, meta_col.probs)
    ledger.table = table
    return ledger


def _seed_int(seed) -> int:
    return int(seed) if seed is not None else -1


def _fill(game, set_row, set_col, table, table_mode, sim_episodes, rng):
    """Fills missing table cells, charging episodes in sampled mode."""
    game_kind = contexts.kind(game)
    if table is None:
        table = PayoffTable(len(set_row), len(set_col))
    if table.shape != (len(set_row), len(set_col)):
        table.expand(len(set_row), len(set_col))
    for i in range(len(set_row)):
        for j in range(len(set_col)):
            if table.filled[i, j]:
                continue
            if table_mode == "exact":
                value = contexts.responder_entry_utility(game, ROW, set_row[i], set_col[j])
                table.set_entry(i, j, value)
            elif game_kind == "matrix":
                value = sample_payoff(game, set_row[i], set_col[j], sim_episodes,
                                      np.random.default_rng(rng.integers(2**63)))
                table.set_entry(i, j, value, episodes=sim_episodes)
            else:
                cell_rng = np.random.default_rng(rng.integers(2**63))
                total = sum(-contexts.meta_owner_return(game, ROW, set_row[i],
                                                        set_col[j], cell_rng)
                            for _ in range(sim_episodes))
                table.set_entry(i, j, total / sim_episodes, episodes=sim_episodes)
    return table


def run_self_play(game, epochs: int, br_budget: int = 200, seed=None) -> RunLedger:
    """Self-play: one policy per player, each epoch responding to the
    opponent's newest policy."""
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    ledger = RunLedger("self_play", _seed_int(seed))
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    policy_row = contexts.initial_entry(game, ROW, rng)
    policy_col = contexts.initial_entry(game, COL, rng)
    for epoch in range(1, epochs + 1):
        new_row = _exact_br(game, ROW, [policy_col], [1.0], br_budget, rng)
        new_col = _exact_br(game, COL, [policy_row], [1.0], br_budget, rng)
        policy_row, policy_col = new_row, new_col
        nashconv = contexts.nashconv_of_sets(game, [policy_row], [1.0],
                                             [policy_col], [1.0])
        cross = contexts.cross_payoff_matrix(game, [policy_row], [policy_col])
        ledger.add_row(epoch, nashconv, expected_cardinality(cross), (1, 1), 0, 0,
                       (time.perf_counter() - start) * 1000.0)
    ledger.sets = (RestrictedPolicySet([policy_row]), RestrictedPolicySet([policy_col]))
    ledger.metas = (np.array([1.0]), np.array([1.0]))
    return ledger


def run_psro_rn(game, epochs: int, br_budget: int = 200, sim_episodes: int = 1000,
                seed=None, table_mode: str = "sampled",
                support_threshold: float = 1e-9) -> RunLedger:
    """Rectified PSRO: every equilibrium-support policy responds to the
    opponents it already beats (per the current table estimates)."""
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    ledger = RunLedger("psro_rn", _seed_int(seed))
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    set_row, set_col = _init_sets(game, rng)
    table = _fill(game, set_row, set_col, None, table_mode, sim_episodes, rng)
    meta_row, meta_col = meta_solver_lp(table)
    for epoch in range(1, epochs + 1):
        matrix = table.matrix()
        new_rows, new_cols = [], []
        for side, meta_own, meta_opp, own_set, opp_set, news in (
                (ROW, meta_row, meta_col, set_row, set_col, new_rows),
                (COL, meta_col, meta_row, set_col, set_row, new_cols)):
            for j in np.nonzero(meta_own.probs > support_threshold)[0]:
                gains = matrix[j, :] if side == ROW else -matrix[:, j]
                weights = meta_opp.probs * (gains >= 0.0)
                total = weights.sum()
                weights = weights / total if total > 0 else meta_opp.probs
                news.append(_exact_br(game, side, opp_set.entries, weights,
                                      br_budget, rng))
        for policy in new_rows:
            _append_unique(set_row, policy)
        for policy in new_cols:
            _append_unique(set_col, policy)
        table = _fill(game, set_row, set_col, table, table_mode, sim_episodes, rng)
        meta_row, meta_col = meta_solver_lp(table)
        nashconv, cardinality = _ledger_metrics(game, set_row, set_col,
                                                meta_row.probs, meta_col.probs)
        ledger.add_row(epoch, nashconv, cardinality, (len(set_row), len(set_col)),
                       table.episode_cost, 0,
                       (time.perf_counter() - start) * 1000.0)
    ledger.sets = (set_row, set_col)
    ledger.metas = (meta_row.probs, meta_col.probs)
    ledger.table = table
    return ledger


@dataclasses.dataclass
class StopCondition:
    """Per-level promotion rule for pipelined runners.

    An active policy is promoted once it spends its iteration budget at the
    lowest level, reaches the solver's exploitability target, or plateaus
    (improvement below ``plateau_improvement`` over ``plateau_window``
    iterations).  ``rounds_per_level`` drives the table-based pipeline, whose
    training step is a best-response refresh rather than solver iterations.
    """

    meta_iters_per_level: int = 1000
    plateau_improvement: float = 1e-4
    plateau_window: int = 100
    rounds_per_level: int = 1


@dataclasses.dataclass
class PipelineState:
    """Coordinator view of both players' populations."""

    sets: dict
    stop: StopCondition
    workers: int


class _StaleTable:
    """Sampled payoff table whose cells track entry versions.

    Active entries change as they train; reading a cell whose endpoint moved
    since the last fill triggers a refill (and its simulation cost).
    """

    def __init__(self, game, sim_episodes: int, table_mode: str, rng):
        self.game = game
        self.sim_episodes = sim_episodes
        self.table_mode = table_mode
        self.rng = rng
        self.table = PayoffTable(0, 0)
        self.stamps: dict[tuple[int, int], tuple[int, int]] = {}

    def ensure(self, set_row, set_col, row_versions, col_versions,
               rows, cols) -> np.ndarray:
        if self.table.shape != (len(set_row), len(set_col)):
            self.table.expand(len(set_row), len(set_col))
        for i in rows:
            for j in cols:
                stamp = (row_versions[i], col_versions[j])
                if self.table.filled[i, j] and self.stamps.get((i, j)) == stamp:
                    continue
                if self.table_mode == "exact":
                    value = contexts.responder_entry_utility(
                        self.game, ROW, set_row[i], set_col[j])
                    self.table.set_entry(i, j, value)
                else:
                    cell_rng = np.random.default_rng(self.rng.integers(2**63))
                    total = sum(-contexts.meta_owner_return(
                        self.game, ROW, set_row[i], set_col[j], cell_rng)
                        for _ in range(self.sim_episodes))
                    self.table.set_entry(i, j, total / self.sim_episodes,
                                         episodes=self.sim_episodes)
                self.stamps[(i, j)] = stamp
        return self.table.values[np.ix_(rows, cols)]


def run_p_psro(game, epochs: int, workers: int = 4, budget: StopCondition | None = None,
               br_budget: int = 200, sim_episodes: int = 1000, seed=None,
               table_mode: str = "sampled") -> RunLedger:
    """Pipeline PSRO: a level-ordered queue of active policies, each refreshed
    as a best response to the equilibrium of the simulated table below it."""
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    budget = budget if budget is not None else StopCondition()
    ledger = RunLedger("p_psro", _seed_int(seed))
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    set_row, set_col = _init_sets(game, rng)
    sets = {ROW: set_row, COL: set_col}
    versions = {ROW: [0], COL: [0]}
    rounds_low = {ROW: 0, COL: 0}
    for side in (ROW, COL):
        for _ in range(workers):
            sets[side].append(contexts.initial_entry(game, side, rng), active=True)
            versions[side].append(0)
    stale = _StaleTable(game, sim_episodes, table_mode, rng)
    promoted = {ROW: 0, COL: 0}
    logged = 0
    meta_row = meta_col = None
    while min(promoted.values()) < epochs:
        for side in (ROW, COL):
            own, opp = sets[side], sets[1 - side]
            for index in own.active_indices():
                level = own.levels[index]
                own_below = own.indices_below(level)
                opp_below = opp.indices_below(level)
                if not own_below or not opp_below:
                    continue
                if side == ROW:
                    block = stale.ensure(own, opp, versions[ROW], versions[COL],
                                         own_below, opp_below)
                    _, target = meta_solver_lp(block)
                else:
                    block = stale.ensure(opp, own, versions[ROW], versions[COL],
                                         opp_below, own_below)
                    target, _ = meta_solver_lp(block)
                entries = [opp[j] for j in opp_below]
                policy = _exact_br(game, side, entries, target.probs, br_budget, rng)
                if not _entry_equal(own[index], policy):
                    own.replace_active(index, policy)
                    versions[side][index] += 1
            rounds_low[side] += 1
            if promoted[side] < epochs and rounds_low[side] >= budget.rounds_per_level:
                own.promote_lowest_active()
                promoted[side] += 1
                rounds_low[side] = 0
                own.append(contexts.initial_entry(game, side, rng), active=True)
                versions[side].append(0)
        if min(promoted.values()) > logged:
            logged = min(promoted.values())
            fixed_row = set_row.fixed_indices()
            fixed_col = set_col.fixed_indices()
            block = stale.ensure(set_row, set_col, versions[ROW], versions[COL],
                                 fixed_row, fixed_col)
            meta_row, meta_col = meta_solver_lp(block)
            row_entries = [set_row[i] for i in fixed_row]
            col_entries = [set_col[j] for j in fixed_col]
            nashconv = contexts.nashconv_of_sets(game, row_entries, meta_row.probs,
                                                 col_entries, meta_col.probs)
            cross = contexts.cross_payoff_matrix(game, row_entries, col_entries)
            ledger.add_row(logged, nashconv, expected_cardinality(cross),
                           (len(set_row), len(set_col)),
                           stale.table.episode_cost, 0,
                           (time.perf_counter() - start) * 1000.0)
    ledger.sets = (set_row, set_col)
    ledger.metas = (meta_row.probs, meta_col.probs)
    ledger.table = stale.table
    return ledger


@dataclasses.dataclass
class _ActiveSolver:
    solver: URRSolver
    level: int
    index: int
    expl_log: list = dataclasses.field(default_factory=list)


def _plateaued(expl_log, window: int, improvement: float) -> bool:
    if improvement <= 0.0 or len(expl_log) < 2:
        return False
    iters_now, expl_now = expl_log[-1]
    for iters_old, expl_old in reversed(expl_log[:-1]):
        if iters_now - iters_old >= window:
            return expl_old - expl_now < improvement
    return False


def _carry_responder(game, policy, floor: float = 1e-2):
    """Continues a responder into the next solve, restoring full support.

    Multiplicative updates cannot revive exactly-zero weights, so the carried
    strategy is mixed with a little uniform mass.
    """
    if isinstance(policy, MixedStrategy):
        n = len(policy)
        return MixedStrategy((1.0 - floor) * policy.probs + floor / n)
    if isinstance(policy, BehaviorPolicy):
        return BehaviorPolicy({key: (1.0 - floor) * probs + floor / probs.size
                               for key, probs in policy.tables.items()})
    return policy


def _grown_meta(solver: URRSolver, snapshot, warm_start_on: bool, game, side,
                cfg: URRConfig, warm_episodes: int, ledger: RunLedger, rng):
    """Meta weights for a grown restricted set: warm-started or uniform."""
    if not warm_start_on:
        return BoltzmannMeta.uniform(len(snapshot))
    sigma = solver.loop_sigma()
    avg_loss = solver.avg_loss()
    responder_avg = solver.avg_responder()
    meta = BoltzmannMeta(np.log(np.maximum(sigma, 1e-300)))
    for entry in snapshot[solver.n_supports:]:
        if cfg.mode == "exact":
            payoff = estimate_new_entry(game, side, responder_avg, entry, mode="exact")
        else:
            payoff = estimate_new_entry(game, side, responder_avg, entry,
                                        mode="sampled", episodes=warm_episodes,
                                        seed=int(rng.integers(2**63)))
            ledger.oracle_episodes += warm_episodes
        problem = WarmStartProblem(sigma, avg_loss, payoff)
        meta, _ = warm_start_beta(problem)
        sigma = meta.sigma().probs
        avg_loss = np.concatenate([avg_loss, [-payoff]])
    return meta


def run_epsro(game, epochs: int, workers: int = 4, budget: StopCondition | None = None,
              warm_start_on: bool = True, seed=None, urr_cfg: URRConfig | None = None,
              warm_episodes: int = 100, parallel: bool = False) -> RunLedger:
    """EPSRO: pipelined URR solves expand both players' restricted sets.

    Every active policy advances its URR solve against the snapshot of
    opponent entries below its level; the lowest active policy is promoted to
    fixed when it meets the stop condition, spawning a new top-level active
    whose meta-strategy is warm-started from the promoted solve.  No payoff
    tables are simulated.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    budget = budget if budget is not None else StopCondition()
    cfg = urr_cfg if urr_cfg is not None else URRConfig()
    ledger = RunLedger("epsro", _seed_int(seed))
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    mixture_game = contexts.kind(game) == "mixture"
    sets = {ROW: RestrictedPolicySet([contexts.initial_entry(game, ROW, rng)]),
            COL: RestrictedPolicySet([contexts.initial_entry(game, COL, rng)])}
    for side in (ROW, COL):
        for _ in range(workers):
            sets[side].append(contexts.initial_entry(game, side, rng), active=True)

    def spawn(side: int, index: int, init_responder=None,
              init_meta=None, buffer=None) -> _ActiveSolver:
        level = sets[side].levels[index]
        snapshot = tuple(sets[1 - side][j]
                         for j in sets[1 - side].indices_below(level))
        solver_cfg = dataclasses.replace(cfg, seed=int(rng.integers(2**63)))
        if mixture_game and init_responder is None:
            init_responder = contexts.initial_entry(game, side, rng)
        solver = URRSolver(URRGame(game, side, snapshot), solver_cfg,
                           init_responder=init_responder, init_meta=init_meta,
                           buffer=buffer)
        sets[side].replace_active(index, solver.avg_responder())
        return _ActiveSolver(solver, level, index)

    actives = {side: [spawn(side, index)
                      for index in sets[side].active_indices()]
               for side in (ROW, COL)}
    promoted = {ROW: 0, COL: 0}
    meta_iters_total = 0
    logged = 0
    chunk = max(1, cfg.check_every)
    max_rounds = 64 + 8 * epochs * workers * (budget.meta_iters_per_level // chunk + 1)
    rounds = 0
    while min(promoted.values()) < epochs:
        rounds += 1
        if rounds > max_rounds:
            raise RuntimeError("pipeline failed to reach the promotion target")
        # prepare: refresh or grow every solver's opponent snapshot
        for side in (ROW, COL):
            for state in actives[side]:
                snapshot = tuple(sets[1 - side][j]
                                 for j in sets[1 - side].indices_below(state.level))
                if len(snapshot) > state.solver.n_supports:
                    meta = _grown_meta(state.solver, snapshot, warm_start_on, game,
                                       side, cfg, warm_episodes, ledger, rng)
                    state.solver.grow_entries(snapshot, meta)
                else:
                    state.solver.refresh_entries(snapshot)
        # run all solvers against the snapshots just taken
        all_states = [state for side in (ROW, COL) for state in actives[side]]
        if parallel and len(all_states) > 1:
            with ThreadPoolExecutor(max_workers=len(all_states)) as pool:
                futures = [pool.submit(state.solver.run, chunk)
                           for state in all_states]
                for future in futures:
                    future.result()
        else:
            for state in all_states:
                state.solver.run(chunk)
        # publish, measure, promote
        need_expl = cfg.eps_target > 0.0 or budget.plateau_improvement > 0.0
        for side in (ROW, COL):
            for state in actives[side]:
                meta_iters_total += chunk
                sets[side].replace_active(state.index, state.solver.avg_responder())
                state.solver.snapshot_regret()
                if need_expl:
                    state.expl_log.append((state.solver.iterations,
                                           state.solver.exploitability()))
            lowest = min(actives[side], key=lambda s: s.level)
            solver = lowest.solver
            due = (solver.iterations >= budget.meta_iters_per_level
                   or (need_expl and lowest.expl_log[-1][1] <= cfg.eps_target)
                   or _plateaued(lowest.expl_log, budget.plateau_window,
                                 budget.plateau_improvement))
            if due and promoted[side] < epochs:
                refined = solver.try_refine()
                if refined:
                    sets[side].replace_active(lowest.index, solver.avg_responder())
                sets[side].promote_lowest_active()
                promoted[side] += 1
                ledger.urr_history[side].append({
                    "responder": solver.avg_responder(),
                    "sigma": solver.avg_sigma(),
                    "entries": tuple(solver.engine.entries),
                    "exploitability": solver.exploitability()
                    if (need_expl or refined) else float("nan"),
                    "iterations": solver.iterations,
                })
                ledger.regret_reports[side].extend(solver.regret_snapshots)
                new_index = sets[side].append(
                    contexts.initial_entry(game, side, rng), active=True)
                new_level = sets[side].levels[new_index]
                snapshot_new = tuple(sets[1 - side][j]
                                     for j in sets[1 - side].indices_below(new_level))
                meta_new = _grown_meta(solver, snapshot_new, warm_start_on, game,
                                       side, cfg, warm_episodes, ledger, rng)
                ledger.loss_buffers[side].append(solver.buffer)
                carried = None if mixture_game \
                    else _carry_responder(game, solver.engine.export(solver.responder))
                actives[side] = [s for s in actives[side] if s is not lowest]
                actives[side].append(spawn(side, new_index, init_responder=carried,
                                           init_meta=meta_new))
        if min(promoted.values()) > logged:
            logged = min(promoted.values())
            last_row = ledger.urr_history[ROW][logged - 1]
            last_col = ledger.urr_history[COL][logged - 1]
            # each player's meta over its own set comes from the opponent's solve
            nashconv = contexts.nashconv_of_sets(
                game, last_col["entries"], last_col["sigma"],
                last_row["entries"], last_row["sigma"])
            fixed_row = [sets[ROW][i] for i in sets[ROW].fixed_indices()]
            fixed_col = [sets[COL][j] for j in sets[COL].fixed_indices()]
            cross = contexts.cross_payoff_matrix(game, fixed_row, fixed_col)
            ledger.add_row(logged, nashconv, expected_cardinality(cross),
                           (len(sets[ROW]), len(sets[COL])), 0, meta_iters_total,
                           (time.perf_counter() - start) * 1000.0)
    for side in (ROW, COL):
        for state in actives[side]:
            ledger.regret_reports[side].extend(state.solver.regret_snapshots)
            ledger.loss_buffers[side].append(state.solver.buffer)
    ledger.sets = (sets[ROW], sets[COL])
    ledger.metas = (np.asarray(ledger.urr_history[COL][-1]["sigma"]),
                    np.asarray(ledger.urr_history[ROW][-1]["sigma"]))
    return ledger
