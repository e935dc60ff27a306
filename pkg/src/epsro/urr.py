"""Unrestricted-restricted game solver.

One player optimizes over its full strategy space while the opponent mixes
over a restricted policy set.  Both sides run no-regret-style updates
(multiplicative weights, best-response mixing, or gradient ascent for the
continuous game); the returned approximate equilibrium is the pair of
time-averaged strategies.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import contexts, kuhn
from .games import COL, ROW, MatrixGame, MixedStrategy, _side, solve_zero_sum
from .generators import MixtureGame, clip_to_arena, density_vector
from .kuhn import BehaviorPolicy, CompiledTree, GameTree
from .meta import BoltzmannMeta, LossBuffer, RegretReport, exact_loss_vector, \
    measure_regret, mwu_step, softmax, windowed_update

EXACT_ETA = 0.2
SAMPLED_ETA = 0.005


@dataclasses.dataclass(frozen=True)
class URRGame:
    """Full strategy space for ``full_side`` against the opponent's restricted set."""

    game: object
    full_side: int
    restricted_entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "full_side", _side(self.full_side))
        entries = tuple(self.restricted_entries)
        if not entries:
            raise ValueError("restricted set must be non-empty")
        object.__setattr__(self, "restricted_entries", entries)


@dataclasses.dataclass
class URRConfig:
    """Solver settings.

    ``mode`` is ``exact`` (loss vectors computed in closed form every
    iteration) or ``sampled`` (per-support returns estimated from seeded
    episodes over a window of ``window`` episodes per meta update).  Step
    sizes default to 0.2 in exact mode and 0.005 in sampled mode.
    """

    mode: str = "exact"
    window: int = 100
    seed: int | None = None
    eta_responder: float | None = None
    eta_meta: float | None = None
    responder_rule: str | None = None
    br_mix_rate: float = 0.5
    gradient_step: float = 0.05
    max_iters: int = 20_000
    eps_target: float = 1e-3
    check_every: int = 200
    record_cap: int | None = 50_000
    refine: str = "none"

    def __post_init__(self):
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.refine not in ("none", "lp"):
            raise ValueError(f"unknown refine setting {self.refine!r}")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        default_eta = EXACT_ETA if self.mode == "exact" else SAMPLED_ETA
        if self.eta_responder is None:
            self.eta_responder = default_eta
        if self.eta_meta is None:
            self.eta_meta = default_eta
        if self.eta_responder <= 0 or self.eta_meta <= 0:
            raise ValueError("step sizes must be positive")
        if not 0.0 < self.br_mix_rate <= 1.0:
            raise ValueError("br_mix_rate must lie in (0, 1]")
        if self.responder_rule not in (None, "mwu", "br_mix", "gradient"):
            raise ValueError(f"unknown responder rule {self.responder_rule!r}")


def _default_rule(game) -> str:
    return "gradient" if contexts.kind(game) == "mixture" else "mwu"


def _check_rule(game, rule: str) -> str:
    game_kind = contexts.kind(game)
    allowed = {"matrix": ("mwu", "br_mix"), "tree": ("mwu",), "mixture": ("gradient",)}
    if rule not in allowed[game_kind]:
        raise ValueError(f"responder rule {rule!r} not supported on {game_kind} games")
    return rule


class _MatrixEngine:
    """Vectorized loop state for matrix games.

    ``gains[r, j]`` is the full-side player's utility of pure strategy r
    against restricted entry j.
    """

    def __init__(self, game: MatrixGame, side: int, entries):
        self.game = game
        self.side = side
        self.n = game.n_strategies(side)
        self.rebuild(entries)

    def rebuild(self, entries):
        self.entries = tuple(entries)
        stacked = contexts.stack_matrix_entries(self.entries)
        if self.side == ROW:
            self.gains = self.game.payoff @ stacked.T
        else:
            self.gains = -(stacked @ self.game.payoff).T

    def init_responder(self, responder):
        if responder is None:
            return np.full(self.n, 1.0 / self.n)
        probs = responder.probs if isinstance(responder, MixedStrategy) else np.asarray(responder, dtype=float)
        if probs.size != self.n:
            raise ValueError("responder dimension mismatch")
        return probs.astype(float).copy()

    def meta_loss(self, responder: np.ndarray) -> np.ndarray:
        return responder @ self.gains

    def step(self, responder, sigma, rule, cfg):
        if rule == "mwu":
            gain = self.gains @ sigma
            scaled = responder * np.exp(cfg.eta_responder * (gain - gain.max()))
            return scaled / scaled.sum()
        best = int(np.argmax(self.gains @ sigma))
        mixed = (1.0 - cfg.br_mix_rate) * responder
        mixed[best] += cfg.br_mix_rate
        return mixed

    def zero_avg(self) -> np.ndarray:
        return np.zeros(self.n)

    def accumulate(self, avg, responder) -> None:
        avg += responder

    def average(self, avg, steps: int):
        return avg / steps

    def exploitability(self, responder, sigma) -> float:
        full = float((self.gains @ sigma).max())
        losses = responder @ self.gains
        return (full - losses @ sigma) + float(losses @ sigma - losses.min())

    def export(self, responder):
        return MixedStrategy(responder)

    def episode_return(self, responder, entry_index: int, rng) -> float:
        entry = self.entries[entry_index]
        own = rng.choice(self.n, p=responder)
        opp = rng.choice(len(entry), p=entry.probs)
        if self.side == ROW:
            return -float(self.game.payoff[own, opp])
        return float(self.game.payoff[opp, own])


class _TreeEngine:
    """Loop state for Kuhn: flat behavior parameters and per-infoset updates."""

    def __init__(self, tree: GameTree, side: int, entries):
        self.tree = tree
        self.side = side
        self.layout = CompiledTree(tree)
        self.sign = 1.0 if side == ROW else -1.0
        self.rebuild(entries)

    def rebuild(self, entries):
        self.entries = tuple(entries)
        opp = 1 - self.side
        rows = [self.layout.chance * self.layout.terminal_factors(
            opp, self.layout.params_from_policy(opp, entry)) for entry in self.entries]
        self.entry_terms = np.stack(rows)  # (k, n_terminals)

    def init_responder(self, responder):
        if responder is None:
            responder = BehaviorPolicy.uniform(self.tree, self.side)
        return self.layout.params_from_policy(self.side, responder)

    def meta_loss(self, params: np.ndarray) -> np.ndarray:
        own = self.layout.terminal_factors(self.side, params)
        return self.entry_terms @ (self.sign * self.payoff_own(own))

    def payoff_own(self, own_factors: np.ndarray) -> np.ndarray:
        return self.layout.payoff * own_factors

    def step(self, params, sigma, rule, cfg):
        opp_terminal = sigma @ self.entry_terms
        values = self.layout.counterfactual_values(self.side, params, opp_terminal)
        n_sets = self.layout.n_params[self.side] // 2
        table = params[:-1].reshape(n_sets, 2)
        q = values.reshape(n_sets, 2)
        scaled = table * np.exp(cfg.eta_responder * (q - q.max(axis=1, keepdims=True)))
        table = scaled / scaled.sum(axis=1, keepdims=True)
        out = np.empty_like(params)
        out[:-1] = table.ravel()
        out[-1] = 1.0
        return out

    def zero_avg(self):
        return (np.zeros(self.layout.n_params[self.side]),
                np.zeros(self.layout.n_params[self.side] // 2))

    def accumulate(self, avg, params) -> None:
        num, den = avg
        reach = self.layout.own_reach_params(self.side, params)
        num += np.repeat(reach, 2) * params[:-1]
        den += reach

    def average(self, avg, steps: int) -> np.ndarray:
        num, den = avg
        n_sets = den.size
        table = np.full((n_sets, 2), 0.5)
        mask = den > 0
        table[mask] = num.reshape(n_sets, 2)[mask] / den[mask, None]
        out = np.empty(2 * n_sets + 1)
        out[:-1] = table.ravel()
        out[-1] = 1.0
        return out

    def exploitability(self, params, sigma) -> float:
        mixture = list(zip(self.entries, sigma))
        _, full = kuhn.exact_best_response(self.tree, self.side, mixture)
        losses = self.meta_loss(params)
        return (full - losses @ sigma) + float(losses @ sigma - losses.min())

    def export(self, params) -> BehaviorPolicy:
        return self.layout.policy_from_params(self.side, params)

    def episode_return(self, params, entry_index: int, rng) -> float:
        entry = self.entries[entry_index]
        policy = self.export(params)
        row, col = (policy, entry) if self.side == ROW else (entry, policy)
        chips = kuhn.sample_episode(self.tree, row, col, rng)
        return -chips if self.side == ROW else chips


class _MixtureEngine:
    """Loop state for the continuous mixture game: a point responder."""

    def __init__(self, game: MixtureGame, side: int, entries):
        self.game = game
        self.side = side
        self.rebuild(entries)

    def rebuild(self, entries):
        self.entries = tuple(entries)
        self.entry_density = np.stack([density_vector(self.game, e) for e in self.entries])

    def init_responder(self, responder):
        if responder is None:
            return np.zeros(2)
        return np.asarray(responder, dtype=float).copy()

    def meta_loss(self, point: np.ndarray) -> np.ndarray:
        own = density_vector(self.game, point)
        return (self.entry_density @ (self.game.skew.T @ own)
                + own.sum() - self.entry_density.sum(axis=1))

    def step(self, point, sigma, rule, cfg):
        own = density_vector(self.game, point)
        flat = sigma @ self.entry_density
        coeff = own * (self.game.skew @ flat + 1.0)
        grad = (coeff @ (self.game.centers - point)) / self.game.bandwidth**2
        return clip_to_arena(self.game, point + cfg.gradient_step * grad)

    def zero_avg(self):
        return np.zeros(2)

    def accumulate(self, avg, point) -> None:
        avg += point

    def average(self, avg, steps: int):
        # points do not mix; the current iterate is the policy
        return None

    def exploitability(self, point, sigma) -> float:
        full = contexts.full_best_response_value(
            self.game, self.side, self.entries, sigma)
        losses = self.meta_loss(point)
        return (full - losses @ sigma) + float(losses @ sigma - losses.min())

    def export(self, point):
        return np.asarray(point, dtype=float).copy()

    def episode_return(self, point, entry_index: int, rng) -> float:
        return -float(self.meta_loss(point)[entry_index])


def _make_engine(game, side, entries):
    game_kind = contexts.kind(game)
    if game_kind == "matrix":
        return _MatrixEngine(game, side, entries)
    if game_kind == "tree":
        return _TreeEngine(game, side, entries)
    return _MixtureEngine(game, side, entries)


@dataclasses.dataclass
class URRRecord:
    """Ledger slice for one solve: counters, averages, and the loss history."""

    iterations: int
    episodes: int
    exploitability: float
    stop_reason: str
    buffer: LossBuffer
    avg_loss: np.ndarray
    avg_sigma: np.ndarray
    regret: RegretReport


class URRSolver:
    """Resumable solver state for one URR game.

    The pipeline coordinator advances solvers in chunks via :meth:`run`,
    refreshes opponent snapshots with :meth:`refresh_entries`, and grows the
    restricted side with :meth:`grow_entries` on opponent promotions.
    """

    def __init__(self, urr: URRGame, cfg: URRConfig | None = None,
                 init_responder=None, init_meta: BoltzmannMeta | None = None,
                 buffer: LossBuffer | None = None):
        self.cfg = cfg if cfg is not None else URRConfig()
        self.game = urr.game
        self.side = urr.full_side
        rule = self.cfg.responder_rule or _default_rule(self.game)
        self.rule = _check_rule(self.game, rule)
        self.engine = _make_engine(self.game, self.side, urr.restricted_entries)
        self.responder = self.engine.init_responder(init_responder)
        k = len(urr.restricted_entries)
        self.meta = init_meta if init_meta is not None else BoltzmannMeta.uniform(k)
        if len(self.meta) != k:
            raise ValueError("meta length must match the restricted set")
        self.buffer = buffer if buffer is not None else LossBuffer(
            k, window_size=self.cfg.window, record_cap=self.cfg.record_cap)
        if self.buffer.n_supports != k:
            raise ValueError("loss buffer width must match the restricted set")
        self.rng = np.random.default_rng(self.cfg.seed)
        self.iterations = 0
        self.episodes_start = self.buffer.episodes
        self.avg_responder_acc = self.engine.zero_avg()
        self.avg_sigma_acc = np.zeros(k)
        self.loss_acc = np.zeros(k)
        self.loss_steps = 0
        self.avg_steps = 0
        self.regret_snapshots: list[RegretReport] = []
        self.last_exploitability = float("inf")
        self.refined = None

    @property
    def n_supports(self) -> int:
        return self.avg_sigma_acc.size

    @property
    def episodes(self) -> int:
        return self.buffer.episodes - self.episodes_start

    def refresh_entries(self, entries) -> None:
        """Re-reads entry values (same count); pipeline snapshot refresh."""
        if len(entries) != self.n_supports:
            raise ValueError("refresh cannot change the support count")
        self.refined = None
        self.engine.rebuild(entries)

    def grow_entries(self, entries, meta: BoltzmannMeta) -> None:
        """Adopts a grown restricted set with externally initialized weights."""
        if len(entries) < self.n_supports:
            raise ValueError("restricted sets never shrink")
        if len(meta) != len(entries):
            raise ValueError("meta length must match the new set")
        extra = len(entries) - self.n_supports
        self.refined = None
        self.engine.rebuild(entries)
        self.meta = meta
        self.buffer.grow(len(entries))
        self.avg_sigma_acc = np.concatenate([self.avg_sigma_acc, np.zeros(extra)])
        self.loss_acc = np.concatenate([self.loss_acc, np.zeros(extra)])

    def loop_sigma(self) -> np.ndarray:
        if self.avg_steps == 0:
            return self.meta.sigma().probs
        return self.avg_sigma_acc / self.avg_steps

    def avg_sigma(self) -> np.ndarray:
        if self.refined is not None:
            return self.refined[1]
        return self.loop_sigma()

    def _avg_repr(self):
        if self.refined is not None:
            return self.refined[0]
        if self.avg_steps == 0:
            return self.responder
        averaged = self.engine.average(self.avg_responder_acc, self.avg_steps)
        return self.responder if averaged is None else averaged

    def avg_responder(self):
        return self.engine.export(self._avg_repr())

    def avg_loss(self) -> np.ndarray:
        if self.loss_steps == 0:
            return np.zeros(self.n_supports)
        return self.loss_acc / self.loss_steps

    def exploitability(self) -> float:
        """URR-exploitability of the current solution strategies."""
        value = self.engine.exploitability(self._avg_repr(), self.avg_sigma())
        self.last_exploitability = value
        return value

    def try_refine(self) -> bool:
        """Replaces the solution with the exact LP equilibrium of the URR game.

        Only matrix games have the finite bimatrix form this needs; the loss
        history and running averages (used for regret audits and warm starts)
        are left untouched.
        """
        if self.cfg.refine != "lp" or not isinstance(self.engine, _MatrixEngine):
            return False
        if self.refined is None:
            responder, sigma, _ = solve_zero_sum(self.engine.gains)
            self.refined = (responder, sigma)
        return True

    def run(self, iterations: int) -> None:
        """Advances the alternating updates by ``iterations`` steps."""
        self.refined = None
        cfg = self.cfg
        if cfg.mode == "sampled":
            self._run_sampled(iterations)
            return
        engine = self.engine
        beta = self.meta.beta.copy()
        sigma = softmax(beta)
        eta = cfg.eta_meta
        for _ in range(iterations):
            next_responder = engine.step(self.responder, sigma, self.rule, cfg)
            loss = engine.meta_loss(self.responder)
            self.buffer.record(loss, sigma)
            self.loss_acc += loss
            self.loss_steps += 1
            self.avg_sigma_acc += sigma
            engine.accumulate(self.avg_responder_acc, self.responder)
            self.avg_steps += 1
            self.iterations += 1
            self.responder = next_responder
            beta -= eta * loss
            beta -= beta.max()  # keep weights bounded over long horizons
            sigma = softmax(beta)
        self.meta = BoltzmannMeta(beta)

    def _run_sampled(self, iterations: int) -> None:
        cfg = self.cfg
        sigma = self.meta.sigma().probs
        for _ in range(iterations):
            next_responder = self.engine.step(self.responder, sigma, self.rule, cfg)
            support = int(self.rng.choice(self.n_supports, p=sigma))
            episode = self.engine.episode_return(self.responder, support, self.rng)
            self.meta, flushed = windowed_update(self.buffer, self.meta, episode,
                                                 support, cfg.eta_meta)
            if flushed is not None:
                self.loss_acc += flushed
                self.loss_steps += 1
            self.avg_sigma_acc += sigma
            self.engine.accumulate(self.avg_responder_acc, self.responder)
            self.avg_steps += 1
            self.iterations += 1
            self.responder = next_responder
            sigma = self.meta.sigma().probs

    def snapshot_regret(self) -> RegretReport:
        report = measure_regret(self.buffer)
        self.regret_snapshots.append(report)
        return report


def solve_urr(urr: URRGame, init_responder=None, init_meta: BoltzmannMeta | None = None,
              cfg: URRConfig | None = None, buffer: LossBuffer | None = None):
    """Runs the alternating no-regret loop to an approximate URR equilibrium.

    Terminates once the exploitability of the averaged strategies reaches
    ``cfg.eps_target`` (checked every ``cfg.check_every`` iterations) or after
    ``cfg.max_iters``.  Returns ``(responder, meta, record)`` where the
    responder and meta weights encode the averaged strategies.
    """
    cfg = cfg if cfg is not None else URRConfig()
    solver = URRSolver(urr, cfg, init_responder, init_meta, buffer)
    stop_reason = "max_iters"
    while solver.iterations < cfg.max_iters:
        chunk = min(cfg.check_every, cfg.max_iters - solver.iterations)
        solver.run(chunk)
        solver.snapshot_regret()
        if solver.exploitability() <= cfg.eps_target:
            stop_reason = "eps_target"
            break
    if solver.try_refine():
        solver.exploitability()
        stop_reason = "refined"
    exploitability = solver.last_exploitability
    sigma = solver.avg_sigma()
    meta_star = BoltzmannMeta(np.log(np.maximum(sigma, 1e-300)))
    record = URRRecord(
        iterations=solver.iterations,
        episodes=solver.episodes,
        exploitability=exploitability,
        stop_reason=stop_reason,
        buffer=solver.buffer,
        avg_loss=solver.avg_loss(),
        avg_sigma=sigma,
        regret=solver.regret_snapshots[-1] if solver.regret_snapshots
        else solver.snapshot_regret(),
    )
    return solver.avg_responder(), meta_star, record


def responder_step(game, full_side, responder, meta, restricted_set,
                   cfg: URRConfig | None = None):
    """One responder update against the meta mixture; rule per config."""
    cfg = cfg if cfg is not None else URRConfig()
    entries = list(restricted_set.entries if hasattr(restricted_set, "entries")
                   else restricted_set)
    rule = cfg.responder_rule or _default_rule(game)
    rule = _check_rule(game, rule)
    engine = _make_engine(game, _side(full_side), entries)
    state = engine.init_responder(responder)
    sigma = meta.sigma().probs if isinstance(meta, BoltzmannMeta) \
        else np.asarray(meta, dtype=float)
    return engine.export(engine.step(state, sigma, rule, cfg))


def urr_exploitability(urr: URRGame, responder, meta) -> float:
    """Full-side best-response gap plus restricted-side support gap."""
    sigma = meta.sigma().probs if isinstance(meta, BoltzmannMeta) \
        else np.asarray(meta, dtype=float)
    entries = list(urr.restricted_entries)
    if sigma.size != len(entries):
        raise ValueError("meta length must match the restricted set")
    losses = exact_loss_vector(urr.game, urr.full_side, responder, entries)
    if not np.all(np.isfinite(losses)):
        raise ValueError("non-finite utilities")
    full_term = contexts.full_best_response_value(
        urr.game, urr.full_side, entries, sigma) - float(losses @ sigma)
    restricted_term = float(losses @ sigma - losses.min())
    return full_term + restricted_term
