"""Tabular Kuhn poker.

Two-player zero-sum imperfect-information poker with three cards, one-chip
ante and one-chip bets.  Expected values and best responses are exact via
full tree traversal; payoffs are chips from the row player's perspective.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .games import COL, ROW, _side

CHANCE = -1
TERMINAL = -2

PASS = 0
BET = 1
N_ACTIONS = 2
N_CARDS = 3


@dataclasses.dataclass
class Node:
    player: int                     # ROW/COL, or CHANCE/TERMINAL
    children: list = dataclasses.field(default_factory=list)
    infoset: str = ""               # decision nodes only
    chance_probs: np.ndarray | None = None
    payoff: float = 0.0             # terminal nodes, row player's chips
    history: str = ""


@dataclasses.dataclass
class GameTree:
    root: Node
    infosets: dict[str, list[Node]]

    def infoset_keys(self, player) -> list[str]:
        side = _side(player)
        prefix = f"{side}:"
        return [key for key in self.infosets if key.startswith(prefix)]


def _terminal_payoff(history: str, card_row: int, card_col: int) -> float:
    showdown = 1.0 if card_row > card_col else -1.0
    if history == "pp":
        return showdown
    if history == "pbp":
        return -1.0
    if history == "bp":
        return 1.0
    return 2.0 * showdown  # pbb / bb


def _to_act(history: str) -> int:
    return ROW if len(history) % 2 == 0 else COL


def _is_terminal(history: str) -> bool:
    return history in ("pp", "pbp", "pbb", "bp", "bb")


def _build_subtree(history: str, card_row: int, card_col: int,
                   infosets: dict[str, list[Node]]) -> Node:
    if _is_terminal(history):
        return Node(TERMINAL, payoff=_terminal_payoff(history, card_row, card_col),
                    history=history)
    player = _to_act(history)
    card = card_row if player == ROW else card_col
    key = f"{player}:{card}:{history}"
    node = Node(player, infoset=key, history=history)
    infosets.setdefault(key, []).append(node)
    for action in ("p", "b"):
        node.children.append(_build_subtree(history + action, card_row, card_col, infosets))
    return node


def build_kuhn() -> GameTree:
    """Standard three-card Kuhn poker: 6 deals, 6 infosets per player."""
    infosets: dict[str, list[Node]] = {}
    deals = [(r, c) for r in range(N_CARDS) for c in range(N_CARDS) if r != c]
    root = Node(CHANCE, chance_probs=np.full(len(deals), 1.0 / len(deals)))
    for card_row, card_col in deals:
        root.children.append(_build_subtree("", card_row, card_col, infosets))
    return GameTree(root, infosets)


class BehaviorPolicy:
    """Per-infoset action distribution for one player."""

    def __init__(self, tables: dict[str, np.ndarray]):
        self.tables = {}
        for key, probs in tables.items():
            probs = np.asarray(probs, dtype=float)
            if probs.shape != (N_ACTIONS,) or probs.min() < -1e-12 \
                    or abs(probs.sum() - 1.0) > 1e-9:
                raise ValueError(f"invalid action distribution at {key}: {probs}")
            probs = np.maximum(probs, 0.0)
            probs.setflags(write=False)
            self.tables[key] = probs

    def prob(self, infoset: str) -> np.ndarray:
        try:
            return self.tables[infoset]
        except KeyError:
            raise ValueError(f"policy does not cover infoset {infoset}") from None

    @staticmethod
    def uniform(tree: GameTree, player) -> "BehaviorPolicy":
        keys = tree.infoset_keys(player)
        return BehaviorPolicy({k: np.full(N_ACTIONS, 0.5) for k in keys})

    @staticmethod
    def pure(tree: GameTree, player, actions: dict[str, int]) -> "BehaviorPolicy":
        tables = {}
        for key in tree.infoset_keys(player):
            probs = np.zeros(N_ACTIONS)
            probs[actions[key]] = 1.0
            tables[key] = probs
        return BehaviorPolicy(tables)


def _policy_for(node: Node, pol_row: BehaviorPolicy, pol_col: BehaviorPolicy) -> np.ndarray:
    policy = pol_row if node.player == ROW else pol_col
    return policy.prob(node.infoset)


def expected_value(tree: GameTree, pol_row: BehaviorPolicy, pol_col: BehaviorPolicy) -> float:
    """Exact row-player expectation over chance and both policies."""

    def walk(node: Node) -> float:
        if node.player == TERMINAL:
            return node.payoff
        if node.player == CHANCE:
            return sum(p * walk(child)
                       for p, child in zip(node.chance_probs, node.children))
        probs = _policy_for(node, pol_row, pol_col)
        return sum(p * walk(child) for p, child in zip(probs, node.children))

    return walk(tree.root)


def own_reach(tree: GameTree, player, policy: BehaviorPolicy) -> dict[str, float]:
    """Product of the player's own action probabilities reaching each infoset."""
    side = _side(player)
    reach: dict[str, float] = {}

    def walk(node: Node, contrib: float) -> None:
        if node.player in (TERMINAL,):
            return
        if node.player == CHANCE:
            for child in node.children:
                walk(child, contrib)
            return
        if node.player == side:
            # perfect recall: every history in an infoset shares the same
            # own-action prefix, so the first visit fixes the value
            reach.setdefault(node.infoset, contrib)
            probs = policy.prob(node.infoset)
            for p, child in zip(probs, node.children):
                walk(child, contrib * p)
        else:
            for child in node.children:
                walk(child, contrib)

    walk(tree.root, 1.0)
    return reach


def mixture_to_behavior(tree: GameTree, player, mixture) -> BehaviorPolicy:
    """Realization-equivalent single behavior policy for a policy mixture.

    ``mixture`` is a list of ``(BehaviorPolicy, weight)`` pairs; weights must
    form a simplex.  Per infoset, action probabilities are averaged with
    own-reach weighting, which preserves expected values against every
    opponent policy.
    """
    if not mixture:
        raise ValueError("empty mixture")
    weights = np.array([w for _, w in mixture], dtype=float)
    if weights.min() < -1e-12 or abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError("mixture weights must form a simplex")
    keys = tree.infoset_keys(player)
    reaches = [own_reach(tree, player, pol) for pol, _ in mixture]
    tables = {}
    for key in keys:
        num = np.zeros(N_ACTIONS)
        den = 0.0
        for (pol, weight), reach in zip(mixture, reaches):
            mass = weight * reach.get(key, 0.0)
            num += mass * pol.prob(key)
            den += mass
        if den > 0.0:
            tables[key] = num / den
        else:
            # unreachable under the whole mixture; any distribution works
            tables[key] = np.full(N_ACTIONS, 0.5)
    return BehaviorPolicy(tables)


def _counterfactual_reach(tree: GameTree, player, opponent: BehaviorPolicy):
    """Chance-and-opponent reach probability for every node."""
    side = _side(player)
    weights: dict[int, float] = {}

    def walk(node: Node, reach: float) -> None:
        weights[id(node)] = reach
        if node.player == TERMINAL:
            return
        if node.player == CHANCE:
            for p, child in zip(node.chance_probs, node.children):
                walk(child, reach * p)
        elif node.player == side:
            for child in node.children:
                walk(child, reach)
        else:
            probs = opponent.prob(node.infoset)
            for p, child in zip(probs, node.children):
                walk(child, reach * p)

    walk(tree.root, 1.0)
    return weights


def exact_best_response(tree: GameTree, player, opponent_mixture):
    """Pure-per-infoset best response against an opponent policy mixture.

    Returns ``(BehaviorPolicy, value)`` with the value from the responder's
    perspective, computed by reach-weighted backward induction.
    """
    side = _side(player)
    opponent = mixture_to_behavior(tree, 1 - side, opponent_mixture)
    cf_reach = _counterfactual_reach(tree, side, opponent)
    sign = 1.0 if side == ROW else -1.0

    keys = tree.infoset_keys(side)
    keys.sort(key=lambda k: len(k.split(":")[2]), reverse=True)  # deepest first
    chosen: dict[str, int] = {}

    def node_value(node: Node) -> float:
        if node.player == TERMINAL:
            return sign * node.payoff
        if node.player == CHANCE:
            return sum(p * node_value(child)
                       for p, child in zip(node.chance_probs, node.children))
        if node.player == side:
            return node_value(node.children[chosen[node.infoset]])
        probs = opponent.prob(node.infoset)
        return sum(p * node_value(child) for p, child in zip(probs, node.children))

    for key in keys:
        action_values = np.zeros(N_ACTIONS)
        for node in tree.infosets[key]:
            weight = cf_reach[id(node)]
            for action, child in enumerate(node.children):
                action_values[action] += weight * node_value(child)
        chosen[key] = int(np.argmax(action_values))

    response = BehaviorPolicy.pure(tree, side, chosen)
    if side == ROW:
        value = expected_value(tree, response, opponent)
    else:
        value = -expected_value(tree, opponent, response)
    return response, value


def counterfactual_action_values(tree: GameTree, player, pol_row: BehaviorPolicy,
                                 pol_col: BehaviorPolicy) -> dict[str, np.ndarray]:
    """Per-infoset action values for ``player`` weighted by opponent reach.

    Continuation play follows the given policy pair; values are from the
    player's perspective.
    """
    side = _side(player)
    sign = 1.0 if side == ROW else -1.0
    values: dict[str, np.ndarray] = {
        key: np.zeros(N_ACTIONS) for key in tree.infoset_keys(side)
    }

    def walk(node: Node, cf: float) -> float:
        if node.player == TERMINAL:
            return sign * node.payoff
        if node.player == CHANCE:
            return sum(p * walk(child, cf * p)
                       for p, child in zip(node.chance_probs, node.children))
        probs = _policy_for(node, pol_row, pol_col)
        if node.player == side:
            child_vals = [walk(child, cf) for child in node.children]
            values[node.infoset] += cf * np.asarray(child_vals)
            return float(probs @ np.asarray(child_vals))
        return sum(p * walk(child, cf * p) for p, child in zip(probs, node.children))

    walk(tree.root, 1.0)
    return values


def sample_episode(tree: GameTree, pol_row: BehaviorPolicy, pol_col: BehaviorPolicy,
                   rng: np.random.Generator) -> float:
    """Plays one seeded episode; returns the row player's chips."""
    node = tree.root
    while node.player != TERMINAL:
        if node.player == CHANCE:
            index = rng.choice(len(node.children), p=node.chance_probs)
        else:
            index = rng.choice(N_ACTIONS, p=_policy_for(node, pol_row, pol_col))
        node = node.children[index]
    return node.payoff


def nash_conv_efg(tree: GameTree, set_row, meta_row, set_col, meta_col) -> float:
    """NashConv of meta-strategy mixtures over behavior-policy sets."""
    row_mix = _as_mixture(set_row, meta_row)
    col_mix = _as_mixture(set_col, meta_col)
    row_behavior = mixture_to_behavior(tree, ROW, row_mix)
    col_behavior = mixture_to_behavior(tree, COL, col_mix)
    value = expected_value(tree, row_behavior, col_behavior)
    _, br_row = exact_best_response(tree, ROW, col_mix)
    _, br_col = exact_best_response(tree, COL, row_mix)
    return (br_row - value) + (br_col - (-value))


def _as_mixture(policy_set, meta):
    entries = list(policy_set.entries if hasattr(policy_set, "entries") else policy_set)
    weights = np.asarray(meta.probs if hasattr(meta, "probs") else meta, dtype=float)
    if len(entries) != weights.size:
        raise ValueError("meta length must match the policy set")
    return list(zip(entries, weights))


class CompiledTree:
    """Flat terminal-product form of the game tree.

    Every terminal's probability factorizes into chance times one action
    probability per (infoset, action) on its path, at most ``max_own`` per
    player.  Policies become flat parameter vectors of length
    ``2 * n_infosets`` (+1 constant slot), so expected values, per-support
    loss vectors and counterfactual action values reduce to array products.
    Used by the URR solver loop; agreement with the recursive traversals is
    covered by tests.
    """

    def __init__(self, tree: GameTree):
        self.keys = {ROW: tree.infoset_keys(ROW), COL: tree.infoset_keys(COL)}
        self.key_index = {
            side: {key: i for i, key in enumerate(self.keys[side])}
            for side in (ROW, COL)
        }
        self.n_params = {side: 2 * len(self.keys[side]) for side in (ROW, COL)}
        terminals: list[tuple[float, float, list, list]] = []

        def walk(node: Node, chance: float, factors: dict[int, list]) -> None:
            if node.player == TERMINAL:
                terminals.append((chance, node.payoff, list(factors[ROW]), list(factors[COL])))
                return
            if node.player == CHANCE:
                for p, child in zip(node.chance_probs, node.children):
                    walk(child, chance * p, factors)
                return
            side = node.player
            base = 2 * self.key_index[side][node.infoset]
            for action, child in enumerate(node.children):
                factors[side].append(base + action)
                walk(child, chance, factors)
                factors[side].pop()

        walk(tree.root, 1.0, {ROW: [], COL: []})
        self.n_terminals = len(terminals)
        self.chance = np.array([t[0] for t in terminals])
        self.payoff = np.array([t[1] for t in terminals])
        max_own = max(max((len(t[2]) for t in terminals), default=0),
                      max((len(t[3]) for t in terminals), default=0))
        self.factor_slots = {}
        for side, pos in ((ROW, 2), (COL, 3)):
            const = self.n_params[side]
            slots = np.full((self.n_terminals, max_own), const, dtype=int)
            for t, term in enumerate(terminals):
                for d, slot in enumerate(term[pos]):
                    slots[t, d] = slot
            self.factor_slots[side] = slots
        # counterfactual contributions: for each (infoset, action) parameter of
        # a side, the terminals it gates and the strictly-later own factors
        self.cf_owner = {}
        self.cf_term = {}
        self.cf_future = {}
        for side, pos in ((ROW, 2), (COL, 3)):
            const = self.n_params[side]
            owner, term_idx, future = [], [], []
            for t, term in enumerate(terminals):
                own = term[pos]
                for depth, slot in enumerate(own):
                    owner.append(slot)
                    term_idx.append(t)
                    later = own[depth + 1:]
                    future.append(later[0] if later else const)
                    if len(later) > 1:
                        raise NotImplementedError("one future own factor supported")
            self.cf_owner[side] = np.array(owner, dtype=int)
            self.cf_term[side] = np.array(term_idx, dtype=int)
            self.cf_future[side] = np.array(future, dtype=int)
        # own-action chain per infoset (factors before the infoset's own slot)
        self.reach_chain = {}
        for side, pos in ((ROW, 2), (COL, 3)):
            const = self.n_params[side]
            n_sets = len(self.keys[side])
            chain = np.full((n_sets, max(max_own - 1, 1)), const, dtype=int)
            seen = set()
            for term in terminals:
                own = term[pos]
                for depth, slot in enumerate(own):
                    infoset = slot // 2
                    if infoset not in seen:
                        seen.add(infoset)
                        for d, earlier in enumerate(own[:depth]):
                            chain[infoset, d] = earlier
            self.reach_chain[side] = chain

    def params_from_policy(self, side: int, policy: BehaviorPolicy) -> np.ndarray:
        flat = np.empty(self.n_params[side] + 1)
        for key, index in self.key_index[side].items():
            flat[2 * index: 2 * index + 2] = policy.prob(key)
        flat[-1] = 1.0
        return flat

    def policy_from_params(self, side: int, params: np.ndarray) -> BehaviorPolicy:
        tables = {}
        for key, index in self.key_index[side].items():
            tables[key] = params[2 * index: 2 * index + 2]
        return BehaviorPolicy(tables)

    def terminal_factors(self, side: int, params: np.ndarray) -> np.ndarray:
        """Product of the side's own action probabilities per terminal."""
        return params[self.factor_slots[side]].prod(axis=1)

    def expected_value_params(self, row_params: np.ndarray, col_params: np.ndarray) -> float:
        weights = self.chance * self.payoff
        return float(weights @ (self.terminal_factors(ROW, row_params)
                                * self.terminal_factors(COL, col_params)))

    def counterfactual_values(self, side: int, params: np.ndarray,
                              opp_terminal: np.ndarray) -> np.ndarray:
        """Per-(infoset, action) counterfactual values for ``side``.

        ``opp_terminal`` carries chance times the opponent's per-terminal
        factors; continuation uses the side's own ``params``.
        """
        sign = 1.0 if side == ROW else -1.0
        term = self.cf_term[side]
        contrib = sign * self.payoff[term] * opp_terminal[term] \
            * params[self.cf_future[side]]
        values = np.zeros(self.n_params[side])
        np.add.at(values, self.cf_owner[side], contrib)
        return values

    def own_reach_params(self, side: int, params: np.ndarray) -> np.ndarray:
        """Own-action reach probability per infoset."""
        return params[self.reach_chain[side]].prod(axis=1)
