"""Config-driven experiments: parsing, orchestration, CSV and SVG outputs."""

from __future__ import annotations

import dataclasses
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import metrics
from .games import COL, ROW, MatrixGame, MixedStrategy, load_matrix_csv, save_matrix_csv
from .generators import MixtureGame, random_symmetric
from .kuhn import build_kuhn
from .meta import save_loss_history_csv
from .runners import LEDGER_COLUMNS, RunLedger, StopCondition, run_epsro, \
    run_p_psro, run_psro, run_psro_rn, run_self_play
from .urr import URRConfig

ALGORITHMS = ("psro", "epsro", "self_play", "psro_rn", "p_psro")

_BOOL = {"true": True, "false": False, "yes": True, "no": False, "1": True, "0": False}

# known config keys and their parsers
_SCHEMA = {
    "game.kind": str,
    "game.n": int,
    "game.seed": int,
    "game.path": str,
    "game.center_radius": float,
    "game.bandwidth": float,
    "game.arena_radius": float,
    "run.algorithms": str,
    "run.epochs": int,
    "run.seed": int,
    "run.deterministic": "bool",
    "run.sim_episodes": int,
    "run.br_budget": int,
    "run.table_mode": str,
    "run.workers": int,
    "run.warm_start": "bool",
    "run.budget_iters": int,
    "run.plateau_improvement": float,
    "run.plateau_window": int,
    "urr.mode": str,
    "urr.window": int,
    "urr.eta_meta": float,
    "urr.eta_responder": float,
    "urr.responder_rule": str,
    "urr.eps_target": float,
    "urr.max_iters": int,
    "urr.check_every": int,
    "urr.refine": str,
    "urr.gradient_step": float,
    "output.dir": str,
}

_DEFAULTS = {
    "game.kind": "random_symmetric",
    "game.n": 15,
    "game.seed": 0,
    "run.algorithms": "psro,epsro",
    "run.epochs": 10,
    "run.seed": 0,
    "run.deterministic": False,
    "run.sim_episodes": 1000,
    "run.br_budget": 200,
    "run.table_mode": "sampled",
    "run.workers": 4,
    "run.warm_start": True,
    "run.budget_iters": 1000,
    "run.plateau_improvement": 1e-4,
    "run.plateau_window": 100,
    "output.dir": "out",
}


class ConfigError(ValueError):
    pass


def parse_config(path) -> dict:
    """Parses the line-oriented ``section.key = value`` experiment config."""
    values = dict(_DEFAULTS)
    try:
        with open(path) as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'section.key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        parser = _SCHEMA[key]
        try:
            if parser == "bool":
                values[key] = _BOOL[value.lower()]
            else:
                values[key] = parser(value)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    algos = [a.strip() for a in str(values["run.algorithms"]).split(",") if a.strip()]
    unknown = [a for a in algos if a not in ALGORITHMS]
    if unknown:
        raise ConfigError(f"unknown algorithms: {unknown}")
    values["run.algorithms"] = algos
    return values


def build_game(config: dict):
    kind = config["game.kind"]
    if kind == "random_symmetric":
        return random_symmetric(config["game.n"], config["game.seed"])
    if kind == "rps":
        return MatrixGame([[0, -1, 1], [1, 0, -1], [-1, 1, 0]], symmetric=True)
    if kind == "matching_pennies":
        return MatrixGame([[1, -1], [-1, 1]])
    if kind == "kuhn":
        return build_kuhn()
    if kind == "mixture":
        return MixtureGame(
            center_radius=config.get("game.center_radius", 2.0),
            bandwidth=config.get("game.bandwidth", 0.5),
            arena_radius=config.get("game.arena_radius", 4.0))
    if kind == "matrix_csv":
        if "game.path" not in config:
            raise ConfigError("game.kind = matrix_csv requires game.path")
        return load_matrix_csv(config["game.path"])
    raise ConfigError(f"unknown game kind {kind!r}")


def _urr_config(config: dict) -> URRConfig:
    kwargs = {}
    for key in ("mode", "window", "eta_meta", "eta_responder", "responder_rule",
                "eps_target", "max_iters", "check_every", "refine", "gradient_step"):
        full = f"urr.{key}"
        if full in config:
            kwargs[key] = config[full]
    return URRConfig(**kwargs)


def run_algorithm(algo: str, game, config: dict, seed: int) -> RunLedger:
    epochs = config["run.epochs"]
    if algo == "psro":
        return run_psro(game, epochs, br_budget=config["run.br_budget"],
                        sim_episodes=config["run.sim_episodes"], seed=seed,
                        table_mode=config["run.table_mode"])
    if algo == "self_play":
        return run_self_play(game, epochs, br_budget=config["run.br_budget"], seed=seed)
    if algo == "psro_rn":
        return run_psro_rn(game, epochs, br_budget=config["run.br_budget"],
                           sim_episodes=config["run.sim_episodes"], seed=seed,
                           table_mode=config["run.table_mode"])
    if algo == "p_psro":
        return run_p_psro(game, epochs, workers=config["run.workers"],
                          br_budget=config["run.br_budget"],
                          sim_episodes=config["run.sim_episodes"], seed=seed,
                          table_mode=config["run.table_mode"])
    if algo == "epsro":
        budget = StopCondition(
            meta_iters_per_level=config["run.budget_iters"],
            plateau_improvement=config["run.plateau_improvement"],
            plateau_window=config["run.plateau_window"])
        return run_epsro(game, epochs, workers=config["run.workers"], budget=budget,
                         warm_start_on=config["run.warm_start"], seed=seed,
                         urr_cfg=_urr_config(config))
    raise ConfigError(f"unknown algorithm {algo!r}")


def plot_nashconv(ledgers: dict[str, list], path, x_field: str = "epoch",
                  x_label: str = "epoch") -> None:
    """Line plot of NashConv trajectories, one line per algorithm."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for algo, rows in ledgers.items():
        xs = [getattr(r, x_field) for r in rows]
        ys = [r.nashconv for r in rows]
        ax.plot(xs, ys, marker="o", markersize=3, label=algo)
    ax.set_xlabel(x_label)
    ax.set_ylabel("NashConv")
    ax.set_yscale("symlog", linthresh=1e-4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_trajectories(game: MixtureGame, sets_by_algo: dict, path) -> None:
    """Scatter of final policy points over the hump centers."""
    fig, ax = plt.subplots(figsize=(5, 5))
    theta = np.linspace(0, 2 * np.pi, 128)
    ax.plot(game.arena_radius * np.cos(theta), game.arena_radius * np.sin(theta),
            color="gray", linewidth=0.5)
    ax.scatter(game.centers[:, 0], game.centers[:, 1], marker="x", s=80,
               color="black", label="centers")
    for algo, (set_row, set_col) in sets_by_algo.items():
        points = np.array([np.asarray(p) for p in
                           list(set_row.entries) + list(set_col.entries)])
        ax.scatter(points[:, 0], points[:, 1], s=12, alpha=0.7, label=algo)
    ax.set_aspect("equal")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def save_policy_set_csv(policy_set, meta_weights, path) -> None:
    """Matrix-game policy set with meta weights: header ``k,n``, one mixture
    per line, then the meta line."""
    entries = list(policy_set.entries if hasattr(policy_set, "entries") else policy_set)
    if not entries or not isinstance(entries[0], MixedStrategy):
        raise ValueError("only mixed-strategy sets have a file form")
    weights = np.asarray(meta_weights, dtype=float)
    lines = [f"{len(entries)},{len(entries[0])}"]
    for entry in entries:
        lines.append(",".join(repr(float(v)) for v in entry.probs))
    lines.append(",".join(repr(float(v)) for v in weights))
    tmp = f"{path}.tmp"
    with open(tmp, "w") as handle:
        handle.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def load_policy_set_csv(path):
    """Returns ``(entries, meta_weights)`` for a saved policy-set file."""
    with open(path) as handle:
        lines = [line.strip() for line in handle if line.strip()]
    header = lines[0].split(",")
    if len(header) != 2:
        raise ValueError(f"{path}: header must be 'k,n'")
    k, n = int(header[0]), int(header[1])
    if len(lines) != k + 2:
        raise ValueError(f"{path}: expected {k} entries plus a meta line")
    entries = []
    for line in lines[1:1 + k]:
        probs = np.array([float(v) for v in line.split(",")])
        if probs.size != n:
            raise ValueError(f"{path}: entry of length {probs.size}, expected {n}")
        entries.append(MixedStrategy(probs))
    weights = np.array([float(v) for v in lines[1 + k].split(",")])
    if weights.size != k:
        raise ValueError(f"{path}: meta length {weights.size}, expected {k}")
    return entries, weights


def read_ledger_csv(path) -> list:
    """Reads ledger rows back as simple records for re-plotting."""

    @dataclasses.dataclass
    class Row:
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

    with open(path) as handle:
        lines = [line.strip() for line in handle if line.strip()]
    if not lines or lines[0] != ",".join(LEDGER_COLUMNS):
        raise ValueError(f"{path}: not a ledger CSV")
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        rows.append(Row(int(cells[0]), cells[1], int(cells[2]), float(cells[3]),
                        float(cells[4]), int(cells[5]), int(cells[6]),
                        int(cells[7]), int(cells[8]), float(cells[9])))
    return rows


def run_experiment(config_path, seed=None, deterministic=None, out_dir=None) -> int:
    """Executes the configured algorithms and writes ledgers, summary, plots.

    Returns a process exit code: 0 on success, 2 on configuration errors,
    1 on runtime failure.  No partial outputs are left on config errors.
    """
    try:
        config = parse_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}")
        return 2
    if seed is None:
        env_seed = os.environ.get("EPSRO_SEED")
        if env_seed is not None:
            try:
                seed = int(env_seed)
            except ValueError:
                print(f"config error: bad EPSRO_SEED {env_seed!r}")
                return 2
    if seed is not None:
        config["run.seed"] = seed
    if deterministic is not None:
        config["run.deterministic"] = deterministic
    if out_dir is not None:
        config["output.dir"] = out_dir
    try:
        game = build_game(config)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}")
        return 2
    out = config["output.dir"]
    det = config["run.deterministic"]
    try:
        os.makedirs(out, exist_ok=True)
        ledgers: dict[str, RunLedger] = {}
        for algo in config["run.algorithms"]:
            ledger = run_algorithm(algo, game, config, config["run.seed"])
            ledgers[algo] = ledger
            ledger.to_csv(os.path.join(out, f"ledger_{algo}.csv"), deterministic=det)
            if isinstance(game, MatrixGame) and ledger.sets is not None \
                    and ledger.metas is not None:
                for side, tag in ((ROW, "row"), (COL, "col")):
                    entries = ledger.sets[side]
                    weights = ledger.metas[side]
                    fixed = [entries[i] for i in entries.fixed_indices()]
                    save_policy_set_csv(fixed, weights[:len(fixed)],
                                        os.path.join(out, f"set_{algo}_{tag}.csv"))
            for side, tag in ((ROW, "row"), (COL, "col")):
                for index, buffer in enumerate(ledger.loss_buffers[side]):
                    if buffer.records:
                        save_loss_history_csv(buffer, os.path.join(
                            out, f"losses_{algo}_{tag}_{index}.csv"))
        summary_lines = ["algo,seed,epochs,final_nashconv,final_cardinality,"
                         "sim_episodes,meta_iters"]
        for algo, ledger in ledgers.items():
            last = ledger.rows[-1]
            summary_lines.append(
                f"{algo},{last.seed},{last.epoch},{repr(last.nashconv)},"
                f"{repr(last.cardinality)},{last.sim_episodes},{last.meta_iters}")
        with open(os.path.join(out, "summary.csv"), "w") as handle:
            handle.write("\n".join(summary_lines) + "\n")
        plot_nashconv({a: l.rows for a, l in ledgers.items()},
                      os.path.join(out, "nashconv_vs_epoch.svg"))
        plot_nashconv({a: l.rows for a, l in ledgers.items()},
                      os.path.join(out, "nashconv_vs_episodes.svg"),
                      x_field="sim_episodes", x_label="simulation episodes")
        if isinstance(game, MixtureGame):
            plot_trajectories(game,
                              {a: l.sets for a, l in ledgers.items() if l.sets},
                              os.path.join(out, "trajectories.svg"))
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"run failed: {exc}")
        return 1
    return 0


def evaluate_sets(game_path, test_path, ref_path, mode: str = "exact",
                  episodes: int = 50, seed=None):
    """Score a saved policy set against a reference set on a saved game."""
    game = load_matrix_csv(game_path)
    test_entries, test_meta = load_policy_set_csv(test_path)
    ref_entries, ref_meta = load_policy_set_csv(ref_path)
    return metrics.score_eval(game, test_entries, test_meta, ref_entries, ref_meta,
                              mode=mode, episodes=episodes, seed=seed)
