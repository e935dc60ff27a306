"""Command-line entry point: generate games, run experiments, evaluate, plot."""

from __future__ import annotations

import argparse
import os
import sys

from .experiments import evaluate_sets, plot_nashconv, read_ledger_csv, run_experiment
from .games import MatrixGame, save_matrix_csv
from .generators import random_symmetric


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epsro",
                                     description="Zero-sum game solvers and experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="emit a payoff-matrix CSV")
    gen.add_argument("--kind", choices=["random_symmetric", "rps", "matching_pennies"],
                     default="random_symmetric")
    gen.add_argument("--n", type=int, default=15)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    run = sub.add_parser("run", help="run the configured experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--deterministic", action="store_true", default=None)
    run.add_argument("--out-dir", default=None)

    ev = sub.add_parser("eval", help="score a saved policy set against a reference")
    ev.add_argument("--game", required=True)
    ev.add_argument("--test-set", required=True)
    ev.add_argument("--ref-set", required=True)
    ev.add_argument("--mode", choices=["exact", "sampled"], default="exact")
    ev.add_argument("--episodes", type=int, default=50)
    ev.add_argument("--seed", type=int, default=None)
    ev.add_argument("--out", default=None)

    plot = sub.add_parser("plot", help="re-render NashConv plots from ledger CSVs")
    plot.add_argument("--ledger", nargs="+", required=True)
    plot.add_argument("--out-dir", default=".")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "generate":
        try:
            if args.kind == "random_symmetric":
                game = random_symmetric(args.n, args.seed)
            elif args.kind == "rps":
                game = MatrixGame([[0, -1, 1], [1, 0, -1], [-1, 1, 0]], symmetric=True)
            else:
                game = MatrixGame([[1, -1], [-1, 1]])
            save_matrix_csv(game, args.out)
        except (ValueError, OSError) as exc:
            print(f"generate failed: {exc}")
            return 1
        print(f"wrote {args.out}")
        return 0
    if args.command == "run":
        return run_experiment(args.config, seed=args.seed,
                              deterministic=args.deterministic, out_dir=args.out_dir)
    if args.command == "eval":
        try:
            scores = evaluate_sets(args.game, args.test_set, args.ref_set,
                                   mode=args.mode, episodes=args.episodes,
                                   seed=args.seed)
        except (ValueError, OSError) as exc:
            print(f"eval failed: {exc}")
            return 1
        lines = ["prefix,score"] + [f"{i + 1},{repr(s)}" for i, s in enumerate(scores)]
        text = "\n".join(lines) + "\n"
        if args.out:
            with open(args.out, "w") as handle:
                handle.write(text)
        else:
            sys.stdout.write(text)
        return 0
    if args.command == "plot":
        try:
            os.makedirs(args.out_dir, exist_ok=True)
            ledgers = {}
            for path in args.ledger:
                rows = read_ledger_csv(path)
                ledgers[rows[0].algo if rows else os.path.basename(path)] = rows
            plot_nashconv(ledgers, os.path.join(args.out_dir, "nashconv_vs_epoch.svg"))
            plot_nashconv(ledgers, os.path.join(args.out_dir, "nashconv_vs_episodes.svg"),
                          x_field="sim_episodes", x_label="simulation episodes")
        except (ValueError, OSError) as exc:
            print(f"plot failed: {exc}")
            return 1
        return 0
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
