"""Command-line entry point: train agents, run evaluation sweeps, play in
the terminal, and serve the HTTP game API.

Configuration precedence: a JSON config file (flat keys mirroring the flag
names) supplies defaults, and explicit flags override it.  Exit codes:
0 success, 2 usage/config errors, 3 training divergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from .board import GameMode, MODE_KINDS, board_from_json_str
from .game import GenerationExhausted, IllegalMove, new_game, apply_move, random_board
from .qnet import CheckpointError, Hyperparameters, load_checkpoint, q_values

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

_HYPER_DEFAULTS = Hyperparameters()


class CliError(Exception):
    """Configuration or usage problem; exits with code 2."""


def _add_hyper_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("hyperparameters")
    g.add_argument("--d", type=int, default=_HYPER_DEFAULTS.d, help="embedding depth")
    g.add_argument("--m", type=int, default=_HYPER_DEFAULTS.m, help="embedding dimension")
    g.add_argument("--n-replay", type=int, default=_HYPER_DEFAULTS.n_replay,
                   help="replay capacity")
    g.add_argument("--t-rollout", type=int, default=_HYPER_DEFAULTS.t_rollout,
                   help="rollout frequency (epochs)")
    g.add_argument("--n-rollout", type=int, default=_HYPER_DEFAULTS.n_rollout,
                   help="games per rollout")
    g.add_argument("--eps-max", type=float, default=_HYPER_DEFAULTS.eps_max,
                   help="initial exploration probability")
    g.add_argument("--eps-min", type=float, default=_HYPER_DEFAULTS.eps_min,
                   help="final exploration probability")
    g.add_argument("--t-anneal", type=int, default=_HYPER_DEFAULTS.t_anneal,
                   help="epsilon annealing period")
    g.add_argument("--n-batch", type=int, default=_HYPER_DEFAULTS.n_batch,
                   help="batch size")
    g.add_argument("--t-max", type=int, default=_HYPER_DEFAULTS.t_max,
                   help="total training epochs")
    g.add_argument("--t-update", type=int, default=_HYPER_DEFAULTS.t_update,
                   help="target network update frequency")
    g.add_argument("--learning-rate", type=float,
                   default=_HYPER_DEFAULTS.learning_rate, help="Adam step size")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="percgame",
        description="Percolation-style lattice attack games with DQN agents.")
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers: dict[str, argparse.ArgumentParser] = {}

    p_train = sub.add_parser("train", help="train an agent by self-play")
    p_train.add_argument("--config", help="JSON config file (flags override it)")
    p_train.add_argument("--mode", choices=MODE_KINDS, required=False,
                         help="game mode to train on")
    p_train.add_argument("--k", default="2", help="noodle ratio threshold (rational)")
    p_train.add_argument("--n", type=int, default=20, help="board side length")
    p_train.add_argument("--p", default="0.5:1.0",
                         help="training open fraction: float or min:max")
    p_train.add_argument("--seed", type=int, default=0, help="RNG seed")
    p_train.add_argument("--out", default="runs/train", help="output directory")
    p_train.add_argument("--compile", action="store_true",
                         help="torch.compile the training forward pass")
    _add_hyper_flags(p_train)
    p_train.set_defaults(func=cmd_train)
    subparsers["train"] = p_train

    p_eval = sub.add_parser("eval", help="run an evaluation sweep")
    p_eval.add_argument("--config", help="JSON config file (flags override it)")
    p_eval.add_argument("--agent", choices=("random",),
                        help="built-in baseline agent")
    p_eval.add_argument("--checkpoint", help="trained agent checkpoint path")
    p_eval.add_argument("--mode", choices=MODE_KINDS,
                        help="mode to play (alias of --played-mode)")
    p_eval.add_argument("--played-mode", choices=MODE_KINDS,
                        help="mode to play; defaults to the checkpoint's mode")
    p_eval.add_argument("--k", default="2", help="noodle ratio threshold (rational)")
    p_eval.add_argument("--p", default="0.6:1.0",
                        help="open fraction grid: float or min:max")
    p_eval.add_argument("--p-step", type=float, default=0.05,
                        help="grid step when --p is a range")
    p_eval.add_argument("--games", type=int, default=1000, help="boards per p value")
    p_eval.add_argument("--n", type=int, default=20, help="board side length")
    p_eval.add_argument("--max-moves", type=int, default=None,
                        help="truncation cap (default n^2)")
    p_eval.add_argument("--seed", type=int, default=0, help="RNG seed")
    p_eval.add_argument("--out", default="runs/eval", help="output directory")
    p_eval.set_defaults(func=cmd_eval)
    subparsers["eval"] = p_eval

    p_play = sub.add_parser("play", help="play a game in the terminal")
    p_play.add_argument("--config", help="JSON config file (flags override it)")
    p_play.add_argument("--mode", choices=MODE_KINDS, default="network")
    p_play.add_argument("--k", default="2", help="noodle ratio threshold (rational)")
    p_play.add_argument("--n", type=int, default=10)
    p_play.add_argument("--p", type=float, default=0.8)
    p_play.add_argument("--seed", type=int, default=None)
    p_play.add_argument("--board", help="board JSON file to load")
    p_play.add_argument("--checkpoint", help="agent checkpoint for hints")
    p_play.add_argument("--hint", action="store_true",
                        help="show the greedy move and its Q value each turn")
    p_play.set_defaults(func=cmd_play)
    subparsers["play"] = p_play

    p_serve = sub.add_parser("serve", help="serve the HTTP game API")
    p_serve.add_argument("--config", help="JSON config file (flags override it)")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int,
                         default=int(os.environ.get("PERC_PORT", "8000")))
    p_serve.add_argument("--checkpoint-dir",
                         default=os.environ.get("PERC_CHECKPOINT_DIR"),
                         help="directory scanned for ckpt_<mode>_<epoch>.bin files")
    p_serve.add_argument("--session-file",
                         help="JSON snapshot restored on start, saved on shutdown")
    p_serve.set_defaults(func=cmd_serve)
    subparsers["serve"] = p_serve

    return parser, subparsers


def _parse_p(value, step: float | None = None) -> list[float]:
    """'0.7' -> [0.7]; '0.6:1.0' -> inclusive grid with the given step."""
    if isinstance(value, (int, float)):
        return [float(value)]
    text = str(value)
    if ":" not in text:
        return [float(text)]
    lo_s, hi_s = text.split(":", 1)
    lo, hi = float(lo_s), float(hi_s)
    if step is None:
        return [lo, hi]
    if hi < lo or step <= 0:
        raise CliError(f"bad p range {text!r}")
    count = int(round((hi - lo) / step)) + 1
    return [round(lo + k * step, 10) for k in range(count)]


def _make_mode(kind: str, k) -> GameMode:
    try:
        return GameMode(kind, Fraction(str(k))) if kind == "noodle" else GameMode(kind)
    except (ValueError, ZeroDivisionError) as exc:
        raise CliError(f"bad mode/k: {exc}")


def _hyper_from_args(args) -> Hyperparameters:
    try:
        return Hyperparameters(
            d=args.d, m=args.m, n_replay=args.n_replay,
            t_rollout=args.t_rollout, n_rollout=args.n_rollout,
            eps_max=args.eps_max, eps_min=args.eps_min, t_anneal=args.t_anneal,
            n_batch=args.n_batch, t_max=args.t_max, t_update=args.t_update,
            learning_rate=args.learning_rate, seed=args.seed)
    except ValueError as exc:
        raise CliError(f"bad hyperparameters: {exc}")


# -- subcommands -------------------------------------------------------------

def cmd_train(args) -> int:
    if not args.mode:
        raise CliError("--mode is required (flag or config file)")
    from .train import NonFiniteLoss, train

    mode = _make_mode(args.mode, args.k)
    h = _hyper_from_args(args)
    plist = _parse_p(args.p)
    p_range = (plist[0], plist[-1])
    if not 0.0 <= p_range[0] <= p_range[1] <= 1.0:
        raise CliError(f"bad training p range {args.p!r}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config_echo = {"mode": mode.kind, "n": args.n, "p_range": list(p_range),
                   **{f.name: getattr(h, f.name) for f in fields(h)}}
    print(json.dumps({"config": config_echo}), flush=True)
    try:
        _, rows = train(h, mode, args.n, p_range=p_range,
                        checkpoint_dir=out, log_path=out / "training_log.csv",
                        compile_policy=args.compile)
    except NonFiniteLoss as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    print(f"trained {h.t_max} epochs; log and checkpoints in {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from .evaluate import (GreedyAgent, RandomAgent, SweepSpec, records_to_csv,
                           run_sweep, summarize, summary_to_csv)

    if bool(args.agent) == bool(args.checkpoint):
        raise CliError("exactly one of --agent random or --checkpoint is required")
    played_kind = args.played_mode or args.mode
    if args.agent == "random":
        agent = RandomAgent()
        if not played_kind:
            raise CliError("--mode (or --played-mode) is required with --agent random")
    else:
        try:
            net, meta = load_checkpoint(args.checkpoint)
        except CheckpointError as exc:
            raise CliError(str(exc))
        agent = GreedyAgent(net, meta.mode.kind)
        if not played_kind:
            played_kind = meta.mode.kind
        elif played_kind != meta.mode.kind:
            print(f"note: cross-mode evaluation, agent trained on "
                  f"{meta.mode.kind!r} playing {played_kind!r}", file=sys.stderr)
    played_mode = _make_mode(played_kind, args.k)
    try:
        spec = SweepSpec(p_grid=tuple(_parse_p(args.p, args.p_step)),
                         boards_per_p=args.games, n=args.n,
                         max_moves=args.max_moves)
    except ValueError as exc:
        raise CliError(str(exc))
    records = run_sweep(agent, played_mode, spec, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records_to_csv(records, out / "eval_records.csv")
    summary_to_csv(summarize(records), out / "eval_summary.csv")
    print(f"wrote {len(records)} records to {out}")
    return EXIT_OK


_GLYPHS = {
    0: "\x1b[32m■\x1b[0m",  # active: green
    1: "\x1b[34m■\x1b[0m",  # inactive: blue
    2: "\x1b[31m✖\x1b[0m",  # attacked: red
    3: "\x1b[90m■\x1b[0m",  # blocked: dark gray
}


def _render(board) -> str:
    n = board.n
    header = "   " + " ".join(f"{j:>2}"[-1] for j in range(n))
    lines = [header]
    for i in range(n):
        cells = " ".join(_GLYPHS[int(v)] for v in board.cells[i])
        lines.append(f"{i:>2} {cells}")
    return "\n".join(lines)


def cmd_play(args, stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout

    def say(text: str) -> None:
        print(text, file=stdout)

    mode = _make_mode(args.mode, args.k)
    net = None
    if args.checkpoint:
        try:
            net, meta = load_checkpoint(args.checkpoint)
        except CheckpointError as exc:
            raise CliError(str(exc))
        mode = meta.mode
    if args.hint and net is None:
        raise CliError("--hint requires --checkpoint")
    if args.board:
        try:
            board = board_from_json_str(Path(args.board).read_text())
        except (OSError, ValueError) as exc:
            raise CliError(f"cannot load board: {exc}")
        mode = board.mode
    else:
        try:
            board = random_board(args.n, args.p, mode, np.random.default_rng(args.seed))
        except (ValueError, GenerationExhausted) as exc:
            raise CliError(str(exc))
    state = new_game(board)
    say(f"mode: {mode.kind}  n: {board.n}  (enter 'i j' to attack, 'q' to quit)")
    while not state.finished:
        say(_render(state.board))
        if args.hint and net is not None:
            q = q_values(state.board, net)
            hi, hj = np.unravel_index(int(np.argmax(q)), q.shape)
            say(f"hint: ({hi}, {hj})  Q = {q[hi, hj]:.3f}")
        print("> ", end="", file=stdout, flush=True)
        line = stdin.readline()
        if not line or line.strip().lower() in ("q", "quit"):
            say("bye")
            return EXIT_OK
        parts = line.split()
        if len(parts) != 2:
            say("enter two integers: row column")
            continue
        try:
            move = (int(parts[0]), int(parts[1]))
        except ValueError:
            say("enter two integers: row column")
            continue
        try:
            state, _ = apply_move(state, move)
        except IllegalMove as exc:
            say(f"illegal move: {exc}")
            continue
    say(_render(state.board))
    say(f"game over in {state.moves_played} moves "
        f"(reward {state.cumulative_reward})")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    app = create_app(checkpoint_dir=args.checkpoint_dir,
                     session_file=args.session_file)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    except (OSError, SystemExit) as exc:
        print(f"server failed to start: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"bad config file: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        sub = subparsers[args.command]
        known = {a.dest for a in sub._actions}
        defaults = {}
        for key, value in cfg.items():
            dest = key.replace("-", "_")
            if dest not in known:
                print(f"unknown config key {key!r}", file=sys.stderr)
                return EXIT_CONFIG
            defaults[dest] = value
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)  # flags still override the file
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GenerationExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
