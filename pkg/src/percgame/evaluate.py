"""Evaluation protocol: steps-to-completion sweeps over board density,
cross-mode comparisons against a random baseline, and Q-map exports.

Sweeps are paired by construction: board seeds derive only from
(sweep seed, p, board index), never from the agent, so every agent in a
comparison faces the identical board multiset.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np

from .board import Board, GameMode, board_to_json, eligible_actions
from .game import apply_move, new_game, random_board
from .qnet import QNetwork, greedy_action, q_values

RECORD_HEADER = ("trained_mode", "played_mode", "p", "board_seed", "steps", "truncated")
SUMMARY_HEADER = ("trained_mode", "played_mode", "p", "mean_steps", "std_steps", "n_games")

DEFAULT_P_GRID = tuple(round(0.60 + 0.05 * k, 2) for k in range(9))  # 0.60 .. 1.00


class Agent(Protocol):
    trained_mode: str

    def move(self, board: Board, rng: np.random.Generator) -> tuple[int, int]: ...


class RandomAgent:
    """Uniformly random choice among Active cells."""

    trained_mode = "random"

    def move(self, board: Board, rng: np.random.Generator) -> tuple[int, int]:
        actions = eligible_actions(board)
        return actions[int(rng.integers(len(actions)))]


class GreedyAgent:
    """Pure-greedy play (eps = 0) under a trained Q network."""

    def __init__(self, net: QNetwork, trained_mode: str):
        self.net = net
        self.trained_mode = trained_mode

    def move(self, board: Board, rng: np.random.Generator) -> tuple[int, int]:
        return greedy_action(board, self.net, rng)


@dataclass(frozen=True)
class SweepSpec:
    p_grid: tuple[float, ...] = DEFAULT_P_GRID
    boards_per_p: int = 1000
    n: int = 20
    max_moves: int | None = None  # None = n^2, which a legal game never hits

    def __post_init__(self) -> None:
        if not all(0.0 <= p <= 1.0 for p in self.p_grid):
            raise ValueError("p_grid values must lie in [0, 1]")
        if self.boards_per_p < 1:
            raise ValueError("boards_per_p must be >= 1")

    @property
    def cap(self) -> int:
        return self.n * self.n if self.max_moves is None else self.max_moves


@dataclass(frozen=True)
class EvalRecord:
    trained_mode: str
    played_mode: str
    p: float
    board_seed: int
    steps: int
    truncated: bool


@dataclass(frozen=True)
class SummaryRow:
    trained_mode: str
    played_mode: str
    p: float
    mean_steps: float
    std_steps: float
    n_games: int
    std_defined: bool = True


def board_and_play_seeds(seed: int, p: float, index: int) -> tuple[int, int]:
    """Deterministic (board, play) seed pair from (sweep seed, p, index)."""
    ss = np.random.SeedSequence((seed, int(round(p * 10**6)), index))
    s1, s2 = ss.generate_state(2, dtype=np.uint64)
    return int(s1), int(s2)


def play_to_completion(agent: Agent, board: Board,
                       rng: np.random.Generator, cap: int) -> tuple[int, bool]:
    """Play until terminal or the cap; returns (steps, truncated)."""
    state = new_game(board)
    steps = 0
    while not state.finished and steps < cap:
        state, _ = apply_move(state, agent.move(state.board, rng))
        steps += 1
    return steps, not state.finished


def run_sweep(agent: Agent, played_mode: GameMode, spec: SweepSpec,
              seed: int) -> list[EvalRecord]:
    """Greedy games over the p grid; deterministic given (agent, spec, seed)."""
    records: list[EvalRecord] = []
    for p in spec.p_grid:
        for index in range(spec.boards_per_p):
            board_seed, play_seed = board_and_play_seeds(seed, p, index)
            board = random_board(spec.n, p, played_mode,
                                 np.random.default_rng(board_seed))
            steps, truncated = play_to_completion(
                agent, board, np.random.default_rng(play_seed), spec.cap)
            records.append(EvalRecord(
                trained_mode=agent.trained_mode,
                played_mode=played_mode.kind,
                p=p, board_seed=board_seed, steps=steps, truncated=truncated))
    return records


def summarize(records: Iterable[EvalRecord]) -> list[SummaryRow]:
    """Per-(trained_mode, played_mode, p) sample mean and standard deviation
    (n-1 denominator; a single-record group reports std 0 and is flagged)."""
    groups: dict[tuple[str, str, float], list[int]] = {}
    order: list[tuple[str, str, float]] = []
    for r in records:
        key = (r.trained_mode, r.played_mode, r.p)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(r.steps)
    if not groups:
        raise ValueError("no records to summarize")
    out = []
    for key in order:
        steps = groups[key]
        mean = float(np.mean(steps))
        defined = len(steps) > 1
        std = float(np.std(steps, ddof=1)) if defined else 0.0
        out.append(SummaryRow(trained_mode=key[0], played_mode=key[1], p=key[2],
                              mean_steps=mean, std_steps=std,
                              n_games=len(steps), std_defined=defined))
    return out


def mean_steps(records: Iterable[EvalRecord]) -> float:
    steps = [r.steps for r in records]
    return float(np.mean(steps))


# -- Q-map export -----------------------------------------------------------

def q_heatmap(net: QNetwork, board: Board,
              rng: np.random.Generator | int | None = None) -> list[dict]:
    """(board, Q map) snapshot per move of one complete greedy game.

    Ineligible cells serialize as nulls.  The move played at each stage is
    the (tie-broken) argmax of its own snapshot.
    """
    from .qnet import greedy_from_qmap

    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    state = new_game(board)
    frames: list[dict] = []
    while not state.finished:
        q = q_values(state.board, net)
        move = greedy_from_qmap(q, rng)
        frames.append({
            "board": board_to_json(state.board),
            "q": [[None if math.isinf(v) else float(v) for v in row] for row in q],
            "move": [move[0], move[1]],
        })
        state, _ = apply_move(state, move)
    return frames


def heatmap_to_json(frames: list[dict]) -> str:
    return json.dumps(frames)


# -- CSV output ---------------------------------------------------------------

def records_to_csv(records: Iterable[EvalRecord], path: str | Path | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RECORD_HEADER)
    for r in records:
        writer.writerow([r.trained_mode, r.played_mode, r.p, r.board_seed,
                         r.steps, str(r.truncated).lower()])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def summary_to_csv(rows: Iterable[SummaryRow], path: str | Path | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    for r in rows:
        writer.writerow([r.trained_mode, r.played_mode, r.p,
                         repr(r.mean_steps), repr(r.std_steps), r.n_games])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
