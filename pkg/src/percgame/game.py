"""Episode state machine: moves, rewards, board generation, full playouts.

Every move costs -1 in every mode and removes at least one Active cell, so
games on an n x n board always end within n^2 moves.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .board import (
    Board,
    CellState,
    GameMode,
    board_from_json,
    board_to_json,
    eligible_actions,
    is_terminal,
    update_status,
)

MOVE_REWARD = -1
GENERATION_ATTEMPTS = 10_000


class IllegalMove(Exception):
    """Move targets a cell that is not Active."""


class GameOver(Exception):
    """Move attempted on a finished game."""


class GenerationExhausted(Exception):
    """Too many consecutive candidate boards were terminal at birth."""


class PolicyStalled(Exception):
    """A policy returned an ineligible move during playout."""


Move = tuple[int, int]


@dataclass(frozen=True)
class GameState:
    board: Board
    moves_played: int = 0
    cumulative_reward: int = 0

    @property
    def finished(self) -> bool:
        return is_terminal(self.board)


@dataclass(frozen=True)
class Experience:
    """One transition (s, a, s', r) plus whether s' ended the game."""

    s: Board
    a: Move
    s_next: Board
    r: int
    terminal: bool


def new_game(board: Board) -> GameState:
    return GameState(board=update_status(board))


def apply_move(state: GameState, move: Move) -> tuple[GameState, Experience]:
    """Attack one Active cell, then let the mode rule deactivate components."""
    if state.finished:
        raise GameOver("game is already finished")
    i, j = move
    board = state.board
    if not (0 <= i < board.n and 0 <= j < board.n):
        raise IllegalMove(f"({i}, {j}) is off the board")
    if board.cells[i, j] != CellState.ACTIVE:
        raise IllegalMove(f"cell ({i}, {j}) is not active")
    cells = board.cells.copy()
    cells[i, j] = CellState.ATTACKED
    next_board = update_status(board.with_cells(cells))
    exp = Experience(s=board, a=(i, j), s_next=next_board, r=MOVE_REWARD,
                     terminal=is_terminal(next_board))
    new_state = GameState(board=next_board,
                          moves_played=state.moves_played + 1,
                          cumulative_reward=state.cumulative_reward + MOVE_REWARD)
    return new_state, exp


def random_board(n: int, p: float, mode: GameMode,
                 rng: np.random.Generator | int | None = None) -> Board:
    """Random board: each cell Blocked w.p. 1-p, else Active, then the mode
    rule runs.  Boards terminal at birth are rejected and redrawn.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    for _ in range(GENERATION_ATTEMPTS):
        blocked = rng.random((n, n)) < (1.0 - p)
        cells = np.where(blocked, np.uint8(CellState.BLOCKED), np.uint8(CellState.ACTIVE))
        board = update_status(Board(cells, mode))
        if not is_terminal(board):
            return board
    raise GenerationExhausted(
        f"{GENERATION_ATTEMPTS} consecutive terminal boards at n={n}, p={p}")


def generate_training_board(n: int, mode: GameMode,
                            rng: np.random.Generator | int | None = None,
                            p_range: tuple[float, float] = (0.5, 1.0)) -> Board:
    """Training distribution: p ~ Uniform[p_range], then random_board."""
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    lo, hi = p_range
    p = float(rng.uniform(lo, hi))
    return random_board(n, p, mode, rng)


def play_game(policy: Callable[[Board], Move], board: Board,
              max_moves: int | None = None) -> tuple[int, list[Experience]]:
    """Play `policy` to termination (or the move cap); returns (steps, trajectory)."""
    state = new_game(board)
    if state.finished:
        raise ValueError("play_game requires a non-terminal board")
    cap = board.n * board.n if max_moves is None else max_moves
    trajectory: list[Experience] = []
    while not state.finished and len(trajectory) < cap:
        move = policy(state.board)
        try:
            state, exp = apply_move(state, move)
        except IllegalMove as exc:
            raise PolicyStalled(str(exc)) from exc
        trajectory.append(exp)
    return len(trajectory), trajectory


def random_policy(rng: np.random.Generator) -> Callable[[Board], Move]:
    """Uniformly random choice among Active cells."""

    def choose(board: Board) -> Move:
        actions = eligible_actions(board)
        if not actions:
            raise PolicyStalled("no eligible actions")
        return actions[int(rng.integers(len(actions)))]

    return choose


def experience_to_json(exp: Experience) -> dict:
    doc = board_to_json(exp.s)
    doc.update({
        "a": [exp.a[0], exp.a[1]],
        "r": exp.r,
        "terminal": exp.terminal,
        "s_next": board_to_json(exp.s_next),
    })
    return doc


def trajectory_to_jsonl(trajectory: Iterable[Experience]) -> str:
    return "\n".join(json.dumps(experience_to_json(e)) for e in trajectory)


def experience_from_json(doc: dict) -> Experience:
    s = board_from_json(doc)
    s_next = board_from_json(doc["s_next"])
    a = (int(doc["a"][0]), int(doc["a"][1]))
    return Experience(s=s, a=a, s_next=s_next, r=int(doc["r"]),
                      terminal=bool(doc["terminal"]))
