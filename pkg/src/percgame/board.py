"""Square-lattice board, connected components, and the three game rules.

Boards are immutable values: every operation returns a fresh board and the
cell array is write-protected.  Cell states are absorbing in one direction
only (Active -> Inactive; Attacked and Blocked never change), which the
rules below preserve by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction

import numpy as np
from scipy import ndimage


class CellState(IntEnum):
    ACTIVE = 0
    INACTIVE = 1
    ATTACKED = 2
    BLOCKED = 3


# board JSON alphabet, indexed by CellState value
CELL_CODES = "AIXB"
_CODE_TO_STATE = {c: CellState(i) for i, c in enumerate(CELL_CODES)}

MODE_KINDS = ("network", "flow", "noodle")

# 4-connectivity structuring element for scipy labeling
_STRUCTURE = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class GameMode:
    """Game mode: 'network', 'flow', or 'noodle' with its ratio threshold K.

    K is carried as an exact rational so the surface-to-volume comparison
    never goes through floating point.  It is only meaningful for noodle.
    """

    kind: str
    k: Fraction = Fraction(2)

    def __post_init__(self) -> None:
        if self.kind not in MODE_KINDS:
            raise ValueError(f"unknown game mode {self.kind!r}")
        if not isinstance(self.k, Fraction):
            object.__setattr__(self, "k", Fraction(self.k))
        if self.k <= 0:
            raise ValueError("noodle threshold K must be positive")


NETWORK = GameMode("network")
FLOW = GameMode("flow")


def noodle(k: Fraction | int | str = Fraction(2)) -> GameMode:
    return GameMode("noodle", Fraction(k))


@dataclass(frozen=True)
class Board:
    """n x n grid of cell states plus the game mode. Row 0 is the top row."""

    cells: np.ndarray
    mode: GameMode

    def __post_init__(self) -> None:
        cells = np.array(self.cells, dtype=np.uint8, copy=True, order="C")
        if cells.ndim != 2 or cells.shape[0] != cells.shape[1] or cells.shape[0] < 1:
            raise ValueError("cells must be a square array with n >= 1")
        if cells.max(initial=0) > CellState.BLOCKED:
            raise ValueError("cell values out of range")
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)

    @property
    def n(self) -> int:
        return self.cells.shape[0]

    def with_cells(self, cells: np.ndarray) -> "Board":
        return Board(cells, self.mode)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Board):
            return NotImplemented
        return self.mode == other.mode and np.array_equal(self.cells, other.cells)

    def __hash__(self) -> int:
        return hash((self.mode, self.cells.tobytes()))


@dataclass(frozen=True)
class Component:
    """One maximal 4-connected set of same-state cells."""

    cells: frozenset[tuple[int, int]]
    size: int
    touches_top: bool
    touches_bottom: bool
    surface_faces: int


def full_board(n: int, mode: GameMode, state: CellState = CellState.ACTIVE) -> Board:
    return Board(np.full((n, n), state, dtype=np.uint8), mode)


def _label(mask: np.ndarray) -> tuple[np.ndarray, int]:
    labels, count = ndimage.label(mask, structure=_STRUCTURE)
    return labels, count


def _component_sizes(labels: np.ndarray, count: int) -> np.ndarray:
    # index 0 is background
    return np.bincount(labels.ravel(), minlength=count + 1)


def _internal_adjacencies(labels: np.ndarray, count: int) -> np.ndarray:
    """Per-label count of 4-adjacent same-label cell pairs."""
    adj = np.zeros(count + 1, dtype=np.int64)
    h = labels[:, :-1]
    same_h = (h == labels[:, 1:]) & (h > 0)
    adj += np.bincount(h[same_h].ravel(), minlength=count + 1)
    v = labels[:-1, :]
    same_v = (v == labels[1:, :]) & (v > 0)
    adj += np.bincount(v[same_v].ravel(), minlength=count + 1)
    return adj


def _first_occurrence(labels: np.ndarray, count: int) -> np.ndarray:
    """Smallest row-major flat index per label (used for tie-breaks)."""
    flat = labels.ravel()
    first = np.full(count + 1, flat.size, dtype=np.int64)
    np.minimum.at(first, flat, np.arange(flat.size))
    return first


def components_of(board: Board, filter: CellState) -> list[Component]:
    """Maximal 4-connected components of cells in the given state."""
    if filter not in (CellState.ACTIVE, CellState.INACTIVE):
        raise ValueError("components are defined for Active or Inactive cells")
    labels, count = _label(board.cells == filter)
    if count == 0:
        return []
    sizes = _component_sizes(labels, count)
    adj = _internal_adjacencies(labels, count)
    top = set(labels[0, :][labels[0, :] > 0].tolist())
    bottom = set(labels[-1, :][labels[-1, :] > 0].tolist())
    out = []
    for lab in range(1, count + 1):
        coords = np.argwhere(labels == lab)
        out.append(Component(
            cells=frozenset((int(i), int(j)) for i, j in coords),
            size=int(sizes[lab]),
            touches_top=lab in top,
            touches_bottom=lab in bottom,
            surface_faces=int(4 * sizes[lab] - 2 * adj[lab]),
        ))
    return out


def surface_to_volume(component: Component) -> Fraction:
    return Fraction(component.surface_faces, component.size)


def _surviving_labels(cells: np.ndarray, mode: GameMode,
                      labels: np.ndarray, count: int) -> set[int]:
    """Labels of active components that remain active under the mode rule."""
    sizes = _component_sizes(labels, count)
    if mode.kind == "flow":
        top = set(labels[0, :][labels[0, :] > 0].tolist())
        bottom = set(labels[-1, :][labels[-1, :] > 0].tolist())
        return top & bottom
    if mode.kind == "noodle":
        adj = _internal_adjacencies(labels, count)
        keep = set()
        for lab in range(1, count + 1):
            faces = int(4 * sizes[lab] - 2 * adj[lab])
            # exact rational comparison: faces/size <= K
            if faces * mode.k.denominator <= mode.k.numerator * int(sizes[lab]):
                keep.add(lab)
        return keep
    # network: single largest component survives, and only if it is strictly
    # larger than the largest inactive component after the rest deactivate
    largest = int(sizes[1:].max())
    candidates = 1 + np.flatnonzero(sizes[1:] == largest)
    if len(candidates) > 1:
        first = _first_occurrence(labels, count)
        lead = int(candidates[np.argmin(first[candidates])])
    else:
        lead = int(candidates[0])
    merged = (cells == CellState.INACTIVE) | ((labels > 0) & (labels != lead))
    ilabels, icount = _label(merged)
    largest_inactive = int(_component_sizes(ilabels, icount)[1:].max()) if icount else 0
    return {lead} if largest > largest_inactive else set()


def update_status(board: Board) -> Board:
    """Recompute which Active cells stay Active under the board's mode.

    Idempotent; only Active -> Inactive transitions ever happen here.
    """
    labels, count = _label(board.cells == CellState.ACTIVE)
    if count == 0:
        return board
    keep = _surviving_labels(board.cells, board.mode, labels, count)
    doomed = (labels > 0) & ~np.isin(labels, sorted(keep))
    if not doomed.any():
        return board
    cells = board.cells.copy()
    cells[doomed] = CellState.INACTIVE
    return board.with_cells(cells)


def is_terminal(board: Board) -> bool:
    return not (board.cells == CellState.ACTIVE).any()


def eligible_actions(board: Board) -> list[tuple[int, int]]:
    """Coordinates of Active cells in row-major order."""
    coords = np.argwhere(board.cells == CellState.ACTIVE)
    return [(int(i), int(j)) for i, j in coords]


def board_to_json(board: Board) -> dict:
    """The shared board wire format (row 0 = top row)."""
    doc: dict = {
        "n": board.n,
        "mode": board.mode.kind,
        "cells": ["".join(CELL_CODES[v] for v in row) for row in board.cells],
    }
    if board.mode.kind == "noodle":
        doc["k"] = str(board.mode.k)
    return doc


def board_from_json(doc: dict) -> Board:
    try:
        n = int(doc["n"])
        kind = doc["mode"]
        rows = doc["cells"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed board document: {exc}") from exc
    if kind not in MODE_KINDS:
        raise ValueError(f"unknown game mode {kind!r}")
    mode = GameMode(kind, Fraction(doc["k"])) if kind == "noodle" else GameMode(kind)
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError("cells must be n strings of length n")
    try:
        cells = np.array([[_CODE_TO_STATE[c] for c in row] for row in rows],
                         dtype=np.uint8)
    except KeyError as exc:
        raise ValueError(f"unknown cell code {exc.args[0]!r}") from exc
    return Board(cells, mode)


def board_to_json_str(board: Board) -> str:
    return json.dumps(board_to_json(board))


def board_from_json_str(text: str) -> Board:
    return board_from_json(json.loads(text))
