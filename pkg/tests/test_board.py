import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from percgame.board import (
    FLOW,
    NETWORK,
    Board,
    CellState,
    GameMode,
    board_from_json,
    board_to_json,
    board_to_json_str,
    board_from_json_str,
    components_of,
    eligible_actions,
    full_board,
    is_terminal,
    noodle,
    surface_to_volume,
    update_status,
)

import oracles


def grid_to_board(grid: list[str], mode: GameMode) -> Board:
    code = {"A": 0, "I": 1, "X": 2, "B": 3}
    cells = np.array([[code[c] for c in row] for row in grid], dtype=np.uint8)
    return Board(cells, mode)


def board_to_grid(board: Board) -> list[str]:
    return board_to_json(board)["cells"]


MODES = [NETWORK, FLOW, noodle()]


# -- strategies ---------------------------------------------------------------

@st.composite
def grids(draw, min_n=1, max_n=7):
    n = draw(st.integers(min_n, max_n))
    return [draw(st.text(alphabet="AAIXB", min_size=n, max_size=n)) for _ in range(n)]


@st.composite
def boards(draw, min_n=1, max_n=7):
    mode = draw(st.sampled_from(MODES))
    return grid_to_board(draw(grids(min_n, max_n)), mode)


# -- components ---------------------------------------------------------------

def test_single_active_cell_component():
    b = grid_to_board(["A"], NETWORK)
    comps = components_of(b, CellState.ACTIVE)
    assert len(comps) == 1
    assert comps[0].size == 1
    assert comps[0].surface_faces == 4
    assert comps[0].touches_top and comps[0].touches_bottom


def test_2x2_all_active_component():
    b = full_board(2, NETWORK)
    (comp,) = components_of(b, CellState.ACTIVE)
    assert comp.size == 4
    assert comp.surface_faces == 8  # 16 faces - 2 * 4 internal adjacencies


def test_components_match_flood_fill_reference():
    rng = random.Random(11)
    for _ in range(1000):
        grid = oracles.random_grid(6, rng.uniform(0.2, 0.9), rng, states="AIXB")
        b = grid_to_board(grid, NETWORK)
        for filt, code in ((CellState.ACTIVE, "A"), (CellState.INACTIVE, "I")):
            got = sorted(comp.cells for comp in components_of(b, filt))
            want = sorted(frozenset(c) for c in oracles.flood_components(grid, code))
            assert got == want


def test_components_requires_active_or_inactive_filter():
    b = full_board(2, NETWORK)
    with pytest.raises(ValueError):
        components_of(b, CellState.BLOCKED)


@given(boards())
@settings(max_examples=200)
def test_component_partition_and_face_formula(b):
    for filt in (CellState.ACTIVE, CellState.INACTIVE):
        comps = components_of(b, filt)
        cells = [c for comp in comps for c in comp.cells]
        assert len(cells) == len(set(cells))
        assert set(cells) == {(i, j) for i, j in np.argwhere(b.cells == filt).tolist()}
        for comp in comps:
            assert comp.size == len(comp.cells) >= 1
            assert comp.surface_faces == oracles.count_faces(set(comp.cells))
            pairs = sum(
                1 for (i, j) in comp.cells
                for (ni, nj) in ((i + 1, j), (i, j + 1))
                if (ni, nj) in comp.cells)
            assert comp.surface_faces + 2 * pairs == 4 * comp.size


# -- surface-to-volume --------------------------------------------------------

@pytest.mark.parametrize("grid,expected", [
    (["A"], Fraction(4)),
    (["AA", "BB"], Fraction(3)),    # 1x2 domino: 8 faces - 2 internal
    (["AA", "AA"], Fraction(2)),    # 2x2 square: 16 faces - 8 internal
])
def test_surface_to_volume_small_shapes(grid, expected):
    b = grid_to_board(grid, noodle())
    (comp,) = components_of(b, CellState.ACTIVE)
    ratio = surface_to_volume(comp)
    assert isinstance(ratio, Fraction)
    assert ratio == expected


# -- update_status ------------------------------------------------------------

def test_flow_blocked_middle_row_kills_everything():
    b = grid_to_board(["AAA", "BBB", "AAA"], FLOW)
    out = update_status(b)
    assert is_terminal(out)
    assert board_to_grid(out) == ["III", "BBB", "III"]


def test_noodle_2x2_square_survives_at_k2():
    b = grid_to_board(["AA", "AA"], noodle(2))
    out = update_status(b)
    assert board_to_grid(out) == ["AA", "AA"]  # ratio exactly 2 does not exceed K


def test_noodle_domino_dies_at_k2():
    b = grid_to_board(["AA", "BB"], noodle(2))
    assert is_terminal(update_status(b))


def test_network_row_of_five_center_attack_tie_is_terminal():
    rows = ["AAXAA"] + ["BBBBB"] * 4
    out = update_status(grid_to_board(rows, NETWORK))
    assert is_terminal(out)
    assert board_to_grid(out)[0] == "IIXII"


def test_network_largest_survives_strictly():
    # sizes 3 vs 1: the 3-component stays, the singleton goes inactive
    rows = ["AAABA"] + ["BBBBB"] * 4
    out = update_status(grid_to_board(rows, NETWORK))
    assert board_to_grid(out)[0] == "AAABI"


def test_network_tiebreak_row_major_then_strict_comparison():
    # two active components of size 2; leftmost is the leader, and after the
    # other deactivates the comparison 2 > 2 fails, so both end inactive
    b = grid_to_board(["AA", "BB"], NETWORK)
    out = update_status(b)
    assert board_to_grid(out) == ["AA", "BB"]  # single component, survives

    b = grid_to_board(["ABA", "ABA", "BBB"], NETWORK)
    out = update_status(b)
    assert is_terminal(out)


def test_network_deactivated_merge_with_old_inactive():
    # the non-leader active component merges with existing inactive cells,
    # and the merged inactive blob outweighs the leader
    grid = [
        "AAABB",
        "BBBBB",
        "AABII",
        "BBBII",
        "BBBII",
    ]
    # active comps: top row size 3 (leader), left size 2; inactive block size 6.
    # after the size-2 comp deactivates it does not touch the inactive block,
    # largest inactive = 6 >= 3 -> leader dies too
    b = grid_to_board(grid, NETWORK)
    out = update_status(b)
    assert is_terminal(out)

    grid2 = [
        "AAAAA",
        "AAAAA",
        "AABII",
        "BBBII",
        "BBBII",
    ]
    # leader size 12 > largest inactive -> survives
    b2 = grid_to_board(grid2, NETWORK)
    out2 = update_status(b2)
    assert not is_terminal(out2)


def test_update_status_matches_reference_on_random_boards():
    rng = random.Random(7)
    for trial in range(600):
        n = rng.randint(1, 7)
        grid = oracles.random_grid(n, rng.uniform(0.3, 0.95), rng, states="AIXB")
        for mode, kind in ((NETWORK, "network"), (FLOW, "flow"), (noodle(2), "noodle")):
            got = board_to_grid(update_status(grid_to_board(grid, mode)))
            want = oracles.ref_update_status(grid, kind)
            assert got == want, f"mode={kind} grid={grid}"


@given(boards())
@settings(max_examples=200)
def test_update_status_idempotent_and_monotone(b):
    once = update_status(b)
    twice = update_status(once)
    assert once == twice
    before = b.cells == CellState.ACTIVE
    after = once.cells == CellState.ACTIVE
    assert not (after & ~before).any()  # active set only shrinks
    # non-active cells never change at all
    assert (once.cells[~before] == b.cells[~before]).all()


@given(boards())
@settings(max_examples=100)
def test_flow_terminal_iff_no_spanning_path(b):
    flow_board = Board(b.cells, FLOW)
    out = update_status(flow_board)
    spanning = [
        c for c in oracles.flood_components(board_to_grid(flow_board), "A")
        if any(i == 0 for i, _ in c) and any(i == flow_board.n - 1 for i, _ in c)
    ]
    assert is_terminal(out) == (not spanning)


# -- is_terminal / eligible_actions -------------------------------------------

def test_terminal_and_eligibility_basics():
    empty = grid_to_board(["BB", "BB"], NETWORK)
    assert is_terminal(empty)
    assert eligible_actions(empty) == []

    b = full_board(2, NETWORK)
    assert not is_terminal(b)
    assert eligible_actions(b) == [(0, 0), (0, 1), (1, 0), (1, 1)]


@given(boards())
@settings(max_examples=100)
def test_eligible_actions_match_direct_scan(b):
    got = eligible_actions(b)
    want = [(i, j) for i in range(b.n) for j in range(b.n)
            if b.cells[i, j] == CellState.ACTIVE]
    assert got == want
    assert is_terminal(b) == (len(got) == 0)


# -- serialization ------------------------------------------------------------

@given(boards())
@settings(max_examples=100)
def test_board_json_round_trip(b):
    assert board_from_json(board_to_json(b)) == b
    assert board_from_json_str(board_to_json_str(b)) == b


def test_board_json_noodle_carries_k():
    doc = board_to_json(grid_to_board(["A"], noodle(Fraction(5, 2))))
    assert doc["k"] == "5/2"
    assert board_from_json(doc).mode.k == Fraction(5, 2)


def test_board_json_rejects_garbage():
    with pytest.raises(ValueError):
        board_from_json({"n": 2, "mode": "network", "cells": ["AA"]})
    with pytest.raises(ValueError):
        board_from_json({"n": 1, "mode": "lava", "cells": ["A"]})
    with pytest.raises(ValueError):
        board_from_json({"n": 1, "mode": "network", "cells": ["Z"]})


def test_boards_are_immutable():
    b = full_board(3, NETWORK)
    with pytest.raises(ValueError):
        b.cells[0, 0] = 2
