"""Percolation-style lattice attack games with deep Q-learning agents."""

from .board import (
    Board,
    CellState,
    Component,
    FLOW,
    GameMode,
    NETWORK,
    board_from_json,
    board_to_json,
    components_of,
    eligible_actions,
    is_terminal,
    noodle,
    surface_to_volume,
    update_status,
)
from .game import (
    Experience,
    GameOver,
    GameState,
    GenerationExhausted,
    IllegalMove,
    Move,
    PolicyStalled,
    apply_move,
    generate_training_board,
    new_game,
    play_game,
    random_board,
    random_policy,
)

__all__ = [
    "Board", "CellState", "Component", "GameMode", "NETWORK", "FLOW", "noodle",
    "board_from_json", "board_to_json", "components_of", "eligible_actions",
    "is_terminal", "surface_to_volume", "update_status",
    "Experience", "GameOver", "GameState", "GenerationExhausted", "IllegalMove",
    "Move", "PolicyStalled", "apply_move", "generate_training_board", "new_game",
    "play_game", "random_board", "random_policy",
]

__version__ = "0.1.0"
