"""JSON-over-HTTP game-session service for the browser client.

Sessions live in memory (optionally snapshotted to disk across restarts);
each session's mutations are serialized by a per-session lock, so concurrent
clients can never apply two moves to the same state.  Q-network inference is
read-only and shared across sessions.
"""

from __future__ import annotations

import json
import math
import threading
import time
import uuid
from collections import OrderedDict
from contextlib import asynccontextmanager
from fractions import Fraction
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .board import (
    GameMode,
    MODE_KINDS,
    board_from_json,
    board_to_json,
)
from .game import GameState, GenerationExhausted, IllegalMove, apply_move, new_game, random_board
from .qnet import CheckpointMeta, QNetwork, greedy_from_qmap, load_checkpoint, q_values

MAX_SESSIONS = 10_000


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


class ModelRegistry:
    """One loaded checkpoint per game mode (highest epoch wins)."""

    def __init__(self) -> None:
        self._models: dict[str, tuple[QNetwork, CheckpointMeta]] = {}

    def load_directory(self, directory: str | Path) -> None:
        directory = Path(directory)
        best: dict[str, tuple[int, Path]] = {}
        for path in sorted(directory.glob("**/ckpt_*.bin")):
            parts = path.stem.split("_")
            if len(parts) < 3 or parts[1] not in MODE_KINDS:
                continue
            try:
                epoch = int(parts[2])
            except ValueError:
                continue
            kind = parts[1]
            if kind not in best or epoch > best[kind][0]:
                best[kind] = (epoch, path)
        for kind, (_, path) in best.items():
            net, meta = load_checkpoint(path)
            net.eval()
            self._models[kind] = (net, meta)

    def register(self, kind: str, net: QNetwork, meta: CheckpointMeta) -> None:
        self._models[kind] = (net, meta)

    def get(self, kind: str) -> QNetwork | None:
        entry = self._models.get(kind)
        return entry[0] if entry else None

    def loaded_modes(self) -> dict[str, bool]:
        return {kind: kind in self._models for kind in MODE_KINDS}


class Session:
    def __init__(self, sid: str, state: GameState, tie_seed: int):
        self.id = sid
        self.state = state
        self.tie_seed = tie_seed
        self.created_at = time.time()
        self.move_log: list[tuple[int, int]] = []
        self.lock = threading.Lock()

    @property
    def mode(self) -> GameMode:
        return self.state.board.mode

    def to_snapshot(self) -> dict:
        return {
            "id": self.id,
            "board": board_to_json(self.state.board),
            "moves_played": self.state.moves_played,
            "cumulative_reward": self.state.cumulative_reward,
            "tie_seed": self.tie_seed,
            "created_at": self.created_at,
            "move_log": [list(m) for m in self.move_log],
        }

    @classmethod
    def from_snapshot(cls, doc: dict) -> "Session":
        state = GameState(board=board_from_json(doc["board"]),
                          moves_played=int(doc["moves_played"]),
                          cumulative_reward=int(doc["cumulative_reward"]))
        sess = cls(doc["id"], state, int(doc["tie_seed"]))
        sess.created_at = float(doc.get("created_at", time.time()))
        sess.move_log = [tuple(m) for m in doc.get("move_log", [])]
        return sess


class SessionStore:
    """LRU-bounded, thread-safe session map."""

    def __init__(self, max_sessions: int = MAX_SESSIONS):
        self._sessions: OrderedDict[str, Session] = OrderedDict()
        self._lock = threading.Lock()
        self.max_sessions = max_sessions

    def add(self, session: Session) -> None:
        with self._lock:
            self._sessions[session.id] = session
            self._sessions.move_to_end(session.id)
            while len(self._sessions) > self.max_sessions:
                self._sessions.popitem(last=False)

    def get(self, sid: str) -> Session:
        with self._lock:
            sess = self._sessions.get(sid)
            if sess is None:
                raise ApiError(404, f"unknown game id {sid!r}")
            self._sessions.move_to_end(sid)
            return sess

    def __len__(self) -> int:
        return len(self._sessions)

    def save(self, path: str | Path) -> None:
        with self._lock:
            docs = [s.to_snapshot() for s in self._sessions.values()]
        Path(path).write_text(json.dumps(docs))

    def restore(self, path: str | Path) -> None:
        path = Path(path)
        if not path.exists():
            return
        for doc in json.loads(path.read_text()):
            self.add(Session.from_snapshot(doc))


def _tie_rng(session: Session) -> np.random.Generator:
    # keyed by move index: peeking at the suggestion and applying the agent
    # move draw the same tie-break for the same position
    return np.random.default_rng((session.tie_seed, session.state.moves_played))


def _session_view(session: Session, changed: list[dict] | None = None) -> dict:
    doc = {
        "id": session.id,
        "board": board_to_json(session.state.board),
        "moves_played": session.state.moves_played,
        "cumulative_reward": session.state.cumulative_reward,
        "finished": session.state.finished,
    }
    if changed is not None:
        doc["changed"] = changed
    return doc


def _diff_cells(before, after) -> list[dict]:
    from .board import CELL_CODES

    out = []
    for i, j in zip(*np.nonzero(before.cells != after.cells)):
        out.append({"i": int(i), "j": int(j),
                    "state": CELL_CODES[int(after.cells[i, j])]})
    return out


def _parse_create_body(body: dict) -> tuple[GameMode, dict]:
    if not isinstance(body, dict):
        raise ApiError(400, "body must be a JSON object")
    kind = body.get("mode")
    if kind not in MODE_KINDS:
        raise ApiError(400, f"mode must be one of {MODE_KINDS}")
    try:
        k = Fraction(str(body.get("k", "2")))
        if k <= 0:
            raise ValueError
    except (ValueError, ZeroDivisionError):
        raise ApiError(400, "k must be a positive rational")
    mode = GameMode(kind, k) if kind == "noodle" else GameMode(kind)
    return mode, body


def _board_for_create(mode: GameMode, body: dict):
    if "board" in body:
        try:
            board = board_from_json(body["board"])
        except (ValueError, TypeError, KeyError) as exc:
            raise ApiError(400, f"bad board: {exc}")
        if board.mode.kind != mode.kind:
            raise ApiError(400, "board mode does not match requested mode")
        state = new_game(board)
        if state.finished:
            raise ApiError(422, "board is terminal at creation")
        return state
    n = body.get("n")
    p = body.get("p")
    if not isinstance(n, int) or n < 1:
        raise ApiError(400, "n must be a positive integer")
    if not isinstance(p, (int, float)) or not 0.0 <= float(p) <= 1.0:
        raise ApiError(400, "p must lie in [0, 1]")
    seed = body.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise ApiError(400, "seed must be an integer")
    rng = np.random.default_rng(seed)
    try:
        board = random_board(n, float(p), mode, rng)
    except GenerationExhausted as exc:
        raise ApiError(422, str(exc))
    return new_game(board)


def create_app(checkpoint_dir: str | Path | None = None,
               session_file: str | Path | None = None,
               max_sessions: int = MAX_SESSIONS) -> FastAPI:
    store = SessionStore(max_sessions)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        if session_file:
            store.save(session_file)

    app = FastAPI(title="percgame server", lifespan=lifespan)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"],
    )

    registry = ModelRegistry()
    if checkpoint_dir:
        registry.load_directory(checkpoint_dir)
    if session_file:
        store.restore(session_file)
    app.state.registry = registry
    app.state.sessions = store
    app.state.session_file = session_file

    @app.exception_handler(ApiError)
    async def api_error_handler(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"error": exc.message})

    @app.get("/health")
    def health():
        return {"status": "ok", "sessions": len(store)}

    @app.get("/modes")
    def modes():
        loaded = registry.loaded_modes()
        return {"modes": [{"mode": kind, "model_loaded": loaded[kind]}
                          for kind in MODE_KINDS]}

    @app.post("/games", status_code=201)
    async def create_game(request: Request):
        try:
            body = await request.json()
        except Exception:
            raise ApiError(400, "body must be valid JSON")
        mode, body = _parse_create_body(body)
        state = _board_for_create(mode, body)
        sid = uuid.uuid4().hex
        seed = body.get("seed")
        tie_seed = seed if isinstance(seed, int) else int.from_bytes(bytes.fromhex(sid[:8]), "big")
        session = Session(sid, state, tie_seed)
        store.add(session)
        return _session_view(session)

    @app.get("/games/{sid}")
    def get_game(sid: str):
        session = store.get(sid)
        with session.lock:
            return _session_view(session)

    @app.post("/games/{sid}/moves")
    async def post_move(sid: str, request: Request):
        try:
            body = await request.json()
            i, j = int(body["i"]), int(body["j"])
        except Exception:
            raise ApiError(400, "body must be {\"i\": int, \"j\": int}")
        session = store.get(sid)
        with session.lock:
            if session.state.finished:
                raise ApiError(409, "game is finished")
            before = session.state.board
            try:
                session.state, _ = apply_move(session.state, (i, j))
            except IllegalMove as exc:
                raise ApiError(422, str(exc))
            session.move_log.append((i, j))
            return _session_view(session, changed=_diff_cells(before, session.state.board))

    @app.get("/games/{sid}/q")
    def q_overlay(sid: str):
        session = store.get(sid)
        with session.lock:
            net = registry.get(session.mode.kind)
            if net is None:
                raise ApiError(409, f"no model loaded for mode {session.mode.kind!r}")
            q = q_values(session.state.board, net)
            grid = [[None if math.isinf(v) else float(v) for v in row] for row in q]
            suggested = None
            if not session.state.finished:
                mv = greedy_from_qmap(q, _tie_rng(session))
                suggested = [mv[0], mv[1]]
            return {"q": grid, "suggested": suggested}

    @app.post("/games/{sid}/agent-move")
    def agent_move(sid: str):
        session = store.get(sid)
        with session.lock:
            if session.state.finished:
                raise ApiError(409, "game is finished")
            net = registry.get(session.mode.kind)
            if net is None:
                raise ApiError(409, f"no model loaded for mode {session.mode.kind!r}")
            q = q_values(session.state.board, net)
            move = greedy_from_qmap(q, _tie_rng(session))
            before = session.state.board
            session.state, _ = apply_move(session.state, move)
            session.move_log.append(move)
            view = _session_view(session, changed=_diff_cells(before, session.state.board))
            view["move"] = [move[0], move[1]]
            return view

    return app
