"""Deep-Q network: board encoding, convolutional embedding, pooled global
features, and the masked Q head.

The network is size-independent: the same parameters evaluate boards of any
side length, because the embedding is fully convolutional ("same" padding)
and the head combines a channel-wise pooled global vector with the per-cell
feature vector.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch import nn

from .board import Board, CellState, GameMode

CHANNELS = 4  # one-hot over (Active, Inactive, Attacked, Blocked)
NEG_INF = float("-inf")


class ShapeMismatch(Exception):
    """Input tensor shape is incompatible with the network."""


class NoEligibleAction(Exception):
    """Greedy action requested on a terminal board."""


class CheckpointError(Exception):
    """Checkpoint file is missing, corrupt, or has the wrong format."""


@dataclass
class Hyperparameters:
    """Training knobs; defaults reproduce the reference configuration."""

    d: int = 10                 # embedding depth (conv layers)
    m: int = 64                 # embedding dimension (channels)
    n_replay: int = 10**6       # replay capacity
    t_rollout: int = 10**3      # rollout frequency (epochs)
    n_rollout: int = 10         # games per rollout
    eps_max: float = 1.00       # initial exploration probability
    eps_min: float = 0.05       # final exploration probability
    t_anneal: int = 10**5       # epsilon annealing period
    n_batch: int = 128          # batch size
    t_max: int = 10**6          # total train epochs
    t_update: int = 10**3       # target network update frequency
    learning_rate: float = 1e-4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.d < 1 or self.m < 1:
            raise ValueError("d and m must be >= 1")
        if self.eps_max < self.eps_min:
            raise ValueError("eps_max must be >= eps_min")
        for name in ("n_replay", "t_rollout", "n_rollout", "t_anneal",
                     "n_batch", "t_update"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.t_max < 0:
            raise ValueError("t_max must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


class QNetwork(nn.Module):
    """d-layer 3x3 conv embedding plus a pooled-feature Q head.

    Head: u = [w2 @ v, w3 @ x_ij], Q(i, j) = w1 . relu(u), where v is the
    (min, max, sum, mean) channel-wise pooling of the embedded board.
    Convolutions carry biases; w1/w2/w3 do not.  w1 starts at zero so the
    untrained network scores every state-action pair 0, the terminal value.
    """

    def __init__(self, d: int, m: int, rng: np.random.Generator | int | None = None):
        super().__init__()
        self.d = d
        self.m = m
        convs = [nn.Conv2d(CHANNELS, m, 3, padding=1)]
        convs += [nn.Conv2d(m, m, 3, padding=1) for _ in range(d - 1)]
        self.convs = nn.ModuleList(convs)
        self.w1 = nn.Parameter(torch.zeros(5 * m))
        self.w2 = nn.Parameter(torch.zeros(4 * m, 4 * m))
        self.w3 = nn.Parameter(torch.zeros(m, m))
        self.reset_parameters(rng)

    def reset_parameters(self, rng: np.random.Generator | int | None = None) -> None:
        """He-style fan-in uniform init for conv kernels and w2/w3; zero
        biases; zero w1.  Driven by a numpy generator for reproducibility."""
        rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng

        def he_uniform(t: torch.Tensor, fan_in: int) -> None:
            bound = float(np.sqrt(6.0 / fan_in))
            with torch.no_grad():
                t.copy_(torch.from_numpy(
                    rng.uniform(-bound, bound, size=tuple(t.shape))
                ).to(t.dtype))

        for conv in self.convs:
            he_uniform(conv.weight, conv.in_channels * 9)
            with torch.no_grad():
                conv.bias.zero_()
        he_uniform(self.w2, 4 * self.m)
        he_uniform(self.w3, self.m)
        with torch.no_grad():
            self.w1.zero_()

    # -- forward pieces --------------------------------------------------

    def embed_batch(self, x: torch.Tensor) -> torch.Tensor:
        """(B, 4, n, n) float -> (B, m, n, n) nonnegative features."""
        if x.ndim != 4 or x.shape[1] != CHANNELS:
            raise ShapeMismatch(f"expected (B, {CHANNELS}, n, n), got {tuple(x.shape)}")
        for conv in self.convs:
            x = torch.relu(conv(x))
        return x

    def pool_batch(self, feat: torch.Tensor) -> torch.Tensor:
        """(B, m, n, n) -> (B, 4m) as (min, max, sum, mean) per channel."""
        flat = feat.reshape(feat.shape[0], feat.shape[1], -1)
        return torch.cat([
            flat.min(dim=2).values,
            flat.max(dim=2).values,
            flat.sum(dim=2),
            flat.mean(dim=2),
        ], dim=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """(B, 4, n, n) -> (B, n, n) unmasked Q values for every cell."""
        b, _, n, _ = x.shape
        feat = self.embed_batch(x)
        flat = feat.reshape(b, self.m, n * n)
        v = self.pool_batch(feat)
        global_part = v @ self.w2.T                              # (B, 4m)
        local_part = torch.einsum("km,bmp->bkp", self.w3, flat)  # (B, m, n^2)
        u = torch.cat([
            global_part.unsqueeze(-1).expand(-1, -1, n * n),
            local_part,
        ], dim=1)                                                # (B, 5m, n^2)
        q = torch.einsum("f,bfp->bp", self.w1, torch.relu(u))
        return q.reshape(b, n, n)


# -- encoding ------------------------------------------------------------

def encode(board: Board) -> np.ndarray:
    """(n, n, 4) boolean one-hot in channel order (A, I, X, B)."""
    return np.eye(CHANNELS, dtype=bool)[board.cells]


def decode(enc: np.ndarray, mode: GameMode) -> Board:
    if enc.ndim != 3 or enc.shape[2] != CHANNELS or not (enc.sum(axis=2) == 1).all():
        raise ShapeMismatch("not a one-hot (n, n, 4) encoding")
    return Board(enc.argmax(axis=2).astype(np.uint8), mode)


def encode_cells_batch(cells: np.ndarray) -> torch.Tensor:
    """(B, n, n) uint8 cell codes -> (B, 4, n, n) float32 one-hot tensor."""
    onehot = np.eye(CHANNELS, dtype=np.float32)[cells]       # (B, n, n, 4)
    return torch.from_numpy(np.ascontiguousarray(onehot.transpose(0, 3, 1, 2)))


def encode_batch(boards: Sequence[Board]) -> torch.Tensor:
    return encode_cells_batch(np.stack([b.cells for b in boards]))


# -- spec-shaped single-board operations ---------------------------------

def embed(enc: np.ndarray, net: QNetwork) -> np.ndarray:
    """One-hot (n, n, 4) -> feature map (n, n, m)."""
    if enc.ndim != 3 or enc.shape[2] != CHANNELS:
        raise ShapeMismatch(f"expected (n, n, {CHANNELS}), got {enc.shape}")
    x = torch.from_numpy(np.ascontiguousarray(
        enc.transpose(2, 0, 1), dtype=np.float32)).unsqueeze(0)
    with torch.inference_mode():
        feat = net.embed_batch(x.to(next(net.parameters()).dtype))
    return feat.squeeze(0).permute(1, 2, 0).cpu().numpy()


def pool(featmap: np.ndarray) -> np.ndarray:
    """(n, n, m) feature map -> length-4m (min, max, sum, mean) vector."""
    flat = featmap.reshape(-1, featmap.shape[2])
    return np.concatenate([
        flat.min(axis=0), flat.max(axis=0), flat.sum(axis=0), flat.mean(axis=0)])


def q_values_batch(net: QNetwork, cells: np.ndarray) -> np.ndarray:
    """(B, n, n) uint8 codes -> (B, n, n) float32 Q with -inf off the
    Active cells."""
    dtype = next(net.parameters()).dtype
    with torch.inference_mode():
        q = net(encode_cells_batch(cells).to(dtype)).cpu().numpy()
    q = q.astype(np.float64)
    q[cells != CellState.ACTIVE] = NEG_INF
    return q


def q_values(board: Board, net: QNetwork) -> np.ndarray:
    """(n, n) Q map for one board; ineligible cells carry -inf."""
    return q_values_batch(net, board.cells[None, :, :])[0]


def greedy_action(board: Board, net: QNetwork,
                  rng: np.random.Generator | int | None = None) -> tuple[int, int]:
    """Uniformly random choice among the argmax cells of the Q map."""
    q = q_values(board, net)
    return greedy_from_qmap(q, rng)


def greedy_from_qmap(q: np.ndarray,
                     rng: np.random.Generator | int | None = None) -> tuple[int, int]:
    best = q.max()
    if best == NEG_INF:
        raise NoEligibleAction("no active cells to play")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    flat = np.flatnonzero(q.ravel() == best)
    pick = int(flat[rng.integers(len(flat))])
    n = q.shape[1]
    return pick // n, pick % n


def greedy_policy(net: QNetwork, rng: np.random.Generator | int | None = None):
    """play_game-compatible policy wrapper around greedy_action."""
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng

    def choose(board: Board) -> tuple[int, int]:
        return greedy_action(board, net, rng)

    return choose


# -- checkpoint container -------------------------------------------------
#
# Layout: 8-byte magic, uint32 LE header length, UTF-8 JSON header, then the
# raw little-endian float32 parameter tensors concatenated in header order.
# Parameter order is fixed: conv weights and biases by layer, then w1, w2, w3.

CHECKPOINT_MAGIC = b"PERCQNET"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class CheckpointMeta:
    mode: GameMode
    n: int
    d: int
    m: int
    epoch: int | None = None
    extra: dict = field(default_factory=dict)


def _param_order(net: QNetwork) -> list[tuple[str, torch.Tensor]]:
    items: list[tuple[str, torch.Tensor]] = []
    for idx, conv in enumerate(net.convs):
        items.append((f"conv{idx}.weight", conv.weight))
        items.append((f"conv{idx}.bias", conv.bias))
    items += [("w1", net.w1), ("w2", net.w2), ("w3", net.w3)]
    return items


def save_checkpoint(path: str | Path, net: QNetwork, mode: GameMode, n: int,
                    epoch: int | None = None, extra: dict | None = None) -> None:
    params = _param_order(net)
    header = {
        "format_version": CHECKPOINT_VERSION,
        "mode": mode.kind,
        "k": str(mode.k) if mode.kind == "noodle" else None,
        "n": n,
        "d": net.d,
        "m": net.m,
        "epoch": epoch,
        "dtype": "<f4",
        "params": [{"name": name, "shape": list(t.shape)} for name, t in params],
        "extra": extra or {},
    }
    blob = json.dumps(header).encode("utf-8")
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<I", len(blob)))
    buf.write(blob)
    for _, t in params:
        arr = t.detach().cpu().numpy().astype("<f4", copy=False)
        buf.write(np.ascontiguousarray(arr).tobytes())
    Path(path).write_bytes(buf.getvalue())


def load_checkpoint(path: str | Path) -> tuple[QNetwork, CheckpointMeta]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint: {exc}") from exc
    if raw[:8] != CHECKPOINT_MAGIC:
        raise CheckpointError("bad magic: not a Q-network checkpoint")
    try:
        (hlen,) = struct.unpack("<I", raw[8:12])
        header = json.loads(raw[12:12 + hlen].decode("utf-8"))
        if header["format_version"] != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported version {header['format_version']}")
        d, m, n = int(header["d"]), int(header["m"]), int(header["n"])
        kind = header["mode"]
        mode = GameMode(kind, Fraction(header["k"])) if kind == "noodle" else GameMode(kind)
        net = QNetwork(d, m, rng=0)
        offset = 12 + hlen
        with torch.no_grad():
            for spec, (name, t) in zip(header["params"], _param_order(net)):
                if spec["name"] != name or list(t.shape) != spec["shape"]:
                    raise CheckpointError(f"parameter mismatch at {spec['name']}")
                count = int(np.prod(spec["shape"])) if spec["shape"] else 1
                arr = np.frombuffer(raw, dtype="<f4", count=count, offset=offset)
                offset += 4 * count
                t.copy_(torch.from_numpy(arr.reshape(spec["shape"]).copy()))
        if offset != len(raw):
            raise CheckpointError("trailing or missing data")
    except CheckpointError:
        raise
    except Exception as exc:
        raise CheckpointError(f"corrupt checkpoint: {exc}") from exc
    meta = CheckpointMeta(mode=mode, n=n, d=d, m=m,
                          epoch=header.get("epoch"), extra=header.get("extra", {}))
    return net, meta
