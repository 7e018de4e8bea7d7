"""Deep Q-learning via self-play: replay buffer, epsilon-greedy annealing,
double-Q targets, and the outer training loop.

The loop is strictly serial and drives all randomness from one numpy
generator, so runs with equal seeds and settings produce bitwise-identical
checkpoints.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch

from .board import GameMode, eligible_actions
from .game import Experience, apply_move, generate_training_board, new_game
from .qnet import (
    Hyperparameters,
    QNetwork,
    encode_cells_batch,
    greedy_action,
    q_values_batch,
)

GRAD_CLIP_NORM = 10.0
LOG_HEADER = ("epoch", "epsilon", "loss", "buffer_size", "mean_rollout_steps")


class NonFiniteLoss(Exception):
    """Training loss became NaN or infinite."""


class ReplayBuffer:
    """Bounded FIFO store of experiences with uniform sampling.

    Slots are reused ring-style; `slot_ids` grow monotonically with every
    insert so callers can detect when a slot's content was replaced.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._store: list[Experience] = []
        self._next = 0
        self.slot_ids = np.full(capacity, -1, dtype=np.int64)
        self._inserts = 0

    def __len__(self) -> int:
        return len(self._store)

    def push(self, exp: Experience) -> None:
        if len(self._store) < self.capacity:
            self._store.append(exp)
        else:
            self._store[self._next] = exp
        self.slot_ids[self._next] = self._inserts
        self._next = (self._next + 1) % self.capacity
        self._inserts += 1

    def extend(self, exps: Sequence[Experience]) -> None:
        for exp in exps:
            self.push(exp)

    def sample_indices(self, rng: np.random.Generator, k: int) -> np.ndarray:
        """Uniform sample of k slot indices; with replacement only while the
        buffer is still smaller than k."""
        size = len(self._store)
        if size == 0:
            raise ValueError("cannot sample from an empty buffer")
        if size < k:
            return rng.integers(0, size, size=k)
        return rng.choice(size, size=k, replace=False)

    def get(self, indices: Sequence[int]) -> list[Experience]:
        return [self._store[int(i)] for i in indices]

    def oldest_first(self) -> list[Experience]:
        """Contents in insertion order (oldest surviving experience first)."""
        if len(self._store) < self.capacity:
            return list(self._store)
        return self._store[self._next:] + self._store[:self._next]


@dataclass
class TrainerState:
    policy_net: QNetwork
    target_net: QNetwork
    optimizer: torch.optim.Optimizer
    h: Hyperparameters
    mode: GameMode
    n: int
    rng: np.random.Generator
    epoch: int = 0
    target_version: int = 0
    policy_forward: Callable[[torch.Tensor], torch.Tensor] | None = None

    def forward_policy(self, x: torch.Tensor) -> torch.Tensor:
        fn = self.policy_forward if self.policy_forward is not None else self.policy_net
        return fn(x)


def epsilon_at(epoch: int, h: Hyperparameters) -> float:
    """Linear anneal from eps_max to eps_min over the first t_anneal epochs."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    if epoch >= h.t_anneal:
        return h.eps_min
    return h.eps_max + (h.eps_min - h.eps_max) * (epoch / h.t_anneal)


def rollout(policy_net: QNetwork, eps: float, n_games: int, mode: GameMode,
            n: int, rng: np.random.Generator,
            p_range: tuple[float, float] = (0.5, 1.0)) -> list[Experience]:
    """Play n_games complete epsilon-greedy games; experiences in play order."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must be in [0, 1]")
    out: list[Experience] = []
    for _ in range(n_games):
        state = new_game(generate_training_board(n, mode, rng, p_range))
        while not state.finished:
            if rng.random() < eps:
                actions = eligible_actions(state.board)
                move = actions[int(rng.integers(len(actions)))]
            else:
                move = greedy_action(state.board, policy_net, rng)
            state, exp = apply_move(state, move)
            out.append(exp)
    return out


def td_targets(batch: Sequence[Experience], target_net: QNetwork) -> np.ndarray:
    """Bellman targets: r for terminal transitions, else r + max_a' Q(s', a')
    under the target network (undiscounted)."""
    if not batch:
        raise ValueError("batch must be nonempty")
    targets = np.array([float(e.r) for e in batch])
    live = [k for k, e in enumerate(batch) if not e.terminal]
    if live:
        cells = np.stack([batch[k].s_next.cells for k in live])
        q = q_values_batch(target_net, cells)
        targets[live] += q.reshape(len(live), -1).max(axis=1)
    return targets


def train_step(state: TrainerState, batch: Sequence[Experience],
               targets: np.ndarray | None = None) -> float:
    """One gradient step on the policy network toward the TD targets.

    Targets are constants: no gradient ever flows into the target network.
    """
    if targets is None:
        targets = td_targets(batch, state.target_net)
    n = batch[0].s.n
    cells = np.stack([e.s.cells for e in batch])
    dtype = next(state.policy_net.parameters()).dtype
    x = encode_cells_batch(cells).to(dtype)
    q_all = state.forward_policy(x).reshape(len(batch), -1)
    action_idx = torch.tensor([e.a[0] * n + e.a[1] for e in batch],
                              dtype=torch.long).unsqueeze(1)
    q_sa = q_all.gather(1, action_idx).squeeze(1)
    target_t = torch.as_tensor(targets, dtype=dtype)
    loss = torch.mean((q_sa - target_t) ** 2)
    loss_val = float(loss.detach())
    if not np.isfinite(loss_val):
        raise NonFiniteLoss(f"loss = {loss_val} at epoch {state.epoch}")
    state.optimizer.zero_grad(set_to_none=True)
    loss.backward()
    torch.nn.utils.clip_grad_norm_(state.policy_net.parameters(), GRAD_CLIP_NORM)
    state.optimizer.step()
    return loss_val


def sync_target(state: TrainerState) -> None:
    """Copy policy weights into the target network."""
    state.target_net.load_state_dict(state.policy_net.state_dict())
    state.target_version += 1


class _TargetCache:
    """Memo of max_a' Q_target(s') per buffer slot, keyed by the slot's
    insert id and the target-network version.  Purely an optimization: the
    values are exactly what td_targets would recompute."""

    def __init__(self, capacity: int):
        self.values = np.zeros(capacity)
        self.slot_ids = np.full(capacity, -1, dtype=np.int64)
        self.versions = np.full(capacity, -1, dtype=np.int64)

    def targets_for(self, state: TrainerState, buf: ReplayBuffer,
                    indices: np.ndarray) -> np.ndarray:
        batch = buf.get(indices)
        valid = (self.slot_ids[indices] == buf.slot_ids[indices]) & \
                (self.versions[indices] == state.target_version)
        miss = [k for k in range(len(batch)) if not valid[k]]
        if miss:
            # compute misses in one batched forward; terminal states need no
            # lookahead (their continuation value is zero by definition)
            live = [k for k in miss if not batch[k].terminal]
            best = np.zeros(len(miss))
            if live:
                cells = np.stack([batch[k].s_next.cells for k in live])
                q = q_values_batch(state.target_net, cells)
                live_best = q.reshape(len(live), -1).max(axis=1)
                pos = {k: i for i, k in enumerate(live)}
                best = np.array([live_best[pos[k]] if k in pos else 0.0 for k in miss])
            mi = np.asarray(indices)[miss]
            self.values[mi] = best
            self.slot_ids[mi] = buf.slot_ids[mi]
            self.versions[mi] = state.target_version
        rewards = np.array([float(e.r) for e in batch])
        return rewards + self.values[np.asarray(indices)]


@dataclass
class LogRow:
    epoch: int
    epsilon: float
    loss: float
    buffer_size: int
    mean_rollout_steps: float


def train(h: Hyperparameters, mode: GameMode, n: int, *,
          p_range: tuple[float, float] = (0.5, 1.0),
          checkpoint_dir: str | Path | None = None,
          log_path: str | Path | None = None,
          on_epoch: Callable[[TrainerState], None] | None = None,
          compile_policy: bool = False,
          use_target_cache: bool = True) -> tuple[QNetwork, list[LogRow]]:
    """Run the full training loop and return the trained policy network.

    Every t_rollout epochs, n_rollout fresh self-play games are appended to
    the replay buffer (plus one warm-up rollout at eps_max before epoch 1 so
    the first batches have something to sample).  Every epoch takes one
    gradient step on a uniform batch; every t_update epochs the target
    network syncs and, when checkpoint_dir is set, a checkpoint
    ckpt_<mode>_<epoch>.bin is written.
    """
    rng = np.random.default_rng(h.seed)
    policy = QNetwork(h.d, h.m, rng=rng)
    target = QNetwork(h.d, h.m, rng=0)
    optimizer = torch.optim.Adam(policy.parameters(), lr=h.learning_rate,
                                 betas=(0.9, 0.999), eps=1e-8)
    state = TrainerState(policy_net=policy, target_net=target,
                         optimizer=optimizer, h=h, mode=mode, n=n, rng=rng)
    sync_target(state)
    state.target_version = 0
    if compile_policy:
        state.policy_forward = torch.compile(policy)
    log_rows: list[LogRow] = []
    if h.t_max == 0:
        if log_path:
            _write_log(log_path, log_rows)
        return policy, log_rows

    buf = ReplayBuffer(h.n_replay)
    cache = _TargetCache(h.n_replay) if use_target_cache else None
    ckpt_extra = {"hyperparameters": asdict(h), "p_range": list(p_range)}

    log_file = None
    log_writer = None
    if log_path:
        log_file = open(log_path, "w", newline="")
        log_writer = csv.writer(log_file)
        log_writer.writerow(LOG_HEADER)
        log_file.flush()

    try:
        buf.extend(rollout(policy, h.eps_max, h.n_rollout, mode, n, rng, p_range))
        mean_steps = float("nan")
        for epoch in range(1, h.t_max + 1):
            state.epoch = epoch
            did_rollout = epoch % h.t_rollout == 0
            eps = epsilon_at(epoch, h)
            if did_rollout:
                exps = rollout(policy, eps, h.n_rollout, mode, n, rng, p_range)
                buf.extend(exps)
                mean_steps = len(exps) / h.n_rollout
            indices = buf.sample_indices(rng, h.n_batch)
            batch = buf.get(indices)
            if cache is not None:
                targets = cache.targets_for(state, buf, indices)
            else:
                targets = td_targets(batch, state.target_net)
            loss = train_step(state, batch, targets)
            if did_rollout:
                row = LogRow(epoch, eps, loss, len(buf), mean_steps)
                log_rows.append(row)
                if log_writer:
                    log_writer.writerow([row.epoch, row.epsilon, row.loss,
                                         row.buffer_size, row.mean_rollout_steps])
                    log_file.flush()
            if epoch % h.t_update == 0:
                sync_target(state)
                if checkpoint_dir is not None:
                    _save(checkpoint_dir, policy, mode, n, epoch, ckpt_extra)
            if on_epoch is not None:
                on_epoch(state)
        if checkpoint_dir is not None and h.t_max % h.t_update != 0:
            _save(checkpoint_dir, policy, mode, n, h.t_max, ckpt_extra)
    finally:
        if log_file:
            log_file.close()
    return policy, log_rows


def _save(directory: str | Path, net: QNetwork, mode: GameMode, n: int,
          epoch: int, extra: dict) -> None:
    from .qnet import save_checkpoint

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_checkpoint(directory / f"ckpt_{mode.kind}_{epoch}.bin",
                    net, mode, n, epoch=epoch, extra=extra)


def _write_log(path: str | Path, rows: list[LogRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LOG_HEADER)
        for r in rows:
            writer.writerow([r.epoch, r.epsilon, r.loss, r.buffer_size,
                             r.mean_rollout_steps])
