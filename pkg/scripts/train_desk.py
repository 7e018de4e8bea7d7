#!/usr/bin/env python3
"""Desk-scale training runs: n = 10 agents for the steps-to-completion
comparisons against random play.

Recipe: T_max = 1e5, T_anneal = 2e4, N_replay = 1e5, everything else at the
reference defaults (d = 10, m = 64, batch 128, rollout/update every 1e3).
Checkpoints land in <out>/<mode>/ckpt_<mode>_<epoch>.bin with the full
configuration embedded, and the acceptance suite consumes the final one.

Seeds are fixed per mode (network 0, flow 1, noodle 2) so the runs are
reproducible end to end.
"""

import argparse
import sys
import time
import traceback
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from percgame.board import GameMode  # noqa: E402
from percgame.qnet import Hyperparameters  # noqa: E402
from percgame.train import train  # noqa: E402

DESK_N = 10
DESK_SEEDS = {"network": 0, "flow": 1, "noodle": 2}


def desk_hyperparameters(mode: str, t_max: int = 10**5) -> Hyperparameters:
    return Hyperparameters(
        d=10, m=64,
        n_replay=10**5,
        t_rollout=10**3, n_rollout=10,
        eps_max=1.00, eps_min=0.05, t_anneal=2 * 10**4,
        n_batch=128,
        t_max=t_max, t_update=10**3,
        learning_rate=1e-4,
        seed=DESK_SEEDS[mode],
    )


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mode", required=True, choices=("network", "flow", "noodle"))
    ap.add_argument("--out", default="artifacts/desk", help="output root")
    ap.add_argument("--t-max", type=int, default=10**5,
                    help="override total epochs (smoke tests only)")
    ap.add_argument("--no-compile", action="store_true",
                    help="skip torch.compile of the training forward pass")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    h = desk_hyperparameters(args.mode, args.t_max)
    mode = GameMode(args.mode)
    log_path = out / f"train_{args.mode}.csv"
    ckpt_dir = out / args.mode

    print(f"[desk] mode={args.mode} n={DESK_N} t_max={h.t_max} seed={h.seed} "
          f"compile={not args.no_compile}", flush=True)
    t0 = time.time()
    try:
        train(h, mode, DESK_N,
              checkpoint_dir=ckpt_dir,
              log_path=log_path,
              compile_policy=not args.no_compile)
    except Exception:
        traceback.print_exc()
        return 1
    print(f"[desk] done in {time.time() - t0:.0f}s", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
