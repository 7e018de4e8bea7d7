// @vitest-environment happy-dom
//
// End-to-end: a real server process (with a desk-scale checkpoint loaded)
// driven through the actual client code paths. A scripted driver plays a
// whole game by clicking the overlay's hottest cell, and the overlay is
// checked against the agent-move endpoint on a set of scripted states.
import { spawn, type ChildProcess } from "node:child_process";
import { existsSync } from "node:fs";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { GameApi } from "../src/api.js";
import { mount } from "../src/main.js";
import { activeCells, cellAt } from "../src/state.js";

const REPO_ROOT = join(__dirname, "..", "..");
const CHECKPOINT_DIR = process.env.PERC_CHECKPOINT_DIR ??
  join(REPO_ROOT, "artifacts", "desk", "network");
const PORT = 18000 + Math.floor(Math.random() * 1000);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
const badStatuses: number[] = [];

// track every response the client sees; the driver run must never hit a 5xx
const realFetch = globalThis.fetch.bind(globalThis);
globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
  const resp = await realFetch(input, init);
  if (resp.status >= 500) badStatuses.push(resp.status);
  return resp;
}) as typeof fetch;

async function waitForHealth(): Promise<void> {
  const deadline = Date.now() + 120_000;
  for (;;) {
    try {
      const resp = await realFetch(`${BASE}/health`);
      if (resp.ok) return;
    } catch {
      /* not up yet */
    }
    if (Date.now() > deadline) throw new Error("server did not come up");
    await new Promise((r) => setTimeout(r, 500));
  }
}

beforeAll(async () => {
  expect(existsSync(CHECKPOINT_DIR), `need a checkpoint dir at ${CHECKPOINT_DIR}; ` +
    "run scripts/train_desk.py or set PERC_CHECKPOINT_DIR").toBe(true);
  server = spawn("python3", ["-m", "percgame.cli", "serve",
    "--host", "127.0.0.1", "--port", String(PORT),
    "--checkpoint-dir", CHECKPOINT_DIR],
    { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] });
  await waitForHealth();
});

afterAll(() => {
  server?.kill("SIGINT");
});

describe("end-to-end session", () => {
  it("driver clicks the overlay's hottest cell until the game ends", async () => {
    const api = new GameApi(BASE);
    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = mount(root, api);

    await app.newGame({ mode: "network", n: 10, p: 0.8, seed: 77 });
    expect(app.view).not.toBeNull();

    (root.querySelector("#overlay-toggle") as HTMLButtonElement).click();
    await app.lastOp;
    expect(app.view!.overlayEnabled).toBe(true);

    let clicks = 0;
    while (!app.view!.finished && clicks < 150) {
      const ring = root.querySelector(".cell.ring-primary") as HTMLElement | null;
      expect(ring, `no suggested cell after ${clicks} clicks`).not.toBeNull();
      ring!.click();
      await app.lastOp;
      clicks += 1;
    }
    expect(app.view!.finished).toBe(true);
    expect(clicks).toBeLessThanOrEqual(100); // n^2

    const banner = root.querySelector(".banner");
    expect(banner?.textContent).toContain(`game over in ${app.view!.movesPlayed} moves`);
    const serverView = await api.getGame(app.view!.id);
    expect(serverView.moves_played).toBe(app.view!.movesPlayed);
    expect(serverView.finished).toBe(true);
    expect(badStatuses).toEqual([]);
  });

  it("overlay shading and ring agree with the server on scripted states", async () => {
    const api = new GameApi(BASE);
    for (let k = 0; k < 20; k++) {
      const game = await api.createGame({ mode: "network", n: 8, p: 0.85, seed: 1000 + k });
      // script a few legal moves to visit mid-game states
      let view = game;
      for (let m = 0; m < k % 4 && !view.finished; m++) {
        const active = activeCells(view.board);
        const pick = active[(k + m * 7) % active.length]!;
        view = await api.postMove(game.id, pick[0], pick[1]);
      }
      if (view.finished) continue;

      const overlay = await api.getOverlay(game.id);
      const mirrored = (await api.getGame(game.id)).board;
      for (let i = 0; i < mirrored.n; i++) {
        for (let j = 0; j < mirrored.n; j++) {
          const v = overlay.q[i]?.[j];
          if (v !== null && v !== undefined) {
            expect(cellAt(mirrored, i, j)).toBe("A"); // shaded => green
          }
        }
      }
      expect(overlay.suggested).not.toBeNull();
      const after = await api.agentMove(game.id);
      expect(after.move).toEqual(overlay.suggested); // fixed tie seed
    }
    expect(badStatuses).toEqual([]);
  });
});
