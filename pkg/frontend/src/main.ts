import { ApiError, GameApi, type NewGameOptions } from "./api.js";
import { renderBoard, renderError, toast } from "./render.js";
import { cellAt, viewFromServer } from "./state.js";
import type { ClientGameView, GameViewDoc } from "./types.js";

/** The single-page app: a new-game form, the board, and the agent controls.
 *  One request is in flight at a time; inputs are disabled while pending. */
export class App {
  view: ClientGameView | null = null;
  lastOp: Promise<void> = Promise.resolve();
  private busy = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: GameApi = new GameApi(),
  ) {
    this.buildChrome();
  }

  private els!: {
    mode: HTMLSelectElement;
    n: HTMLInputElement;
    p: HTMLInputElement;
    pValue: HTMLSpanElement;
    advanced: HTMLInputElement;
    seed: HTMLInputElement;
    newGame: HTMLButtonElement;
    overlayToggle: HTMLButtonElement;
    agentStep: HTMLButtonElement;
    board: HTMLElement;
    toasts: HTMLElement;
  };

  private buildChrome(): void {
    this.root.innerHTML = `
      <div class="controls">
        <label>mode
          <select id="mode">
            <option value="network">network</option>
            <option value="flow">flow</option>
            <option value="noodle">noodle</option>
          </select>
        </label>
        <label>n <input id="n" type="number" min="2" max="40" value="10"></label>
        <label>p <input id="p" type="range" min="0.5" max="1.0" step="0.01" value="0.8">
          <span id="p-value">0.80</span></label>
        <label class="advanced"><input id="advanced" type="checkbox"> full p range</label>
        <label>seed <input id="seed" type="number" placeholder="random"></label>
        <button id="new-game">new game</button>
        <button id="overlay-toggle" disabled>Q overlay</button>
        <button id="agent-step" disabled>agent move</button>
      </div>
      <div id="board" class="board"></div>
      <div id="toasts"></div>
    `;
    const $ = <T extends HTMLElement>(sel: string): T => {
      const el = this.root.querySelector(sel);
      if (!el) throw new Error(`missing element ${sel}`);
      return el as T;
    };
    this.els = {
      mode: $("#mode"),
      n: $("#n"),
      p: $("#p"),
      pValue: $("#p-value"),
      advanced: $("#advanced"),
      seed: $("#seed"),
      newGame: $("#new-game"),
      overlayToggle: $("#overlay-toggle"),
      agentStep: $("#agent-step"),
      board: $("#board"),
      toasts: $("#toasts"),
    };
    this.els.p.addEventListener("input", () => {
      this.els.pValue.textContent = Number(this.els.p.value).toFixed(2);
    });
    this.els.advanced.addEventListener("change", () => {
      // the default range matches the training distribution; the advanced
      // override opens the full physical range
      this.els.p.min = this.els.advanced.checked ? "0.0" : "0.5";
      if (Number(this.els.p.value) < Number(this.els.p.min)) {
        this.els.p.value = this.els.p.min;
        this.els.pValue.textContent = Number(this.els.p.value).toFixed(2);
      }
    });
    this.els.newGame.addEventListener("click", () => this.track(this.newGameFromForm()));
    this.els.overlayToggle.addEventListener("click", () => this.track(this.toggleOverlay()));
    this.els.agentStep.addEventListener("click", () => this.track(this.agentStep()));
  }

  private track(p: Promise<void>): Promise<void> {
    this.lastOp = p.catch((err) => {
      toast(this.els.toasts, err instanceof Error ? err.message : String(err));
    });
    return this.lastOp;
  }

  private setBusy(b: boolean): void {
    this.busy = b;
    for (const el of [this.els.newGame, this.els.overlayToggle, this.els.agentStep]) {
      el.disabled = b || (el !== this.els.newGame && !this.view);
    }
  }

  private async guard<T>(op: () => Promise<T>): Promise<T> {
    if (this.busy) throw new Error("request already in flight");
    this.setBusy(true);
    try {
      return await op();
    } finally {
      this.setBusy(false);
    }
  }

  private render(): void {
    if (!this.view) return;
    try {
      renderBoard(this.els.board, this.view, {
        onCellClick: (i, j) => this.track(this.submitMove(i, j)),
      });
    } catch (err) {
      renderError(this.els.board, err instanceof Error ? err.message : String(err));
    }
  }

  private async refreshOverlay(): Promise<void> {
    if (!this.view) return;
    if (!this.view.overlayEnabled || this.view.finished) {
      this.view.overlay = null;
      return;
    }
    this.view.overlay = await this.api.getOverlay(this.view.id);
  }

  private adopt(doc: GameViewDoc): void {
    this.view = viewFromServer(doc, this.view ?? undefined);
  }

  async newGameFromForm(): Promise<void> {
    const opts: NewGameOptions = {
      mode: this.els.mode.value,
      n: Number(this.els.n.value),
      p: Number(this.els.p.value),
    };
    if (this.els.seed.value !== "") opts.seed = Number(this.els.seed.value);
    return this.newGame(opts);
  }

  async newGame(opts: NewGameOptions): Promise<void> {
    await this.guard(async () => {
      const doc = await this.api.createGame(opts);
      this.view = viewFromServer(doc);
      const modes = await this.api.modes();
      const loaded = modes.modes.find((m) => m.mode === opts.mode)?.model_loaded;
      this.els.overlayToggle.disabled = !loaded;
      this.els.overlayToggle.title = loaded ? "" : "no model loaded for this mode";
      this.els.agentStep.disabled = !loaded;
      this.render();
    });
  }

  /** The click path: POST the move, apply the changed-cell diff, refresh the
   *  overlay if it is on. Ineligible cells never reach here (no handler). */
  async submitMove(i: number, j: number): Promise<void> {
    await this.guard(async () => {
      if (!this.view || this.view.finished) return;
      if (cellAt(this.view.board, i, j) !== "A") return; // client-side mask
      try {
        const doc = await this.api.postMove(this.view.id, i, j);
        this.adopt(doc);
        await this.refreshOverlay();
      } catch (err) {
        if (err instanceof ApiError && (err.status === 409 || err.status === 422)) {
          toast(this.els.toasts, err.message); // view stays as the server left it
          return;
        }
        throw err;
      }
      this.render();
    });
  }

  async toggleOverlay(): Promise<void> {
    await this.guard(async () => {
      if (!this.view) return;
      this.view.overlayEnabled = !this.view.overlayEnabled;
      try {
        await this.refreshOverlay();
      } catch (err) {
        this.view.overlayEnabled = false;
        if (err instanceof ApiError && err.status === 409) {
          this.els.overlayToggle.disabled = true;
          this.els.overlayToggle.title = "no model loaded for this mode";
          return;
        }
        throw err;
      }
      this.render();
    });
  }

  async agentStep(): Promise<void> {
    await this.guard(async () => {
      if (!this.view || this.view.finished) return;
      try {
        const doc = await this.api.agentMove(this.view.id);
        const move = doc.move;
        if (move) this.animateCell(move[0], move[1]);
        this.adopt(doc);
        await this.refreshOverlay();
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) {
          toast(this.els.toasts, err.message);
          return;
        }
        throw err;
      }
      this.render();
    });
  }

  private animateCell(i: number, j: number): void {
    const cell = this.els.board.querySelector(`[data-i="${i}"][data-j="${j}"]`);
    cell?.classList.add("agent-pick");
  }
}

export function mount(root: HTMLElement, api?: GameApi): App {
  return new App(root, api);
}

declare global {
  interface Window {
    percgameApp?: App;
  }
}

if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) {
    window.percgameApp = mount(root);
  }
}
