import { cellAt, shadeOverlay } from "./state.js";
import type { ClientGameView } from "./types.js";

export interface RenderHandlers {
  onCellClick: (i: number, j: number) => void;
}

/** Paint the full game view into `root`: the clickable grid (Active cells
 *  only), the move counter, the finished banner, and the Q overlay when
 *  enabled. The DOM is rebuilt per render; boards are small. */
export function renderBoard(root: HTMLElement, view: ClientGameView, handlers: RenderHandlers): void {
  root.textContent = "";
  const board = view.board;

  const status = document.createElement("div");
  status.className = "status-bar";
  const counter = document.createElement("span");
  counter.className = "move-counter";
  counter.textContent = `moves: ${view.movesPlayed}`;
  status.appendChild(counter);
  const modeTag = document.createElement("span");
  modeTag.className = "mode-tag";
  modeTag.textContent = board.mode + (board.mode === "noodle" ? ` (K=${board.k ?? "2"})` : "");
  status.appendChild(modeTag);
  root.appendChild(status);

  if (view.finished) {
    const banner = document.createElement("div");
    banner.className = "banner";
    banner.textContent = `game over in ${view.movesPlayed} moves`;
    root.appendChild(banner);
  }

  const shadeInfo = view.overlayEnabled && view.overlay ? shadeOverlay(view.overlay) : null;
  const hottest = new Set((shadeInfo?.hottest ?? []).map(([i, j]) => `${i},${j}`));
  const suggested = shadeInfo?.suggested ?? null;

  const grid = document.createElement("div");
  grid.className = "grid";
  grid.style.gridTemplateColumns = `repeat(${board.n}, var(--cell))`;
  for (let i = 0; i < board.n; i++) {
    for (let j = 0; j < board.n; j++) {
      const code = cellAt(board, i, j);
      const cell = document.createElement("div");
      cell.className = `cell cell-${code}`;
      cell.dataset.i = String(i);
      cell.dataset.j = String(j);
      if (code === "A" && !view.finished) {
        cell.classList.add("clickable");
        cell.addEventListener("click", () => handlers.onCellClick(i, j));
      }
      const shade = shadeInfo?.shade[i]?.[j];
      if (shade !== null && shade !== undefined && code === "A") {
        const overlayMark = document.createElement("div");
        overlayMark.className = "overlay-shade";
        overlayMark.style.opacity = String(0.25 + 0.75 * shade);
        cell.appendChild(overlayMark);
        if (hottest.has(`${i},${j}`)) cell.classList.add("ring");
        if (suggested && suggested[0] === i && suggested[1] === j) {
          cell.classList.add("ring-primary");
        }
      }
      grid.appendChild(cell);
    }
  }
  root.appendChild(grid);
}

export function renderError(root: HTMLElement, message: string): void {
  root.textContent = "";
  const badge = document.createElement("div");
  badge.className = "error-badge";
  badge.textContent = `render error: ${message}`;
  root.appendChild(badge);
}

/** Transient error toast appended to `host`; the caller's view is untouched. */
export function toast(host: HTMLElement, message: string): void {
  const el = document.createElement("div");
  el.className = "toast";
  el.textContent = message;
  host.appendChild(el);
  setTimeout(() => el.remove(), 4000);
}
