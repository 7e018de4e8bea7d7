import type { BoardDoc, CellCode, ChangedCell, ClientGameView, GameViewDoc, QOverlayDoc } from "./types.js";

export function cellAt(board: BoardDoc, i: number, j: number): CellCode {
  const row = board.cells[i];
  if (row === undefined || j < 0 || j >= board.n) {
    throw new Error(`cell (${i}, ${j}) out of range`);
  }
  return row.charAt(j) as CellCode;
}

/** Apply a changed-cell diff to a board, returning a new board. */
export function applyDiff(board: BoardDoc, changed: ChangedCell[]): BoardDoc {
  const rows = board.cells.map((r) => r.split(""));
  for (const c of changed) {
    const row = rows[c.i];
    if (row === undefined || c.j < 0 || c.j >= board.n) {
      throw new Error(`diff cell (${c.i}, ${c.j}) out of range`);
    }
    row[c.j] = c.state;
  }
  return { ...board, cells: rows.map((r) => r.join("")) };
}

export function boardsEqual(a: BoardDoc, b: BoardDoc): boolean {
  return a.n === b.n && a.mode === b.mode && a.cells.join("|") === b.cells.join("|");
}

export function activeCells(board: BoardDoc): Array<[number, number]> {
  const out: Array<[number, number]> = [];
  for (let i = 0; i < board.n; i++) {
    for (let j = 0; j < board.n; j++) {
      if (cellAt(board, i, j) === "A") out.push([i, j]);
    }
  }
  return out;
}

export function viewFromServer(doc: GameViewDoc, prev?: ClientGameView): ClientGameView {
  let board = doc.board;
  if (prev && doc.changed) {
    // incremental redraw path: the diff applied to the mirror must agree
    // with the full board the server sent back
    const patched = applyDiff(prev.board, doc.changed);
    board = boardsEqual(patched, doc.board) ? patched : doc.board;
  }
  return {
    id: doc.id,
    board,
    movesPlayed: doc.moves_played,
    cumulativeReward: doc.cumulative_reward,
    finished: doc.finished,
    overlay: null,
    overlayEnabled: prev?.overlayEnabled ?? false,
  };
}

export interface OverlayShade {
  /** normalized shade per cell in [0, 1]; null where the overlay is unshaded */
  shade: (number | null)[][];
  /** all cells attaining the maximum Q (ring-highlighted as suggestions) */
  hottest: Array<[number, number]>;
  /** the server's tie-broken suggested move, equal to what agent-move plays */
  suggested: [number, number] | null;
}

/** Per-fetch normalization: the hottest finite value maps to 1, the coldest
 *  to 0 (a flat overlay shades uniformly at 1). Nulls stay unshaded. */
export function shadeOverlay(overlay: QOverlayDoc): OverlayShade {
  let lo = Infinity;
  let hi = -Infinity;
  for (const row of overlay.q) {
    for (const v of row) {
      if (v !== null) {
        lo = Math.min(lo, v);
        hi = Math.max(hi, v);
      }
    }
  }
  const span = hi - lo;
  const shade = overlay.q.map((row) =>
    row.map((v) => {
      if (v === null) return null;
      return span > 0 ? (v - lo) / span : 1;
    }),
  );
  const hottest: Array<[number, number]> = [];
  overlay.q.forEach((row, i) =>
    row.forEach((v, j) => {
      if (v !== null && v === hi) hottest.push([i, j]);
    }),
  );
  return { shade, hottest, suggested: overlay.suggested };
}
