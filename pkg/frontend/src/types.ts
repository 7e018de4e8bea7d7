export type CellCode = "A" | "I" | "X" | "B";

export interface BoardDoc {
  n: number;
  mode: string;
  k?: string;
  cells: string[]; // n strings of length n; row 0 is the top row
}

export interface ChangedCell {
  i: number;
  j: number;
  state: CellCode;
}

export interface GameViewDoc {
  id: string;
  board: BoardDoc;
  moves_played: number;
  cumulative_reward: number;
  finished: boolean;
  changed?: ChangedCell[];
  move?: [number, number];
}

export interface QOverlayDoc {
  q: (number | null)[][];
  suggested: [number, number] | null;
}

export interface ModeInfo {
  mode: string;
  model_loaded: boolean;
}

/** The client-side mirror of one game session. The board is always exactly
 *  the last state the server returned; the client never invents state. */
export interface ClientGameView {
  id: string;
  board: BoardDoc;
  movesPlayed: number;
  cumulativeReward: number;
  finished: boolean;
  overlay: QOverlayDoc | null;
  overlayEnabled: boolean;
}
