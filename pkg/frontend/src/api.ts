import { BASE_URL } from "./config.js";
import type { BoardDoc, GameViewDoc, ModeInfo, QOverlayDoc } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(base + path, init);
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const doc = (await resp.json()) as { error?: string };
      if (doc.error) detail = doc.error;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

function post(body: unknown): RequestInit {
  return {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  };
}

export interface NewGameOptions {
  mode: string;
  n?: number;
  p?: number;
  k?: string;
  seed?: number;
  board?: BoardDoc;
}

export class GameApi {
  constructor(private readonly base: string = BASE_URL) {}

  health(): Promise<{ status: string }> {
    return request(this.base, "/health");
  }

  modes(): Promise<{ modes: ModeInfo[] }> {
    return request(this.base, "/modes");
  }

  createGame(opts: NewGameOptions): Promise<GameViewDoc> {
    return request(this.base, "/games", post(opts));
  }

  getGame(id: string): Promise<GameViewDoc> {
    return request(this.base, `/games/${id}`);
  }

  postMove(id: string, i: number, j: number): Promise<GameViewDoc> {
    return request(this.base, `/games/${id}/moves`, post({ i, j }));
  }

  getOverlay(id: string): Promise<QOverlayDoc> {
    return request(this.base, `/games/${id}/q`);
  }

  agentMove(id: string): Promise<GameViewDoc> {
    return request(this.base, `/games/${id}/agent-move`, { method: "POST" });
  }
}
