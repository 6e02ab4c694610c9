// Typed client for the guidance service HTTP API. This module is the only
// place the UI talks to the engine; everything else works on returned data.

export type Stage = "global" | "local";

export interface SessionInfo {
  session_id: string;
  stage: Stage;
  stroke_count: number;
}

export interface RetrievalResult {
  entry_id: string;
  similarity: number;
  rank: number;
}

export interface EditResponse {
  version: number;
  stage: Stage;
  stroke_count: number;
  results?: RetrievalResult[];
  retrieval_ms?: number;
  shadow_available?: boolean;
  ack?: boolean;
}

export interface CandidateInfo {
  candidate_id: string;
  template_entry_id: string;
  rank: number;
  selected: boolean;
}

export interface StageState {
  version: number;
  stage: Stage;
  stroke_count: number;
  candidates?: CandidateInfo[];
}

export interface SketchStroke {
  id: number;
  width: number;
  order: number;
  points: [number, number][];
}

export interface SketchDocument {
  version: number;
  canvas: [number, number];
  strokes: SketchStroke[];
}

export interface ExportBundle {
  version: number;
  session_id: string;
  stage: Stage;
  sketch: SketchDocument;
  results: RetrievalResult[];
  artifacts: Record<string, string | null>;
}

export type EditRequest =
  | { action: "add"; points: [number, number][]; width: number }
  | { action: "erase"; click: [number, number]; tolerance?: number }
  | { action: "undo" };

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class GuidanceApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return response;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.request(path, init);
    return (await response.json()) as T;
  }

  private post(body: unknown): RequestInit {
    return {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body ?? {}),
    };
  }

  health(): Promise<{ status: string; index_entries: number; canvas: [number, number] }> {
    return this.json("/healthz");
  }

  createSession(sketch?: SketchDocument): Promise<SessionInfo> {
    return this.json("/sessions", this.post(sketch ? { sketch } : {}));
  }

  postEdit(sessionId: string, edit: EditRequest): Promise<EditResponse> {
    return this.json(`/sessions/${sessionId}/edits`, this.post(edit));
  }

  /** Returns the shadow PNG bytes, or null while the canvas is blank. */
  async fetchShadow(sessionId: string): Promise<Uint8Array | null> {
    try {
      const response = await this.request(`/sessions/${sessionId}/shadow`);
      return new Uint8Array(await response.arrayBuffer());
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) return null;
      throw err;
    }
  }

  switchStage(sessionId: string, target: Stage): Promise<StageState> {
    return this.json(`/sessions/${sessionId}/stage`, this.post({ target }));
  }

  async listCandidates(sessionId: string): Promise<CandidateInfo[]> {
    const body = await this.json<{ candidates: CandidateInfo[] }>(
      `/sessions/${sessionId}/candidates`,
    );
    return body.candidates;
  }

  /** Selects a candidate; the response body is the portrait PNG. */
  async selectCandidate(sessionId: string, candidateId: string): Promise<Uint8Array> {
    const response = await this.request(
      `/sessions/${sessionId}/candidates/${candidateId}/select`,
      { method: "POST" },
    );
    return new Uint8Array(await response.arrayBuffer());
  }

  exportSession(sessionId: string): Promise<ExportBundle> {
    return this.json(`/sessions/${sessionId}/export`);
  }
}
