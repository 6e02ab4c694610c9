// Client-side session controller. Owns the server-acknowledged state
// (stage, results, candidates, underlay) and serializes edits so at most
// one request is in flight per session; pointer handling and rendering
// hang off the events this emits.

import {
  CandidateInfo,
  EditRequest,
  GuidanceApi,
  RetrievalResult,
  SketchDocument,
  Stage,
} from "./api.js";
import { Size } from "./coords.js";

export type UnderlayKind = "none" | "shadow" | "candidate";

export interface ClientView {
  sessionId: string;
  stage: Stage;
  strokeCount: number;
  results: RetrievalResult[];
  candidates: CandidateInfo[];
  selectedCandidate: string | null;
  underlayKind: UnderlayKind;
  underlayPng: Uint8Array | null;
  busy: boolean;
  message: string | null;
}

type Listener = (view: ClientView) => void;

export class ClientSession {
  private view: ClientView;
  private listeners: Listener[] = [];
  private queue: Promise<void> = Promise.resolve();

  constructor(
    private readonly api: GuidanceApi,
    sessionId: string,
    readonly engineSize: Size,
    stage: Stage = "global",
    strokeCount = 0,
  ) {
    this.view = {
      sessionId,
      stage,
      strokeCount,
      results: [],
      candidates: [],
      selectedCandidate: null,
      underlayKind: "none",
      underlayPng: null,
      busy: false,
      message: null,
    };
  }

  static async open(api: GuidanceApi, sketch?: SketchDocument): Promise<ClientSession> {
    const health = await api.health();
    const info = await api.createSession(sketch);
    const session = new ClientSession(
      api,
      info.session_id,
      { width: health.canvas[0], height: health.canvas[1] },
      info.stage,
      info.stroke_count,
    );
    if (info.stroke_count > 0 && info.stage === "global") {
      await session.refreshShadow();
    }
    return session;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    listener(this.view);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  snapshot(): ClientView {
    return { ...this.view };
  }

  private update(patch: Partial<ClientView>): void {
    this.view = { ...this.view, ...patch };
    // invariant: the underlay type always matches the acknowledged stage
    if (this.view.stage === "global" && this.view.underlayKind === "candidate") {
      this.view.underlayKind = this.view.underlayPng ? "shadow" : "none";
    }
    for (const listener of this.listeners) listener(this.view);
  }

  /** Serialize work: one in-flight request per session, FIFO. */
  private enqueue<T>(work: () => Promise<T>): Promise<T> {
    const run = this.queue.then(async () => {
      this.update({ busy: true, message: null });
      try {
        return await work();
      } finally {
        this.update({ busy: false });
      }
    });
    this.queue = run.then(
      () => undefined,
      () => undefined,
    );
    return run;
  }

  private async refreshShadow(): Promise<void> {
    const png = await this.api.fetchShadow(this.view.sessionId);
    this.update({
      underlayPng: png,
      underlayKind: png ? "shadow" : "none",
    });
  }

  private async applyEdit(edit: EditRequest): Promise<void> {
    const response = await this.api.postEdit(this.view.sessionId, edit);
    this.update({
      stage: response.stage,
      strokeCount: response.stroke_count,
      results: response.results ?? this.view.results,
    });
    if (response.stage === "global") {
      if (response.shadow_available) {
        await this.refreshShadow();
      } else {
        this.update({ underlayPng: null, underlayKind: "none", results: response.results ?? [] });
      }
    }
  }

  /** Posts one stroke captured on pointer-up (engine-space polyline). */
  drawStroke(points: [number, number][], width: number): Promise<void> {
    return this.enqueue(() => this.applyEdit({ action: "add", points, width }));
  }

  eraseAt(click: [number, number], tolerance?: number): Promise<void> {
    return this.enqueue(() => this.applyEdit({ action: "erase", click, tolerance }));
  }

  undo(): Promise<void> {
    return this.enqueue(() => this.applyEdit({ action: "undo" }));
  }

  switchStage(target: Stage): Promise<void> {
    return this.enqueue(async () => {
      const state = await this.api.switchStage(this.view.sessionId, target);
      if (state.stage === "local") {
        const candidates = state.candidates ?? (await this.api.listCandidates(this.view.sessionId));
        this.update({
          stage: "local",
          strokeCount: state.stroke_count,
          candidates,
          selectedCandidate: null,
          underlayKind: "none",
          underlayPng: null,
        });
        if (candidates.length > 0) {
          await this.select(candidates[0].candidate_id);
        }
      } else {
        // rewind: the engine restored the pre-switch sketch
        this.update({
          stage: "global",
          strokeCount: state.stroke_count,
          candidates: [],
          selectedCandidate: null,
        });
        await this.refreshShadow();
      }
    });
  }

  selectCandidate(candidateId: string): Promise<void> {
    return this.enqueue(() => this.select(candidateId));
  }

  private async select(candidateId: string): Promise<void> {
    const png = await this.api.selectCandidate(this.view.sessionId, candidateId);
    const candidates = this.view.candidates.map((c) => ({
      ...c,
      selected: c.candidate_id === candidateId,
    }));
    this.update({
      selectedCandidate: candidateId,
      candidates,
      underlayKind: "candidate",
      underlayPng: png,
    });
  }

  exportSketch(): Promise<SketchDocument> {
    return this.enqueue(async () => (await this.api.exportSession(this.view.sessionId)).sketch);
  }
}
