// DOM wiring: canvas, tool buttons, sliders, stage switch, thumbnails.
// All engine access goes through ClientSession / GuidanceApi.

import { GuidanceApi, SketchDocument, Stage } from "./api.js";
import { StrokeCapture, toEnginePolyline } from "./capture.js";
import { Point, Size, displayToEngine } from "./coords.js";
import { ClientSession, ClientView } from "./state.js";

type Tool = "draw" | "erase";

function pngBlob(bytes: Uint8Array): Blob {
  // copy onto a plain ArrayBuffer so the Blob typing is satisfied
  const buffer = new ArrayBuffer(bytes.byteLength);
  new Uint8Array(buffer).set(bytes);
  return new Blob([buffer], { type: "image/png" });
}

export class DrawingApp {
  private session!: ClientSession;
  private capture = new StrokeCapture();
  private tool: Tool = "draw";
  private widthPx = 3; // engine-space stroke width, slider range 1..12
  private opacity = 0.5;
  private underlayBitmap: ImageBitmap | null = null;
  private localStrokes: Point[][] = []; // echoed ink, display space

  constructor(
    private readonly root: Document,
    private readonly api: GuidanceApi,
  ) {}

  private get canvas(): HTMLCanvasElement {
    return this.root.getElementById("canvas") as HTMLCanvasElement;
  }

  private displaySize(): Size {
    return { width: this.canvas.width, height: this.canvas.height };
  }

  async start(): Promise<void> {
    this.session = await ClientSession.open(this.api);
    this.session.subscribe((view) => {
      void this.onViewChange(view);
    });
    this.bindPointer();
    this.bindControls();
    this.render();
  }

  private bindPointer(): void {
    const canvas = this.canvas;
    const toLocal = (ev: PointerEvent): Point => {
      const rect = canvas.getBoundingClientRect();
      return {
        x: ((ev.clientX - rect.left) * canvas.width) / rect.width,
        y: ((ev.clientY - rect.top) * canvas.height) / rect.height,
      };
    };
    canvas.addEventListener("pointerdown", (ev) => {
      canvas.setPointerCapture(ev.pointerId);
      const p = toLocal(ev);
      if (this.tool === "erase") {
        const q = displayToEngine(p, this.displaySize(), this.session.engineSize);
        void this.session.eraseAt([q.x, q.y]);
        return;
      }
      this.capture.begin(p);
    });
    canvas.addEventListener("pointermove", (ev) => {
      if (!this.capture.isActive) return;
      this.capture.move(toLocal(ev));
      this.render();
    });
    canvas.addEventListener("pointerup", (ev) => {
      if (!this.capture.isActive) return;
      const path = this.capture.end(toLocal(ev));
      if (path.length === 0) return;
      this.localStrokes.push(path);
      const polyline = toEnginePolyline(path, this.displaySize(), this.session.engineSize);
      const width = this.widthPx;
      void this.session
        .drawStroke(polyline, width)
        .catch(() => this.setStatus("stroke not sent; check the connection and retry"));
      this.render();
    });
    canvas.addEventListener("pointercancel", () => this.capture.cancel());
  }

  private bindControls(): void {
    const byId = (id: string) => this.root.getElementById(id);
    byId("tool-draw")?.addEventListener("click", () => (this.tool = "draw"));
    byId("tool-erase")?.addEventListener("click", () => (this.tool = "erase"));
    byId("tool-undo")?.addEventListener("click", () => void this.session.undo());
    byId("width")?.addEventListener("input", (ev) => {
      this.widthPx = Number((ev.target as HTMLInputElement).value);
    });
    byId("opacity")?.addEventListener("input", (ev) => {
      this.opacity = Number((ev.target as HTMLInputElement).value) / 100;
      this.render();
    });
    const setStage = (stage: Stage) =>
      void this.session.switchStage(stage).catch((err) => this.setStatus(String(err)));
    byId("stage-global")?.addEventListener("click", () => setStage("global"));
    byId("stage-local")?.addEventListener("click", () => setStage("local"));
    byId("face-icon")?.addEventListener("click", () => setStage("local"));
    byId("save")?.addEventListener("click", () => void this.saveSketch());
    (byId("load") as HTMLInputElement | null)?.addEventListener("change", (ev) =>
      void this.loadSketch(ev),
    );
  }

  private lastStage: Stage = "global";

  private async onViewChange(view: ClientView): Promise<void> {
    this.underlayBitmap = view.underlayPng
      ? await createImageBitmap(pngBlob(view.underlayPng))
      : null;
    if (view.stage === "global" && this.lastStage === "local") {
      // rewind: the engine restored the pre-switch strokes, rebuild the echo
      await this.reloadEcho();
    }
    this.lastStage = view.stage;
    this.renderControls(view);
    this.render();
  }

  private async reloadEcho(): Promise<void> {
    const doc = await this.session.exportSketch();
    const display = this.displaySize();
    this.localStrokes = doc.strokes.map((stroke) =>
      stroke.points.map(([x, y]) => ({
        x: (x * display.width) / this.session.engineSize.width,
        y: (y * display.height) / this.session.engineSize.height,
      })),
    );
  }

  private renderControls(view: ClientView): void {
    const stageLabel = this.root.getElementById("stage-label");
    if (stageLabel) stageLabel.textContent = view.stage;
    const status = this.root.getElementById("status");
    if (status && view.message) status.textContent = view.message;
    const strip = this.root.getElementById("thumbnails");
    if (!strip) return;
    strip.textContent = "";
    for (const candidate of view.candidates) {
      const button = this.root.createElement("button");
      button.textContent = `#${candidate.rank}`;
      button.className = candidate.selected ? "thumb selected" : "thumb";
      button.addEventListener("click", () =>
        void this.session.selectCandidate(candidate.candidate_id),
      );
      strip.appendChild(button);
    }
  }

  private setStatus(text: string): void {
    const status = this.root.getElementById("status");
    if (status) status.textContent = text;
  }

  private render(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.fillStyle = "#fff";
    ctx.fillRect(0, 0, width, height);
    if (this.underlayBitmap) {
      ctx.globalAlpha = this.opacity;
      ctx.drawImage(this.underlayBitmap, 0, 0, width, height);
      ctx.globalAlpha = 1;
    }
    ctx.strokeStyle = "#000";
    ctx.lineCap = "round";
    ctx.lineJoin = "round";
    const display = this.displaySize();
    const widthDisplay =
      (this.widthPx * display.width) / this.session.engineSize.width;
    ctx.lineWidth = Math.max(widthDisplay, 1);
    const paths = this.capture.isActive
      ? [...this.localStrokes, [...this.capture.current]]
      : this.localStrokes;
    for (const path of paths) {
      if (path.length === 0) continue;
      ctx.beginPath();
      ctx.moveTo(path[0].x, path[0].y);
      for (const p of path.slice(1)) ctx.lineTo(p.x, p.y);
      ctx.stroke();
    }
  }

  private async saveSketch(): Promise<void> {
    const doc = await this.session.exportSketch();
    const blob = new Blob([JSON.stringify(doc, null, 1)], { type: "application/json" });
    const a = this.root.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "sketch.json";
    a.click();
    URL.revokeObjectURL(a.href);
  }

  private async loadSketch(ev: Event): Promise<void> {
    const input = ev.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    const doc = JSON.parse(await file.text()) as SketchDocument;
    this.session = await ClientSession.open(this.api, doc);
    this.session.subscribe((view) => void this.onViewChange(view));
    await this.reloadEcho();
    this.render();
  }
}
