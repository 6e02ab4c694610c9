// Pointer-path capture: local echo while dragging, one polyline on
// pointer-up. The server round-trip happens only on release.

import { Point, Size, displayToEngine } from "./coords.js";

const MIN_STEP_PX = 1.0; // drop micro-jitter below one display pixel

export class StrokeCapture {
  private path: Point[] = [];
  private active = false;

  begin(p: Point): void {
    this.active = true;
    this.path = [p];
  }

  move(p: Point): void {
    if (!this.active) return;
    const last = this.path[this.path.length - 1];
    if (Math.hypot(p.x - last.x, p.y - last.y) >= MIN_STEP_PX) {
      this.path.push(p);
    }
  }

  /** Ends the drag and returns the display-space polyline (>= 1 point). */
  end(p?: Point): Point[] {
    if (!this.active) return [];
    if (p !== undefined) this.move(p);
    this.active = false;
    const done = this.path;
    this.path = [];
    return done;
  }

  cancel(): void {
    this.active = false;
    this.path = [];
  }

  get isActive(): boolean {
    return this.active;
  }

  get current(): readonly Point[] {
    return this.path;
  }
}

export function toEnginePolyline(
  path: readonly Point[],
  display: Size,
  engine: Size,
): [number, number][] {
  return path.map((p) => {
    const q = displayToEngine(p, display, engine);
    return [q.x, q.y] as [number, number];
  });
}
