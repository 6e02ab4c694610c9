import { describe, expect, it } from "vitest";

import { StrokeCapture, toEnginePolyline } from "../src/capture.js";

describe("stroke capture", () => {
  it("one drag produces one polyline", () => {
    const cap = new StrokeCapture();
    cap.begin({ x: 10, y: 10 });
    cap.move({ x: 20, y: 12 });
    cap.move({ x: 30, y: 15 });
    const path = cap.end({ x: 40, y: 20 });
    expect(path.length).toBe(4);
    expect(cap.isActive).toBe(false);
    expect(cap.end()).toEqual([]); // second release is inert
  });

  it("filters sub-pixel jitter", () => {
    const cap = new StrokeCapture();
    cap.begin({ x: 5, y: 5 });
    cap.move({ x: 5.2, y: 5.1 });
    cap.move({ x: 5.4, y: 5.2 });
    cap.move({ x: 9, y: 9 });
    const path = cap.end();
    expect(path).toEqual([
      { x: 5, y: 5 },
      { x: 9, y: 9 },
    ]);
  });

  it("a click without movement still yields a single-point stroke", () => {
    const cap = new StrokeCapture();
    cap.begin({ x: 7, y: 8 });
    expect(cap.end()).toEqual([{ x: 7, y: 8 }]);
  });

  it("cancel drops the path", () => {
    const cap = new StrokeCapture();
    cap.begin({ x: 1, y: 1 });
    cap.move({ x: 9, y: 9 });
    cap.cancel();
    expect(cap.end()).toEqual([]);
  });

  it("converts paths to engine-space tuples", () => {
    const display = { width: 1024, height: 1024 };
    const engine = { width: 512, height: 512 };
    const polyline = toEnginePolyline(
      [
        { x: 100, y: 200 },
        { x: 300, y: 400 },
      ],
      display,
      engine,
    );
    expect(polyline).toEqual([
      [50, 100],
      [150, 200],
    ]);
  });
});
