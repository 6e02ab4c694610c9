// Display <-> engine coordinate mapping. The engine works in a fixed
// canvas space (512x512 for the stock corpus); the on-screen canvas can be
// any size, so every pointer position is scaled before it is posted.

export interface Point {
  x: number;
  y: number;
}

export interface Size {
  width: number;
  height: number;
}

const EDGE_EPS = 1e-3;

export function displayToEngine(p: Point, display: Size, engine: Size): Point {
  const x = (p.x * engine.width) / display.width;
  const y = (p.y * engine.height) / display.height;
  // engine space is half-open: 0 <= x < width
  return {
    x: Math.min(Math.max(x, 0), engine.width - EDGE_EPS),
    y: Math.min(Math.max(y, 0), engine.height - EDGE_EPS),
  };
}

export function engineToDisplay(p: Point, display: Size, engine: Size): Point {
  return {
    x: (p.x * display.width) / engine.width,
    y: (p.y * display.height) / engine.height,
  };
}

export function engineWidthForDisplay(widthPx: number, display: Size, engine: Size): number {
  // strokes keep their feel across zoom levels: widths live in engine space
  return (widthPx * engine.width) / display.width;
}
