// Pure pixel math for the canvas view: guidance underlay at user-set
// opacity beneath fully opaque user ink. Kept DOM-free so it is testable.

export interface GrayImage {
  width: number;
  height: number;
  pixels: Uint8ClampedArray; // one byte per pixel, 255 = white
}

export function blankImage(width: number, height: number): GrayImage {
  const pixels = new Uint8ClampedArray(width * height);
  pixels.fill(255);
  return { width, height, pixels };
}

/**
 * Blend a dark-on-white guidance raster over white paper.
 * opacity 0 hides the guidance entirely; opacity 1 shows it as-is.
 */
export function compositeUnderlay(underlay: GrayImage | null, opacity: number): GrayImage {
  if (!underlay) return blankImage(1, 1);
  const alpha = Math.min(Math.max(opacity, 0), 1);
  const out = new Uint8ClampedArray(underlay.pixels.length);
  for (let i = 0; i < out.length; i++) {
    out[i] = 255 - alpha * (255 - underlay.pixels[i]);
  }
  return { width: underlay.width, height: underlay.height, pixels: out };
}

/**
 * Full scene: underlay first, then stroke ink. Ink is opaque black at any
 * opacity; the underlay can never show through it.
 */
export function compositeScene(
  underlay: GrayImage | null,
  opacity: number,
  inkMask: Uint8Array,
  width: number,
  height: number,
): GrayImage {
  const base =
    underlay && underlay.width === width && underlay.height === height
      ? compositeUnderlay(underlay, opacity)
      : blankImage(width, height);
  const pixels =
    base.pixels.length === width * height
      ? base.pixels
      : blankImage(width, height).pixels;
  const out = new Uint8ClampedArray(pixels);
  for (let i = 0; i < out.length; i++) {
    if (inkMask[i]) out[i] = 0;
  }
  return { width, height, pixels: out };
}
