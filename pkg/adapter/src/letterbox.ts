/**
 * Letterbox geometry, matching the engine's convention exactly:
 * scale = min(target/w, target/h), leftover split evenly into left/top
 * padding, coordinates continuous.
 */

export interface LetterboxTransform {
  scale: number;
  padX: number;
  padY: number;
  target: number;
}

export type Box = [number, number, number, number];

export function letterbox(width: number, height: number, target: number): LetterboxTransform {
  if (width <= 0 || height <= 0 || target <= 0) {
    throw new Error(`dimensions must be positive: ${width}x${height} -> ${target}`);
  }
  const scale = Math.min(target / width, target / height);
  const padX = Math.max((target - width * scale) / 2, 0);
  const padY = Math.max((target - height * scale) / 2, 0);
  return { scale, padX, padY, target };
}

export function boxToInputSpace(box: Box, t: LetterboxTransform): Box {
  return [
    box[0] * t.scale + t.padX,
    box[1] * t.scale + t.padY,
    box[2] * t.scale + t.padX,
    box[3] * t.scale + t.padY,
  ];
}

export function boxFromInputSpace(box: Box, t: LetterboxTransform): Box {
  if (t.scale <= 0) {
    throw new Error(`cannot invert transform with scale ${t.scale}`);
  }
  return [
    (box[0] - t.padX) / t.scale,
    (box[1] - t.padY) / t.scale,
    (box[2] - t.padX) / t.scale,
    (box[3] - t.padY) / t.scale,
  ];
}

/** Clamp to the image and repair corner order (degenerate boxes are legal). */
export function clampBox(box: Box, width: number, height: number): Box {
  let [x1, y1, x2, y2] = box;
  if (x2 < x1) [x1, x2] = [x2, x1];
  if (y2 < y1) [y1, y2] = [y2, y1];
  const clip = (v: number, hi: number) => Math.min(Math.max(v, 0), hi);
  return [clip(x1, width), clip(y1, height), clip(x2, width), clip(y2, height)];
}
