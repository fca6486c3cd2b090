// Fixed-width descriptors.
//
// Face encodings: the detected box is resampled to a 16x8 grid of block
// means (128 values, matching the conventional face-descriptor width) and
// normalized to zero mean / unit norm, so the descriptor depends on the
// pattern inside the box rather than on exposure or box size.
//
// Backbone features: named desk-scale "backbones" pool the whole image to a
// fixed grid; same image in, same row out.

import type { BoundingBox } from "./detect.js";
import type { GrayImage } from "./pgm.js";

export const FACE_ENCODING_WIDTH = 128;
const FACE_GRID_W = 8;
const FACE_GRID_H = 16;

/** Mean of the image pixels covered by one cell of a gw x gh grid over box. */
function blockMeans(
  image: GrayImage,
  box: BoundingBox,
  gw: number,
  gh: number,
): Float64Array {
  const out = new Float64Array(gw * gh);
  const bw = box.x1 - box.x0;
  const bh = box.y1 - box.y0;
  for (let gy = 0; gy < gh; gy++) {
    const y0 = box.y0 + Math.floor((gy * bh) / gh);
    const y1 = Math.max(y0 + 1, box.y0 + Math.floor(((gy + 1) * bh) / gh));
    for (let gx = 0; gx < gw; gx++) {
      const x0 = box.x0 + Math.floor((gx * bw) / gw);
      const x1 = Math.max(x0 + 1, box.x0 + Math.floor(((gx + 1) * bw) / gw));
      let sum = 0;
      let count = 0;
      for (let y = y0; y < y1; y++) {
        for (let x = x0; x < x1; x++) {
          sum += image.pixels[y * image.width + x];
          count++;
        }
      }
      out[gy * gw + gx] = sum / count;
    }
  }
  return out;
}

export function faceEncoding(image: GrayImage, box: BoundingBox): Float64Array {
  const v = blockMeans(image, box, FACE_GRID_W, FACE_GRID_H);
  let mean = 0;
  for (const x of v) mean += x;
  mean /= v.length;
  let norm = 0;
  for (let k = 0; k < v.length; k++) {
    v[k] -= mean;
    norm += v[k] * v[k];
  }
  norm = Math.sqrt(norm);
  if (norm > 1e-12) for (let k = 0; k < v.length; k++) v[k] /= norm;
  return v;
}

export class BackboneUnavailableError extends Error {}

const BACKBONES: Record<string, { gw: number; gh: number }> = {
  "tiny-16": { gw: 4, gh: 4 },
  "tiny-64": { gw: 8, gh: 8 },
};

export function backboneNames(): string[] {
  return Object.keys(BACKBONES);
}

export function backboneWidth(name: string): number {
  const spec = BACKBONES[name];
  if (!spec) {
    throw new BackboneUnavailableError(
      `backbone "${name}" unavailable; available: ${backboneNames().join(", ")}`,
    );
  }
  return spec.gw * spec.gh;
}

export function backboneFeatures(name: string, image: GrayImage): Float64Array {
  const spec = BACKBONES[name];
  if (!spec) {
    throw new BackboneUnavailableError(
      `backbone "${name}" unavailable; available: ${backboneNames().join(", ")}`,
    );
  }
  const box: BoundingBox = { x0: 0, y0: 0, x1: image.width, y1: image.height };
  return blockMeans(image, box, spec.gw, spec.gh);
}
