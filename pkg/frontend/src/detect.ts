// Desk-scale face detection stand-in.
//
// A "face" is a compact bright region against the background: we threshold
// at mean + K*std, take 4-connected components, and keep components that are
// large enough and roughly box-filling with a near-square aspect ratio.
// A solid-color image has zero variance and therefore never detects a face.
// When several candidates survive, the largest bounding box wins (ties go to
// the top-left box) so repeated runs always pick the same face.

import type { GrayImage } from "./pgm.js";

export interface BoundingBox {
  x0: number;
  y0: number;
  x1: number; // exclusive
  y1: number; // exclusive
}

export interface Detection {
  found: boolean;
  box?: BoundingBox;
  reason?: string; // why nothing was detected
}

export const DETECTOR_CONFIG = {
  name: "blob-v1",
  thresholdStd: 0.5, // threshold = mean + thresholdStd * std
  minAreaFrac: 0.005, // component area as a fraction of the image
  minFill: 0.35, // component area / bounding-box area
  minAspect: 0.4, // bounding-box width / height
  maxAspect: 2.5,
} as const;

function boxArea(b: BoundingBox): number {
  return (b.x1 - b.x0) * (b.y1 - b.y0);
}

export function detectFace(image: GrayImage): Detection {
  const { width, height, pixels } = image;
  const n = width * height;
  let mean = 0;
  for (let k = 0; k < n; k++) mean += pixels[k];
  mean /= n;
  let variance = 0;
  for (let k = 0; k < n; k++) variance += (pixels[k] - mean) ** 2;
  variance /= n;
  const std = Math.sqrt(variance);
  if (std < 1e-9) {
    return { found: false, reason: "blank image (zero variance)" };
  }

  const threshold = mean + DETECTOR_CONFIG.thresholdStd * std;
  const mask = new Uint8Array(n);
  for (let k = 0; k < n; k++) if (pixels[k] > threshold) mask[k] = 1;

  // 4-connected components over the mask via BFS
  const label = new Int32Array(n).fill(-1);
  const candidates: { box: BoundingBox; area: number }[] = [];
  const queue = new Int32Array(n);
  let nextLabel = 0;
  for (let start = 0; start < n; start++) {
    if (!mask[start] || label[start] >= 0) continue;
    let head = 0;
    let tail = 0;
    queue[tail++] = start;
    label[start] = nextLabel;
    let area = 0;
    const box: BoundingBox = {
      x0: width,
      y0: height,
      x1: 0,
      y1: 0,
    };
    while (head < tail) {
      const k = queue[head++];
      const x = k % width;
      const y = (k - x) / width;
      area++;
      if (x < box.x0) box.x0 = x;
      if (y < box.y0) box.y0 = y;
      if (x + 1 > box.x1) box.x1 = x + 1;
      if (y + 1 > box.y1) box.y1 = y + 1;
      const neighbors = [k - 1, k + 1, k - width, k + width];
      for (const nb of neighbors) {
        if (nb < 0 || nb >= n) continue;
        if ((nb === k - 1 && x === 0) || (nb === k + 1 && x === width - 1)) {
          continue;
        }
        if (mask[nb] && label[nb] < 0) {
          label[nb] = nextLabel;
          queue[tail++] = nb;
        }
      }
    }
    nextLabel++;
    if (area < DETECTOR_CONFIG.minAreaFrac * n) continue;
    const w = box.x1 - box.x0;
    const h = box.y1 - box.y0;
    const aspect = w / h;
    const fill = area / (w * h);
    if (aspect < DETECTOR_CONFIG.minAspect || aspect > DETECTOR_CONFIG.maxAspect) {
      continue;
    }
    if (fill < DETECTOR_CONFIG.minFill) continue;
    candidates.push({ box, area });
  }

  if (candidates.length === 0) {
    return { found: false, reason: "no face-like region" };
  }
  candidates.sort((a, b) => {
    const d = boxArea(b.box) - boxArea(a.box);
    if (d !== 0) return d;
    if (a.box.y0 !== b.box.y0) return a.box.y0 - b.box.y0;
    return a.box.x0 - b.box.x0;
  });
  return { found: true, box: candidates[0].box };
}
