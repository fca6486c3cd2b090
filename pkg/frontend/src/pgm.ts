// Minimal PGM (portable graymap) reader/writer. Supports the ASCII (P2)
// and binary (P5) variants with maxval <= 255, which is all the desk-scale
// extraction pipeline needs.

import { readFileSync, writeFileSync } from "node:fs";

export interface GrayImage {
  width: number;
  height: number;
  /** Row-major pixel values in [0, 1]. */
  pixels: Float64Array;
}

export class ImageDecodeError extends Error {}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d;
}

/** Read the next whitespace-delimited token, skipping `#` comment lines. */
function nextToken(buf: Buffer, pos: { i: number }): string {
  while (pos.i < buf.length) {
    if (buf[pos.i] === 0x23) {
      // comment: skip to end of line
      while (pos.i < buf.length && buf[pos.i] !== 0x0a) pos.i++;
    } else if (isSpace(buf[pos.i])) {
      pos.i++;
    } else {
      break;
    }
  }
  const start = pos.i;
  while (pos.i < buf.length && !isSpace(buf[pos.i])) pos.i++;
  if (start === pos.i) throw new ImageDecodeError("unexpected end of file");
  return buf.subarray(start, pos.i).toString("ascii");
}

export function decodePgm(buf: Buffer): GrayImage {
  const pos = { i: 0 };
  const magic = nextToken(buf, pos);
  if (magic !== "P2" && magic !== "P5") {
    throw new ImageDecodeError(`not a PGM file (magic ${JSON.stringify(magic)})`);
  }
  const width = parseInt(nextToken(buf, pos), 10);
  const height = parseInt(nextToken(buf, pos), 10);
  const maxval = parseInt(nextToken(buf, pos), 10);
  if (!(width > 0) || !(height > 0)) {
    throw new ImageDecodeError(`bad dimensions ${width}x${height}`);
  }
  if (!(maxval > 0) || maxval > 255) {
    throw new ImageDecodeError(`unsupported maxval ${maxval}`);
  }
  const n = width * height;
  const pixels = new Float64Array(n);
  if (magic === "P5") {
    pos.i++; // exactly one whitespace byte after maxval
    if (buf.length - pos.i < n) {
      throw new ImageDecodeError(
        `truncated pixel data: ${buf.length - pos.i} bytes for ${n} pixels`,
      );
    }
    for (let k = 0; k < n; k++) pixels[k] = buf[pos.i + k] / maxval;
  } else {
    for (let k = 0; k < n; k++) {
      const v = parseInt(nextToken(buf, pos), 10);
      if (!(v >= 0) || v > maxval) {
        throw new ImageDecodeError(`pixel value ${v} outside [0, ${maxval}]`);
      }
      pixels[k] = v / maxval;
    }
  }
  return { width, height, pixels };
}

export function readPgm(path: string): GrayImage {
  let buf: Buffer;
  try {
    buf = readFileSync(path);
  } catch (err) {
    throw new ImageDecodeError(`cannot read ${path}: ${(err as Error).message}`);
  }
  return decodePgm(buf);
}

/** Write a binary (P5) PGM with maxval 255. */
export function writePgm(path: string, image: GrayImage): void {
  const { width, height, pixels } = image;
  const header = Buffer.from(`P5\n${width} ${height}\n255\n`, "ascii");
  const body = Buffer.alloc(width * height);
  for (let k = 0; k < pixels.length; k++) {
    body[k] = Math.max(0, Math.min(255, Math.round(pixels[k] * 255)));
  }
  writeFileSync(path, Buffer.concat([header, body]));
}
