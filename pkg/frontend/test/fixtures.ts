// Synthetic PGM fixtures: elliptical "face" blobs on a dark background,
// plus the two canonical faceless cases (solid color, linear gradient).

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import type { GrayImage } from "../src/pgm.js";
import { writePgm } from "../src/pgm.js";

export function blankImage(size = 64, level = 0.5): GrayImage {
  return {
    width: size,
    height: size,
    pixels: new Float64Array(size * size).fill(level),
  };
}

export function gradientImage(size = 64): GrayImage {
  const pixels = new Float64Array(size * size);
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      pixels[y * size + x] = y / (size - 1);
    }
  }
  return { width: size, height: size, pixels };
}

export interface Ellipse {
  cx: number;
  cy: number;
  rx: number;
  ry: number;
  brightness?: number;
}

export function faceImage(
  size: number,
  ellipses: Ellipse[],
  background = 0.1,
): GrayImage {
  const pixels = new Float64Array(size * size).fill(background);
  for (const e of ellipses) {
    const bright = e.brightness ?? 0.9;
    for (let y = 0; y < size; y++) {
      for (let x = 0; x < size; x++) {
        const dx = (x - e.cx) / e.rx;
        const dy = (y - e.cy) / e.ry;
        const r2 = dx * dx + dy * dy;
        if (r2 <= 1) {
          // darker "eyes" band gives the descriptor internal structure
          const inEyes = r2 < 0.15 && y < e.cy;
          pixels[y * size + x] = inEyes ? bright - 0.25 : bright;
        }
      }
    }
  }
  return { width: size, height: size, pixels };
}

export interface FixtureFile {
  id: string;
  file: string | null; // null = manifest row without an image path
  faceless: boolean;
}

/** The standard 10-image fixture: 8 faces, 1 blank, 1 gradient. */
export function writeTenImageFixture(dir: string): FixtureFile[] {
  mkdirSync(dir, { recursive: true });
  const files: FixtureFile[] = [];
  for (let i = 0; i < 8; i++) {
    const id = `m${i}`;
    const file = `${id}.pgm`;
    writePgm(
      join(dir, file),
      faceImage(64, [
        { cx: 24 + 2 * i, cy: 28 + i, rx: 10 + (i % 3), ry: 13 + (i % 4) },
      ]),
    );
    files.push({ id, file, faceless: false });
  }
  writePgm(join(dir, "m8.pgm"), blankImage());
  files.push({ id: "m8", file: "m8.pgm", faceless: true });
  writePgm(join(dir, "m9.pgm"), gradientImage());
  files.push({ id: "m9", file: "m9.pgm", faceless: true });
  return files;
}

export function writeManifest(dir: string, files: FixtureFile[]): string {
  const lines = ["id,text,image_path,label"];
  for (const f of files) {
    lines.push(`${f.id},some meme text,${f.file ?? ""},positive`);
  }
  const path = join(dir, "manifest.csv");
  writeFileSync(path, lines.join("\n") + "\n");
  return path;
}
