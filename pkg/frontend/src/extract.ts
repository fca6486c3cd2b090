// Batch extraction over a primary manifest.
//
// extractFaceEncodings: every manifest id ends up in exactly one of the two
// outputs — a row in the face-encoding CSV, or an `id,reason` entry in the
// faceless report (no detection, no image path, or unreadable file). The
// encoding CSV is exactly what the primary's embedding loader expects.
//
// extractBackboneFeatures: one feature row per readable image.

import { writeFileSync, renameSync } from "node:fs";
import { dirname, isAbsolute, join } from "node:path";

import { ManifestEntry, embeddingRow, readManifest } from "./csv.js";
import { DETECTOR_CONFIG, detectFace } from "./detect.js";
import { backboneFeatures, backboneWidth, faceEncoding } from "./encode.js";
import { ImageDecodeError, readPgm } from "./pgm.js";

export class ExtractionError extends Error {}

export interface FaceExtractionResult {
  encoded: string[]; // ids written to the encoding file
  faceless: { id: string; reason: string }[]; // everything else, in order
}

function resolveImage(entry: ManifestEntry, imagesRoot: string): string | null {
  if (entry.imagePath === null) return null;
  return isAbsolute(entry.imagePath)
    ? entry.imagePath
    : join(imagesRoot, entry.imagePath);
}

function writeAtomic(path: string, content: string): void {
  const tmp = join(dirname(path), `.${Date.now()}.tmp`);
  writeFileSync(tmp, content);
  renameSync(tmp, path);
}

export function extractFaceEncodings(
  manifestPath: string,
  imagesRoot: string,
  encodingsOut: string,
  reportOut: string,
): FaceExtractionResult {
  const entries = readManifest(manifestPath);
  const rows: string[] = [];
  const encoded: string[] = [];
  const faceless: { id: string; reason: string }[] = [];
  let processed = 0;
  for (const entry of entries) {
    const imagePath = resolveImage(entry, imagesRoot);
    if (imagePath === null) {
      faceless.push({ id: entry.id, reason: "no image path" });
      continue;
    }
    try {
      const image = readPgm(imagePath);
      processed++;
      const detection = detectFace(image);
      if (!detection.found) {
        faceless.push({ id: entry.id, reason: detection.reason! });
        continue;
      }
      rows.push(embeddingRow(entry.id, faceEncoding(image, detection.box!)));
      encoded.push(entry.id);
    } catch (err) {
      if (err instanceof ImageDecodeError) {
        faceless.push({ id: entry.id, reason: `unreadable: ${err.message}` });
        continue;
      }
      throw err;
    }
  }
  if (processed === 0) {
    throw new ExtractionError(
      `${manifestPath}: no image could be processed (${entries.length} entries)`,
    );
  }
  writeAtomic(encodingsOut, rows.map((r) => r + "\n").join(""));
  const reportHeader =
    `# detector=${DETECTOR_CONFIG.name}` +
    ` threshold_std=${DETECTOR_CONFIG.thresholdStd}` +
    ` min_area_frac=${DETECTOR_CONFIG.minAreaFrac}` +
    ` min_fill=${DETECTOR_CONFIG.minFill}` +
    ` aspect=[${DETECTOR_CONFIG.minAspect},${DETECTOR_CONFIG.maxAspect}]\n`;
  const reportRows = faceless.map((f) => `${f.id},${f.reason}\n`).join("");
  writeAtomic(reportOut, reportHeader + "id,reason\n" + reportRows);
  return { encoded, faceless };
}

export function extractBackboneFeatures(
  manifestPath: string,
  imagesRoot: string,
  backbone: string,
  featuresOut: string,
): { ids: string[]; width: number } {
  const width = backboneWidth(backbone); // fails fast on unknown backbones
  const entries = readManifest(manifestPath);
  const rows: string[] = [];
  const ids: string[] = [];
  const failures: string[] = [];
  for (const entry of entries) {
    const imagePath = resolveImage(entry, imagesRoot);
    if (imagePath === null) continue;
    try {
      const image = readPgm(imagePath);
      rows.push(embeddingRow(entry.id, backboneFeatures(backbone, image)));
      ids.push(entry.id);
    } catch (err) {
      if (err instanceof ImageDecodeError) {
        failures.push(`${entry.id}: ${err.message}`);
        continue;
      }
      throw err;
    }
  }
  if (ids.length === 0) {
    throw new ExtractionError(
      `${manifestPath}: no image could be processed` +
        (failures.length ? ` (${failures.join("; ")})` : ""),
    );
  }
  writeAtomic(featuresOut, rows.map((r) => r + "\n").join(""));
  return { ids, width };
}
