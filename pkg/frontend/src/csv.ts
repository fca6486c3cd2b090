// CSV interop with the primary pipeline: read its manifest, write files in
// its embedding format. Lines starting with "#" are comments in both
// directions (the primary's loaders skip them too).

import { readFileSync } from "node:fs";

export class ManifestError extends Error {}

export interface ManifestEntry {
  id: string;
  text: string;
  imagePath: string | null;
  label: string | null;
}

/** RFC-4180-ish parse of a single CSV line (double-quote escaping). */
export function parseCsvLine(line: string): string[] {
  const fields: string[] = [];
  let field = "";
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i];
    if (quoted) {
      if (ch === '"') {
        if (line[i + 1] === '"') {
          field += '"';
          i++;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch === '"') {
      quoted = true;
    } else if (ch === ",") {
      fields.push(field);
      field = "";
    } else {
      field += ch;
    }
  }
  fields.push(field);
  return fields;
}

export function readManifest(path: string): ManifestEntry[] {
  const lines = readFileSync(path, "utf-8")
    .split(/\r?\n/)
    .filter((ln) => ln.length > 0 && !ln.startsWith("#"));
  if (lines.length === 0) {
    throw new ManifestError(`${path}: empty manifest`);
  }
  const header = parseCsvLine(lines[0]);
  const expected = ["id", "text", "image_path", "label"];
  if (header.join(",") !== expected.join(",")) {
    throw new ManifestError(
      `${path}: header [${header.join(",")}], expected [${expected.join(",")}]`,
    );
  }
  const seen = new Set<string>();
  const entries: ManifestEntry[] = [];
  for (let r = 1; r < lines.length; r++) {
    const cells = parseCsvLine(lines[r]);
    if (cells.length !== 4) {
      throw new ManifestError(`${path}: row ${r + 1} has ${cells.length} fields`);
    }
    const [id, text, imagePath, label] = cells;
    if (id === "") throw new ManifestError(`${path}: row ${r + 1} has empty id`);
    if (seen.has(id)) {
      throw new ManifestError(`${path}: duplicate id '${id}'`);
    }
    seen.add(id);
    entries.push({
      id,
      text,
      imagePath: imagePath === "" ? null : imagePath,
      label: label === "" ? null : label,
    });
  }
  return entries;
}

/** Format a value with 9 significant digits, the primary's embedding style. */
export function formatValue(v: number): string {
  if (!Number.isFinite(v)) throw new RangeError(`non-finite value ${v}`);
  if (v === 0) return "0";
  let s = v.toPrecision(9);
  if (s.includes("e")) {
    let [mantissa, exp] = s.split("e");
    if (mantissa.includes(".")) {
      mantissa = mantissa.replace(/0+$/, "").replace(/\.$/, "");
    }
    const e = parseInt(exp, 10);
    const sign = e < 0 ? "-" : "+";
    return `${mantissa}e${sign}${String(Math.abs(e)).padStart(2, "0")}`;
  }
  if (s.includes(".")) s = s.replace(/0+$/, "").replace(/\.$/, "");
  return s;
}

export function embeddingRow(id: string, values: Float64Array): string {
  const cells = [id];
  for (const v of values) cells.push(formatValue(v));
  return cells.join(",");
}
