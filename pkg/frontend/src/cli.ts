#!/usr/bin/env node
// cdel-frontend CLI:
//   faces    --manifest m.csv --out faces.csv --report faceless.csv [--images-root DIR]
//   backbone --manifest m.csv --out image.csv --name tiny-16 [--images-root DIR]

import { dirname } from "node:path";
import process from "node:process";

import { extractBackboneFeatures, extractFaceEncodings } from "./extract.js";

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--") || argv[i + 1] === undefined) {
      throw new Error(`bad argument ${argv[i]}`);
    }
    flags.set(argv[i].slice(2), argv[i + 1]);
  }
  return flags;
}

function required(flags: Map<string, string>, name: string): string {
  const v = flags.get(name);
  if (v === undefined) throw new Error(`--${name} is required`);
  return v;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    const flags = parseFlags(rest);
    const manifest = required(flags, "manifest");
    const imagesRoot = flags.get("images-root") ?? dirname(manifest);
    if (command === "faces") {
      const result = extractFaceEncodings(
        manifest,
        imagesRoot,
        required(flags, "out"),
        required(flags, "report"),
      );
      console.log(
        `encoded ${result.encoded.length} faces, ` +
          `${result.faceless.length} faceless`,
      );
      return 0;
    }
    if (command === "backbone") {
      const result = extractBackboneFeatures(
        manifest,
        imagesRoot,
        required(flags, "name"),
        required(flags, "out"),
      );
      console.log(`wrote ${result.ids.length} rows of width ${result.width}`);
      return 0;
    }
    throw new Error(`unknown command ${command ?? "(none)"}; use faces|backbone`);
  } catch (err) {
    console.error(`cdel-frontend: ${(err as Error).message}`);
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
