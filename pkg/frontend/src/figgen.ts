/** figgen: render benchmark CSVs into deterministic SVG/PNG figures.
 *
 *   figgen <kind> --in <csv> [--in <csv> ...] --out <img> [--style <json>]
 *
 * Kinds: error_scaling and comparison read the sweep results CSV;
 * convergence reads a per-fit trace CSV. The output format follows the
 * --out extension (.svg or .png). Rendering is a pure function of the
 * input bytes and style options; a sha256 of those bytes is embedded in
 * the output (SVG comment / PNG tEXt chunk). Exit codes: 0 ok, 2 bad
 * usage, unknown kind or schema mismatch, 4 unreadable/unwritable files.
 */

import { createHash } from "node:crypto";
import { readFileSync, writeFileSync } from "node:fs";

import { concatTables, parseCsv, SchemaError, Table } from "./csv.js";
import {
  buildComparison,
  buildConvergence,
  buildErrorScaling,
  ChartModel,
  DEFAULT_STYLE,
  StyleOptions,
} from "./model.js";
import { renderPng, renderSvg } from "./render.js";

export const KINDS = ["error_scaling", "convergence", "comparison"] as const;
export type Kind = (typeof KINDS)[number];

interface Args {
  kind: Kind;
  inputs: string[];
  out: string;
  stylePath?: string;
}

class UsageError extends Error {}

export function parseArgs(argv: string[]): Args {
  if (argv.length === 0) {
    throw new UsageError("usage: figgen <kind> --in <csv> --out <img> [--style <file>]");
  }
  const [kind, ...rest] = argv;
  if (!KINDS.includes(kind as Kind)) {
    throw new UsageError(`unknown figure kind "${kind}" (expected ${KINDS.join(", ")})`);
  }
  const inputs: string[] = [];
  let out: string | undefined;
  let stylePath: string | undefined;
  for (let i = 0; i < rest.length; i += 2) {
    const flag = rest[i];
    const value = rest[i + 1];
    if (value === undefined) {
      throw new UsageError(`flag ${flag} needs a value`);
    }
    if (flag === "--in") inputs.push(value);
    else if (flag === "--out") out = value;
    else if (flag === "--style") stylePath = value;
    else throw new UsageError(`unknown flag ${flag}`);
  }
  if (inputs.length === 0 || !out) {
    throw new UsageError("need at least one --in and an --out path");
  }
  if (!out.endsWith(".svg") && !out.endsWith(".png")) {
    throw new UsageError("--out must end in .svg or .png");
  }
  return { kind: kind as Kind, inputs, out, stylePath };
}

function loadStyle(path?: string): { style: StyleOptions; bytes: Buffer } {
  if (!path) {
    return { style: { ...DEFAULT_STYLE }, bytes: Buffer.from("{}") };
  }
  const bytes = readFileSync(path);
  const parsed = JSON.parse(bytes.toString("utf8"));
  const style: StyleOptions = {
    width: parsed.width ?? DEFAULT_STYLE.width,
    height: parsed.height ?? DEFAULT_STYLE.height,
    colors: parsed.colors ?? DEFAULT_STYLE.colors,
    title: parsed.title,
  };
  if (!Number.isInteger(style.width) || style.width < 200 || style.width > 4000) {
    throw new UsageError("style.width must be an integer in [200, 4000]");
  }
  if (!Number.isInteger(style.height) || style.height < 150 || style.height > 4000) {
    throw new UsageError("style.height must be an integer in [150, 4000]");
  }
  return { style, bytes };
}

export function buildModel(kind: Kind, table: Table, style: StyleOptions): ChartModel {
  if (kind === "error_scaling") return buildErrorScaling(table, style);
  if (kind === "convergence") return buildConvergence(table, style);
  return buildComparison(table, style);
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    process.stderr.write(`figgen: ${(err as Error).message}\n`);
    return 2;
  }
  let inputBytes: Buffer[];
  let styleBytes: Buffer;
  let style: StyleOptions;
  try {
    inputBytes = args.inputs.map((p) => readFileSync(p));
    const loaded = loadStyle(args.stylePath);
    style = loaded.style;
    styleBytes = loaded.bytes;
  } catch (err) {
    if (err instanceof UsageError || err instanceof SyntaxError) {
      process.stderr.write(`figgen: ${(err as Error).message}\n`);
      return 2;
    }
    process.stderr.write(`figgen: ${(err as Error).message}\n`);
    return 4;
  }
  try {
    const table = concatTables(inputBytes.map((b) => parseCsv(b.toString("utf8"))));
    const model = buildModel(args.kind, table, style);
    const hash = createHash("sha256");
    for (const b of inputBytes) hash.update(b);
    hash.update(styleBytes);
    const digest = hash.digest("hex");
    if (args.out.endsWith(".svg")) {
      writeFileSync(args.out, renderSvg(model, style, digest));
    } else {
      writeFileSync(args.out, renderPng(model, style, digest));
    }
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`figgen: ${err.message}\n`);
      return 2;
    }
    if ((err as NodeJS.ErrnoException).code) {
      process.stderr.write(`figgen: ${(err as Error).message}\n`);
      return 4;
    }
    throw err;
  }
}
