/**
 * Reading and aggregating experiment trace CSVs.
 *
 * A trace file holds one (policy, seed) run with a fixed header; this module
 * validates the schema strictly and reports the offending file and row on
 * any mismatch, so a truncated or hand-edited file never renders silently.
 */

import { readFileSync, readdirSync } from "node:fs";
import { basename, join } from "node:path";
import Papa from "papaparse";

export const TRACE_HEADER = [
  "t",
  "policy",
  "r_inst",
  "cum_regret",
  "omega",
  "dz_norm",
  "arrivals",
  "d_pending",
] as const;

export interface Trace {
  path: string;
  policy: string;
  seed: number;
  t: number[];
  cumRegret: number[];
}

export interface Series {
  policy: string;
  t: number[];
  mean: number[];
  std: number[];
  nRuns: number;
}

function parseNumber(raw: string, path: string, row: number, col: string): number {
  const v = Number(raw);
  if (raw.trim() === "" || Number.isNaN(v)) {
    throw new Error(`${path}: malformed row ${row}: column '${col}' is not a number (${JSON.stringify(raw)})`);
  }
  return v;
}

/** Parses the `<policy>_seed<k>.csv` naming convention. */
export function parseTraceName(path: string): { policy: string; seed: number } {
  const m = basename(path).match(/^(.+)_seed(\d+)\.csv$/);
  if (!m) throw new Error(`${path}: not a trace file (expected <policy>_seed<k>.csv)`);
  return { policy: m[1], seed: Number(m[2]) };
}

export function readTrace(path: string): Trace {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new Error(`${path}: malformed row ${(e.row ?? 0) + 1}: ${e.message}`);
  }
  const rows = parsed.data;
  if (rows.length === 0) throw new Error(`${path}: empty trace file`);
  const header = rows[0];
  if (header.join(",") !== TRACE_HEADER.join(",")) {
    throw new Error(`${path}: unexpected trace header [${header.join(",")}]`);
  }
  const { policy, seed } = parseTraceName(path);
  const t: number[] = [];
  const cumRegret: number[] = [];
  for (let i = 1; i < rows.length; i++) {
    const row = rows[i];
    const rowNo = i + 1; // 1-based, counting the header
    if (row.length !== TRACE_HEADER.length) {
      throw new Error(`${path}: malformed row ${rowNo}: expected ${TRACE_HEADER.length} fields, got ${row.length}`);
    }
    if (row[1] !== policy) {
      throw new Error(`${path}: malformed row ${rowNo}: policy '${row[1]}' does not match filename`);
    }
    t.push(parseNumber(row[0], path, rowNo, "t"));
    cumRegret.push(parseNumber(row[3], path, rowNo, "cum_regret"));
  }
  return { path, policy, seed, t, cumRegret };
}

/** Lists trace files in an experiment directory, sorted for determinism. */
export function listTraces(dir: string, policies?: string[]): string[] {
  const files = readdirSync(dir)
    .filter((f) => /^.+_seed\d+\.csv$/.test(f))
    .filter((f) => policies === undefined || policies.includes(parseTraceName(f).policy))
    .sort();
  return files.map((f) => join(dir, f));
}

/** Mean and population std of cumulative regret across seeds, per policy. */
export function aggregate(traces: Trace[]): Series[] {
  const byPolicy = new Map<string, Trace[]>();
  for (const tr of traces) {
    const lst = byPolicy.get(tr.policy) ?? [];
    lst.push(tr);
    byPolicy.set(tr.policy, lst);
  }
  const out: Series[] = [];
  for (const policy of [...byPolicy.keys()].sort()) {
    const group = byPolicy.get(policy)!;
    const n = group[0].t.length;
    for (const tr of group) {
      if (tr.t.length !== n) {
        throw new Error(`${tr.path}: trace length ${tr.t.length} differs from ${group[0].path} (${n})`);
      }
    }
    const mean: number[] = new Array(n);
    const std: number[] = new Array(n);
    for (let i = 0; i < n; i++) {
      const vals = group.map((tr) => tr.cumRegret[i]);
      const m = vals.reduce((a, b) => a + b, 0) / vals.length;
      const varr = vals.reduce((a, b) => a + (b - m) * (b - m), 0) / vals.length;
      mean[i] = m;
      std[i] = Math.sqrt(varr);
    }
    out.push({ policy, t: group[0].t, mean, std, nRuns: group.length });
  }
  return out;
}
