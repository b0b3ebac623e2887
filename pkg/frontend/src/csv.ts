/**
 * Parsers for the two CSV schemas the simulator emits:
 *
 *   results:    t,node,err_last,err_avg,bound   (node 0 = true-state norm)
 *   comparison: mode,nu,node,steady_state
 *
 * Both parsers are strict: a wrong header, a ragged row or a non-numeric
 * field throws CsvFormatError, which the CLI maps to a nonzero exit.
 */

export class CsvFormatError extends Error {}

export interface ResultRow {
  t: number;
  node: number;
  errLast: number;
  errAvg: number;
  bound: number | null;
}

export interface ResultData {
  rows: ResultRow[];
  nodes: number[]; // observer nodes only (node >= 1), ascending
  steps: number;
  hasBound: boolean;
}

export interface CompareRow {
  mode: string;
  nu: number;
  node: number;
  steadyState: number;
}

export const RESULTS_HEADER = "t,node,err_last,err_avg,bound";
export const COMPARE_HEADER = "mode,nu,node,steady_state";

function splitLines(text: string): string[] {
  return text.split(/\r?\n/).filter((line) => line.trim() !== "");
}

function toNumber(field: string, where: string): number {
  const v = Number(field);
  if (field.trim() === "" || !Number.isFinite(v)) {
    throw new CsvFormatError(`${where}: expected a finite number, got "${field}"`);
  }
  return v;
}

export function sniffSchema(text: string): "results" | "comparison" {
  const first = splitLines(text)[0];
  if (first === RESULTS_HEADER) return "results";
  if (first === COMPARE_HEADER) return "comparison";
  throw new CsvFormatError(
    `unrecognized header "${first ?? ""}"; expected "${RESULTS_HEADER}" or "${COMPARE_HEADER}"`,
  );
}

export function parseResults(text: string): ResultData {
  const lines = splitLines(text);
  if (lines[0] !== RESULTS_HEADER) {
    throw new CsvFormatError(`bad header: expected "${RESULTS_HEADER}"`);
  }
  if (lines.length === 1) {
    throw new CsvFormatError("empty CSV body");
  }
  const rows: ResultRow[] = [];
  const nodeSet = new Set<number>();
  let steps = 0;
  let hasBound = false;
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i]!.split(",");
    if (parts.length !== 5) {
      throw new CsvFormatError(`line ${i + 1}: expected 5 fields, got ${parts.length}`);
    }
    const t = toNumber(parts[0]!, `line ${i + 1} (t)`);
    const node = toNumber(parts[1]!, `line ${i + 1} (node)`);
    if (!Number.isInteger(t) || t < 1 || !Number.isInteger(node) || node < 0) {
      throw new CsvFormatError(`line ${i + 1}: bad t/node indices`);
    }
    const bound = parts[4]!.trim() === "" ? null : toNumber(parts[4]!, `line ${i + 1} (bound)`);
    if (bound !== null) hasBound = true;
    rows.push({
      t,
      node,
      errLast: toNumber(parts[2]!, `line ${i + 1} (err_last)`),
      errAvg: toNumber(parts[3]!, `line ${i + 1} (err_avg)`),
      bound,
    });
    if (node >= 1) nodeSet.add(node);
    if (t > steps) steps = t;
  }
  if (nodeSet.size === 0) {
    throw new CsvFormatError("no observer-node rows (node >= 1) present");
  }
  return { rows, nodes: [...nodeSet].sort((a, b) => a - b), steps, hasBound };
}

export function parseComparison(text: string): CompareRow[] {
  const lines = splitLines(text);
  if (lines[0] !== COMPARE_HEADER) {
    throw new CsvFormatError(`bad header: expected "${COMPARE_HEADER}"`);
  }
  if (lines.length === 1) {
    throw new CsvFormatError("empty CSV body");
  }
  const rows: CompareRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i]!.split(",");
    if (parts.length !== 4) {
      throw new CsvFormatError(`line ${i + 1}: expected 4 fields, got ${parts.length}`);
    }
    rows.push({
      mode: parts[0]!,
      nu: toNumber(parts[1]!, `line ${i + 1} (nu)`),
      node: toNumber(parts[2]!, `line ${i + 1} (node)`),
      steadyState: toNumber(parts[3]!, `line ${i + 1} (steady_state)`),
    });
  }
  return rows;
}

/** Per-node series of a chosen metric, in time order. */
export function nodeSeries(
  data: ResultData,
  metric: "err_last" | "err_avg",
  nodes?: number[],
): Map<number, number[]> {
  const wanted = nodes && nodes.length > 0 ? nodes : data.nodes;
  for (const nd of wanted) {
    if (!data.nodes.includes(nd)) {
      throw new CsvFormatError(`node ${nd} not present in the CSV`);
    }
  }
  const out = new Map<number, number[]>(wanted.map((n) => [n, []]));
  for (const row of data.rows) {
    const series = out.get(row.node);
    if (series) series.push(metric === "err_last" ? row.errLast : row.errAvg);
  }
  return out;
}

/** The bound trace, one value per sample (node 0 rows carry it too). */
export function boundSeries(data: ResultData): number[] {
  const byT = new Map<number, number>();
  for (const row of data.rows) {
    if (row.bound !== null && !byT.has(row.t)) byT.set(row.t, row.bound);
  }
  if (byT.size === 0) {
    throw new CsvFormatError("bound overlay requested but the bound column is empty");
  }
  return [...byT.entries()].sort((a, b) => a[0] - b[0]).map(([, v]) => v);
}
