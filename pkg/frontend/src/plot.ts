#!/usr/bin/env node
/**
 * duio-plot: render simulator CSV output as SVG charts.
 *
 * Usage:
 *   duio-plot --in results.csv --out fig.svg [--linear] [--bound]
 *             [--nodes 1,2,3] [--metric err_last|err_avg]
 *
 * A results CSV (t,node,err_last,err_avg,bound) becomes a per-node error
 * trajectory chart, log-scale y by default, with an optional dashed
 * overlay of the averaged-error bound.  A comparison CSV
 * (mode,nu,node,steady_state) becomes a steady-state-vs-nu sweep chart,
 * one series per mode.  Malformed input exits nonzero.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { parseArgs } from "node:util";
import {
  CsvFormatError, boundSeries, nodeSeries, parseComparison, parseResults,
  sniffSchema,
} from "./csv.js";
import { PALETTE, renderChart, type Series } from "./chart.js";

export interface PlotSpec {
  input: string;
  output: string;
  logY: boolean;
  bound: boolean;
  nodes: number[];
  metric: "err_last" | "err_avg";
}

export function parseCli(argv: string[]): PlotSpec {
  const { values } = parseArgs({
    args: argv,
    options: {
      in: { type: "string" },
      out: { type: "string" },
      linear: { type: "boolean", default: false },
      bound: { type: "boolean", default: false },
      nodes: { type: "string", default: "" },
      metric: { type: "string", default: "err_last" },
    },
  });
  if (!values.in || !values.out) {
    throw new Error("--in and --out are required");
  }
  if (values.metric !== "err_last" && values.metric !== "err_avg") {
    throw new Error(`--metric must be err_last or err_avg, got ${values.metric}`);
  }
  const nodes = values.nodes === ""
    ? []
    : values.nodes.split(",").map((s) => {
        const v = Number(s);
        if (!Number.isInteger(v) || v < 1) {
          throw new Error(`--nodes entries must be positive integers, got "${s}"`);
        }
        return v;
      });
  return {
    input: values.in,
    output: values.out,
    logY: !values.linear,
    bound: values.bound,
    nodes,
    metric: values.metric,
  };
}

export function renderResultsChart(text: string, spec: PlotSpec): string {
  const data = parseResults(text);
  const series: Series[] = [];
  let k = 0;
  for (const [node, values] of nodeSeries(data, spec.metric, spec.nodes)) {
    series.push({
      label: `node ${node}`,
      values,
      color: PALETTE[k++ % PALETTE.length]!,
    });
  }
  if (spec.bound) {
    series.push({
      label: "bound",
      values: boundSeries(data),
      color: "#111111",
      dash: "6,4",
      width: 1.6,
    });
  }
  return renderChart({
    title: `estimation error per node (${spec.metric})`,
    xLabel: "sample t",
    yLabel: spec.metric,
    logY: spec.logY,
    series,
  });
}

export function renderComparisonChart(text: string, spec: PlotSpec): string {
  const rows = parseComparison(text);
  const modes = [...new Set(rows.map((r) => r.mode))];
  const nus = [...new Set(rows.map((r) => r.nu))].sort((a, b) => a - b);
  const series: Series[] = modes.map((mode, k) => ({
    label: mode,
    values: nus.map((nu) => {
      const vals = rows.filter((r) => r.mode === mode && r.nu === nu)
        .map((r) => r.steadyState);
      if (vals.length === 0) {
        throw new CsvFormatError(`no rows for mode=${mode}, nu=${nu}`);
      }
      return Math.max(...vals);
    }),
    color: PALETTE[k % PALETTE.length]!,
  }));
  return renderChart({
    title: "steady-state error vs communication rounds",
    xLabel: "rounds per sample (nu)",
    yLabel: "max steady-state error",
    logY: spec.logY,
    series,
    xValues: nus,
    markers: true,
  });
}

export function run(argv: string[]): number {
  let spec: PlotSpec;
  try {
    spec = parseCli(argv);
  } catch (err) {
    console.error(`argument error: ${(err as Error).message}`);
    return 2;
  }
  let text: string;
  try {
    text = readFileSync(spec.input, "utf-8");
  } catch (err) {
    console.error(`cannot read ${spec.input}: ${(err as Error).message}`);
    return 1;
  }
  try {
    const svg = sniffSchema(text) === "results"
      ? renderResultsChart(text, spec)
      : renderComparisonChart(text, spec);
    writeFileSync(spec.output, svg);
  } catch (err) {
    if (err instanceof CsvFormatError) {
      console.error(`csv error: ${err.message}`);
      return 1;
    }
    console.error(`plot error: ${(err as Error).message}`);
    return 1;
  }
  console.log(`wrote ${spec.output}`);
  return 0;
}

// invoked directly (not imported by tests)
if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(run(process.argv.slice(2)));
}
