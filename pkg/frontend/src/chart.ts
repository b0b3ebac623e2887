/**
 * Hand-rolled SVG line charts: log or linear y axis, one polyline per
 * series, dashed overlays, grid lines and a legend.  Output depends only
 * on the input series, so identical data yields identical files.
 */

export interface Series {
  label: string;
  values: number[];
  color: string;
  dash?: string;
  width?: number;
}

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  logY: boolean;
  series: Series[];
  /** x coordinate of sample k; defaults to k + 1 */
  xValues?: number[];
  markers?: boolean;
}

const W = 860;
const H = 480;
const MARGIN = { top: 42, right: 24, bottom: 48, left: 72 };
const PW = W - MARGIN.left - MARGIN.right;
const PH = H - MARGIN.top - MARGIN.bottom;

export const PALETTE = [
  "#4361ee", "#e63946", "#2d6a4f", "#f3722c",
  "#7209b7", "#118ab2", "#6a4c28", "#595959",
];

// log plots clamp non-positive values to this floor
const LOG_FLOOR = 1e-16;

function fmtTick(v: number): string {
  if (v === 0) return "0";
  const e = Math.floor(Math.log10(Math.abs(v)));
  if (e >= -3 && e <= 3) {
    return Number(v.toPrecision(3)).toString();
  }
  return v.toExponential(0).replace("+", "");
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderChart(opts: ChartOptions): string {
  if (opts.series.length === 0 || opts.series.every((s) => s.values.length === 0)) {
    throw new Error("nothing to plot");
  }
  const allY = opts.series.flatMap((s) => s.values);
  const allX = opts.xValues ?? opts.series
    .flatMap((s) => s.values.map((_, k) => k + 1));

  let yMin: number;
  let yMax: number;
  if (opts.logY) {
    const pos = allY.filter((v) => v > 0);
    yMin = pos.length ? Math.min(...pos) : LOG_FLOOR;
    yMax = pos.length ? Math.max(...pos) : 1;
    yMin = Math.pow(10, Math.floor(Math.log10(Math.max(yMin, LOG_FLOOR))));
    yMax = Math.pow(10, Math.ceil(Math.log10(Math.max(yMax, yMin * 10))));
  } else {
    yMin = Math.min(0, ...allY);
    yMax = Math.max(...allY);
    if (yMax === yMin) yMax = yMin + 1;
  }
  const xMin = Math.min(...allX);
  const xMax = Math.max(...allX);

  const xPix = (x: number): number =>
    MARGIN.left + (xMax === xMin ? 0.5 : (x - xMin) / (xMax - xMin)) * PW;
  const yPix = (v: number): number => {
    let f: number;
    if (opts.logY) {
      const vv = Math.max(v, LOG_FLOOR);
      f = (Math.log10(vv) - Math.log10(yMin)) / (Math.log10(yMax) - Math.log10(yMin));
    } else {
      f = (v - yMin) / (yMax - yMin);
    }
    return MARGIN.top + PH - Math.min(Math.max(f, 0), 1) * PH;
  };

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" ` +
    `viewBox="0 0 ${W} ${H}" font-family="Helvetica,Arial,sans-serif">`,
    `<rect width="${W}" height="${H}" fill="white"/>`,
    `<text x="${W / 2}" y="24" text-anchor="middle" font-size="16">${esc(opts.title)}</text>`,
  );

  // y grid + ticks
  const yTicks: number[] = [];
  if (opts.logY) {
    for (let e = Math.log10(yMin); e <= Math.log10(yMax) + 1e-9; e++) {
      yTicks.push(Math.pow(10, Math.round(e)));
    }
  } else {
    const n = 6;
    for (let k = 0; k <= n; k++) yTicks.push(yMin + ((yMax - yMin) * k) / n);
  }
  for (const v of yTicks) {
    const y = yPix(v);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y.toFixed(2)}" x2="${W - MARGIN.right}" ` +
      `y2="${y.toFixed(2)}" stroke="#ddd" stroke-width="1"/>`,
      `<text x="${MARGIN.left - 8}" y="${(y + 4).toFixed(2)}" text-anchor="end" ` +
      `font-size="11">${fmtTick(v)}</text>`,
    );
  }

  // x ticks
  const nx = Math.min(10, Math.max(2, xMax - xMin));
  for (let k = 0; k <= nx; k++) {
    const x = xMin + ((xMax - xMin) * k) / nx;
    const xp = xPix(x);
    parts.push(
      `<line x1="${xp.toFixed(2)}" y1="${MARGIN.top + PH}" x2="${xp.toFixed(2)}" ` +
      `y2="${MARGIN.top + PH + 5}" stroke="#333"/>`,
      `<text x="${xp.toFixed(2)}" y="${MARGIN.top + PH + 20}" text-anchor="middle" ` +
      `font-size="11">${fmtTick(Math.round(x))}</text>`,
    );
  }

  // frame + axis labels
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${PW}" height="${PH}" ` +
    `fill="none" stroke="#333"/>`,
    `<text x="${MARGIN.left + PW / 2}" y="${H - 10}" text-anchor="middle" ` +
    `font-size="13">${esc(opts.xLabel)}</text>`,
    `<text x="18" y="${MARGIN.top + PH / 2}" text-anchor="middle" font-size="13" ` +
    `transform="rotate(-90 18 ${MARGIN.top + PH / 2})">${esc(opts.yLabel)}</text>`,
  );

  // series
  for (const s of opts.series) {
    const xs = opts.xValues ?? s.values.map((_, k) => k + 1);
    const pts = s.values
      .map((v, k) => `${xPix(xs[k]!).toFixed(2)},${yPix(v).toFixed(2)}`)
      .join(" ");
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
    parts.push(
      `<polyline data-label="${esc(s.label)}" points="${pts}" fill="none" ` +
      `stroke="${s.color}" stroke-width="${s.width ?? 1.4}"${dash}/>`,
    );
    if (opts.markers) {
      for (let k = 0; k < s.values.length; k++) {
        parts.push(
          `<circle cx="${xPix(xs[k]!).toFixed(2)}" cy="${yPix(s.values[k]!).toFixed(2)}" ` +
          `r="3" fill="${s.color}"/>`,
        );
      }
    }
  }

  // legend
  let ly = MARGIN.top + 10;
  for (const s of opts.series) {
    const lx = W - MARGIN.right - 150;
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
    parts.push(
      `<line x1="${lx}" y1="${ly}" x2="${lx + 26}" y2="${ly}" stroke="${s.color}" ` +
      `stroke-width="2"${dash}/>`,
      `<text x="${lx + 32}" y="${ly + 4}" font-size="12">${esc(s.label)}</text>`,
    );
    ly += 18;
  }

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
