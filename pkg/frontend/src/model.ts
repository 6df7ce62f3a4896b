/** Chart models and the shared layout math used by both renderers. */

import { median, requireColumns, SchemaError, Table } from "./csv.js";

export interface StyleOptions {
  width: number;
  height: number;
  colors: string[];
  title?: string;
}

export const DEFAULT_STYLE: StyleOptions = {
  width: 800,
  height: 520,
  colors: ["#1f6fb2", "#d1483e", "#3d8f5f", "#8456a3", "#b38320", "#4a4a4a"],
};

export interface Series {
  label: string;
  points: [number, number][];
  color: string;
  dashed?: boolean;
}

export interface ChartModel {
  title: string;
  xLabel: string;
  yLabel: string;
  xLog: boolean;
  yLog: boolean;
  series: Series[];
}

function usableRows(table: Table): Record<string, string>[] {
  const rows = table.rows.filter((r) => (r.error ?? "") === "" && r.frob_error !== "");
  if (rows.length === 0) {
    throw new SchemaError("no rows");
  }
  return rows;
}

function medianCurve(
  rows: Record<string, string>[],
  key: (r: Record<string, string>) => string,
): Map<string, [number, number][]> {
  const buckets = new Map<string, Map<number, number[]>>();
  for (const row of rows) {
    const k = key(row);
    const n = Number(row.n);
    const err = Number(row.frob_error);
    if (!Number.isFinite(n) || !Number.isFinite(err)) continue;
    if (!buckets.has(k)) buckets.set(k, new Map());
    const series = buckets.get(k)!;
    if (!series.has(n)) series.set(n, []);
    series.get(n)!.push(err);
  }
  const out = new Map<string, [number, number][]>();
  for (const [k, series] of [...buckets.entries()].sort()) {
    const pts = [...series.entries()]
      .sort((a, b) => a[0] - b[0])
      .map(([n, errs]) => [n, median(errs)] as [number, number]);
    out.set(k, pts);
  }
  return out;
}

/** Median error vs sample size per method/penalty, log-log, with the
 *  reference slope -1/2 the sample-quadrupling law predicts. */
export function buildErrorScaling(table: Table, style: StyleOptions): ChartModel {
  requireColumns(table, ["n", "method", "penalty", "frob_error", "error"]);
  const rows = usableRows(table);
  const curves = medianCurve(rows, (r) => `${r.method}/${r.penalty}`);
  const series: Series[] = [];
  let i = 0;
  for (const [label, points] of curves) {
    series.push({ label: label.toUpperCase(), points, color: style.colors[i % style.colors.length] });
    i += 1;
  }
  const anchor = series[0].points[0];
  const ns = series.flatMap((s) => s.points.map((p) => p[0]));
  const nMax = Math.max(...ns);
  series.push({
    label: "N^-1/2 REF",
    points: [anchor, [nMax, anchor[1] * Math.sqrt(anchor[0] / nMax)]],
    color: "#888888",
    dashed: true,
  });
  return {
    title: style.title ?? "ERROR VS SAMPLE SIZE",
    xLabel: "N",
    yLabel: "MEDIAN FROB ERROR",
    xLog: true,
    yLog: true,
    series,
  };
}

/** Objective gap per iteration on a log scale with the contraction guide. */
export function buildConvergence(table: Table, style: StyleOptions): ChartModel {
  requireColumns(table, ["iteration", "objective", "residual", "kappa"]);
  if (table.rows.length === 0) {
    throw new SchemaError("no rows");
  }
  const objective = table.rows.map((r) => Number(r.objective));
  const best = Math.min(...objective);
  const gaps: [number, number][] = [];
  table.rows.forEach((r, t) => {
    const gap = objective[t] - best;
    if (gap > 0) gaps.push([Number(r.iteration), gap]);
  });
  if (gaps.length < 2) {
    throw new SchemaError("no rows with a positive objective gap");
  }
  const series: Series[] = [
    { label: "OBJECTIVE GAP", points: gaps, color: style.colors[0] },
  ];
  const kappaCell = table.rows.find((r) => r.kappa !== "")?.kappa;
  if (kappaCell !== undefined) {
    const kappa = Number(kappaCell);
    if (Number.isFinite(kappa) && kappa > 0 && kappa < 1) {
      const [t0, g0] = gaps[0];
      const tEnd = gaps[gaps.length - 1][0];
      const floor = gaps[gaps.length - 1][1];
      const guide: [number, number][] = [];
      for (const [t] of gaps) {
        const value = g0 * Math.pow(kappa, t - t0);
        if (value < floor) break;
        guide.push([t, value]);
      }
      if (guide.length >= 2) {
        series.push({
          label: `KAPPA ${kappa.toFixed(3)} GUIDE`,
          points: guide,
          color: "#888888",
          dashed: true,
        });
      }
      void tEnd;
    }
  }
  return {
    title: style.title ?? "OBJECTIVE GAP DECAY",
    xLabel: "ITERATION",
    yLabel: "GAP TO BEST",
    xLog: false,
    yLog: true,
    series,
  };
}

/** Corrected vs naive median error per sample size (penalties pooled). */
export function buildComparison(table: Table, style: StyleOptions): ChartModel {
  requireColumns(table, ["n", "method", "penalty", "frob_error", "error"]);
  const rows = usableRows(table);
  const curves = medianCurve(rows, (r) => r.method);
  const series: Series[] = [];
  let i = 0;
  for (const [label, points] of curves) {
    series.push({ label: label.toUpperCase(), points, color: style.colors[i % style.colors.length] });
    i += 1;
  }
  return {
    title: style.title ?? "CORRECTED VS NAIVE",
    xLabel: "N",
    yLabel: "MEDIAN FROB ERROR",
    xLog: true,
    yLog: false,
    series,
  };
}

// ---------------------------------------------------------------------------
// layout: identical numbers feed the SVG and raster backends
// ---------------------------------------------------------------------------

export interface Tick {
  value: number;
  frac: number;
  label: string;
}

export interface Layout {
  width: number;
  height: number;
  plot: { x: number; y: number; w: number; h: number };
  xTicks: Tick[];
  yTicks: Tick[];
  toX(v: number): number;
  toY(v: number): number;
}

function formatTick(v: number): string {
  if (v === 0) return "0";
  const abs = Math.abs(v);
  if (abs >= 1e4 || abs < 1e-3) {
    const exp = Math.floor(Math.log10(abs));
    const mant = v / Math.pow(10, exp);
    const m = Math.abs(mant - 1) < 1e-9 ? "" : `${mant.toFixed(0)}X`;
    return `${m}1E${exp}`;
  }
  if (Number.isInteger(v)) return String(v);
  return String(Number(v.toPrecision(3)));
}

function logTicks(lo: number, hi: number): number[] {
  const eLo = Math.floor(Math.log10(lo) + 1e-12);
  const eHi = Math.ceil(Math.log10(hi) - 1e-12);
  const decades: number[] = [];
  for (let e = eLo; e <= eHi; e += 1) decades.push(Math.pow(10, e));
  if (decades.length >= 3) return decades;
  const out: number[] = [];
  for (let e = eLo; e <= eHi; e += 1) {
    for (const m of [1, 2, 5]) out.push(m * Math.pow(10, e));
  }
  return out;
}

function linearTicks(lo: number, hi: number): number[] {
  const span = hi - lo || 1;
  const raw = span / 5;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= 6) ?? 10 * mag;
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + 1e-12 * span; v += step) {
    out.push(Number(v.toPrecision(12)));
  }
  return out;
}

export function computeLayout(model: ChartModel, style: StyleOptions): Layout {
  const width = style.width;
  const height = style.height;
  const plot = { x: 86, y: 40, w: width - 86 - 24, h: height - 40 - 64 };
  const xs = model.series.flatMap((s) => s.points.map((p) => p[0]));
  const ys = model.series.flatMap((s) => s.points.map((p) => p[1]));
  let xLo = Math.min(...xs);
  let xHi = Math.max(...xs);
  let yLo = Math.min(...ys);
  let yHi = Math.max(...ys);
  if (model.xLog) {
    xLo = Math.pow(10, Math.floor(Math.log10(xLo) * 8) / 8 - 0.02);
    xHi = Math.pow(10, Math.ceil(Math.log10(xHi) * 8) / 8 + 0.02);
  } else {
    const pad = 0.04 * (xHi - xLo || 1);
    xLo -= pad;
    xHi += pad;
  }
  if (model.yLog) {
    yLo = Math.pow(10, Math.floor(Math.log10(yLo) * 4) / 4 - 0.05);
    yHi = Math.pow(10, Math.ceil(Math.log10(yHi) * 4) / 4 + 0.05);
  } else {
    const pad = 0.08 * (yHi - yLo || 1);
    yLo -= pad;
    yHi += pad;
  }
  const xFrac = (v: number) =>
    model.xLog
      ? (Math.log10(v) - Math.log10(xLo)) / (Math.log10(xHi) - Math.log10(xLo))
      : (v - xLo) / (xHi - xLo);
  const yFrac = (v: number) =>
    model.yLog
      ? (Math.log10(v) - Math.log10(yLo)) / (Math.log10(yHi) - Math.log10(yLo))
      : (v - yLo) / (yHi - yLo);
  const xTickVals = (model.xLog ? logTicks(xLo, xHi) : linearTicks(xLo, xHi)).filter(
    (v) => xFrac(v) >= -1e-9 && xFrac(v) <= 1 + 1e-9,
  );
  const yTickVals = (model.yLog ? logTicks(yLo, yHi) : linearTicks(yLo, yHi)).filter(
    (v) => yFrac(v) >= -1e-9 && yFrac(v) <= 1 + 1e-9,
  );
  return {
    width,
    height,
    plot,
    xTicks: xTickVals.map((v) => ({ value: v, frac: xFrac(v), label: formatTick(v) })),
    yTicks: yTickVals.map((v) => ({ value: v, frac: yFrac(v), label: formatTick(v) })),
    toX: (v) => plot.x + xFrac(v) * plot.w,
    toY: (v) => plot.y + (1 - yFrac(v)) * plot.h,
  };
}
