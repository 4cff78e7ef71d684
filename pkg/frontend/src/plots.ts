import { CsvTable, SchemaError, numeric, requireColumns } from "./csv.js";
import { logLogSlopeFit } from "./fit.js";
import { DEFAULT_MARGIN, Scale, SvgCanvas, drawAxes, fmt, padDomain } from "./svg.js";

export type PlotKind = "fidelity_vs_alpha" | "maxnorm_vs_samples" | "td_vs_n";

export interface RenderResult {
  svg: string;
  /** fitted log-log slope, set by maxnorm_vs_samples */
  slope?: number;
}

const WIDTH = 720;
const HEIGHT = 480;

const POINT_COLOR = "#1f77b4";
const FIT_COLOR = "#d62728";

function mean(values: number[]): number {
  return values.reduce((a, b) => a + b, 0) / values.length;
}

function std(values: number[]): number {
  if (values.length < 2) return 0;
  const m = mean(values);
  return Math.sqrt(values.reduce((a, b) => a + (b - m) * (b - m), 0) / (values.length - 1));
}

/** Bias-corrected fidelity mean with across-state spread, per alpha column. */
export function renderFidelityVsAlpha(table: CsvTable): RenderResult {
  requireColumns(table, ["state_id", "alpha", "shots", "mean", "std", "bias"], "fidelity_vs_alpha");
  if (table.rows.length === 0) {
    throw new SchemaError("fidelity_vs_alpha: no data rows");
  }
  const byAlpha = new Map<string, number[]>();
  for (const row of table.rows) {
    const corrected = numeric(row, "mean") + numeric(row, "bias");
    const key = row["alpha"];
    if (!byAlpha.has(key)) byAlpha.set(key, []);
    byAlpha.get(key)!.push(corrected);
  }
  const order = [...byAlpha.keys()].sort((a, b) => {
    const rank = (v: string) => (v === "inf" ? 1e18 : v === "haar" ? 2e18 : Number(v));
    return rank(a) - rank(b);
  });
  const means = order.map((key) => mean(byAlpha.get(key)!));
  const stds = order.map((key) => std(byAlpha.get(key)!));

  const lo = Math.min(...means.map((m, i) => m - stds[i]), 1.0);
  const hi = Math.max(...means.map((m, i) => m + stds[i]), 1.0);
  const [dLo, dHi] = padDomain(lo, hi, false);
  const xScale = new Scale(-0.5, order.length - 0.5, DEFAULT_MARGIN.left, WIDTH - DEFAULT_MARGIN.right, false);
  const yScale = new Scale(dLo, dHi, HEIGHT - DEFAULT_MARGIN.bottom, DEFAULT_MARGIN.top, false);

  const svg = new SvgCanvas(WIDTH, HEIGHT);
  svg.line(
    xScale.apply(-0.5), yScale.apply(1.0), xScale.apply(order.length - 0.5), yScale.apply(1.0),
    "#999", 1, "4,4",
  );
  // category axis drawn manually: one tick per alpha value
  const yBottom = yScale.rangeLo;
  svg.line(xScale.rangeLo, yBottom, xScale.rangeHi, yBottom, "#222");
  svg.line(xScale.rangeLo, yBottom, xScale.rangeLo, yScale.rangeHi, "#222");
  for (const t of yScale.ticks()) {
    const py = yScale.apply(t);
    svg.line(xScale.rangeLo - 5, py, xScale.rangeLo, py, "#222");
    svg.text(xScale.rangeLo - 9, py + 4, fmt(t), { size: 11, anchor: "end" });
  }
  order.forEach((label, i) => {
    const px = xScale.apply(i);
    svg.line(px, yBottom, px, yBottom + 5, "#222");
    svg.text(px, yBottom + 20, label, { size: 12 });
    const py = yScale.apply(means[i]);
    svg.line(px, yScale.apply(means[i] - stds[i]), px, yScale.apply(means[i] + stds[i]), POINT_COLOR, 1.5);
    svg.circle(px, py, 4, POINT_COLOR);
    svg.text(px, py - 12, fmt(means[i]), { size: 10 });
  });
  const midX = (xScale.rangeLo + xScale.rangeHi) / 2;
  svg.text(midX, yBottom + 42, "alpha", { size: 13 });
  svg.text(xScale.rangeLo - 52, (yBottom + yScale.rangeHi) / 2, "bias-corrected fidelity estimate", {
    size: 13,
    rotate: true,
  });
  svg.text(midX, 22, "Fidelity estimation vs circuit depth parameter", { size: 15 });
  return { svg: svg.finish() };
}

/** Log-log max-norm decay with a fitted slope annotation. */
export function renderMaxnormVsSamples(table: CsvTable): RenderResult {
  requireColumns(table, ["n", "alpha", "Ns", "max_norm"], "maxnorm_vs_samples");
  if (table.rows.length === 0) {
    throw new SchemaError("maxnorm_vs_samples: no data rows");
  }
  const points = table.rows.map((row) => ({ x: numeric(row, "Ns"), y: numeric(row, "max_norm") }));
  const fit = logLogSlopeFit(points);

  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const [xLo, xHi] = padDomain(Math.min(...xs), Math.max(...xs), true);
  const [yLo, yHi] = padDomain(Math.min(...ys), Math.max(...ys), true);
  const xScale = new Scale(xLo, xHi, DEFAULT_MARGIN.left, WIDTH - DEFAULT_MARGIN.right, true);
  const yScale = new Scale(yLo, yHi, HEIGHT - DEFAULT_MARGIN.bottom, DEFAULT_MARGIN.top, true);

  const svg = new SvgCanvas(WIDTH, HEIGHT);
  drawAxes(svg, xScale, yScale, {
    title: "Empirical pair distribution: max-norm vs sample count",
    x: "number of samples",
    y: "max-norm to uniform",
  }, { x: (v) => `1e${Math.round(Math.log10(v))}`, y: (v) => `1e${Math.round(Math.log10(v))}` });

  for (const p of points) {
    svg.circle(xScale.apply(p.x), yScale.apply(p.y), 3.5, POINT_COLOR);
  }
  const fitPts: Array<[number, number]> = [Math.min(...xs), Math.max(...xs)].map((x) => {
    const y = Math.pow(10, fit.intercept + fit.slope * Math.log10(x));
    return [xScale.apply(x), yScale.apply(y)];
  });
  svg.polyline(fitPts, FIT_COLOR, 1.5, "6,3");
  svg.text(WIDTH - DEFAULT_MARGIN.right - 10, DEFAULT_MARGIN.top + 16, `slope = ${fit.slope.toFixed(2)}`, {
    anchor: "end",
    size: 14,
    fill: FIT_COLOR,
  });
  return { svg: svg.finish(), slope: fit.slope };
}

/** Scaled unique-to-Haar trace distances from the design-check table. */
export function renderTdVsN(table: CsvTable): RenderResult {
  requireColumns(table, ["check", "params", "value", "reference", "pass"], "td_vs_n");
  const rows = table.rows.filter((r) => r["check"] === "unique_vs_haar_scaled");
  if (rows.length === 0) {
    throw new SchemaError("td_vs_n: no unique_vs_haar_scaled rows");
  }
  const points = rows.map((row) => {
    const match = /n=(\d+)/.exec(row["params"]);
    if (!match) throw new SchemaError(`td_vs_n: cannot read n from params '${row["params"]}'`);
    return { x: Number(match[1]), y: numeric(row, "value") };
  });
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const [xLo, xHi] = padDomain(Math.min(...xs), Math.max(...xs), false);
  const [yLo, yHi] = padDomain(Math.min(0, ...ys), Math.max(...ys), false);
  const xScale = new Scale(xLo, xHi, DEFAULT_MARGIN.left, WIDTH - DEFAULT_MARGIN.right, false);
  const yScale = new Scale(yLo, yHi, HEIGHT - DEFAULT_MARGIN.bottom, DEFAULT_MARGIN.top, false);

  const svg = new SvgCanvas(WIDTH, HEIGHT);
  drawAxes(svg, xScale, yScale, {
    title: "Unique-type vs Haar moment: scaled trace distance",
    x: "qubits n",
    y: "TD * 2^n / t^2",
  });
  svg.polyline(points.map((p) => [xScale.apply(p.x), yScale.apply(p.y)]), POINT_COLOR, 1.5);
  for (const p of points) {
    svg.circle(xScale.apply(p.x), yScale.apply(p.y), 4, POINT_COLOR);
  }
  return { svg: svg.finish() };
}

export function render(kind: PlotKind, table: CsvTable): RenderResult {
  switch (kind) {
    case "fidelity_vs_alpha":
      return renderFidelityVsAlpha(table);
    case "maxnorm_vs_samples":
      return renderMaxnormVsSamples(table);
    case "td_vs_n":
      return renderTdVsN(table);
    default:
      throw new SchemaError(`unknown plot kind '${kind as string}'`);
  }
}
