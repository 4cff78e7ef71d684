/**
 * Minimal deterministic SVG scene builder: no timestamps, no randomness,
 * so identical input data always produces identical bytes.
 */

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export const DEFAULT_MARGIN: Margin = { top: 40, right: 30, bottom: 55, left: 70 };

export function fmt(value: number): string {
  if (!Number.isFinite(value)) return "nan";
  if (value === 0) return "0";
  const abs = Math.abs(value);
  if (abs >= 0.01 && abs < 10000) {
    return String(Number(value.toPrecision(6)));
  }
  return value.toExponential(2);
}

export class Scale {
  constructor(
    readonly domainLo: number,
    readonly domainHi: number,
    readonly rangeLo: number,
    readonly rangeHi: number,
    readonly log: boolean,
  ) {}

  apply(value: number): number {
    const [lo, hi] = this.log
      ? [Math.log10(this.domainLo), Math.log10(this.domainHi)]
      : [this.domainLo, this.domainHi];
    const v = this.log ? Math.log10(value) : value;
    const t = hi === lo ? 0.5 : (v - lo) / (hi - lo);
    return this.rangeLo + t * (this.rangeHi - this.rangeLo);
  }

  ticks(): number[] {
    if (this.log) {
      const out: number[] = [];
      const lo = Math.ceil(Math.log10(this.domainLo) - 1e-9);
      const hi = Math.floor(Math.log10(this.domainHi) + 1e-9);
      for (let e = lo; e <= hi; e++) out.push(Math.pow(10, e));
      return out;
    }
    const span = this.domainHi - this.domainLo;
    if (span <= 0) return [this.domainLo];
    const step = Math.pow(10, Math.floor(Math.log10(span / 4)));
    const mult = span / step > 8 ? 2 : 1;
    const out: number[] = [];
    const start = Math.ceil(this.domainLo / (step * mult)) * step * mult;
    for (let v = start; v <= this.domainHi + 1e-12; v += step * mult) {
      out.push(Number(v.toPrecision(10)));
    }
    return out;
  }
}

export function padDomain(lo: number, hi: number, log: boolean): [number, number] {
  if (log) {
    return [lo / 1.5, hi * 1.5];
  }
  const pad = (hi - lo || Math.abs(hi) || 1) * 0.08;
  return [lo - pad, hi + pad];
}

export class SvgCanvas {
  private parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
      `<rect width="${width}" height="${height}" fill="white"/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1, dash = ""): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${stroke}" stroke-width="${width}"${d}/>`,
    );
  }

  circle(cx: number, cy: number, r: number, fill: string): void {
    this.parts.push(`<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${r}" fill="${fill}"/>`);
  }

  text(x: number, y: number, content: string, opts: { size?: number; anchor?: string; rotate?: boolean; fill?: string } = {}): void {
    const size = opts.size ?? 12;
    const anchor = opts.anchor ?? "middle";
    const fill = opts.fill ?? "#222";
    const transform = opts.rotate ? ` transform="rotate(-90 ${fmt(x)} ${fmt(y)})"` : "";
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" text-anchor="${anchor}" fill="${fill}"${transform}>${escapeXml(content)}</text>`,
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1.5, dash = ""): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(`<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}"${d}/>`);
  }

  finish(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

export function drawAxes(
  svg: SvgCanvas,
  xScale: Scale,
  yScale: Scale,
  labels: { title: string; x: string; y: string },
  tickFormat: { x?: (v: number) => string; y?: (v: number) => string } = {},
): void {
  const x0 = xScale.rangeLo;
  const x1 = xScale.rangeHi;
  const yBottom = yScale.rangeLo;
  const yTop = yScale.rangeHi;
  svg.line(x0, yBottom, x1, yBottom, "#222");
  svg.line(x0, yBottom, x0, yTop, "#222");
  const fx = tickFormat.x ?? fmt;
  const fy = tickFormat.y ?? fmt;
  for (const t of xScale.ticks()) {
    const px = xScale.apply(t);
    svg.line(px, yBottom, px, yBottom + 5, "#222");
    svg.text(px, yBottom + 20, fx(t), { size: 11 });
  }
  for (const t of yScale.ticks()) {
    const py = yScale.apply(t);
    svg.line(x0 - 5, py, x0, py, "#222");
    svg.line(x0, py, x1, py, "#eee");
    svg.text(x0 - 9, py + 4, fy(t), { size: 11, anchor: "end" });
  }
  const midX = (x0 + x1) / 2;
  svg.text(midX, yBottom + 42, labels.x, { size: 13 });
  svg.text(x0 - 52, (yBottom + yTop) / 2, labels.y, { size: 13, rotate: true });
  svg.text(midX, 22, labels.title, { size: 15 });
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
