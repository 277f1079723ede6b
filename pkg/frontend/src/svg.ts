/** Minimal deterministic SVG scene builder: axes, polylines, markers. */

export interface Extent {
  min: number;
  max: number;
}

export function extent(values: number[], pad = 0.06): Extent {
  if (values.length === 0) return { min: 0, max: 1 };
  let min = Math.min(...values);
  let max = Math.max(...values);
  if (min === max) {
    min -= 0.5;
    max += 0.5;
  }
  const span = max - min;
  return { min: min - pad * span, max: max + pad * span };
}

export function ticks(e: Extent, count = 5): number[] {
  const span = e.max - e.min;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const candidates = [step, 2 * step, 5 * step, 10 * step];
  const chosen = candidates.find((s) => span / s <= count + 1) ?? 10 * step;
  const out: number[] = [];
  for (let v = Math.ceil(e.min / chosen) * chosen; v <= e.max + 1e-12 * span; v += chosen) {
    out.push(Number(v.toPrecision(10)));
  }
  return out;
}

const fmt = (v: number) => {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return String(Number(v.toPrecision(6)));
};

export class Figure {
  readonly width: number;
  readonly height: number;
  private body: string[] = [];

  constructor(width = 720, height = 480) {
    this.width = width;
    this.height = height;
  }

  raw(s: string): void {
    this.body.push(s);
  }

  text(x: number, y: number, s: string, opts = ""): void {
    this.body.push(`<text x="${x.toFixed(1)}" y="${y.toFixed(1)}" font-size="12" font-family="sans-serif" ${opts}>${escapeXml(s)}</text>`);
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
      `<rect width="${this.width}" height="${this.height}" fill="white"/>`,
      ...this.body,
      "</svg>",
    ].join("\n");
  }
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export interface AxesOptions {
  x0: number;
  y0: number;
  w: number;
  h: number;
  xExtent: Extent;
  yExtent: Extent;
  xLabel: string;
  yLabel: string;
  logX?: boolean;
  logY?: boolean;
  title?: string;
}

export class Axes {
  private fig: Figure;
  private o: AxesOptions;

  constructor(fig: Figure, o: AxesOptions) {
    this.fig = fig;
    this.o = o;
    this.frame();
  }

  px(x: number): number {
    const { x0, w, xExtent, logX } = this.o;
    const [a, b] = logX ? [Math.log10(xExtent.min), Math.log10(xExtent.max)] : [xExtent.min, xExtent.max];
    const v = logX ? Math.log10(x) : x;
    return x0 + ((v - a) / (b - a)) * w;
  }

  py(y: number): number {
    const { y0, h, yExtent, logY } = this.o;
    const [a, b] = logY ? [Math.log10(yExtent.min), Math.log10(yExtent.max)] : [yExtent.min, yExtent.max];
    const v = logY ? Math.log10(y) : y;
    return y0 + h - ((v - a) / (b - a)) * h;
  }

  private frame(): void {
    const { x0, y0, w, h, xLabel, yLabel, title } = this.o;
    this.fig.raw(`<rect x="${x0}" y="${y0}" width="${w}" height="${h}" fill="none" stroke="#444"/>`);
    const xs = this.o.logX ? logTicks(this.o.xExtent) : ticks(this.o.xExtent);
    for (const t of xs) {
      const p = this.px(t);
      if (p < x0 - 0.5 || p > x0 + w + 0.5) continue;
      this.fig.raw(`<line x1="${p.toFixed(1)}" y1="${y0 + h}" x2="${p.toFixed(1)}" y2="${y0 + h + 4}" stroke="#444"/>`);
      this.fig.text(p - 10, y0 + h + 16, fmt(t));
    }
    const ys = this.o.logY ? logTicks(this.o.yExtent) : ticks(this.o.yExtent);
    for (const t of ys) {
      const p = this.py(t);
      if (p < y0 - 0.5 || p > y0 + h + 0.5) continue;
      this.fig.raw(`<line x1="${x0 - 4}" y1="${p.toFixed(1)}" x2="${x0}" y2="${p.toFixed(1)}" stroke="#444"/>`);
      this.fig.text(x0 - 46, p + 4, fmt(t));
    }
    this.fig.text(x0 + w / 2 - 20, y0 + h + 34, xLabel);
    this.fig.text(x0 - 50, y0 - 8, yLabel);
    if (title) this.fig.text(x0, y0 - 8, title, 'font-weight="bold"');
  }

  polyline(xs: number[], ys: number[], stroke: string, dash = "", width = 1.6): void {
    if (xs.length === 0) return;
    const pts = xs.map((x, i) => `${this.px(x).toFixed(2)},${this.py(ys[i]).toFixed(2)}`).join(" ");
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    this.fig.raw(`<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}"${dashAttr}/>`);
  }

  markers(xs: number[], ys: number[], fill: string, r = 3): void {
    for (let i = 0; i < xs.length; i++) {
      this.fig.raw(`<circle cx="${this.px(xs[i]).toFixed(2)}" cy="${this.py(ys[i]).toFixed(2)}" r="${r}" fill="${fill}"/>`);
    }
  }

  cross(x: number, y: number, stroke: string, size = 5): void {
    const cx = this.px(x);
    const cy = this.py(y);
    this.fig.raw(`<path d="M ${cx - size} ${cy - size} L ${cx + size} ${cy + size} M ${cx - size} ${cy + size} L ${cx + size} ${cy - size}" stroke="${stroke}" stroke-width="2" fill="none"/>`);
  }
}

function logTicks(e: Extent): number[] {
  const out: number[] = [];
  const lo = Math.floor(Math.log10(e.min));
  const hi = Math.ceil(Math.log10(e.max));
  for (let d = lo; d <= hi; d++) {
    for (const m of [1, 2, 5]) {
      const v = m * Math.pow(10, d);
      if (v >= e.min && v <= e.max) out.push(v);
    }
  }
  return out;
}
