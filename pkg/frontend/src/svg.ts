/** Hand-rolled static SVG line/scatter plots: no DOM, no canvas,
 *  deterministic output (no timestamps, fixed float formatting). */

export interface Series {
  label: string;
  points: { x: number; y: number }[];
}

export interface PlotOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  logx: boolean;
  logy: boolean;
  width?: number;
  height?: number;
  /** annotate the least-squares slope of log y vs log x (log-log only) */
  annotateSlope?: boolean;
}

const COLORS = ["#1f6fb2", "#c0392b", "#2e8b57", "#8e44ad", "#b8860b",
  "#16697a"];

const M = { left: 64, right: 16, top: 30, bottom: 42 };

function fmt(v: number): string {
  return Number(v.toPrecision(6)).toString();
}

function niceTicks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = span / (n * step);
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = mult * step;
  const first = Math.ceil(lo / s) * s;
  const ticks: number[] = [];
  for (let v = first; v <= hi + 1e-12 * span; v += s) ticks.push(v);
  return ticks;
}

function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let d = Math.ceil(lo - 1e-9); d <= Math.floor(hi + 1e-9); d++) {
    ticks.push(d);
  }
  if (ticks.length === 0) ticks.push(lo, hi);
  return ticks;
}

export function fitSlope(points: { x: number; y: number }[]): number | null {
  const pts = points.filter((p) => p.x > 0 && p.y > 0);
  if (pts.length < 2) return null;
  const lx = pts.map((p) => Math.log(p.x));
  const ly = pts.map((p) => Math.log(p.y));
  const mx = lx.reduce((a, b) => a + b, 0) / lx.length;
  const my = ly.reduce((a, b) => a + b, 0) / ly.length;
  let num = 0;
  let den = 0;
  for (let i = 0; i < lx.length; i++) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) ** 2;
  }
  return den === 0 ? null : num / den;
}

export function renderPlot(series: Series[], opts: PlotOptions): string {
  const W = opts.width ?? 560;
  const H = opts.height ?? 400;
  const innerW = W - M.left - M.right;
  const innerH = H - M.top - M.bottom;

  const usable = series
    .map((s) => ({
      label: s.label,
      points: s.points.filter(
        (p) =>
          Number.isFinite(p.x) && Number.isFinite(p.y) &&
          (!opts.logx || p.x > 0) && (!opts.logy || p.y > 0),
      ),
    }))
    .filter((s) => s.points.length > 0);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" ` +
    `viewBox="0 0 ${W} ${H}" font-family="sans-serif" font-size="11">`,
    `<rect width="${W}" height="${H}" fill="white"/>`,
    `<text x="${W / 2}" y="18" text-anchor="middle" font-size="13">` +
    `${escapeXml(opts.title)}</text>`,
  );

  if (usable.length === 0) {
    // empty axes with an explicit warning, still a valid figure
    parts.push(
      frameRect(innerW, innerH),
      `<text x="${M.left + innerW / 2}" y="${M.top + innerH / 2}" ` +
      `text-anchor="middle" fill="#b33">warning: no plottable data</text>`,
      axisLabels(W, H, opts),
      "</svg>",
    );
    return parts.join("\n");
  }

  const xs = usable.flatMap((s) => s.points.map((p) => p.x));
  const ys = usable.flatMap((s) => s.points.map((p) => p.y));
  const tx = (v: number) => (opts.logx ? Math.log10(v) : v);
  const ty = (v: number) => (opts.logy ? Math.log10(v) : v);
  let xlo = Math.min(...xs.map(tx));
  let xhi = Math.max(...xs.map(tx));
  let ylo = Math.min(...ys.map(ty));
  let yhi = Math.max(...ys.map(ty));
  if (xhi - xlo < 1e-12) { xlo -= 0.5; xhi += 0.5; }
  if (yhi - ylo < 1e-12) { ylo -= 0.5; yhi += 0.5; }
  const padY = 0.06 * (yhi - ylo);
  ylo -= padY;
  yhi += padY;

  const px = (v: number) =>
    M.left + ((tx(v) - xlo) / (xhi - xlo)) * innerW;
  const py = (v: number) =>
    M.top + innerH - ((ty(v) - ylo) / (yhi - ylo)) * innerH;

  parts.push(frameRect(innerW, innerH));
  const xticks = opts.logx ? logTicks(xlo, xhi) : niceTicks(xlo, xhi);
  for (const t of xticks) {
    const vx = M.left + ((t - xlo) / (xhi - xlo)) * innerW;
    if (vx < M.left - 1 || vx > M.left + innerW + 1) continue;
    const label = opts.logx ? `1e${fmt(t)}` : fmt(t);
    parts.push(
      `<line x1="${fmt(vx)}" y1="${M.top + innerH}" x2="${fmt(vx)}" ` +
      `y2="${M.top + innerH + 4}" stroke="black"/>`,
      `<text x="${fmt(vx)}" y="${M.top + innerH + 16}" ` +
      `text-anchor="middle">${label}</text>`,
    );
  }
  const yticks = opts.logy ? logTicks(ylo, yhi) : niceTicks(ylo, yhi);
  for (const t of yticks) {
    const vy = M.top + innerH - ((t - ylo) / (yhi - ylo)) * innerH;
    if (vy < M.top - 1 || vy > M.top + innerH + 1) continue;
    const label = opts.logy ? `1e${fmt(t)}` : fmt(t);
    parts.push(
      `<line x1="${M.left - 4}" y1="${fmt(vy)}" x2="${M.left}" ` +
      `y2="${fmt(vy)}" stroke="black"/>`,
      `<text x="${M.left - 7}" y="${fmt(vy + 3)}" ` +
      `text-anchor="end">${label}</text>`,
    );
  }

  usable.forEach((s, i) => {
    const color = COLORS[i % COLORS.length];
    const sorted = [...s.points].sort((a, b) => a.x - b.x);
    const path = sorted
      .map((p) => `${fmt(px(p.x))},${fmt(py(p.y))}`)
      .join(" ");
    if (sorted.length > 1) {
      parts.push(
        `<polyline points="${path}" fill="none" stroke="${color}" ` +
        `stroke-width="1.5"/>`,
      );
    }
    for (const p of sorted) {
      parts.push(
        `<circle cx="${fmt(px(p.x))}" cy="${fmt(py(p.y))}" r="3" ` +
        `fill="${color}"/>`,
      );
    }
    parts.push(
      `<text x="${W - M.right - 6}" y="${M.top + 14 + 14 * i}" ` +
      `text-anchor="end" fill="${color}">${escapeXml(s.label)}</text>`,
    );
  });

  if (opts.annotateSlope && opts.logx && opts.logy) {
    const slope = fitSlope(usable[0].points);
    if (slope !== null) {
      parts.push(
        `<text x="${M.left + 8}" y="${M.top + 14}" fill="#333">` +
        `slope = ${slope.toFixed(3)}</text>`,
      );
    }
  }

  parts.push(axisLabels(W, H, opts), "</svg>");
  return parts.join("\n");
}

function frameRect(innerW: number, innerH: number): string {
  return `<rect x="${M.left}" y="${M.top}" width="${innerW}" ` +
    `height="${innerH}" fill="none" stroke="black"/>`;
}

function axisLabels(W: number, H: number, opts: PlotOptions): string {
  return (
    `<text x="${M.left + (W - M.left - M.right) / 2}" y="${H - 8}" ` +
    `text-anchor="middle">${escapeXml(opts.xLabel)}</text>\n` +
    `<text x="14" y="${M.top + (H - M.top - M.bottom) / 2}" ` +
    `text-anchor="middle" transform="rotate(-90 14 ` +
    `${M.top + (H - M.top - M.bottom) / 2})">${escapeXml(opts.yLabel)}</text>`
  );
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
