import * as fs from "node:fs";
import * as path from "node:path";

import { Table, columnIndex, distinct, filterRows, numericPairs,
  parseCsv } from "./csv.js";
import { FigureSpec } from "./figconfig.js";
import { Series, renderPlot } from "./svg.js";

function transformed(
  pairs: { x: number; y: number }[],
  spec: FigureSpec,
): { x: number; y: number }[] {
  switch (spec.yTransform) {
    case "div_eps":
      return pairs.map((p) => ({ x: p.x, y: p.y / p.x }));
    case "div_eps2":
      return pairs.map((p) => ({ x: p.x, y: p.y / (p.x * p.x) }));
    case "abs_offset":
      return pairs.map((p) => ({ x: p.x, y: Math.abs(p.y - spec.yOffset) }));
    default:
      return pairs;
  }
}

function buildSeries(table: Table, spec: FigureSpec): Series[] {
  // validate every referenced column up front so errors name the column
  columnIndex(table, spec.x);
  for (const y of spec.y) columnIndex(table, y);
  const series: Series[] = [];
  const experiments =
    table.header.includes("experiment") ? distinct(table, "experiment") : [];
  for (const ycol of spec.y) {
    if (experiments.length > 1) {
      for (const exp of experiments) {
        const sub = filterRows(table, "experiment", exp);
        const pts = transformed(numericPairs(sub, spec.x, ycol), spec);
        if (pts.length > 0) {
          series.push({ label: `${exp}:${ycol}`, points: pts });
        }
      }
    } else {
      series.push({
        label: ycol,
        points: transformed(numericPairs(table, spec.x, ycol), spec),
      });
    }
  }
  return series;
}

/** Render one figure spec; returns the output path. Inputs are read-only. */
export function renderFigure(spec: FigureSpec): string {
  const text = fs.readFileSync(spec.input, "utf8");
  const table = parseCsv(text);
  if (table.header.length > 0) {
    columnIndex(table, spec.x);
    for (const y of spec.y) columnIndex(table, y);
  }
  const series = table.header.length > 0 ? buildSeries(table, spec) : [];
  const svg = renderPlot(series, {
    title: spec.title,
    xLabel: spec.x,
    yLabel: spec.y.join(", "),
    logx: spec.logx,
    logy: spec.logy,
    annotateSlope: spec.logx && spec.logy,
  });
  fs.mkdirSync(path.dirname(spec.out), { recursive: true });
  fs.writeFileSync(spec.out, svg);
  return spec.out;
}
