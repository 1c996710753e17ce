import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { defaultFigureConfig, parseFigureConfig } from "../src/figconfig.js";
import { renderFigure } from "../src/render.js";
import { fitSlope, renderPlot } from "../src/svg.js";
import { main } from "../src/main.js";

// the frozen schema written by the solver's experiment pipelines
const HEADER = "experiment,epsilon,geometry,energy,mult_ratio," +
  "hausdorff_over_eps,decay_slope,index,xi,phi_sup,barrier_margin_pos," +
  "barrier_margin_neg,wall_time_s";

function studyFixture(): string {
  const rows = [HEADER];
  for (const eps of [0.08, 0.04, 0.02, 0.01]) {
    // phi_sup = 0.126 eps^2: the expected quadratic scaling
    const phi = 0.126 * eps * eps;
    rows.push(
      `study,${eps},abc123,4.1467,1.0001,1e-11,-1.413,0,0,${phi},` +
      `${0.47 * 3.5 * eps * eps},${0.47 * 3.5 * eps * eps},1.0`,
    );
  }
  return rows.join("\n") + "\n";
}

let dir: string;

beforeAll(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "aclab-plots-"));
  fs.writeFileSync(path.join(dir, "study.csv"), studyFixture());
  fs.writeFileSync(path.join(dir, "empty.csv"), "");
});

afterAll(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

describe("figure config", () => {
  it("parses the default config", () => {
    const specs = parseFigureConfig(defaultFigureConfig("study.csv", "figs"));
    expect(specs.length).toBeGreaterThanOrEqual(5);
    const phi = specs.find((s) => s.name === "phi_sup")!;
    expect(phi.logx && phi.logy).toBe(true);
    expect(phi.y).toEqual(["phi_sup"]);
  });

  it("rejects unknown keys and missing fields", () => {
    expect(() => parseFigureConfig("[figure a]\nfoo = 1\n")).toThrowError(
      /unknown key/,
    );
    expect(() => parseFigureConfig("[figure a]\ninput = x.csv\n"))
      .toThrowError(/missing the "x" key/);
    expect(() => parseFigureConfig("")).toThrowError(/no figures/);
  });
});

describe("renderFigure", () => {
  it("renders a log-log figure with the expected slope annotation", () => {
    const out = path.join(dir, "phi.svg");
    renderFigure({
      name: "phi", input: path.join(dir, "study.csv"), x: "epsilon",
      y: ["phi_sup"], logx: true, logy: true, out,
      yTransform: "none", yOffset: 0, title: "phi",
    });
    const svg = fs.readFileSync(out, "utf8");
    expect(fs.statSync(out).size).toBeGreaterThan(0);
    expect(svg).toContain("<polyline");
    const m = svg.match(/slope = (-?\d+\.\d+)/);
    expect(m).not.toBeNull();
    expect(Math.abs(Number(m![1]) - 2.0)).toBeLessThan(0.01);
  });

  it("names a missing column and leaves no figure behind", () => {
    const out = path.join(dir, "bad.svg");
    expect(() =>
      renderFigure({
        name: "bad", input: path.join(dir, "study.csv"), x: "epsilon",
        y: ["no_such_column"], logx: false, logy: false, out,
        yTransform: "none", yOffset: 0, title: "bad",
      }),
    ).toThrowError(/missing column: no_such_column/);
    expect(fs.existsSync(out)).toBe(false);
  });

  it("renders an empty-axes figure with a warning for an empty CSV", () => {
    const out = path.join(dir, "empty.svg");
    renderFigure({
      name: "empty", input: path.join(dir, "empty.csv"), x: "epsilon",
      y: ["phi_sup"], logx: false, logy: false, out,
      yTransform: "none", yOffset: 0, title: "empty",
    });
    const svg = fs.readFileSync(out, "utf8");
    expect(svg).toContain("warning: no plottable data");
  });

  it("is idempotent and does not mutate its input", () => {
    const input = path.join(dir, "study.csv");
    const before = fs.readFileSync(input, "utf8");
    const out = path.join(dir, "mult.svg");
    const spec = {
      name: "mult", input, x: "epsilon", y: ["mult_ratio"],
      logx: false, logy: false, out, yTransform: "none" as const,
      yOffset: 0, title: "mult",
    };
    renderFigure(spec);
    const first = fs.readFileSync(out, "utf8");
    renderFigure(spec);
    expect(fs.readFileSync(out, "utf8")).toBe(first);
    expect(fs.readFileSync(input, "utf8")).toBe(before);
  });

  it("applies the abs-offset transform for defect figures", () => {
    const out = path.join(dir, "defect.svg");
    renderFigure({
      name: "defect", input: path.join(dir, "study.csv"), x: "epsilon",
      y: ["energy"], logx: true, logy: true, out,
      yTransform: "abs_offset", yOffset: 4.1467, title: "defect",
    });
    expect(fs.statSync(out).size).toBeGreaterThan(0);
  });
});

describe("cli", () => {
  it("renders every default figure with exit 0 and nonzero sizes", () => {
    const cfgPath = path.join(dir, "figures.cfg");
    fs.writeFileSync(
      cfgPath,
      defaultFigureConfig(path.join(dir, "study.csv"),
        path.join(dir, "figs")),
    );
    expect(main(["--spec", cfgPath])).toBe(0);
    const files = fs.readdirSync(path.join(dir, "figs"));
    expect(files.length).toBeGreaterThanOrEqual(5);
    for (const f of files) {
      expect(fs.statSync(path.join(dir, "figs", f)).size).toBeGreaterThan(0);
    }
  });

  it("exits 1 when a column is missing", () => {
    const cfgPath = path.join(dir, "bad.cfg");
    fs.writeFileSync(cfgPath, [
      "[figure broken]",
      `input = ${path.join(dir, "study.csv")}`,
      "x = epsilon",
      "y = nonexistent",
      `out = ${path.join(dir, "broken.svg")}`,
    ].join("\n"));
    expect(main(["--spec", cfgPath])).toBe(1);
  });

  it("exits 1 on an unreadable config", () => {
    expect(main(["--spec", path.join(dir, "missing.cfg")])).toBe(1);
  });
});

describe("fitSlope", () => {
  it("recovers a power law exponent", () => {
    const pts = [0.08, 0.04, 0.02, 0.01].map((x) => ({
      x, y: 3.7 * x ** 1.5,
    }));
    expect(Math.abs(fitSlope(pts)! - 1.5)).toBeLessThan(1e-12);
  });

  it("returns null without enough positive data", () => {
    expect(fitSlope([{ x: 1, y: -1 }])).toBeNull();
  });
});

describe("renderPlot", () => {
  it("escapes markup in labels", () => {
    const svg = renderPlot(
      [{ label: "a<b", points: [{ x: 1, y: 2 }, { x: 2, y: 3 }] }],
      { title: 'x & "y"', xLabel: "<x>", yLabel: "y", logx: false,
        logy: false },
    );
    expect(svg).toContain("a&lt;b");
    expect(svg).toContain("x &amp; &quot;y&quot;");
  });
});
