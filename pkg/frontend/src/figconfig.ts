/** Figure specs parsed from a flat key = value config with [figure ...]
 *  sections, mirroring the style of the solver's run configs. */

export interface FigureSpec {
  name: string;
  input: string;
  x: string;
  y: string[];
  logx: boolean;
  logy: boolean;
  out: string;
  /** optional pointwise transform of y before plotting */
  yTransform: "none" | "div_eps" | "div_eps2" | "abs_offset";
  yOffset: number;
  title: string;
}

const BOOL_KEYS = new Set(["logx", "logy"]);
const KNOWN_KEYS = new Set([
  "input", "x", "y", "logx", "logy", "out", "y_transform", "y_offset",
  "title",
]);

export function parseFigureConfig(text: string): FigureSpec[] {
  const specs: FigureSpec[] = [];
  let current: Partial<FigureSpec> & { name?: string } | null = null;

  const flush = () => {
    if (current === null) return;
    for (const key of ["input", "x", "y", "out"] as const) {
      if (current[key] === undefined) {
        throw new Error(
          `figure "${current.name}" is missing the "${key}" key`,
        );
      }
    }
    specs.push({
      name: current.name!,
      input: current.input!,
      x: current.x!,
      y: current.y!,
      logx: current.logx ?? false,
      logy: current.logy ?? false,
      out: current.out!,
      yTransform: current.yTransform ?? "none",
      yOffset: current.yOffset ?? 0,
      title: current.title ?? current.name!,
    });
  };

  for (const raw of text.split(/\r?\n/)) {
    const line = raw.trim();
    if (line === "" || line.startsWith("#") || line.startsWith(";")) continue;
    const section = line.match(/^\[figure\s+"?([^\]"]+)"?\]$/);
    if (section) {
      flush();
      current = { name: section[1] };
      continue;
    }
    if (line.startsWith("[")) {
      throw new Error(`unknown section: ${line}`);
    }
    const eq = line.indexOf("=");
    if (eq < 0 || current === null) {
      throw new Error(`cannot parse config line: ${line}`);
    }
    const key = line.slice(0, eq).trim();
    const value = line.slice(eq + 1).trim();
    if (!KNOWN_KEYS.has(key)) {
      throw new Error(`unknown key "${key}" in figure "${current.name}"`);
    }
    if (key === "y") {
      current.y = value.split(/\s+/);
    } else if (BOOL_KEYS.has(key)) {
      (current as Record<string, unknown>)[key] = value === "true";
    } else if (key === "y_transform") {
      if (!["none", "div_eps", "div_eps2", "abs_offset"].includes(value)) {
        throw new Error(`unknown y_transform "${value}"`);
      }
      current.yTransform = value as FigureSpec["yTransform"];
    } else if (key === "y_offset") {
      current.yOffset = Number(value);
    } else {
      (current as Record<string, unknown>)[key] = value;
    }
  }
  flush();
  if (specs.length === 0) {
    throw new Error("config defines no figures");
  }
  return specs;
}

/** Default figure set over the frozen study.csv schema. */
export function defaultFigureConfig(csvPath: string, outDir: string): string {
  return `# convergence figures over ${csvPath}
[figure phi_sup]
input = ${csvPath}
x = epsilon
y = phi_sup
logx = true
logy = true
out = ${outDir}/phi_sup.svg
title = remainder sup norm vs epsilon (log-log)

[figure hausdorff]
input = ${csvPath}
x = epsilon
y = hausdorff_over_eps
out = ${outDir}/hausdorff.svg
title = nodal distance / epsilon

[figure decay]
input = ${csvPath}
x = epsilon
y = decay_slope
out = ${outDir}/decay.svg
title = fitted tail decay slope

[figure mult_ratio]
input = ${csvPath}
x = epsilon
y = mult_ratio
out = ${outDir}/mult_ratio.svg
title = multiplicity ratio

[figure barrier_margins]
input = ${csvPath}
x = epsilon
y = barrier_margin_pos barrier_margin_neg
logx = true
logy = true
out = ${outDir}/barrier_margins.svg
title = barrier sign margins (log-log)

[figure energy_defect]
input = ${csvPath}
x = epsilon
y = energy
y_transform = abs_offset
y_offset = 4.146690742281142
logx = true
logy = true
out = ${outDir}/energy_defect.svg
title = |energy - 2 sigma0 |T0|| (log-log)
`;
}
