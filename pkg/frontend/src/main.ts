#!/usr/bin/env node
/** CLI: render --spec figures.cfg | render --init study.csv out/
 *  Exit codes: 0 success, 1 failure (missing column, unreadable inputs),
 *  2 usage. */

import * as fs from "node:fs";

import { defaultFigureConfig, parseFigureConfig } from "./figconfig.js";
import { renderFigure } from "./render.js";

function usage(): never {
  console.error(
    "usage: render --spec figures.cfg\n" +
    "       render --init <study.csv> <out-dir>   (print a default config)",
  );
  process.exit(2);
}

export function main(argv: string[]): number {
  if (argv[0] === "--init") {
    if (argv.length !== 3) usage();
    process.stdout.write(defaultFigureConfig(argv[1], argv[2]));
    return 0;
  }
  if (argv[0] !== "--spec" || argv.length !== 2) usage();
  let specs;
  try {
    specs = parseFigureConfig(fs.readFileSync(argv[1], "utf8"));
  } catch (err) {
    console.error(`config error: ${(err as Error).message}`);
    return 1;
  }
  let failed = 0;
  for (const spec of specs) {
    try {
      const out = renderFigure(spec);
      const size = fs.statSync(out).size;
      console.log(`wrote ${out} (${size} bytes)`);
    } catch (err) {
      console.error(`figure "${spec.name}": ${(err as Error).message}`);
      failed += 1;
    }
  }
  return failed === 0 ? 0 : 1;
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("main.js") || entry.endsWith("aclab-render")) {
  process.exit(main(process.argv.slice(2)));
}
