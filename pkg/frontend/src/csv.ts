/** Minimal reader for the frozen study.csv schema (comma separated, no
 *  quoting, blank cells for missing values). */

export interface Table {
  header: string[];
  /** one row per record; blank cells become null */
  rows: (number | string | null)[][];
}

export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    return { header: [], rows: [] };
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line) =>
    line.split(",").map((cell) => {
      if (cell === "") return null;
      const num = Number(cell);
      return Number.isFinite(num) && cell.trim() !== "" ? num : cell;
    }),
  );
  return { header, rows };
}

export function columnIndex(table: Table, name: string): number {
  const i = table.header.indexOf(name);
  if (i < 0) {
    throw new Error(`missing column: ${name}`);
  }
  return i;
}

/** Numeric (x, y) pairs of two columns, skipping rows with blanks. */
export function numericPairs(
  table: Table,
  xcol: string,
  ycol: string,
): { x: number; y: number }[] {
  const xi = columnIndex(table, xcol);
  const yi = columnIndex(table, ycol);
  const out: { x: number; y: number }[] = [];
  for (const row of table.rows) {
    const x = row[xi];
    const y = row[yi];
    if (typeof x === "number" && typeof y === "number") {
      out.push({ x, y });
    }
  }
  return out;
}

/** Distinct values of a string column, in first-appearance order. */
export function distinct(table: Table, col: string): string[] {
  const i = columnIndex(table, col);
  const seen: string[] = [];
  for (const row of table.rows) {
    const v = row[i];
    if (typeof v === "string" && !seen.includes(v)) {
      seen.push(v);
    }
  }
  return seen;
}

export function filterRows(
  table: Table,
  col: string,
  value: string,
): Table {
  const i = columnIndex(table, col);
  return { header: table.header, rows: table.rows.filter((r) => r[i] === value) };
}
