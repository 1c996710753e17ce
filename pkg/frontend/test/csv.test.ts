import { describe, expect, it } from "vitest";

import { columnIndex, distinct, filterRows, numericPairs,
  parseCsv } from "../src/csv.js";

const SAMPLE = `experiment,epsilon,energy,phi_sup
study,0.08,4.15,0.0008
study,0.04,4.147,0.0002
other,0.04,,0.0003
`;

describe("parseCsv", () => {
  it("splits header and typed rows", () => {
    const t = parseCsv(SAMPLE);
    expect(t.header).toEqual(["experiment", "epsilon", "energy", "phi_sup"]);
    expect(t.rows).toHaveLength(3);
    expect(t.rows[0][0]).toBe("study");
    expect(t.rows[0][1]).toBe(0.08);
  });

  it("maps blank cells to null", () => {
    const t = parseCsv(SAMPLE);
    expect(t.rows[2][2]).toBeNull();
  });

  it("handles empty input", () => {
    const t = parseCsv("");
    expect(t.header).toEqual([]);
    expect(t.rows).toEqual([]);
  });
});

describe("columnIndex", () => {
  it("finds columns and names missing ones", () => {
    const t = parseCsv(SAMPLE);
    expect(columnIndex(t, "energy")).toBe(2);
    expect(() => columnIndex(t, "wall_time_s")).toThrowError(
      /missing column: wall_time_s/,
    );
  });
});

describe("numericPairs", () => {
  it("skips rows with blanks", () => {
    const t = parseCsv(SAMPLE);
    const pairs = numericPairs(t, "epsilon", "energy");
    expect(pairs).toEqual([
      { x: 0.08, y: 4.15 },
      { x: 0.04, y: 4.147 },
    ]);
  });
});

describe("grouping", () => {
  it("lists experiments in order and filters rows", () => {
    const t = parseCsv(SAMPLE);
    expect(distinct(t, "experiment")).toEqual(["study", "other"]);
    expect(filterRows(t, "experiment", "other").rows).toHaveLength(1);
  });
});
