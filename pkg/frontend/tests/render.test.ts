import { mkdtempSync, readFileSync, existsSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { SchemaError, parseCsv, requireColumns } from "../src/csv.js";
import { render } from "../src/render.js";
import { main } from "../src/cli.js";

const FIXTURES = join(__dirname, "fixtures");
const zenoCsv = readFileSync(join(FIXTURES, "zeno.csv"), "utf-8");
const waveCsv = readFileSync(join(FIXTURES, "figure3.csv"), "utf-8");
const heatCsv = readFileSync(join(FIXTURES, "convergence.csv"), "utf-8");

describe("csv parsing", () => {
  it("keeps stamp comments and splits rows", () => {
    const data = parseCsv(zenoCsv);
    expect(data.comments[0]).toMatch(/^# zeno/);
    expect(data.header).toEqual(["t", "abs2rho01", "quad_fit", "exp_fit"]);
    expect(data.rows.length).toBeGreaterThan(10);
  });

  it("rejects empty input and headers without rows", () => {
    expect(() => parseCsv("")).toThrow(SchemaError);
    expect(() => parseCsv("t,abs2rho01,quad_fit,exp_fit\n")).toThrow(
      /no data rows/,
    );
  });

  it("names the offending column on mismatch", () => {
    const data = parseCsv("t,abs2rho01,quad,exp_fit\n0,1,1,1\n");
    expect(() =>
      requireColumns(data, ["t", "abs2rho01", "quad_fit", "exp_fit"], "decay"),
    ).toThrow(/column 3 is 'quad', expected 'quad_fit'/);
  });

  it("names missing and extra columns", () => {
    const short = parseCsv("t,abs2rho01\n0,1\n");
    expect(() =>
      requireColumns(short, ["t", "abs2rho01", "quad_fit", "exp_fit"], "decay"),
    ).toThrow(/missing column 'quad_fit'/);
    const long = parseCsv("t,abs2rho01,quad_fit,exp_fit,extra\n0,1,1,1,1\n");
    expect(() =>
      requireColumns(long, ["t", "abs2rho01", "quad_fit", "exp_fit"], "decay"),
    ).toThrow(/extra column 'extra'/);
  });
});

describe("renderers", () => {
  it("renders each kind to SVG", () => {
    for (const [kind, text] of [
      ["decay", zenoCsv],
      ["wavefunctions", waveCsv],
      ["heatmap", heatCsv],
    ] as const) {
      const svg = render({ csvText: text, kind });
      expect(svg.startsWith("<svg ")).toBe(true);
      expect(svg).toContain("</svg>");
    }
  });

  it("is byte-deterministic for identical input", () => {
    for (const [kind, text] of [
      ["decay", zenoCsv],
      ["wavefunctions", waveCsv],
      ["heatmap", heatCsv],
    ] as const) {
      expect(render({ csvText: text, kind })).toBe(
        render({ csvText: text, kind }),
      );
    }
  });

  it("plots only what the CSV contains (no physics)", () => {
    // scaling every density by 10 must change coordinates, nothing else
    const lines = waveCsv.split("\n");
    const header = lines.findIndex((l) => !l.startsWith("#"));
    const scaled = lines.map((line, i) => {
      if (i <= header || line === "") return line;
      const cells = line.split(",");
      cells[1] = String(Number(cells[1]) * 10);
      cells[2] = String(Number(cells[2]) * 10);
      return cells.join(",");
    });
    const a = render({ csvText: waveCsv, kind: "wavefunctions" });
    const b = render({ csvText: scaled.join("\n"), kind: "wavefunctions" });
    expect(a).not.toBe(b);
    expect(a.length).toBeGreaterThan(1000);
  });

  it("rejects schema mismatches across kinds", () => {
    expect(() => render({ csvText: zenoCsv, kind: "wavefunctions" })).toThrow(
      /wavefunctions: column 1 is 't'/,
    );
    expect(() => render({ csvText: waveCsv, kind: "decay" })).toThrow(
      SchemaError,
    );
    expect(() => render({ csvText: zenoCsv, kind: "nope" as never })).toThrow(
      /unknown figure kind/,
    );
  });

  it("marks divergent heatmap cells as inf", () => {
    const withInf =
      "dx,xmax_requested,xmax_effective,computed_2rho01,rel_err_percent,divergent,norm0,norm1\n" +
      "0.006,5.5,5.496,inf,inf,True,inf,inf\n" +
      "0.003,5.5,5.499,0.65,2.8,False,1.0,1.0\n";
    const svg = render({ csvText: withInf, kind: "heatmap" });
    expect(svg).toContain(">inf</text>");
    expect(svg).toContain("#111111");
  });

  it("rejects unparseable numeric cells with position", () => {
    const bad =
      "t,abs2rho01,quad_fit,exp_fit\n0.0,junk,1.0,1.0\n0.1,0.9,1.0,1.0\n";
    expect(() => render({ csvText: bad, kind: "decay" })).toThrow(
      /column 'abs2rho01' row 1/,
    );
  });
});

describe("cli", () => {
  it("writes SVG on success and returns 0", () => {
    const dir = mkdtempSync(join(tmpdir(), "hdfig-"));
    const out = join(dir, "zeno.svg");
    const code = main(["--in", join(FIXTURES, "zeno.csv"),
                       "--kind", "decay", "--out", out]);
    expect(code).toBe(0);
    expect(readFileSync(out, "utf-8")).toContain("</svg>");
  });

  it("identical invocations produce identical bytes", () => {
    const dir = mkdtempSync(join(tmpdir(), "hdfig-"));
    const a = join(dir, "a.svg");
    const b = join(dir, "b.svg");
    const args = ["--in", join(FIXTURES, "figure3.csv"), "--kind", "wavefunctions"];
    expect(main([...args, "--out", a])).toBe(0);
    expect(main([...args, "--out", b])).toBe(0);
    expect(readFileSync(a)).toEqual(readFileSync(b));
  });

  it("fails without writing a file on schema violations", () => {
    const dir = mkdtempSync(join(tmpdir(), "hdfig-"));
    const badCsv = join(dir, "bad.csv");
    writeFileSync(badCsv, "a,b\n1,2\n");
    const out = join(dir, "never.svg");
    const code = main(["--in", badCsv, "--kind", "decay", "--out", out]);
    expect(code).toBe(2);
    expect(existsSync(out)).toBe(false);
  });

  it("fails on empty CSV without writing a file", () => {
    const dir = mkdtempSync(join(tmpdir(), "hdfig-"));
    const emptyCsv = join(dir, "empty.csv");
    writeFileSync(emptyCsv, "");
    const out = join(dir, "never.svg");
    expect(main(["--in", emptyCsv, "--kind", "decay", "--out", out])).toBe(2);
    expect(existsSync(out)).toBe(false);
  });

  it("rejects unknown flags and incomplete usage", () => {
    expect(main(["--frobnicate", "x"])).toBe(2);
    expect(main(["--in", "somewhere.csv"])).toBe(2);
  });
});
