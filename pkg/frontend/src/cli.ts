/**
 * halfline-dd-figures --in <csv> --kind <decay|wavefunctions|heatmap> --out <svg>
 *
 * Writes the output file only on success; any schema violation is reported
 * with the offending column and leaves no file behind.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { FigureKind, render } from "./render.js";

interface Args {
  in?: string;
  kind?: string;
  out?: string;
  title?: string;
  xlabel?: string;
  ylabel?: string;
}

function parseArgs(argv: string[]): Args {
  const args: Args = {};
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith("--") || value === undefined) {
      throw new Error(`malformed arguments near '${flag}'`);
    }
    const key = flag.slice(2) as keyof Args;
    if (!["in", "kind", "out", "title", "xlabel", "ylabel"].includes(key)) {
      throw new Error(`unknown flag '${flag}'`);
    }
    args[key] = value;
  }
  return args;
}

export function main(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    if (!args.in || !args.kind || !args.out) {
      throw new Error("usage: --in data.csv --kind decay|wavefunctions|heatmap --out figure.svg");
    }
    const csvText = readFileSync(args.in, "utf-8");
    const svg = render({
      csvText,
      kind: args.kind as FigureKind,
      title: args.title,
      xlabel: args.xlabel,
      ylabel: args.ylabel,
    });
    writeFileSync(args.out, svg, "utf-8");
    process.stderr.write(`wrote ${args.out}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`halfline-dd-figures: error: ${(err as Error).message}\n`);
    return 2;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
