/**
 * Strict reader for the simulation harness CSV files.
 *
 * The harness writes plain comma-separated values (no quoting needed: cells
 * are numbers, booleans or bare words), optionally preceded by `#` stamp
 * lines. Columns must match the expected schema exactly — physics bugs are
 * supposed to surface in the simulation package, not get papered over here.
 */

export class SchemaError extends Error {}

export interface CsvData {
  comments: string[];
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string): CsvData {
  const comments: string[] = [];
  const lines = text.split(/\r\n|\n|\r/).filter((line) => line.length > 0);
  let i = 0;
  while (i < lines.length && lines[i].startsWith("#")) {
    comments.push(lines[i]);
    i += 1;
  }
  if (i >= lines.length) {
    throw new SchemaError("CSV has no header row");
  }
  const header = lines[i].split(",").map((c) => c.trim());
  const rows = lines.slice(i + 1).map((line, k) => {
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new SchemaError(
        `row ${k + 1} has ${cells.length} cells, expected ${header.length}`,
      );
    }
    return cells.map((c) => c.trim());
  });
  if (rows.length === 0) {
    throw new SchemaError("CSV contains a header but no data rows");
  }
  return { comments, header, rows };
}

/** Exact column-sequence check; names the first offending column. */
export function requireColumns(data: CsvData, expected: readonly string[], kind: string): void {
  for (let i = 0; i < Math.max(data.header.length, expected.length); i++) {
    const got = data.header[i];
    const want = expected[i];
    if (got !== want) {
      if (want === undefined) {
        throw new SchemaError(`${kind}: unexpected extra column '${got}'`);
      }
      if (got === undefined) {
        throw new SchemaError(`${kind}: missing column '${want}'`);
      }
      throw new SchemaError(
        `${kind}: column ${i + 1} is '${got}', expected '${want}'`,
      );
    }
  }
}

/** Numeric cell, with `inf` allowed where the harness writes it. */
export function num(cell: string, column: string, row: number): number {
  if (cell === "inf") return Infinity;
  const value = Number(cell);
  if (cell === "" || Number.isNaN(value)) {
    throw new SchemaError(
      `column '${column}' row ${row}: cannot parse '${cell}' as a number`,
    );
  }
  return value;
}

/** Column as numbers; empty cells map to null (absent fit overlays). */
export function column(
  data: CsvData,
  name: string,
): (number | null)[] {
  const idx = data.header.indexOf(name);
  return data.rows.map((cells, k) =>
    cells[idx] === "" ? null : num(cells[idx], name, k + 1),
  );
}
