/** Minimal CSV handling for the benchmark result/trace schemas. */

export class SchemaError extends Error {}

export interface Table {
  columns: string[];
  rows: Record<string, string>[];
}

/** Parse a header + comma-separated rows; no quoting in these schemas. */
export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty file");
  }
  const columns = lines[0].split(",");
  const rows = lines.slice(1).map((line) => {
    const cells = line.split(",");
    const row: Record<string, string> = {};
    columns.forEach((c, i) => {
      row[c] = cells[i] ?? "";
    });
    return row;
  });
  return { columns, rows };
}

export function requireColumns(table: Table, needed: string[]): void {
  for (const col of needed) {
    if (!table.columns.includes(col)) {
      throw new SchemaError(`missing column "${col}"`);
    }
  }
}

/** Concatenate tables that share an identical column list. */
export function concatTables(tables: Table[]): Table {
  const [first, ...rest] = tables;
  for (const t of rest) {
    if (t.columns.join(",") !== first.columns.join(",")) {
      throw new SchemaError("inputs have differing column sets");
    }
  }
  return { columns: first.columns, rows: tables.flatMap((t) => t.rows) };
}

export function median(values: number[]): number {
  const sorted = [...values].sort((a, b) => a - b);
  const mid = sorted.length >> 1;
  return sorted.length % 2 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2;
}
