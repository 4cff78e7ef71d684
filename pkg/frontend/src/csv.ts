import { readFileSync } from "fs";
import Papa from "papaparse";

export class SchemaError extends Error {}

export interface CsvTable {
  comments: string[];
  header: string[];
  rows: Record<string, string>[];
}

/** Parse a CSV with `#`-prefixed metadata comments and a header row. */
export function parseCsvText(text: string): CsvTable {
  const lines = text.split(/\r?\n/);
  const comments = lines.filter((ln) => ln.startsWith("#"));
  const body = lines.filter((ln) => !ln.startsWith("#") && ln.trim() !== "").join("\n");
  if (body === "") {
    throw new SchemaError("no header row in CSV");
  }
  const parsed = Papa.parse<Record<string, string>>(body, {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`CSV parse error: ${parsed.errors[0].message}`);
  }
  const header = parsed.meta.fields ?? [];
  return { comments, header, rows: parsed.data };
}

export function readCsv(path: string): CsvTable {
  return parseCsvText(readFileSync(path, "utf8"));
}

/** Validate that every required column is present, naming the first one missing. */
export function requireColumns(table: CsvTable, required: string[], kind: string): void {
  for (const column of required) {
    if (!table.header.includes(column)) {
      throw new SchemaError(`${kind}: missing column '${column}' (got: ${table.header.join(",")})`);
    }
  }
}

export function numeric(row: Record<string, string>, column: string): number {
  const value = Number(row[column]);
  if (!Number.isFinite(value)) {
    throw new SchemaError(`non-numeric value '${row[column]}' in column '${column}'`);
  }
  return value;
}
