/** Readers for the solver's documented CSV outputs. */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

/** Column schema of diag.csv, one row per accepted step. */
export const DIAG_COLUMNS = [
  "step", "t", "dt", "gamma", "entropy", "entropy_residual",
  "mass_0", "newton_iters", "alpha_min", "alpha_max",
] as const;

export type DiagRow = Record<(typeof DIAG_COLUMNS)[number], number>;

export interface DiagSeries {
  rows: DiagRow[];
  path: string;
}

export class SchemaError extends Error {
  constructor(path: string, detail: string) {
    super(`${path}: ${detail}`);
  }
}

function parseNumericCsv(path: string, text: string): Papa.ParseResult<Record<string, number>> {
  const parsed = Papa.parse<Record<string, number>>(text.trim(), {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new SchemaError(path, `parse error: ${parsed.errors[0].message}`);
  }
  return parsed;
}

export function readDiagCsv(path: string): DiagSeries {
  const text = readFileSync(path, "utf-8");
  const parsed = parseNumericCsv(path, text);
  const fields = parsed.meta.fields ?? [];
  const missing = DIAG_COLUMNS.filter((c) => !fields.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(
      path,
      `missing diag columns [${missing.join(", ")}], found [${fields.join(", ")}]`,
    );
  }
  if (parsed.data.length === 0) {
    throw new SchemaError(path, "no data rows");
  }
  return { rows: parsed.data as DiagRow[], path };
}

export interface ConvergenceTable {
  h: number[];
  error: number[];
  order: (number | null)[];
  path: string;
}

export function readConvergenceCsv(path: string): ConvergenceTable {
  const text = readFileSync(path, "utf-8");
  const parsed = parseNumericCsv(path, text);
  const fields = parsed.meta.fields ?? [];
  for (const col of ["h", "error"]) {
    if (!fields.includes(col)) {
      throw new SchemaError(path, `missing column ${col}`);
    }
  }
  if (parsed.data.length === 0) {
    throw new SchemaError(path, "no data rows");
  }
  const rows = parsed.data as Record<string, number | null>[];
  return {
    h: rows.map((r) => r.h as number),
    error: rows.map((r) => r.error as number),
    order: rows.map((r) => (r.order == null || Number.isNaN(r.order) ? null : r.order)),
    path,
  };
}

/** Pairwise observed orders log(e_i/e_{i+1}) / log(h_i/h_{i+1}). */
export function observedOrders(h: number[], error: number[]): number[] {
  const out: number[] = [];
  for (let i = 0; i + 1 < h.length; i++) {
    out.push(Math.log(error[i] / error[i + 1]) / Math.log(h[i] / h[i + 1]));
  }
  return out;
}
