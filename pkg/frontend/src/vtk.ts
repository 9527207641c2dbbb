/** Minimal reader for the solver's legacy-ASCII VTK snapshots. */

import { readFileSync } from "node:fs";

export interface VtkPointData {
  points: Array<[number, number]>;
  scalars: Map<string, number[]>;
}

export function readVtk(path: string): VtkPointData {
  const lines = readFileSync(path, "utf-8").split(/\r?\n/);
  if (!lines[0]?.startsWith("# vtk DataFile Version")) {
    throw new Error(`${path}: not a legacy VTK file`);
  }
  const points: Array<[number, number]> = [];
  const scalars = new Map<string, number[]>();
  let i = 0;
  while (i < lines.length) {
    const line = lines[i].trim();
    if (line.startsWith("POINTS")) {
      const n = parseInt(line.split(/\s+/)[1], 10);
      for (let k = 0; k < n; k++) {
        const [x, y] = lines[++i].trim().split(/\s+/).map(Number);
        points.push([x, y]);
      }
    } else if (line.startsWith("SCALARS")) {
      const name = line.split(/\s+/)[1];
      i++; // LOOKUP_TABLE line
      const vals: number[] = [];
      while (vals.length < points.length && i + 1 < lines.length) {
        const tokens = lines[++i].trim();
        if (tokens.length === 0) continue;
        for (const tok of tokens.split(/\s+/)) vals.push(Number(tok));
      }
      scalars.set(name, vals);
    }
    i++;
  }
  if (points.length === 0) throw new Error(`${path}: no points found`);
  return { points, scalars };
}

/** Sample a scalar field along the horizontal line y = y0. */
export function lineout(
  data: VtkPointData,
  field: string,
  y0: number,
  tol?: number,
): Array<[number, number]> {
  const vals = data.scalars.get(field);
  if (!vals) {
    const known = [...data.scalars.keys()].join(", ");
    throw new Error(`field ${field} not in VTK file (known: ${known})`);
  }
  const ys = data.points.map((p) => p[1]);
  const span = Math.max(...ys) - Math.min(...ys);
  const eps = tol ?? 0.005 * span;
  const picked: Array<[number, number]> = [];
  data.points.forEach(([x, y], k) => {
    if (Math.abs(y - y0) <= eps) picked.push([x, vals[k]]);
  });
  if (picked.length === 0) {
    throw new Error(`no points within ${eps} of y = ${y0}`);
  }
  picked.sort((a, b) => a[0] - b[0]);
  return picked;
}
