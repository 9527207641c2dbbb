/** Figure builders: each returns an ECharts option object ready to render. */

import { ConvergenceTable, DiagSeries, observedOrders } from "./csv.js";

/** Plain option object consumed by echarts setOption. */
export type FigureOption = Record<string, unknown>;

const FLOOR = 1e-18; // log-scale stand-in for an exact zero

function baseOption(title: string): FigureOption {
  return {
    animation: false,
    title: { text: title, left: "center" },
    legend: { bottom: 0 },
    grid: { left: 70, right: 30, top: 50, bottom: 60 },
    tooltip: {},
  };
}

/** Semilog-y total-entropy drift |E(t) - E(0)| per labelled run. */
export function entropyErrorFigure(
  runs: Array<{ series: DiagSeries; label: string }>,
  title = "Total entropy error",
): FigureOption {
  const option = baseOption(title);
  option.xAxis = { type: "value", name: "t" };
  option.yAxis = { type: "log", name: "|entropy(t) - entropy(0)|" };
  option.series = runs.map(({ series, label }) => {
    const e0 = series.rows[0].entropy;
    return {
      type: "line" as const,
      name: label,
      showSymbol: false,
      data: series.rows
        .slice(1)
        .map((r) => [r.t, Math.max(Math.abs(r.entropy - e0), FLOOR)]),
    };
  });
  return option;
}

/** Relaxation parameter history; flat at 1 when relaxation is off. */
export function gammaFigure(
  runs: Array<{ series: DiagSeries; label: string }>,
  title = "Relaxation parameter",
): FigureOption {
  const option = baseOption(title);
  option.xAxis = { type: "value", name: "t" };
  option.yAxis = { type: "value", name: "gamma", scale: true };
  option.series = runs.map(({ series, label }) => ({
    type: "line" as const,
    name: label,
    showSymbol: false,
    data: series.rows.slice(1).map((r) => [r.t, r.gamma]),
  }));
  return option;
}

/** Solution profile along a horizontal cut. */
export function lineoutFigure(
  cuts: Array<{ data: Array<[number, number]>; label: string }>,
  field: string,
  y0: number,
): FigureOption {
  const option = baseOption(`${field} along y = ${y0}`);
  option.xAxis = { type: "value", name: "x" };
  option.yAxis = { type: "value", name: field, scale: true };
  option.series = cuts.map(({ data, label }) => ({
    type: "line" as const,
    name: label,
    showSymbol: cuts.length === 1,
    symbolSize: 3,
    data,
  }));
  return option;
}

/** Log-log error vs mesh size with the finest-pair slope annotated. */
export function convergenceFigure(
  tables: Array<{ table: ConvergenceTable; label: string }>,
  title = "Convergence",
): FigureOption {
  const option = baseOption(title);
  option.xAxis = { type: "log", name: "h" };
  option.yAxis = { type: "log", name: "L2 error" };
  option.series = tables.map(({ table, label }) => {
    const slopes = observedOrders(table.h, table.error);
    const slope = slopes.length > 0 ? slopes[slopes.length - 1] : NaN;
    const name = Number.isFinite(slope)
      ? `${label} (order ${slope.toFixed(2)})`
      : label;
    return {
      type: "line" as const,
      name,
      data: table.h.map((h, i) => [h, table.error[i]]),
    };
  });
  return option;
}
