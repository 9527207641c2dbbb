/** Server-side SVG rendering; pure function of the option object. */

import { writeFileSync } from "node:fs";
import { createRequire } from "node:module";
import type { FigureOption } from "./figures.js";

// echarts ships `export =` typings that node16 ESM resolution rejects;
// load the CJS build through createRequire and type the slice we use.
interface SsrChart {
  setOption(option: FigureOption): void;
  renderToSVGString(): string;
  dispose(): void;
}
interface EchartsModule {
  init(
    dom: null,
    theme: undefined,
    opts: { renderer: "svg"; ssr: boolean; width: number; height: number },
  ): SsrChart;
}

const requireCjs = createRequire(import.meta.url);
const echarts = requireCjs("echarts") as EchartsModule;

export function renderSvg(
  option: FigureOption,
  width = 900,
  height = 560,
): string {
  const chart = echarts.init(null, undefined, {
    renderer: "svg",
    ssr: true,
    width,
    height,
  });
  try {
    chart.setOption(option);
    return chart.renderToSVGString();
  } finally {
    chart.dispose();
  }
}

/** zrender numbers CSS classes with a process-global instance counter;
 * renumber them in order of first appearance so regenerated files are
 * byte-identical. */
export function normalizeSvgClasses(svg: string): string {
  const seen = new Map<string, string>();
  return svg.replace(/zr\d+-(cls-\d+|c\d+)/g, (name) => {
    let stable = seen.get(name);
    if (stable === undefined) {
      stable = `zr-id-${seen.size}`;
      seen.set(name, stable);
    }
    return stable;
  });
}

export function writeFigure(path: string, option: FigureOption): void {
  const svg = normalizeSvgClasses(renderSvg(option));
  if (svg.length === 0) {
    throw new Error("rendered an empty figure");
  }
  writeFileSync(path, svg);
}
