#!/usr/bin/env node
/** Batch figure CLI over the solver's documented CSV/VTK outputs. */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { readConvergenceCsv, readDiagCsv } from "./csv.js";
import {
  convergenceFigure,
  entropyErrorFigure,
  gammaFigure,
  lineoutFigure,
} from "./figures.js";
import { writeFigure } from "./render.js";
import { lineout, readVtk } from "./vtk.js";

function pairLabels(inputs: string[], labels: string[] | undefined): string[] {
  if (!labels || labels.length === 0) return inputs;
  if (labels.length !== inputs.length) {
    throw new Error(`${inputs.length} inputs but ${labels.length} labels`);
  }
  return labels;
}

export function main(argv: string[]): number {
  try {
    yargs(argv)
      .scriptName("entroader-plots")
      .command(
        "entropy",
        "total-entropy drift vs time (semilog)",
        (y) =>
          y
            .option("in", { type: "string", array: true, demandOption: true })
            .option("label", { type: "string", array: true })
            .option("out", { type: "string", demandOption: true })
            .option("title", { type: "string", default: "Total entropy error" }),
        (args) => {
          const labels = pairLabels(args.in, args.label);
          const runs = args.in.map((p, i) => ({
            series: readDiagCsv(p),
            label: labels[i],
          }));
          writeFigure(args.out, entropyErrorFigure(runs, args.title));
        },
      )
      .command(
        "gamma",
        "relaxation parameter vs time",
        (y) =>
          y
            .option("in", { type: "string", array: true, demandOption: true })
            .option("label", { type: "string", array: true })
            .option("out", { type: "string", demandOption: true })
            .option("title", { type: "string", default: "Relaxation parameter" }),
        (args) => {
          const labels = pairLabels(args.in, args.label);
          const runs = args.in.map((p, i) => ({
            series: readDiagCsv(p),
            label: labels[i],
          }));
          writeFigure(args.out, gammaFigure(runs, args.title));
        },
      )
      .command(
        "lineout",
        "solution profile along y = const from a VTK snapshot",
        (y) =>
          y
            .option("in", { type: "string", array: true, demandOption: true })
            .option("label", { type: "string", array: true })
            .option("out", { type: "string", demandOption: true })
            .option("field", { type: "string", default: "rho" })
            .option("y", { type: "number", default: 0.0 }),
        (args) => {
          const labels = pairLabels(args.in, args.label);
          const cuts = args.in.map((p, i) => ({
            data: lineout(readVtk(p), args.field, args.y),
            label: labels[i],
          }));
          writeFigure(args.out, lineoutFigure(cuts, args.field, args.y));
        },
      )
      .command(
        "convergence",
        "log-log error vs mesh size with slope annotations",
        (y) =>
          y
            .option("in", { type: "string", array: true, demandOption: true })
            .option("label", { type: "string", array: true })
            .option("out", { type: "string", demandOption: true })
            .option("title", { type: "string", default: "Convergence" }),
        (args) => {
          const labels = pairLabels(args.in, args.label);
          const tables = args.in.map((p, i) => ({
            table: readConvergenceCsv(p),
            label: labels[i],
          }));
          writeFigure(args.out, convergenceFigure(tables, args.title));
        },
      )
      .demandCommand(1)
      .strict()
      .exitProcess(false)
      .fail((msg, err) => {
        throw err ?? new Error(msg);
      })
      .parseSync();
    return 0;
  } catch (err) {
    console.error(`entroader-plots: ${(err as Error).message}`);
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(hideBin(process.argv)));
}
