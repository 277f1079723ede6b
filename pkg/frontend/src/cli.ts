#!/usr/bin/env node
/**
 * plotviz <figure-type> --in <path> [--in <path> ...] --out <figure.svg>
 *
 * Figure types:
 *   trajectories  track CSVs (any mix of pde/ode sources, same config hash)
 *   convergence   a compare report JSON
 *   energy        a diagnostics CSV
 *
 * Exit codes: 0 ok, 1 schema or hash mismatch, 2 usage error.
 */

import { writeFileSync } from "fs";
import { HashMismatchError, SchemaError } from "./data.js";
import { plotConvergence, plotEnergy, plotTrajectories } from "./plots.js";

export function run(argv: string[]): number {
  const [figType, ...rest] = argv;
  const inputs: string[] = [];
  let out = "";
  for (let i = 0; i < rest.length; i++) {
    if (rest[i] === "--in") inputs.push(rest[++i]);
    else if (rest[i] === "--out") out = rest[++i];
    else {
      process.stderr.write(`unknown argument: ${rest[i]}\n`);
      return 2;
    }
  }
  if (!figType || !out || inputs.length === 0) {
    process.stderr.write(
      "usage: plotviz <trajectories|convergence|energy> --in <path> [--in <path> ...] --out <figure.svg>\n"
    );
    return 2;
  }
  try {
    let svg: string;
    if (figType === "trajectories") svg = plotTrajectories(inputs);
    else if (figType === "convergence") svg = plotConvergence(inputs[0]);
    else if (figType === "energy") svg = plotEnergy(inputs[0]);
    else {
      process.stderr.write(`unknown figure type: ${figType}\n`);
      return 2;
    }
    writeFileSync(out, svg);
    process.stdout.write(`wrote ${out}\n`);
    return 0;
  } catch (err) {
    if (err instanceof HashMismatchError || err instanceof SchemaError) {
      process.stderr.write(`refused: ${err.message}\n`);
      return 1;
    }
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(run(process.argv.slice(2)));
}
