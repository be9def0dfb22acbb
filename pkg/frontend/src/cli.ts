#!/usr/bin/env node
/** CLI: `rcdp-plot plot <figure-spec.json>` renders an SVG figure. */

import { readFileSync } from "node:fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { parseFigureSpec, render } from "./figure.js";

export async function main(argv: string[]): Promise<number> {
  let failed = false;
  await yargs(argv)
    .scriptName("rcdp-plot")
    .command(
      "plot <spec>",
      "render an SVG figure from a figure-spec JSON file",
      (y) => y.positional("spec", { type: "string", demandOption: true }),
      (args) => {
        try {
          const raw = JSON.parse(readFileSync(args.spec as string, "utf8"));
          const out = render(parseFigureSpec(raw));
          console.log(`wrote ${out}`);
        } catch (err) {
          console.error(`error: ${err instanceof Error ? err.message : err}`);
          failed = true;
        }
      },
    )
    .demandCommand(1)
    .strict()
    .fail((msg, err) => {
      console.error(`error: ${err ? err.message : msg}`);
      failed = true;
    })
    .exitProcess(false)
    .parseAsync();
  return failed ? 1 : 0;
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
