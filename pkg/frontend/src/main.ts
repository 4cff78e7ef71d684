import { writeFileSync } from "fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { SchemaError, readCsv } from "./csv.js";
import { PlotKind, render } from "./plots.js";

const KINDS: PlotKind[] = ["fidelity_vs_alpha", "maxnorm_vs_samples", "td_vs_n"];

export function run(argv: string[]): number {
  const args = yargs(argv)
    .command("render", "render a plot from a subsetdesign CSV", (cmd) =>
      cmd
        .option("kind", { type: "string", choices: KINDS, demandOption: true })
        .option("in", { type: "string", demandOption: true })
        .option("out", { type: "string", demandOption: true }),
    )
    .demandCommand(1)
    .strict()
    .exitProcess(false)
    .parseSync();

  const kind = args.kind as PlotKind;
  const input = args.in as string;
  const output = args.out as string;
  try {
    const table = readCsv(input);
    const result = render(kind, table);
    writeFileSync(output, result.svg);
    console.log(`wrote ${output}`);
    if (result.slope !== undefined) {
      console.log(`fitted log-log slope: ${result.slope.toFixed(4)}`);
    }
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 1;
    }
    if (err instanceof Error && "code" in err && (err as NodeJS.ErrnoException).code === "ENOENT") {
      console.error(`cannot read ${input}`);
      return 1;
    }
    throw err;
  }
}

const invokedDirectly = process.argv[1]?.endsWith("main.js");
if (invokedDirectly) {
  process.exit(run(hideBin(process.argv)));
}
