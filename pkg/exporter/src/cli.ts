/**
 * Exporter CLI.
 *
 *   train-demo --kind toy2d|mnist_mlp_small --seed N --out ckpt.json
 *   export --checkpoint ckpt.json --out model.json --manifest manifest.json
 *   demo --seed N --workdir DIR       (train + export + certify end to end)
 */

import { readFileSync, writeFileSync } from "node:fs";

import { runToyDemo } from "./demo";
import { canonicalJson, SourceCheckpoint, writeExport } from "./export";
import { trainDemo, DemoKind } from "./train";

function parseArgs(argv: string[]): { command: string; flags: Map<string, string> } {
  const [command, ...rest] = argv;
  const flags = new Map<string, string>();
  for (let i = 0; i < rest.length; i += 2) {
    if (!rest[i].startsWith("--") || i + 1 >= rest.length) {
      throw new Error(`bad arguments near '${rest[i]}'`);
    }
    flags.set(rest[i].slice(2), rest[i + 1]);
  }
  return { command, flags };
}

function need(flags: Map<string, string>, name: string): string {
  const v = flags.get(name);
  if (v === undefined) throw new Error(`missing --${name}`);
  return v;
}

export function main(argv: string[]): number {
  const { command, flags } = parseArgs(argv);
  if (command === "train-demo") {
    const kind = need(flags, "kind") as DemoKind;
    const seed = Number(need(flags, "seed"));
    const result = trainDemo(kind, seed);
    writeFileSync(need(flags, "out"), canonicalJson(result.checkpoint));
    for (const line of result.log) console.log(line);
    return 0;
  }
  if (command === "export") {
    const ckptPath = need(flags, "checkpoint");
    const ckpt = JSON.parse(readFileSync(ckptPath, "utf-8")) as SourceCheckpoint;
    const manifest = writeExport(ckpt, ckptPath, need(flags, "out"),
                                 need(flags, "manifest"));
    console.log(`exported ${manifest.layer_map.length} layers -> ${manifest.output}`);
    return 0;
  }
  if (command === "demo") {
    const summary = runToyDemo(Number(flags.get("seed") ?? "0"),
                               flags.get("workdir") ?? "demo_out");
    console.log(canonicalJson(summary));
    return 0;
  }
  console.error(`unknown command '${command}'; use train-demo, export, or demo`);
  return 2;
}

if (require.main === module) {
  try {
    process.exit(main(process.argv.slice(2)));
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    process.exit(1);
  }
}
