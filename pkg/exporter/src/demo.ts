/**
 * End-to-end demo: train the 2-D toy, export it, and certify held-out points
 * with the engine, comparing zeroth- and first-order radii.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { engineCertify, writeDataCsv } from "./engine";
import { canonicalJson, writeExport } from "./export";
import { logits } from "./mlp";
import { roundtripCheck } from "./roundtrip";
import { heldoutToy2d, trainDemo } from "./train";

export interface DemoSummary {
  trainAccuracy: number;
  roundtripDiscrepancy: number;
  heldoutN: number;
  certifiedFraction: number;      // held-out points with a positive order-1 radius
  meanRadiusOrder0: number | null;
  meanRadiusOrder1: number | null;
  firstOrderWins: boolean;
}

export function runToyDemo(seed: number, workdir: string): DemoSummary {
  mkdirSync(workdir, { recursive: true });
  const result = trainDemo("toy2d", seed);
  const ckptPath = join(workdir, "toy2d_checkpoint.json");
  writeFileSync(ckptPath, canonicalJson(result.checkpoint));
  const modelPath = join(workdir, "toy2d_model.json");
  const manifestPath = join(workdir, "toy2d_manifest.json");
  writeExport(result.checkpoint, ckptPath, modelPath, manifestPath);

  const rt = roundtripCheck((x) => logits(result.net, x), 2, modelPath, 100, seed + 1,
                            1e-5, [-2.5, 2.5]);
  if (!rt.ok) {
    throw new Error(`round-trip check failed: max discrepancy ${rt.maxDiscrepancy}`);
  }

  const heldout = heldoutToy2d(seed);
  const rows: number[][] = [];
  const labels: number[] = [];
  for (let i = 0; i < heldout.n; i++) {
    rows.push([heldout.inputs[2 * i], heldout.inputs[2 * i + 1]]);
    labels.push(heldout.labels[i]);
  }
  const dataPath = join(workdir, "toy2d_heldout.csv");
  writeDataCsv(dataPath, rows, labels);

  const rep0 = engineCertify(modelPath, dataPath, 0, join(workdir, "certs_order0.json"));
  const rep1 = engineCertify(modelPath, dataPath, 1, join(workdir, "certs_order1.json"));
  const certified = rep1.samples.filter(
    (s) => s.correct && typeof s.radius === "number" && (s.radius as number) > 0);
  const summary: DemoSummary = {
    trainAccuracy: result.trainAccuracy,
    roundtripDiscrepancy: rt.maxDiscrepancy,
    heldoutN: heldout.n,
    certifiedFraction: certified.length / heldout.n,
    meanRadiusOrder0: rep0.summary.mean_radius,
    meanRadiusOrder1: rep1.summary.mean_radius,
    firstOrderWins:
      rep0.summary.mean_radius !== null && rep1.summary.mean_radius !== null
      && rep1.summary.mean_radius > rep0.summary.mean_radius,
  };
  writeFileSync(join(workdir, "demo_summary.json"), canonicalJson(summary));
  return summary;
}
