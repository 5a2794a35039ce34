/**
 * Bridge to the certification engine: everything goes through its public
 * file formats and CLI (no shared code).
 */

import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export function engineCommand(): string {
  return process.env.CURVCERT_BIN ?? "curvcert";
}

export function runEngine(args: string[]): string {
  return execFileSync(engineCommand(), args, { encoding: "utf-8" });
}

/** Feature rows + labels in the engine's CSV data format. */
export function writeDataCsv(path: string, rows: number[][], labels: number[]): void {
  const lines = rows.map((row, i) => [...row, labels[i]].join(","));
  writeFileSync(path, lines.join("\n") + "\n");
}

/** Forward-evaluate a model file on input rows via the engine's eval command. */
export function engineLogits(modelPath: string, rows: number[][]): number[][] {
  const dir = mkdtempSync(join(tmpdir(), "curvcert-eval-"));
  const dataPath = join(dir, "inputs.csv");
  const outPath = join(dir, "logits.json");
  writeDataCsv(dataPath, rows, rows.map(() => 0));
  runEngine(["eval", "--model", modelPath, "--data", dataPath, "--out", outPath]);
  const doc = JSON.parse(readFileSync(outPath, "utf-8"));
  return doc.logits as number[][];
}

export interface CertifySummary {
  n: number;
  n_correct: number;
  n_certified: number;
  mean_radius: number | null;
  certified_accuracy: Record<string, number>;
}

export interface CertifyReport {
  summary: CertifySummary;
  samples: Array<{
    index: number;
    correct: boolean;
    certified: boolean;
    radius?: number | null;
  }>;
}

export function engineCertify(modelPath: string, dataPath: string, order: 0 | 1,
                              outPath: string): CertifyReport {
  runEngine(["certify", "--model", modelPath, "--data", dataPath,
             "--order", String(order), "--out", outPath]);
  return JSON.parse(readFileSync(outPath, "utf-8")) as CertifyReport;
}
