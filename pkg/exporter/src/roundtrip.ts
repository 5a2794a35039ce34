/**
 * Round-trip contract: the exported model, evaluated by the certification
 * engine, must reproduce the source checkpoint's forward pass to 1e-5.
 */

import { engineLogits } from "./engine";
import { maxAbsDiff } from "./linalg";
import { Rng } from "./rng";

export interface RoundtripResult {
  maxDiscrepancy: number;
  nSamples: number;
  worstInput: number[] | null;
  ok: boolean;
}

export function roundtripCheck(
  sourceForward: (x: Float64Array) => Float64Array,
  inputDim: number,
  modelPath: string,
  nSamples: number,
  seed: number,
  tolerance = 1e-5,
  inputRange: [number, number] = [-1.5, 1.5],
): RoundtripResult {
  const rng = new Rng(seed);
  const rows: number[][] = [];
  for (let s = 0; s < nSamples; s++) {
    const row: number[] = [];
    for (let j = 0; j < inputDim; j++) row.push(rng.uniform(inputRange[0], inputRange[1]));
    rows.push(row);
  }
  const engine = engineLogits(modelPath, rows);
  let worst = 0.0;
  let worstInput: number[] | null = null;
  rows.forEach((row, i) => {
    const source = sourceForward(Float64Array.from(row));
    const d = maxAbsDiff(source, Float64Array.from(engine[i]));
    if (d > worst) {
      worst = d;
      worstInput = row;
    }
  });
  return { maxDiscrepancy: worst, nSamples, worstInput, ok: worst < tolerance };
}
