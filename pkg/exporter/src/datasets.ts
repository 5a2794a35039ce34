/** Demo datasets: a separable 2-D Gaussian mixture and the bundled MNIST subset. */

import { Dataset } from "./mlp";
import { Rng } from "./rng";

export function toy2d(n: number, seed: number): Dataset {
  const rng = new Rng(seed);
  const inputs = new Float64Array(n * 2);
  const labels = new Int32Array(n);
  const std = 0.55;
  for (let i = 0; i < n; i++) {
    const label = rng.next() < 0.5 ? 0 : 1;
    const cx = label === 0 ? -1.1 : 1.1;
    const cy = label === 0 ? -0.9 : 0.9;
    inputs[2 * i] = cx + std * rng.normal();
    inputs[2 * i + 1] = cy + std * rng.normal();
    labels[i] = label;
  }
  return { inputs, labels, n, dim: 2, nClasses: 2 };
}

interface MnistDigit {
  length: number;
  get(index: number): number[];
}

interface MnistModule {
  [digit: number]: MnistDigit;
}

/**
 * The 10k-sample MNIST subset bundled with the `mnist` npm package
 * (~1000 per digit, 28x28 grayscale flattened to 784, values in [0, 1]),
 * deterministically shuffled and split.
 */
export function mnistSubset(seed: number, testFraction = 0.2): { train: Dataset; test: Dataset } {
  // eslint-disable-next-line @typescript-eslint/no-var-requires
  const mnist = require("mnist") as MnistModule;
  const rows: Array<{ pixels: number[]; label: number }> = [];
  for (let digit = 0; digit <= 9; digit++) {
    const bucket = mnist[digit];
    for (let i = 0; i < bucket.length; i++) {
      rows.push({ pixels: bucket.get(i), label: digit });
    }
  }
  const rng = new Rng(seed);
  const order = Array.from({ length: rows.length }, (_, i) => i);
  rng.shuffle(order);
  const nTest = Math.floor(rows.length * testFraction);
  const make = (indices: number[]): Dataset => {
    const n = indices.length;
    const inputs = new Float64Array(n * 784);
    const labels = new Int32Array(n);
    indices.forEach((idx, s) => {
      inputs.set(rows[idx].pixels, s * 784);
      labels[s] = rows[idx].label;
    });
    return { inputs, labels, n, dim: 784, nClasses: 10 };
  };
  return { train: make(order.slice(nTest)), test: make(order.slice(0, nTest)) };
}
