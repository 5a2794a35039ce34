/**
 * Demo trainers with accuracy-floor contracts. Deterministic per seed; a
 * missed floor is a hard failure carrying the training log.
 */

import { mnistSubset, toy2d } from "./datasets";
import { accuracy, buildMlp, Checkpoint, Dataset, Mlp, toCheckpoint, train } from "./mlp";

export type DemoKind = "toy2d" | "mnist_mlp_small";

export interface DemoResult {
  checkpoint: Checkpoint;
  net: Mlp;
  trainAccuracy: number;
  testAccuracy: number | null;
  log: string[];
}

export const TOY2D_TRAIN_FLOOR = 0.95;
export const MNIST_TEST_FLOOR = 0.90;

function trainToy2d(seed: number): DemoResult {
  const data = toy2d(600, seed + 17);
  const net = buildMlp([2, 12, 2], seed, `toy2d-${seed}`);
  const log: string[] = [`toy2d: 600 samples, net 2-12-2 tanh, seed ${seed}`];
  const acc = train(net, data, {
    epochs: 60, batchSize: 32, learningRate: 5e-3, weightDecay: 1e-3, seed,
  });
  log.push(`train accuracy ${acc.toFixed(4)} (floor ${TOY2D_TRAIN_FLOOR})`);
  if (acc < TOY2D_TRAIN_FLOOR) {
    throw new Error(`toy2d training missed the accuracy floor:\n${log.join("\n")}`);
  }
  return { checkpoint: toCheckpoint(net), net, trainAccuracy: acc,
           testAccuracy: null, log };
}

function trainMnistSmall(seed: number): DemoResult {
  const { train: trainSet, test } = mnistSubset(seed + 29);
  const net = buildMlp([784, 64, 10], seed, `mnist-mlp-small-${seed}`);
  const log: string[] = [
    `mnist_mlp_small: ${trainSet.n} train / ${test.n} test from the bundled `
    + `10k subset, net 784-64-10 tanh, seed ${seed}`,
  ];
  const trainAcc = train(net, trainSet, {
    epochs: 6, batchSize: 128, learningRate: 2e-3, weightDecay: 1e-4, seed,
  });
  const testAcc = accuracy(net, test);
  log.push(`train accuracy ${trainAcc.toFixed(4)}, `
    + `test accuracy ${testAcc.toFixed(4)} (floor ${MNIST_TEST_FLOOR})`);
  if (testAcc < MNIST_TEST_FLOOR) {
    throw new Error(`mnist_mlp_small missed the accuracy floor:\n${log.join("\n")}`);
  }
  return { checkpoint: toCheckpoint(net), net, trainAccuracy: trainAcc,
           testAccuracy: testAcc, log };
}

export function trainDemo(kind: DemoKind, seed: number): DemoResult {
  if (kind === "toy2d") return trainToy2d(seed);
  if (kind === "mnist_mlp_small") return trainMnistSmall(seed);
  throw new Error(`unknown demo kind '${kind}'`);
}

export function heldoutToy2d(seed: number, n = 200): Dataset {
  return toy2d(n, seed + 9001);
}
