/**
 * A tiny dense-network trainer: tanh MLPs with optional residual (skip)
 * connections, softmax cross-entropy loss, Adam updates. Just enough to
 * produce realistic weights for the certification demos; deliberately not
 * a general framework.
 */

import { Matrix, affineBatch, argmax, fromNested, toNested, zeros } from "./linalg";
import { Rng } from "./rng";

export type ActivationName = "tanh" | null;

export interface DenseLayer {
  weight: Matrix;              // (out x in)
  bias: Float64Array;
  activation: ActivationName;  // null = affine (logit head)
  skip?: Matrix;               // optional residual path (out x in)
}

export interface Mlp {
  layers: DenseLayer[];
  inputDim: number;
  nClasses: number;
  name: string;
}

export interface Dataset {
  inputs: Float64Array;        // (n x dim), row-major
  labels: Int32Array;
  n: number;
  dim: number;
  nClasses: number;
}

export function buildMlp(widths: number[], seed: number, name: string,
                         residualHidden = false): Mlp {
  const rng = new Rng(seed);
  const layers: DenseLayer[] = [];
  for (let k = 0; k < widths.length - 1; k++) {
    const nIn = widths[k];
    const nOut = widths[k + 1];
    const w = zeros(nOut, nIn);
    const scale = 1.0 / Math.sqrt(nIn);
    for (let i = 0; i < w.data.length; i++) w.data[i] = scale * rng.normal();
    const isHead = k === widths.length - 2;
    let skip: Matrix | undefined;
    if (residualHidden && !isHead && nIn === nOut) {
      skip = zeros(nOut, nIn);
      for (let i = 0; i < nOut; i++) skip.data[i * nIn + i] = 1.0;
    }
    layers.push({
      weight: w,
      bias: new Float64Array(nOut),
      activation: isHead ? null : "tanh",
      skip,
    });
  }
  return { layers, inputDim: widths[0], nClasses: widths[widths.length - 1], name };
}

/** Batched forward pass; returns per-layer outputs (incl. the input).
 *  Layer semantics match the certification engine: out = skip x + act(W x + b). */
export function forwardTrace(net: Mlp, X: Float64Array, n: number): Float64Array[] {
  const trace: Float64Array[] = [X];
  let cur = X;
  for (const layer of net.layers) {
    const z = affineBatch(cur, n, layer.weight, layer.bias);
    if (layer.activation === "tanh") {
      for (let i = 0; i < z.length; i++) z[i] = Math.tanh(z[i]);
    }
    if (layer.skip) {
      const s = affineBatch(cur, n, layer.skip);
      for (let i = 0; i < z.length; i++) z[i] += s[i];
    }
    trace.push(z);
    cur = z;
  }
  return trace;
}

export function logits(net: Mlp, x: Float64Array): Float64Array {
  const trace = forwardTrace(net, x, 1);
  return trace[trace.length - 1];
}

export function accuracy(net: Mlp, data: Dataset): number {
  const out = forwardTrace(net, data.inputs, data.n);
  const scores = out[out.length - 1];
  let hits = 0;
  for (let s = 0; s < data.n; s++) {
    const row = scores.subarray(s * data.nClasses, (s + 1) * data.nClasses);
    if (argmax(row) === data.labels[s]) hits++;
  }
  return hits / data.n;
}

export interface TrainOptions {
  epochs: number;
  batchSize: number;
  learningRate: number;
  weightDecay: number;         // keeps weights (hence curvature bounds) modest
  seed: number;
}

interface AdamState {
  m: Float64Array;
  v: Float64Array;
}

/** Softmax cross-entropy Adam training, in place. Returns final train accuracy. */
export function train(net: Mlp, data: Dataset, opts: TrainOptions): number {
  const rng = new Rng(opts.seed ^ 0x5eed);
  const beta1 = 0.9;
  const beta2 = 0.999;
  const eps = 1e-8;
  const states = new Map<Float64Array, AdamState>();
  const stateFor = (p: Float64Array): AdamState => {
    let s = states.get(p);
    if (!s) {
      s = { m: new Float64Array(p.length), v: new Float64Array(p.length) };
      states.set(p, s);
    }
    return s;
  };
  let step = 0;
  const adam = (p: Float64Array, g: Float64Array) => {
    const s = stateFor(p);
    const b1c = 1.0 - Math.pow(beta1, step);
    const b2c = 1.0 - Math.pow(beta2, step);
    for (let i = 0; i < p.length; i++) {
      const grad = g[i];
      s.m[i] = beta1 * s.m[i] + (1 - beta1) * grad;
      s.v[i] = beta2 * s.v[i] + (1 - beta2) * grad * grad;
      p[i] -= opts.learningRate * (s.m[i] / b1c) / (Math.sqrt(s.v[i] / b2c) + eps);
    }
  };

  const order = Array.from({ length: data.n }, (_, i) => i);
  const nc = data.nClasses;
  for (let epoch = 0; epoch < opts.epochs; epoch++) {
    rng.shuffle(order);
    for (let start = 0; start < data.n; start += opts.batchSize) {
      const idx = order.slice(start, start + opts.batchSize);
      const b = idx.length;
      const X = new Float64Array(b * data.dim);
      for (let s = 0; s < b; s++) {
        X.set(data.inputs.subarray(idx[s] * data.dim, (idx[s] + 1) * data.dim),
              s * data.dim);
      }
      const trace = forwardTrace(net, X, b);
      const scores = trace[trace.length - 1];

      // softmax cross-entropy gradient at the logits
      let delta: Float64Array = new Float64Array(b * nc);
      for (let s = 0; s < b; s++) {
        const row = scores.subarray(s * nc, (s + 1) * nc);
        let mx = row[0];
        for (let i = 1; i < nc; i++) if (row[i] > mx) mx = row[i];
        let z = 0.0;
        for (let i = 0; i < nc; i++) z += Math.exp(row[i] - mx);
        for (let i = 0; i < nc; i++) {
          delta[s * nc + i] = Math.exp(row[i] - mx) / z / b;
        }
        delta[s * nc + data.labels[idx[s]]] -= 1.0 / b;
      }

      step++;
      // backward through the stack; out = skip x + act(z), so the skip path
      // carries the raw output delta while the weight path carries act'(z)
      for (let k = net.layers.length - 1; k >= 0; k--) {
        const layer = net.layers[k];
        const inp = trace[k];
        const out = trace[k + 1];
        const nIn = layer.weight.cols;
        const nOut = layer.weight.rows;
        const deltaOut = layer.skip ? delta.slice() : null;
        if (layer.activation === "tanh") {
          const skipOut = layer.skip ? affineBatch(inp, b, layer.skip) : null;
          for (let s = 0; s < b; s++) {
            for (let i = 0; i < nOut; i++) {
              const a = skipOut
                ? out[s * nOut + i] - skipOut[s * nOut + i]
                : out[s * nOut + i];
              delta[s * nOut + i] *= 1.0 - a * a;
            }
          }
        }
        const gw = new Float64Array(nOut * nIn);
        const gb = new Float64Array(nOut);
        for (let s = 0; s < b; s++) {
          for (let i = 0; i < nOut; i++) {
            const d = delta[s * nOut + i];
            gb[i] += d;
            const wOff = i * nIn;
            const xOff = s * nIn;
            for (let j = 0; j < nIn; j++) gw[wOff + j] += d * inp[xOff + j];
          }
        }
        if (opts.weightDecay > 0) {
          for (let i = 0; i < gw.length; i++) {
            gw[i] += opts.weightDecay * layer.weight.data[i];
          }
        }
        let nextDelta: Float64Array | null = null;
        if (k > 0) {
          nextDelta = new Float64Array(b * nIn);
          for (let s = 0; s < b; s++) {
            for (let i = 0; i < nOut; i++) {
              const d = delta[s * nOut + i];
              if (d === 0) continue;
              const wOff = i * nIn;
              for (let j = 0; j < nIn; j++) {
                nextDelta[s * nIn + j] += d * layer.weight.data[wOff + j];
              }
            }
            if (layer.skip && deltaOut) {
              for (let i = 0; i < nOut; i++) {
                const d = deltaOut[s * nOut + i];
                if (d === 0) continue;
                const sOff = i * nIn;
                for (let j = 0; j < nIn; j++) {
                  nextDelta[s * nIn + j] += d * layer.skip.data[sOff + j];
                }
              }
            }
          }
        }
        adam(layer.weight.data, gw);
        adam(layer.bias, gb);
        if (nextDelta) delta = nextDelta;
      }
    }
  }
  return accuracy(net, data);
}

/** JSON checkpoint: the exporter's "source framework" weight dump. */
export interface CheckpointLayer {
  kind: "dense";
  weight: number[][];
  bias: number[];
  activation: ActivationName;
  skip?: number[][];
}

export interface Checkpoint {
  kind: "mlp-checkpoint";
  name: string;
  inputDim: number;
  nClasses: number;
  layers: CheckpointLayer[];
}

export function toCheckpoint(net: Mlp): Checkpoint {
  return {
    kind: "mlp-checkpoint",
    name: net.name,
    inputDim: net.inputDim,
    nClasses: net.nClasses,
    layers: net.layers.map((l) => ({
      kind: "dense",
      weight: toNested(l.weight),
      bias: Array.from(l.bias),
      activation: l.activation,
      ...(l.skip ? { skip: toNested(l.skip) } : {}),
    })),
  };
}

export function fromCheckpoint(doc: Checkpoint): Mlp {
  return {
    name: doc.name,
    inputDim: doc.inputDim,
    nClasses: doc.nClasses,
    layers: doc.layers.map((l) => ({
      weight: fromNested(l.weight),
      bias: Float64Array.from(l.bias),
      activation: l.activation,
      skip: l.skip ? fromNested(l.skip) : undefined,
    })),
  };
}
