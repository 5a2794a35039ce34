/**
 * 2-D convolution and its lowering to a dense matrix.
 *
 * The certification engine is dense-only, so convolutional layers are
 * exported as the explicit (Toeplitz-structured) matrix that reproduces the
 * convolution on flattened inputs. Desk-scale inputs only; the matrix has
 * (outC * outH * outW) x (inC * H * W) entries.
 *
 * Layout: channel-major flattening, index = c * (H * W) + y * W + x.
 */

import { Matrix, matvec, zeros } from "./linalg";
import { Rng } from "./rng";

export interface Conv2d {
  inChannels: number;
  outChannels: number;
  height: number;              // input height
  width: number;               // input width
  kernel: number;              // square kernel
  stride: number;
  pad: number;                 // symmetric zero padding
  // weight[o][c][ky][kx], flattened row-major into a single array
  weight: Float64Array;
  bias: Float64Array;          // per output channel
}

export function outSize(conv: Conv2d): { outH: number; outW: number } {
  const outH = Math.floor((conv.height + 2 * conv.pad - conv.kernel) / conv.stride) + 1;
  const outW = Math.floor((conv.width + 2 * conv.pad - conv.kernel) / conv.stride) + 1;
  return { outH, outW };
}

export function randomConv(seed: number, spec: Omit<Conv2d, "weight" | "bias">): Conv2d {
  const rng = new Rng(seed);
  const nW = spec.outChannels * spec.inChannels * spec.kernel * spec.kernel;
  const weight = new Float64Array(nW);
  const scale = 1.0 / Math.sqrt(spec.inChannels * spec.kernel * spec.kernel);
  for (let i = 0; i < nW; i++) weight[i] = scale * rng.normal();
  const bias = new Float64Array(spec.outChannels);
  for (let i = 0; i < spec.outChannels; i++) bias[i] = 0.1 * rng.normal();
  return { ...spec, weight, bias };
}

function weightAt(conv: Conv2d, o: number, c: number, ky: number, kx: number): number {
  const k = conv.kernel;
  return conv.weight[((o * conv.inChannels + c) * k + ky) * k + kx];
}

/** Direct sliding-window convolution on a flattened input. */
export function convForward(conv: Conv2d, input: Float64Array): Float64Array {
  const { outH, outW } = outSize(conv);
  if (input.length !== conv.inChannels * conv.height * conv.width) {
    throw new Error(
      `conv input length ${input.length}, expected ${conv.inChannels * conv.height * conv.width}`);
  }
  const out = new Float64Array(conv.outChannels * outH * outW);
  for (let o = 0; o < conv.outChannels; o++) {
    for (let oy = 0; oy < outH; oy++) {
      for (let ox = 0; ox < outW; ox++) {
        let acc = conv.bias[o];
        for (let c = 0; c < conv.inChannels; c++) {
          for (let ky = 0; ky < conv.kernel; ky++) {
            const iy = oy * conv.stride + ky - conv.pad;
            if (iy < 0 || iy >= conv.height) continue;
            for (let kx = 0; kx < conv.kernel; kx++) {
              const ix = ox * conv.stride + kx - conv.pad;
              if (ix < 0 || ix >= conv.width) continue;
              acc += weightAt(conv, o, c, ky, kx)
                * input[c * conv.height * conv.width + iy * conv.width + ix];
            }
          }
        }
        out[(o * outH + oy) * outW + ox] = acc;
      }
    }
  }
  return out;
}

/** Dense matrix (and bias) reproducing convForward exactly on flattened inputs. */
export function densify(conv: Conv2d): { matrix: Matrix; bias: Float64Array } {
  const { outH, outW } = outSize(conv);
  const nOut = conv.outChannels * outH * outW;
  const nIn = conv.inChannels * conv.height * conv.width;
  const m = zeros(nOut, nIn);
  const bias = new Float64Array(nOut);
  for (let o = 0; o < conv.outChannels; o++) {
    for (let oy = 0; oy < outH; oy++) {
      for (let ox = 0; ox < outW; ox++) {
        const row = (o * outH + oy) * outW + ox;
        bias[row] = conv.bias[o];
        for (let c = 0; c < conv.inChannels; c++) {
          for (let ky = 0; ky < conv.kernel; ky++) {
            const iy = oy * conv.stride + ky - conv.pad;
            if (iy < 0 || iy >= conv.height) continue;
            for (let kx = 0; kx < conv.kernel; kx++) {
              const ix = ox * conv.stride + kx - conv.pad;
              if (ix < 0 || ix >= conv.width) continue;
              const col = c * conv.height * conv.width + iy * conv.width + ix;
              m.data[row * nIn + col] = weightAt(conv, o, c, ky, kx);
            }
          }
        }
      }
    }
  }
  return { matrix: m, bias };
}

/** Convenience check used by tests: max |direct - densified| over random inputs. */
export function densifyDiscrepancy(conv: Conv2d, nSamples: number, seed: number): number {
  const { matrix, bias } = densify(conv);
  const rng = new Rng(seed);
  let worst = 0.0;
  const nIn = conv.inChannels * conv.height * conv.width;
  for (let s = 0; s < nSamples; s++) {
    const x = new Float64Array(nIn);
    for (let i = 0; i < nIn; i++) x[i] = rng.uniform(-1, 1);
    const direct = convForward(conv, x);
    const dense = matvec(matrix, x, bias);
    for (let i = 0; i < direct.length; i++) {
      const d = Math.abs(direct[i] - dense[i]);
      if (d > worst) worst = d;
    }
  }
  return worst;
}
