import { describe, expect, it } from "vitest";

import { convForward, densify, densifyDiscrepancy, outSize, randomConv } from "../src/conv";
import { matvec } from "../src/linalg";

const TINY_CONV = {
  inChannels: 1, outChannels: 4, height: 8, width: 8,
  kernel: 3, stride: 1, pad: 1,
};

describe("conv2d densification", () => {
  it("computes output sizes with stride and padding", () => {
    const conv = randomConv(0, TINY_CONV);
    expect(outSize(conv)).toEqual({ outH: 8, outW: 8 });
    const strided = randomConv(0, { ...TINY_CONV, stride: 2, pad: 1 });
    expect(outSize(strided)).toEqual({ outH: 4, outW: 4 });
  });

  it("dense matrix reproduces the sliding-window forward on 100 random inputs", () => {
    const conv = randomConv(7, TINY_CONV);
    expect(densifyDiscrepancy(conv, 100, 11)).toBeLessThan(1e-5);
  });

  it("handles stride-2 and multi-channel inputs exactly", () => {
    const conv = randomConv(3, {
      inChannels: 2, outChannels: 3, height: 6, width: 6,
      kernel: 3, stride: 2, pad: 0,
    });
    expect(densifyDiscrepancy(conv, 50, 4)).toBeLessThan(1e-5);
  });

  it("identity kernel produces a permutation-like matrix", () => {
    const conv = randomConv(0, {
      inChannels: 1, outChannels: 1, height: 4, width: 4,
      kernel: 1, stride: 1, pad: 0,
    });
    conv.weight[0] = 1.0;
    conv.bias[0] = 0.0;
    const { matrix, bias } = densify(conv);
    const x = Float64Array.from({ length: 16 }, (_, i) => i * 0.5);
    expect(Array.from(matvec(matrix, x, bias))).toEqual(Array.from(x));
    expect(Array.from(convForward(conv, x))).toEqual(Array.from(x));
  });

  it("rejects mis-sized inputs", () => {
    const conv = randomConv(0, TINY_CONV);
    expect(() => convForward(conv, new Float64Array(10))).toThrow(/input length/);
  });
});
