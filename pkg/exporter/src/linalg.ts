/** Minimal dense matrix helpers on Float64Array (row-major). */

export interface Matrix {
  rows: number;
  cols: number;
  data: Float64Array;
}

export function zeros(rows: number, cols: number): Matrix {
  return { rows, cols, data: new Float64Array(rows * cols) };
}

export function fromNested(values: number[][]): Matrix {
  const rows = values.length;
  const cols = values[0].length;
  const m = zeros(rows, cols);
  for (let i = 0; i < rows; i++) {
    if (values[i].length !== cols) throw new Error("ragged matrix literal");
    for (let j = 0; j < cols; j++) m.data[i * cols + j] = values[i][j];
  }
  return m;
}

export function toNested(m: Matrix): number[][] {
  const out: number[][] = [];
  for (let i = 0; i < m.rows; i++) {
    out.push(Array.from(m.data.subarray(i * m.cols, (i + 1) * m.cols)));
  }
  return out;
}

/** y = M x (+ bias). */
export function matvec(m: Matrix, x: Float64Array, bias?: Float64Array): Float64Array {
  if (x.length !== m.cols) throw new Error(`matvec: ${x.length} vs ${m.cols}`);
  const y = new Float64Array(m.rows);
  for (let i = 0; i < m.rows; i++) {
    let s = bias ? bias[i] : 0.0;
    const off = i * m.cols;
    for (let j = 0; j < m.cols; j++) s += m.data[off + j] * x[j];
    y[i] = s;
  }
  return y;
}

/**
 * Batched affine map: X (n x in) -> X W^T + bias (n x out).
 * The inner loops run over the weight row contiguously.
 */
export function affineBatch(X: Float64Array, n: number, w: Matrix,
                            bias?: Float64Array): Float64Array {
  const out = new Float64Array(n * w.rows);
  for (let s = 0; s < n; s++) {
    const xOff = s * w.cols;
    const yOff = s * w.rows;
    for (let i = 0; i < w.rows; i++) {
      let acc = bias ? bias[i] : 0.0;
      const wOff = i * w.cols;
      for (let j = 0; j < w.cols; j++) acc += w.data[wOff + j] * X[xOff + j];
      out[yOff + i] = acc;
    }
  }
  return out;
}

export function maxAbsDiff(a: Float64Array | number[], b: Float64Array | number[]): number {
  if (a.length !== b.length) throw new Error("length mismatch");
  let worst = 0.0;
  for (let i = 0; i < a.length; i++) {
    const d = Math.abs((a as any)[i] - (b as any)[i]);
    if (d > worst) worst = d;
  }
  return worst;
}

export function argmax(v: Float64Array | number[]): number {
  let best = 0;
  for (let i = 1; i < v.length; i++) if (v[i] > v[best]) best = i;
  return best;
}
