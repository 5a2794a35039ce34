/**
 * Converts source checkpoints into the certification engine's model format.
 *
 * Dense layers pass through; conv2d layers are densified to the explicit
 * matrix. Every source layer maps to exactly one block, or the export fails
 * naming the layer. The manifest records the mapping, the activation
 * mapping, and the round-trip tolerance contract.
 */

import { writeFileSync } from "node:fs";

import { Conv2d, convForward, densify, outSize } from "./conv";
import { fromNested, matvec, toNested } from "./linalg";
import { ActivationName, Checkpoint, CheckpointLayer } from "./mlp";

export const MODEL_FORMAT_VERSION = 1;
export const ROUNDTRIP_TOLERANCE = 1e-5;

export interface ConvCheckpointLayer {
  kind: "conv2d";
  inChannels: number;
  outChannels: number;
  height: number;
  width: number;
  kernel: number;
  stride: number;
  pad: number;
  weight: number[];            // [o][c][ky][kx] flattened row-major
  bias: number[];
  activation: ActivationName;
}

export type SourceLayer = CheckpointLayer | ConvCheckpointLayer | { kind: string };

export interface SourceCheckpoint {
  kind: "mlp-checkpoint" | "arch-checkpoint";
  name: string;
  inputDim: number;
  nClasses: number;
  layers: SourceLayer[];
}

export interface ModelBlock {
  H: number[][] | null;
  G: number[][] | null;
  W: number[][];
  bias: number[] | null;
  activation: string | null;
}

export interface ModelFile {
  format_version: number;
  input_dim: number;
  metadata: { name: string; n_classes: number | null };
  blocks: ModelBlock[];
}

export interface ManifestEntry {
  source_layer: number;
  source_kind: string;
  block: number;
  note: string;
}

export interface ExportManifest {
  source: string;
  output: string;
  layer_map: ManifestEntry[];
  activation_map: Record<string, string>;
  roundtrip_tolerance: number;
}

/** JSON with sorted keys, so identical exports are byte-identical. */
export function canonicalJson(value: unknown): string {
  const sort = (v: unknown): unknown => {
    if (Array.isArray(v)) return v.map(sort);
    if (v !== null && typeof v === "object") {
      const entries = Object.entries(v as Record<string, unknown>)
        .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0));
      return Object.fromEntries(entries.map(([k, val]) => [k, sort(val)]));
    }
    return v;
  };
  return JSON.stringify(sort(value), null, 2) + "\n";
}

function convToBlock(layer: ConvCheckpointLayer): { block: ModelBlock; note: string } {
  const conv: Conv2d = {
    inChannels: layer.inChannels,
    outChannels: layer.outChannels,
    height: layer.height,
    width: layer.width,
    kernel: layer.kernel,
    stride: layer.stride,
    pad: layer.pad,
    weight: Float64Array.from(layer.weight),
    bias: Float64Array.from(layer.bias),
  };
  const { matrix, bias } = densify(conv);
  const { outH, outW } = outSize(conv);
  return {
    block: {
      H: null,
      G: null,
      W: toNested(matrix),
      bias: Array.from(bias),
      activation: layer.activation,
    },
    note: `conv2d(${layer.outChannels}x${layer.kernel}x${layer.kernel},`
      + ` stride ${layer.stride}, pad ${layer.pad}) densified to `
      + `${matrix.rows}x${matrix.cols} over ${outH}x${outW} outputs`,
  };
}

export function exportCheckpoint(ckpt: SourceCheckpoint, sourcePath: string,
                                 outputPath: string): { model: ModelFile; manifest: ExportManifest } {
  const blocks: ModelBlock[] = [];
  const layerMap: ManifestEntry[] = [];
  const activationMap: Record<string, string> = {};
  ckpt.layers.forEach((layer, idx) => {
    if (layer.kind === "dense") {
      const dense = layer as CheckpointLayer;
      blocks.push({
        H: dense.skip ?? null,
        G: null,
        W: dense.weight,
        bias: dense.bias,
        activation: dense.activation,
      });
      layerMap.push({
        source_layer: idx, source_kind: "dense", block: blocks.length - 1,
        note: dense.skip ? "dense with residual skip path" : "dense passthrough",
      });
    } else if (layer.kind === "conv2d") {
      const { block, note } = convToBlock(layer as ConvCheckpointLayer);
      blocks.push(block);
      layerMap.push({
        source_layer: idx, source_kind: "conv2d", block: blocks.length - 1, note,
      });
    } else {
      throw new Error(
        `unsupported layer kind '${layer.kind}' at layers[${idx}]; `
        + `supported kinds: dense, conv2d`);
    }
    const act = (layer as { activation?: string | null }).activation;
    if (act) activationMap[act] = act;   // names pass through verbatim
  });
  const model: ModelFile = {
    format_version: MODEL_FORMAT_VERSION,
    input_dim: ckpt.inputDim,
    metadata: { name: ckpt.name, n_classes: ckpt.nClasses },
    blocks,
  };
  const manifest: ExportManifest = {
    source: sourcePath,
    output: outputPath,
    layer_map: layerMap,
    activation_map: activationMap,
    roundtrip_tolerance: ROUNDTRIP_TOLERANCE,
  };
  return { model, manifest };
}

export function writeExport(ckpt: SourceCheckpoint, sourcePath: string,
                            outputPath: string, manifestPath: string): ExportManifest {
  const { model, manifest } = exportCheckpoint(ckpt, sourcePath, outputPath);
  writeFileSync(outputPath, canonicalJson(model));
  writeFileSync(manifestPath, canonicalJson(manifest));
  return manifest;
}

/** Source-framework forward pass for any supported checkpoint (no densification). */
export function sourceForward(ckpt: SourceCheckpoint, x: Float64Array): Float64Array {
  let cur = x;
  ckpt.layers.forEach((layer, idx) => {
    if (layer.kind === "dense") {
      const dense = layer as CheckpointLayer;
      const w = fromNested(dense.weight);
      const z = matvec(w, cur, Float64Array.from(dense.bias));
      const a = dense.activation === "tanh" ? z.map(Math.tanh) : z;
      if (dense.skip) {
        const s = matvec(fromNested(dense.skip), cur);
        for (let i = 0; i < a.length; i++) a[i] += s[i];
      }
      cur = a;
    } else if (layer.kind === "conv2d") {
      const c = layer as ConvCheckpointLayer;
      const conv: Conv2d = {
        inChannels: c.inChannels, outChannels: c.outChannels,
        height: c.height, width: c.width, kernel: c.kernel,
        stride: c.stride, pad: c.pad,
        weight: Float64Array.from(c.weight),
        bias: Float64Array.from(c.bias),
      };
      const z = convForward(conv, cur);
      cur = c.activation === "tanh" ? z.map(Math.tanh) : z;
    } else {
      throw new Error(`unsupported layer kind '${layer.kind}' at layers[${idx}]`);
    }
  });
  return cur;
}
