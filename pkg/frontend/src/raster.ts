/**
 * BEV rasterization and tri-mode prior assembly, numerically mirroring the
 * native grid: row 0 front-most, column 0 left-most, cells set by
 * conservative segment traversal with gridline points on the floor side.
 * Heatmaps cross the boundary as C x H x W float32 buffers.
 */

import * as fs from "node:fs";

import { DEFAULT_RANGE, EgoPose, PerceptionRange } from "./geometry";
import { Layer, MapDecodeError, MapVector } from "./mapfile";
import { BoundMap } from "./store";

export type Mode = "non_prior" | "temporal_prior" | "temporal_map_fusion";

export interface RasterConfig {
  cell: number;
  range: PerceptionRange;
  classes: number;
  lineHalfwidth: number;
}

export const DEFAULT_RASTER: RasterConfig = {
  cell: 0.3,
  range: DEFAULT_RANGE,
  classes: 3,
  lineHalfwidth: 0,
};

export interface Heatmap {
  shape: [number, number, number];
  data: Float32Array; // row-major C x H x W
}

function intDim(extent: number, cell: number, name: string): number {
  const dim = extent / cell;
  if (Math.abs(dim - Math.round(dim)) > 1e-6) {
    throw new Error(`${name} side ${extent} is not an integer number of ${cell} m cells`);
  }
  return Math.round(dim);
}

export function gridShape(cfg: RasterConfig): [number, number, number] {
  return [
    cfg.classes,
    intDim(cfg.range.front + cfg.range.rear, cfg.cell, "long"),
    intDim(cfg.range.left + cfg.range.right, cfg.cell, "short"),
  ];
}

export function zeroHeatmap(cfg: RasterConfig): Heatmap {
  const shape = gridShape(cfg);
  return { shape, data: new Float32Array(shape[0] * shape[1] * shape[2]) };
}

/** Draw ego-frame vectors into a per-class binary occupancy grid. */
export function rasterize(vectors: MapVector[], cfg: RasterConfig = DEFAULT_RASTER): Heatmap {
  const heat = zeroHeatmap(cfg);
  const [, rows, cols] = heat.shape;
  const hw = cfg.lineHalfwidth;

  const set = (ch: number, r: number, c: number) => {
    for (let dr = -hw; dr <= hw; dr++) {
      for (let dc = -hw; dc <= hw; dc++) {
        const rr = r + dr;
        const cc = c + dc;
        if (rr >= 0 && rr < rows && cc >= 0 && cc < cols) {
          heat.data[(ch * rows + rr) * cols + cc] = 1;
        }
      }
    }
  };

  for (const v of vectors) {
    const ch = v.cls as number;
    if (ch >= cfg.classes) throw new Error(`class ${ch} does not fit a ${cfg.classes}-channel grid`);
    const n = v.points.length / 3;
    for (let s = 0; s + 1 < n; s++) {
      const u0 = (cfg.range.front - v.points[3 * s]) / cfg.cell;
      const u1 = (cfg.range.front - v.points[3 * (s + 1)]) / cfg.cell;
      const w0 = (cfg.range.left - v.points[3 * s + 1]) / cfg.cell;
      const w1 = (cfg.range.left - v.points[3 * (s + 1) + 1]) / cfg.cell;

      // parameters of every integer-gridline crossing along each axis
      const ts: number[] = [0, 1];
      for (const [a0, a1] of [
        [u0, u1],
        [w0, w1],
      ]) {
        const da = a1 - a0;
        if (da === 0) continue;
        const lo = Math.min(a0, a1);
        const hi = Math.max(a0, a1);
        const kStart = Math.ceil(lo);
        const kEnd = Math.floor(hi);
        for (let k = kStart; k <= kEnd; k++) {
          let t = (k - a0) / da;
          if (t < 0) t = 0;
          else if (t > 1) t = 1;
          ts.push(t);
        }
      }
      ts.sort((a, b) => a - b);
      for (let i = 0; i + 1 < ts.length; i++) {
        const tm = 0.5 * (ts[i] + ts[i + 1]);
        const r = Math.floor(u0 + tm * (u1 - u0));
        const c = Math.floor(w0 + tm * (w1 - w0));
        if (hw === 0) {
          if (r >= 0 && r < rows && c >= 0 && c < cols) {
            heat.data[(ch * rows + r) * cols + c] = 1;
          }
        } else {
          set(ch, r, c);
        }
      }
    }
  }
  return heat;
}

export interface PriorHeatmaps {
  ht: Heatmap;
  hm: Heatmap;
}

/**
 * Mode semantics over a bound map: non-prior yields two zero grids, the
 * temporal-prior mode zeroes the map heatmap, fusion rasterizes both layers.
 */
export function assemble(
  map: BoundMap,
  mode: Mode,
  pose: EgoPose,
  cfg: RasterConfig = DEFAULT_RASTER,
  strict3x3 = false,
): PriorHeatmaps {
  if (mode === "non_prior") {
    return { ht: zeroHeatmap(cfg), hm: zeroHeatmap(cfg) };
  }
  const ht = rasterize(map.retrieve(Layer.Temporal, pose, cfg.range, strict3x3), cfg);
  if (mode === "temporal_prior") {
    return { ht, hm: zeroHeatmap(cfg) };
  }
  const hm = rasterize(map.retrieve(Layer.Static, pose, cfg.range, strict3x3), cfg);
  return { ht, hm };
}

export function selectInferenceMode(temporalAvailable: boolean, mapAvailable: boolean): Mode {
  if (mapAvailable) return "temporal_map_fusion";
  if (temporalAvailable) return "temporal_prior";
  return "non_prior";
}

// -- heatmap container ("BEVH"): 16-byte header + float32 payload -------------

export function encodeHeatmap(heat: Heatmap): Buffer {
  const header = Buffer.alloc(16);
  header.write("BEVH", 0, "ascii");
  header.writeUInt32LE(heat.shape[0], 4);
  header.writeUInt32LE(heat.shape[1], 8);
  header.writeUInt32LE(heat.shape[2], 12);
  return Buffer.concat([header, Buffer.from(heat.data.buffer, heat.data.byteOffset, heat.data.byteLength)]);
}

export function decodeHeatmap(buf: Buffer): Heatmap {
  if (buf.length < 16) throw new MapDecodeError("truncated heatmap header", buf.length);
  if (buf.subarray(0, 4).toString("ascii") !== "BEVH") {
    throw new MapDecodeError("bad heatmap magic", 0);
  }
  const c = buf.readUInt32LE(4);
  const h = buf.readUInt32LE(8);
  const w = buf.readUInt32LE(12);
  const need = 16 + c * h * w * 4;
  if (buf.length !== need) {
    throw new MapDecodeError(`heatmap payload should be ${need} bytes, got ${buf.length}`, 16);
  }
  const data = new Float32Array(c * h * w);
  for (let i = 0; i < data.length; i++) data[i] = buf.readFloatLE(16 + i * 4);
  return { shape: [c, h, w], data };
}

export function readHeatmap(path: string): Heatmap {
  return decodeHeatmap(fs.readFileSync(path));
}

export function writeHeatmap(path: string, heat: Heatmap): void {
  fs.writeFileSync(path, encodeHeatmap(heat));
}
