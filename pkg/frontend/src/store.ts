/**
 * The bound map handle: an in-memory copy of a global map container with
 * tile-indexed retrieval and confidence-gated refreshment matching the
 * native semantics (half-tile adjacency, ego-frame range filter,
 * id-deduplicated output sorted by id).
 */

import * as fs from "node:fs";

import {
  DEFAULT_RANGE,
  EgoPose,
  PerceptionRange,
  egoToGlobal,
  floorMod,
  globalToEgo,
  intersectsRange,
} from "./geometry";
import { Layer, MapData, MapVector, decodeMap, tileKey } from "./mapfile";

export function tileIndex(e: number, n: number, l: number): [number, number] {
  if (!(l > 0)) throw new Error(`tile side ${l} must be positive`);
  return [Math.floor(e / l), Math.floor(n / l)];
}

function axisAdjacent(coord: number, l: number): number[] {
  const idx = Math.floor(coord / l);
  const frac = floorMod(coord, l);
  const half = l / 2;
  if (frac < half) return [idx - 1, idx];
  if (frac === half) return [idx];
  return [idx, idx + 1];
}

export function adjacentTiles(e: number, n: number, l: number): Array<[number, number]> {
  if (!(l > 0)) throw new Error(`tile side ${l} must be positive`);
  const out: Array<[number, number]> = [];
  for (const i of axisAdjacent(e, l)) {
    for (const j of axisAdjacent(n, l)) out.push([i, j]);
  }
  return out;
}

export class BoundMap {
  private data: MapData | null;
  private tileIds: [Map<string, Set<number>>, Map<string, Set<number>>];

  constructor(data: MapData) {
    this.data = data;
    this.tileIds = [new Map(), new Map()];
    for (const layer of [Layer.Temporal, Layer.Static]) {
      for (const [key, vecs] of data.layers[layer]) {
        this.tileIds[layer].set(key, new Set(vecs.map((v) => v.id)));
      }
    }
  }

  static open(path: string): BoundMap {
    return new BoundMap(decodeMap(fs.readFileSync(path)));
  }

  static fromBuffer(buf: Buffer): BoundMap {
    return new BoundMap(decodeMap(buf));
  }

  static empty(tileSide = 60): BoundMap {
    return new BoundMap({ tileSide, layers: [new Map(), new Map()] });
  }

  /** Invalidate the handle. Further calls throw; closing again is a no-op. */
  close(): void {
    this.data = null;
  }

  get closed(): boolean {
    return this.data === null;
  }

  private live(): MapData {
    if (this.data === null) throw new Error("map handle is closed");
    return this.data;
  }

  get tileSide(): number {
    return this.live().tileSide;
  }

  vectorCount(layer: Layer): number {
    let n = 0;
    for (const vecs of this.live().layers[layer].values()) n += vecs.length;
    return n;
  }

  /**
   * Ego-centric query: target + adjacent tiles (or the full 3x3
   * neighborhood), deduplicated by id, transformed to the ego frame,
   * filtered by the closed perception rectangle, sorted by id.
   */
  retrieve(
    layer: Layer,
    pose: EgoPose,
    range: PerceptionRange = DEFAULT_RANGE,
    strict3x3 = false,
  ): MapVector[] {
    const data = this.live();
    let tiles: Array<[number, number]>;
    if (strict3x3) {
      const [ti, tj] = tileIndex(pose.e, pose.n, data.tileSide);
      tiles = [];
      for (let di = -1; di <= 1; di++) {
        for (let dj = -1; dj <= 1; dj++) tiles.push([ti + di, tj + dj]);
      }
    } else {
      tiles = adjacentTiles(pose.e, pose.n, data.tileSide);
    }
    const store = data.layers[layer];
    const seen = new Set<number>();
    const out: MapVector[] = [];
    for (const [i, j] of tiles) {
      const vecs = store.get(tileKey(i, j));
      if (!vecs) continue;
      for (const v of vecs) {
        if (seen.has(v.id)) continue;
        seen.add(v.id);
        const ego = globalToEgo(v.points, pose);
        if (intersectsRange(ego, range)) {
          out.push({ id: v.id, cls: v.cls, confidence: v.confidence, points: ego });
        }
      }
    }
    out.sort((a, b) => a.id - b.id);
    return out;
  }

  /**
   * Store ego-frame predictions with confidence strictly above tau in the
   * temporal layer under the ego's tile, transformed to the global frame.
   */
  refresh(predictions: MapVector[], pose: EgoPose, tau: number): void {
    const data = this.live();
    const [i, j] = tileIndex(pose.e, pose.n, data.tileSide);
    const key = tileKey(i, j);
    for (const p of predictions) {
      if (!(p.confidence > tau)) continue;
      let ids = this.tileIds[Layer.Temporal].get(key);
      if (!ids) {
        ids = new Set();
        this.tileIds[Layer.Temporal].set(key, ids);
      }
      if (ids.has(p.id)) continue;
      ids.add(p.id);
      let vecs = data.layers[Layer.Temporal].get(key);
      if (!vecs) {
        vecs = [];
        data.layers[Layer.Temporal].set(key, vecs);
      }
      vecs.push({ id: p.id, cls: p.cls, confidence: p.confidence, points: egoToGlobal(p.points, pose) });
    }
  }
}
