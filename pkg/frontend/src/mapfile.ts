/**
 * Codec for the global map container (magic "UPPM"): little-endian header
 * (version u16, tile side f64) followed by two layer sections (temporal,
 * then static), each a tile table of vector records.
 */

import { Polyline } from "./geometry";

export enum MapClass {
  Divider = 0,
  PedCrossing = 1,
  Boundary = 2,
}

export const CLASS_NAMES: Record<MapClass, string> = {
  [MapClass.Divider]: "divider",
  [MapClass.PedCrossing]: "ped_crossing",
  [MapClass.Boundary]: "boundary",
};

export enum Layer {
  Temporal = 0,
  Static = 1,
}

export interface MapVector {
  id: number;
  cls: MapClass;
  confidence: number;
  /** flat [e, n, z] triples; global frame in storage, ego frame from retrieval */
  points: Polyline;
}

export type TileKey = string; // "i,j"

export interface MapData {
  tileSide: number;
  layers: [Map<TileKey, MapVector[]>, Map<TileKey, MapVector[]>];
}

export function tileKey(i: number, j: number): TileKey {
  return `${i},${j}`;
}

export class MapDecodeError extends Error {
  constructor(message: string, readonly offset: number) {
    super(`${message} (at byte ${offset})`);
  }
}

class Reader {
  offset = 0;
  private view: DataView;

  constructor(private buf: Buffer) {
    this.view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  }

  private need(n: number): number {
    if (this.offset + n > this.buf.length) {
      throw new MapDecodeError("truncated file", this.offset);
    }
    const at = this.offset;
    this.offset += n;
    return at;
  }

  bytes(n: number): Buffer {
    const at = this.need(n);
    return this.buf.subarray(at, at + n);
  }

  u8(): number {
    return this.view.getUint8(this.need(1));
  }

  u16(): number {
    return this.view.getUint16(this.need(2), true);
  }

  u32(): number {
    return this.view.getUint32(this.need(4), true);
  }

  u64(): number {
    const at = this.need(8);
    const v = this.view.getBigUint64(at, true);
    if (v > BigInt(Number.MAX_SAFE_INTEGER)) {
      throw new MapDecodeError(`u64 value ${v} exceeds safe integer range`, at);
    }
    return Number(v);
  }

  s64(): number {
    const at = this.need(8);
    const v = this.view.getBigInt64(at, true);
    if (v > BigInt(Number.MAX_SAFE_INTEGER) || v < BigInt(-Number.MAX_SAFE_INTEGER)) {
      throw new MapDecodeError(`s64 value ${v} exceeds safe integer range`, at);
    }
    return Number(v);
  }

  f64(): number {
    return this.view.getFloat64(this.need(8), true);
  }

  done(): boolean {
    return this.offset === this.buf.length;
  }
}

export function decodeMap(buf: Buffer): MapData {
  const r = new Reader(buf);
  if (!r.bytes(4).equals(Buffer.from("UPPM", "ascii"))) {
    throw new MapDecodeError("bad magic, not a global map file", 0);
  }
  const version = r.u16();
  if (version !== 1) throw new MapDecodeError(`unsupported version ${version}`, 4);
  const tileSide = r.f64();
  if (!(tileSide > 0) || !Number.isFinite(tileSide)) {
    throw new MapDecodeError(`invalid tile side ${tileSide}`, 6);
  }
  const layers: MapData["layers"] = [new Map(), new Map()];
  for (const layer of [Layer.Temporal, Layer.Static]) {
    const nTiles = r.u64();
    for (let t = 0; t < nTiles; t++) {
      const i = r.s64();
      const j = r.s64();
      const nVecs = r.u64();
      const vecs: MapVector[] = [];
      for (let v = 0; v < nVecs; v++) {
        const id = r.u64();
        const clsByte = r.u8();
        if (clsByte > 2) throw new MapDecodeError(`unknown class ${clsByte}`, r.offset - 1);
        const confidence = r.f64();
        const nPts = r.u32();
        const at = r.offset;
        if (nPts < 2) throw new MapDecodeError(`vector with ${nPts} points`, at);
        const raw = r.bytes(nPts * 24);
        const points = new Float64Array(nPts * 3);
        const view = new DataView(raw.buffer, raw.byteOffset, raw.byteLength);
        for (let k = 0; k < nPts * 3; k++) points[k] = view.getFloat64(k * 8, true);
        vecs.push({ id, cls: clsByte as MapClass, confidence, points });
      }
      layers[layer].set(tileKey(i, j), vecs);
    }
  }
  if (!r.done()) throw new MapDecodeError("trailing bytes after map data", r.offset);
  return { tileSide, layers };
}
