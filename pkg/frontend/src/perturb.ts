/**
 * Seeded map-corruption operators: instance-level displacement / addition /
 * deletion and frame-level displacement / rotation / scaling, with the same
 * distribution laws as the native implementation.
 *
 * The random stream is this package's own splitmix64-based generator, so a
 * seed reproduces a corruption bit-identically across runs of this binding,
 * but the streams are not interchangeable with the native library's.
 */

import { DEFAULT_RANGE, PerceptionRange } from "./geometry";
import { MapVector } from "./mapfile";

export interface PerturbationSpec {
  seed: number;
  instDispRange: number;
  instSelectProb: number;
  addMax: number;
  delMax: number;
  frameDispRange: number;
  frameRotRange: number; // degrees
  frameScaleLo: number;
  frameScaleHi: number;
}

export const DEFAULT_SPEC: PerturbationSpec = {
  seed: 0,
  instDispRange: 6,
  instSelectProb: 0.5,
  addMax: 10,
  delMax: 10,
  frameDispRange: 6,
  frameRotRange: 15,
  frameScaleLo: 0.8,
  frameScaleHi: 1.2,
};

/** splitmix64 over BigInt state; uniform doubles take the top 53 bits. */
export class Rng {
  private state: bigint;

  constructor(seed: number) {
    this.state = BigInt.asUintN(64, BigInt(Math.floor(seed)));
  }

  private next(): bigint {
    this.state = BigInt.asUintN(64, this.state + 0x9e3779b97f4a7c15n);
    let z = this.state;
    z = BigInt.asUintN(64, (z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n);
    z = BigInt.asUintN(64, (z ^ (z >> 27n)) * 0x94d049bb133111ebn);
    return z ^ (z >> 31n);
  }

  /** uniform in [0, 1) */
  random(): number {
    return Number(this.next() >> 11n) / 9007199254740992;
  }

  uniform(lo: number, hi: number): number {
    return lo + (hi - lo) * this.random();
  }

  /** integer uniform on {0, ..., n-1} */
  below(n: number): number {
    return Math.floor(this.random() * n);
  }
}

const OPERATOR_TAGS = [
  "inst_displacement",
  "inst_addition",
  "inst_deletion",
  "frame_displacement",
  "frame_rotation",
  "frame_scaling",
] as const;

export type OperatorTag = (typeof OPERATOR_TAGS)[number];

function translated(v: MapVector, de: number, dn: number): MapVector {
  if (de === 0 && dn === 0) return v;
  const points = new Float64Array(v.points);
  for (let i = 0; i < points.length; i += 3) {
    points[i] += de;
    points[i + 1] += dn;
  }
  return { ...v, points };
}

export function instanceDisplacement(
  vectors: MapVector[], spec: PerturbationSpec, rng: Rng,
): MapVector[] {
  return vectors.map((v) => {
    const selected = rng.random() < spec.instSelectProb;
    const mag = rng.uniform(0, spec.instDispRange);
    const ang = rng.uniform(0, 2 * Math.PI);
    if (!selected) return v;
    return translated(v, mag * Math.cos(ang), mag * Math.sin(ang));
  });
}

export function instanceAddition(
  vectors: MapVector[],
  pool: MapVector[],
  spec: PerturbationSpec,
  rng: Rng,
  rect: PerceptionRange = DEFAULT_RANGE,
): MapVector[] {
  const n = rng.below(spec.addMax + 1);
  if (n === 0) return vectors.slice();
  if (pool.length === 0) throw new Error("element pool is empty but addition requested");
  let nextId = vectors.reduce((m, v) => Math.max(m, v.id), 0) + 1;
  const out = vectors.slice();
  for (let k = 0; k < n; k++) {
    const tpl = pool[rng.below(pool.length)];
    const targetE = rng.uniform(-rect.rear, rect.front);
    const targetN = rng.uniform(-rect.right, rect.left);
    const nPts = tpl.points.length / 3;
    let ce = 0;
    let cn = 0;
    for (let i = 0; i < tpl.points.length; i += 3) {
      ce += tpl.points[i];
      cn += tpl.points[i + 1];
    }
    ce /= nPts;
    cn /= nPts;
    out.push({ ...translated(tpl, targetE - ce, targetN - cn), id: nextId++ });
  }
  return out;
}

export function instanceDeletion(
  vectors: MapVector[], spec: PerturbationSpec, rng: Rng,
): MapVector[] {
  const hi = Math.min(spec.delMax, vectors.length);
  const n = rng.below(hi + 1);
  if (n === 0) return vectors.slice();
  // partial Fisher-Yates draw of n distinct indices
  const idx = vectors.map((_, k) => k);
  for (let k = 0; k < n; k++) {
    const j = k + rng.below(idx.length - k);
    [idx[k], idx[j]] = [idx[j], idx[k]];
  }
  const doomed = new Set(idx.slice(0, n));
  return vectors.filter((_, k) => !doomed.has(k));
}

export function frameDisplacement(
  vectors: MapVector[], spec: PerturbationSpec, rng: Rng,
): MapVector[] {
  const de = rng.uniform(-spec.frameDispRange, spec.frameDispRange);
  const dn = rng.uniform(-spec.frameDispRange, spec.frameDispRange);
  return vectors.map((v) => translated(v, de, dn));
}

export function frameRotation(vectors: MapVector[], spec: PerturbationSpec, rng: Rng): MapVector[] {
  const limit = (spec.frameRotRange * Math.PI) / 180;
  const theta = rng.uniform(-limit, limit);
  if (theta === 0) return vectors.slice();
  const c = Math.cos(theta);
  const s = Math.sin(theta);
  return vectors.map((v) => {
    const points = new Float64Array(v.points);
    for (let i = 0; i < points.length; i += 3) {
      const e = points[i];
      const n = points[i + 1];
      points[i] = e * c - n * s;
      points[i + 1] = e * s + n * c;
    }
    return { ...v, points };
  });
}

export function frameScaling(vectors: MapVector[], spec: PerturbationSpec, rng: Rng): MapVector[] {
  const s = rng.uniform(spec.frameScaleLo, spec.frameScaleHi);
  if (s === 1) return vectors.slice();
  return vectors.map((v) => {
    const points = new Float64Array(v.points);
    for (let i = 0; i < points.length; i += 3) {
      points[i] *= s;
      points[i + 1] *= s;
    }
    return { ...v, points };
  });
}

/** Apply selected operators in the fixed order: instance ops, then frame ops. */
export function perturb(
  vectors: MapVector[],
  pool: MapVector[],
  spec: PerturbationSpec,
  which: Iterable<OperatorTag | string>,
  rng?: Rng,
  rect: PerceptionRange = DEFAULT_RANGE,
): MapVector[] {
  const tags = new Set(which);
  for (const tag of tags) {
    if (!(OPERATOR_TAGS as readonly string[]).includes(tag)) {
      throw new Error(`unknown perturbation tag: ${tag}`);
    }
  }
  const r = rng ?? new Rng(spec.seed);
  let out = vectors.slice();
  if (tags.has("inst_displacement")) out = instanceDisplacement(out, spec, r);
  if (tags.has("inst_addition")) out = instanceAddition(out, pool, spec, r, rect);
  if (tags.has("inst_deletion")) out = instanceDeletion(out, spec, r);
  if (tags.has("frame_displacement")) out = frameDisplacement(out, spec, r);
  if (tags.has("frame_rotation")) out = frameRotation(out, spec, r);
  if (tags.has("frame_scaling")) out = frameScaling(out, spec, r);
  return out;
}
