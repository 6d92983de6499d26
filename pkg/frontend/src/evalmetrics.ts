/**
 * Chamfer-distance average precision, mirroring the native convention:
 * 20-point resampling, in-plane distances by default, greedy score-ordered
 * matching with strict thresholds, right-max precision interpolation, and
 * classes without ground truth excluded from the mean.
 */

import { Polyline, resamplePolyline } from "./geometry";
import { MapClass, MapVector } from "./mapfile";

export const DEFAULT_THRESHOLDS = [0.5, 1.0, 1.5];
export const EXTENDED_THRESHOLDS = [1.0, 1.5, 2.0];

export function chamferDistance(a: Polyline, b: Polyline, nPts = 20, use3d = false): number {
  const pa = resamplePolyline(a, nPts);
  const pb = resamplePolyline(b, nPts);
  const dims = use3d ? 3 : 2;
  let sumA = 0;
  for (let i = 0; i < nPts; i++) {
    let best = Infinity;
    for (let j = 0; j < nPts; j++) {
      let d2 = 0;
      for (let k = 0; k < dims; k++) {
        const diff = pa[3 * i + k] - pb[3 * j + k];
        d2 += diff * diff;
      }
      if (d2 < best) best = d2;
    }
    sumA += Math.sqrt(best);
  }
  let sumB = 0;
  for (let j = 0; j < nPts; j++) {
    let best = Infinity;
    for (let i = 0; i < nPts; i++) {
      let d2 = 0;
      for (let k = 0; k < dims; k++) {
        const diff = pa[3 * i + k] - pb[3 * j + k];
        d2 += diff * diff;
      }
      if (d2 < best) best = d2;
    }
    sumB += Math.sqrt(best);
  }
  return 0.5 * (sumA / nPts + sumB / nPts);
}

export interface ScoredVector {
  vector: MapVector;
  score: number;
}

function matchFlags(
  preds: ScoredVector[], gts: MapVector[], threshold: number, nPts: number, use3d: boolean,
): boolean[] {
  const order = preds
    .map((_, k) => k)
    .sort((a, b) => (preds[b].score - preds[a].score) || (a - b));
  const cd = preds.map((p) =>
    gts.map((g) => chamferDistance(p.vector.points, g.points, nPts, use3d)),
  );
  const taken = new Array(gts.length).fill(false);
  const flags: boolean[] = [];
  for (const k of order) {
    let best = -1;
    for (let j = 0; j < gts.length; j++) {
      if (taken[j]) continue;
      if (best === -1 || cd[k][j] < cd[k][best]) best = j;
    }
    if (best !== -1 && cd[k][best] < threshold) {
      taken[best] = true;
      flags.push(true);
    } else {
      flags.push(false);
    }
  }
  return flags;
}

export function apFromFlags(flags: boolean[], nGt: number): number {
  if (nGt === 0 || flags.length === 0) return 0;
  const precision: number[] = [];
  const recall: number[] = [];
  let tp = 0;
  for (let k = 0; k < flags.length; k++) {
    if (flags[k]) tp++;
    precision.push(tp / (k + 1));
    recall.push(tp / nGt);
  }
  const interp = precision.slice();
  for (let k = interp.length - 2; k >= 0; k--) {
    if (interp[k + 1] > interp[k]) interp[k] = interp[k + 1];
  }
  let ap = 0;
  let prev = 0;
  for (let k = 0; k < flags.length; k++) {
    if (recall[k] > prev) {
      ap += (recall[k] - prev) * interp[k];
      prev = recall[k];
    }
  }
  return ap;
}

export function averagePrecision(
  preds: ScoredVector[], gts: MapVector[], threshold: number, nPts = 20, use3d = false,
): number {
  if (gts.length === 0 || preds.length === 0) return 0;
  return apFromFlags(matchFlags(preds, gts, threshold, nPts, use3d), gts.length);
}

export interface ClassAP {
  apPerThreshold: Map<number, number>;
  meanAp: number;
  defined: boolean;
  nGt: number;
  nPred: number;
}

export interface APReport {
  thresholds: number[];
  perClass: Map<MapClass, ClassAP>;
  map: number;
}

export function evaluate(
  preds: ScoredVector[],
  gts: MapVector[],
  thresholds: number[] = DEFAULT_THRESHOLDS,
  nPts = 20,
  use3d = false,
): APReport {
  const perClass = new Map<MapClass, ClassAP>();
  const definedMeans: number[] = [];
  for (const cls of [MapClass.Divider, MapClass.PedCrossing, MapClass.Boundary]) {
    const clsPreds = preds.filter((p) => p.vector.cls === cls);
    const clsGts = gts.filter((g) => g.cls === cls);
    const aps = new Map<number, number>();
    for (const t of thresholds) aps.set(t, averagePrecision(clsPreds, clsGts, t, nPts, use3d));
    const defined = clsGts.length > 0;
    let meanAp = 0;
    if (defined) {
      let sum = 0;
      for (const t of thresholds) sum += aps.get(t)!;
      meanAp = sum / thresholds.length;
      definedMeans.push(meanAp);
    }
    perClass.set(cls, { apPerThreshold: aps, meanAp, defined, nGt: clsGts.length, nPred: clsPreds.length });
  }
  const map = definedMeans.length
    ? definedMeans.reduce((a, b) => a + b, 0) / definedMeans.length
    : 0;
  return { thresholds, perClass, map };
}
