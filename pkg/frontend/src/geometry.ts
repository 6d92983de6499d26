/**
 * Planar geometry mirroring the native conventions: polylines are arrays of
 * [e, n, z] rows; yaw is counterclockwise-positive with zero along UTM east;
 * z is translated, never rotated.
 */

export interface EgoPose {
  e: number;
  n: number;
  z: number;
  yaw: number;
}

export interface PerceptionRange {
  front: number;
  rear: number;
  left: number;
  right: number;
}

export const DEFAULT_RANGE: PerceptionRange = { front: 30, rear: 30, left: 15, right: 15 };

export type Polyline = Float64Array; // flat [e0, n0, z0, e1, n1, z1, ...]

export function pointCount(poly: Polyline): number {
  return poly.length / 3;
}

export function toPolyline(points: number[][]): Polyline {
  const out = new Float64Array(points.length * 3);
  for (let i = 0; i < points.length; i++) {
    out[3 * i] = points[i][0];
    out[3 * i + 1] = points[i][1];
    out[3 * i + 2] = points[i][2];
  }
  return out;
}

/** Floor-consistent float modulus (result in [0, m) for m > 0). */
export function floorMod(x: number, m: number): number {
  let r = x % m; // JS % is truncated fmod, exact in IEEE
  if (r !== 0 && r < 0 !== m < 0) r += m;
  return r;
}

export function egoToGlobal(poly: Polyline, pose: EgoPose): Polyline {
  const c = Math.cos(pose.yaw);
  const s = Math.sin(pose.yaw);
  const out = new Float64Array(poly.length);
  for (let i = 0; i < poly.length; i += 3) {
    const x = poly[i];
    const y = poly[i + 1];
    out[i] = pose.e + x * c - y * s;
    out[i + 1] = pose.n + x * s + y * c;
    out[i + 2] = poly[i + 2] + pose.z;
  }
  return out;
}

export function globalToEgo(poly: Polyline, pose: EgoPose): Polyline {
  const c = Math.cos(pose.yaw);
  const s = Math.sin(pose.yaw);
  const out = new Float64Array(poly.length);
  for (let i = 0; i < poly.length; i += 3) {
    const de = poly[i] - pose.e;
    const dn = poly[i + 1] - pose.n;
    out[i] = de * c + dn * s;
    out[i + 1] = -de * s + dn * c;
    out[i + 2] = poly[i + 2] - pose.z;
  }
  return out;
}

/** Liang-Barsky test of one segment against the closed range rectangle. */
function segmentIntersectsRect(
  px: number, py: number, qx: number, qy: number, rng: PerceptionRange,
): boolean {
  const dx = qx - px;
  const dy = qy - py;
  let t0 = 0;
  let t1 = 1;
  const edges: Array<[number, number]> = [
    [-dx, px - -rng.rear],
    [dx, rng.front - px],
    [-dy, py - -rng.right],
    [dy, rng.left - py],
  ];
  for (const [pc, qc] of edges) {
    if (pc === 0) {
      if (qc < 0) return false;
      continue;
    }
    const t = qc / pc;
    if (pc < 0) {
      if (t > t0) t0 = t;
    } else {
      if (t < t1) t1 = t;
    }
  }
  return t0 <= t1;
}

/** True iff the ego-frame polyline touches the closed perception rectangle. */
export function intersectsRange(poly: Polyline, rng: PerceptionRange): boolean {
  const n = pointCount(poly);
  for (let i = 0; i < n; i++) {
    const x = poly[3 * i];
    const y = poly[3 * i + 1];
    if (x >= -rng.rear && x <= rng.front && y >= -rng.right && y <= rng.left) return true;
  }
  for (let i = 0; i + 1 < n; i++) {
    if (
      segmentIntersectsRect(
        poly[3 * i], poly[3 * i + 1], poly[3 * (i + 1)], poly[3 * (i + 1) + 1], rng,
      )
    ) {
      return true;
    }
  }
  return false;
}

/** Resample to nPts points equidistant in 3D arc length, endpoints exact. */
export function resamplePolyline(poly: Polyline, nPts: number): Polyline {
  const n = pointCount(poly);
  if (nPts < 2) throw new Error("resampling needs nPts >= 2");
  const cum = new Float64Array(n);
  for (let i = 1; i < n; i++) {
    const dx = poly[3 * i] - poly[3 * (i - 1)];
    const dy = poly[3 * i + 1] - poly[3 * (i - 1) + 1];
    const dz = poly[3 * i + 2] - poly[3 * (i - 1) + 2];
    cum[i] = cum[i - 1] + Math.sqrt(dx * dx + dy * dy + dz * dz);
  }
  const total = cum[n - 1];
  if (total <= 0) throw new Error("cannot resample a zero-length polyline");
  const out = new Float64Array(nPts * 3);
  let seg = 0;
  for (let k = 0; k < nPts; k++) {
    const target = (total * k) / (nPts - 1);
    while (seg < n - 2 && cum[seg + 1] < target) seg++;
    const span = cum[seg + 1] - cum[seg];
    const t = span > 0 ? (target - cum[seg]) / span : 0;
    for (let d = 0; d < 3; d++) {
      out[3 * k + d] = poly[3 * seg + d] + t * (poly[3 * (seg + 1) + d] - poly[3 * seg + d]);
    }
  }
  for (let d = 0; d < 3; d++) {
    out[d] = poly[d];
    out[3 * (nPts - 1) + d] = poly[3 * (n - 1) + d];
  }
  return out;
}
