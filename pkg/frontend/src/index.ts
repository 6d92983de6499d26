/**
 * Binding layer for the priormap engine. Opens its global map containers
 * in-process and exposes the five bound entry points: retrieve, refresh,
 * assemble, perturb, evaluate. Heatmaps cross the boundary as contiguous
 * row-major Float32Arrays with an explicit (C, H, W) shape.
 */

import { EgoPose, PerceptionRange, DEFAULT_RANGE } from "./geometry";
import { Layer, MapVector } from "./mapfile";
import { BoundMap } from "./store";
import {
  DEFAULT_RASTER,
  Heatmap,
  Mode,
  PriorHeatmaps,
  RasterConfig,
  assemble,
} from "./raster";
import { PerturbationSpec, Rng, perturb } from "./perturb";
import { ScoredVector, evaluate } from "./evalmetrics";

export const VERSION = "0.1.0"; // mirrors the native library version

export { DEFAULT_RANGE, type EgoPose, type PerceptionRange } from "./geometry";
export {
  egoToGlobal,
  globalToEgo,
  intersectsRange,
  resamplePolyline,
  toPolyline,
} from "./geometry";
export { CLASS_NAMES, Layer, MapClass, MapDecodeError, type MapVector } from "./mapfile";
export { BoundMap, adjacentTiles, tileIndex } from "./store";
export {
  DEFAULT_RASTER,
  decodeHeatmap,
  encodeHeatmap,
  gridShape,
  rasterize,
  readHeatmap,
  selectInferenceMode,
  writeHeatmap,
  zeroHeatmap,
  type Heatmap,
  type Mode,
  type PriorHeatmaps,
  type RasterConfig,
} from "./raster";
export {
  DEFAULT_SPEC,
  Rng,
  perturb,
  type OperatorTag,
  type PerturbationSpec,
} from "./perturb";
export {
  DEFAULT_THRESHOLDS,
  EXTENDED_THRESHOLDS,
  apFromFlags,
  averagePrecision,
  chamferDistance,
  evaluate,
  type APReport,
  type ScoredVector,
} from "./evalmetrics";
export { formatVectorFile, parseVectorFile, readVectorFile, writeVectorFile } from "./vectorfile";

/** Open a global map container file as a bound handle. */
export function openMap(path: string): BoundMap {
  return BoundMap.open(path);
}

/** Bound entry point 1: ego-centric retrieval from an open handle. */
export function boundRetrieve(
  map: BoundMap,
  pose: EgoPose,
  range: PerceptionRange = DEFAULT_RANGE,
  layer: Layer = Layer.Static,
  strict3x3 = false,
): MapVector[] {
  return map.retrieve(layer, pose, range, strict3x3);
}

/** Bound entry point 2: confidence-gated refreshment of the temporal layer. */
export function boundRefresh(
  map: BoundMap,
  predictions: MapVector[],
  pose: EgoPose,
  tau: number,
): void {
  map.refresh(predictions, pose, tau);
}

/** Bound entry point 3: tri-mode heatmap assembly (two C x H x W arrays). */
export function boundAssemble(
  map: BoundMap,
  mode: Mode,
  pose: EgoPose,
  cfg: RasterConfig = DEFAULT_RASTER,
  strict3x3 = false,
): PriorHeatmaps {
  return assemble(map, mode, pose, cfg, strict3x3);
}

/** Bound entry point 4: seeded corruption of a vector scene. */
export function boundPerturb(
  vectors: MapVector[],
  pool: MapVector[],
  spec: PerturbationSpec,
  which: Iterable<string>,
  rect: PerceptionRange = DEFAULT_RANGE,
): MapVector[] {
  return perturb(vectors, pool, spec, which, new Rng(spec.seed), rect);
}

/** Bound entry point 5: Chamfer-distance AP evaluation. */
export function boundEvaluate(
  preds: ScoredVector[],
  gts: MapVector[],
  thresholds?: number[],
  use3d = false,
) {
  return evaluate(preds, gts, thresholds, 20, use3d);
}
