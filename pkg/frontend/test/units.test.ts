import { describe, expect, it } from "vitest";

import {
  DEFAULT_RASTER,
  DEFAULT_SPEC,
  MapClass,
  Rng,
  adjacentTiles,
  boundPerturb,
  chamferDistance,
  averagePrecision,
  gridShape,
  intersectsRange,
  rasterize,
  resamplePolyline,
  selectInferenceMode,
  tileIndex,
  toPolyline,
} from "../src/index";
import { MapVector } from "../src/mapfile";
import { formatVectorFile, parseVectorFile } from "../src/vectorfile";

function vec(id: number, pts: number[][], cls = MapClass.Divider, conf = 1): MapVector {
  return { id, cls, confidence: conf, points: toPolyline(pts) };
}

describe("tiling", () => {
  it("floor division incl. negatives", () => {
    expect(tileIndex(0, 0, 60)).toEqual([0, 0]);
    expect(tileIndex(123456.7, 654321.9, 60)).toEqual([2057, 10905]);
    expect(tileIndex(-1, 5, 60)).toEqual([-1, 0]);
  });

  it("half-tile adjacency rule", () => {
    const sorted = (e: number, n: number) =>
      adjacentTiles(e, n, 60).map(([i, j]) => `${i},${j}`).sort();
    expect(sorted(10, 10)).toEqual(["-1,-1", "-1,0", "0,-1", "0,0"]);
    expect(sorted(50, 10)).toEqual(["0,-1", "0,0", "1,-1", "1,0"]);
    expect(sorted(30, 30)).toEqual(["0,0"]);
    expect(adjacentTiles(-50, -10, 60).length).toBe(4);
  });
});

describe("geometry", () => {
  it("perception rectangle is closed", () => {
    expect(intersectsRange(toPolyline([[30, 15, 0], [31, 16, 0]]), DEFAULT_RASTER.range)).toBe(true);
    expect(intersectsRange(toPolyline([[100, 0, 0], [100, 5, 0]]), DEFAULT_RASTER.range)).toBe(false);
    expect(intersectsRange(toPolyline([[40, 0, 0], [-40, 0, 0]]), DEFAULT_RASTER.range)).toBe(true);
  });

  it("resampling is arc-length equidistant with exact endpoints", () => {
    const out = resamplePolyline(toPolyline([[0, 0, 0], [10, 0, 0]]), 3);
    expect(Array.from(out)).toEqual([0, 0, 0, 5, 0, 0, 10, 0, 0]);
  });
});

describe("rasterization", () => {
  it("default grid is 3 x 200 x 100", () => {
    expect(gridShape(DEFAULT_RASTER)).toEqual([3, 200, 100]);
  });

  it("a vanishing vector at the origin sets the center cell", () => {
    const heat = rasterize([vec(1, [[-2e-4, 0, 0], [-1e-4, 0, 0]])]);
    let sum = 0;
    for (const v of heat.data) sum += v;
    expect(sum).toBe(1);
    expect(heat.data[(0 * 200 + 100) * 100 + 50]).toBe(1);
  });

  it("non-integral grids are rejected", () => {
    expect(() => gridShape({ ...DEFAULT_RASTER, cell: 0.7 })).toThrow(/integer number/);
  });
});

describe("evaluation", () => {
  it("chamfer hand values", () => {
    const a = toPolyline([[0, 0, 0], [10, 0, 0]]);
    const b = toPolyline([[0, 2, 0], [10, 2, 0]]);
    expect(chamferDistance(a, a)).toBe(0);
    expect(chamferDistance(a, b)).toBeCloseTo(2, 12);
    expect(chamferDistance(a, b)).toBe(chamferDistance(b, a));
  });

  it("AP basics", () => {
    const gt = vec(1, [[0, 0, 0], [5, 0, 0]]);
    expect(averagePrecision([{ vector: gt, score: 1 }], [gt], 0.5)).toBe(1);
    expect(averagePrecision([], [gt], 0.5)).toBe(0);
    const bad = { vector: vec(9, [[0, 9, 0], [5, 9, 0]]), score: 0.9 };
    const good = { vector: vec(8, [[0, 0.1, 0], [5, 0.1, 0]]), score: 0.3 };
    expect(averagePrecision([bad, good], [gt], 1.0)).toBe(0.5);
    expect(averagePrecision([good, bad], [gt], 1.0)).toBe(0.5); // order-insensitive input
  });
});

describe("mode switching", () => {
  it("follows availability", () => {
    expect(selectInferenceMode(true, true)).toBe("temporal_map_fusion");
    expect(selectInferenceMode(false, true)).toBe("temporal_map_fusion");
    expect(selectInferenceMode(true, false)).toBe("temporal_prior");
    expect(selectInferenceMode(false, false)).toBe("non_prior");
  });
});

describe("perturbation", () => {
  const scene = Array.from({ length: 10 }, (_, k) =>
    vec(k + 1, [[k, 0, 0], [k + 3, 1, 0]], (k % 3) as MapClass),
  );

  it("same seed reproduces the corruption", () => {
    const a = boundPerturb(scene, scene, DEFAULT_SPEC, ["inst_displacement", "frame_rotation"]);
    const b = boundPerturb(scene, scene, DEFAULT_SPEC, ["inst_displacement", "frame_rotation"]);
    expect(a.length).toBe(b.length);
    for (let k = 0; k < a.length; k++) {
      expect(Array.from(a[k].points)).toEqual(Array.from(b[k].points));
    }
  });

  it("unknown tags are rejected", () => {
    expect(() => boundPerturb(scene, scene, DEFAULT_SPEC, ["wat"])).toThrow(/unknown perturbation/);
  });

  it("displacement statistics match the configured law", () => {
    const rng = new Rng(77);
    const many = Array.from({ length: 20000 }, (_, k) => vec(k + 1, [[0, 0, 0], [1, 0, 0]]));
    let moved = 0;
    let magSum = 0;
    const spec = { ...DEFAULT_SPEC, seed: 77 };
    const out = boundPerturb(many, [], spec, ["inst_displacement"]);
    for (let k = 0; k < many.length; k++) {
      const de = out[k].points[0];
      const dn = out[k].points[1];
      const mag = Math.hypot(de, dn);
      if (mag > 0) {
        moved++;
        magSum += mag;
      }
    }
    expect(Math.abs(moved / many.length - 0.5)).toBeLessThan(0.02);
    expect(Math.abs(magSum / moved - 3.0)).toBeLessThan(0.1);
    void rng;
  });

  it("deletion keeps survivors intact and bounded", () => {
    const out = boundPerturb(scene, [], { ...DEFAULT_SPEC, seed: 5 }, ["inst_deletion"]);
    expect(out.length).toBeLessThanOrEqual(scene.length);
    for (const v of out) {
      const src = scene.find((s) => s.id === v.id)!;
      expect(Array.from(v.points)).toEqual(Array.from(src.points));
    }
  });

  it("scaling scales in-plane distances", () => {
    const out = boundPerturb([vec(1, [[10, 5, 2], [0, 0, 2]])], [], { ...DEFAULT_SPEC, seed: 9 },
      ["frame_scaling"]);
    const s = out[0].points[0] / 10;
    expect(s).toBeGreaterThanOrEqual(0.8);
    expect(s).toBeLessThanOrEqual(1.2);
    expect(out[0].points[1] / 5).toBeCloseTo(s, 12);
    expect(out[0].points[2]).toBe(2); // z untouched
  });
});

describe("vector interchange", () => {
  it("round-trips through format and parse", () => {
    const vs = [vec(3, [[1.5, -2.25, 0.125], [4, 5, 6]], MapClass.Boundary, 0.625)];
    const parsed = parseVectorFile(formatVectorFile(vs));
    expect(parsed.length).toBe(1);
    expect(parsed[0].id).toBe(3);
    expect(parsed[0].cls).toBe(MapClass.Boundary);
    expect(parsed[0].confidence).toBe(0.625);
    expect(Array.from(parsed[0].points)).toEqual([1.5, -2.25, 0.125, 4, 5, 6]);
  });

  it("reports the offending line", () => {
    expect(() => parseVectorFile("1,divider,0.5,0,0,0\n", "f.txt")).toThrow(/f.txt:1/);
  });
});
