import * as fs from "node:fs";
import * as path from "node:path";

import { MapVector, MapClass } from "../src/mapfile";
import { EgoPose } from "../src/geometry";

export const FIXTURES = path.join(__dirname, "fixtures");

export interface VecRecord {
  id: number;
  cls: number;
  confidence: number;
  points: number[][];
  score?: number;
}

export function loadJson<T>(name: string): T {
  return JSON.parse(fs.readFileSync(path.join(FIXTURES, name), "utf8")) as T;
}

export function toVector(rec: VecRecord): MapVector {
  const points = new Float64Array(rec.points.length * 3);
  rec.points.forEach((row, i) => {
    points[3 * i] = row[0];
    points[3 * i + 1] = row[1];
    points[3 * i + 2] = row[2];
  });
  return { id: rec.id, cls: rec.cls as MapClass, confidence: rec.confidence, points };
}

export interface PoseRecord {
  e: number;
  n: number;
  z: number;
  yaw: number;
}

export function toPose(rec: PoseRecord): EgoPose {
  return { e: rec.e, n: rec.n, z: rec.z, yaw: rec.yaw };
}

export const WORLD_MAP = path.join(FIXTURES, "world.uppm");
