/**
 * Codec for the plain-text vector interchange format: one record per line,
 * `id,class_name,confidence,e0,n0,z0,e1,n1,z1,...`, '#' comments skipped.
 */

import * as fs from "node:fs";

import { CLASS_NAMES, MapClass, MapVector } from "./mapfile";

const NAME_TO_CLASS: Record<string, MapClass> = {
  divider: MapClass.Divider,
  ped_crossing: MapClass.PedCrossing,
  boundary: MapClass.Boundary,
};

export function parseVectorFile(text: string, path = "<string>"): MapVector[] {
  const out: MapVector[] = [];
  const lines = text.split("\n");
  for (let lineno = 1; lineno <= lines.length; lineno++) {
    const line = lines[lineno - 1].trim();
    if (!line || line.startsWith("#")) continue;
    const parts = line.split(",");
    if (parts.length < 9 || (parts.length - 3) % 3 !== 0) {
      throw new Error(`${path}:${lineno}: expected id,class,confidence plus >= 2 e,n,z triples`);
    }
    const id = Number(parts[0]);
    const cls = NAME_TO_CLASS[parts[1]];
    const confidence = Number(parts[2]);
    if (!Number.isInteger(id) || cls === undefined || !Number.isFinite(confidence)) {
      throw new Error(`${path}:${lineno}: bad vector record`);
    }
    const points = new Float64Array(parts.length - 3);
    for (let k = 3; k < parts.length; k++) {
      const v = Number(parts[k]);
      if (!Number.isFinite(v)) throw new Error(`${path}:${lineno}: bad coordinate ${parts[k]}`);
      points[k - 3] = v;
    }
    out.push({ id, cls, confidence, points });
  }
  return out;
}

export function readVectorFile(path: string): MapVector[] {
  return parseVectorFile(fs.readFileSync(path, "utf8"), path);
}

function fmt(x: number): string {
  // shortest round-trip representation, matching the writer convention
  return Object.is(x, -0) ? "-0.0" : Number.isInteger(x) ? `${x}.0` : `${x}`;
}

export function formatVectorFile(vectors: MapVector[]): string {
  const lines = ["# id,class,confidence,e0,n0,z0,e1,n1,z1,..."];
  for (const v of vectors) {
    const coords = Array.from(v.points, fmt).join(",");
    lines.push(`${v.id},${CLASS_NAMES[v.cls]},${fmt(v.confidence)},${coords}`);
  }
  return lines.join("\n") + "\n";
}

export function writeVectorFile(path: string, vectors: MapVector[]): void {
  fs.writeFileSync(path, formatVectorFile(vectors));
}
