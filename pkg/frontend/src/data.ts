/**
 * Readers for the harness file formats: CSVs with JSON sidecars.
 *
 * Every producing CSV `<name>` ships with `<name>.json` carrying the
 * surface, grid, run parameters, the producing config hash and the package
 * version; overlaid inputs must agree on hash and surface.
 */

import { readFileSync } from "fs";

export class SchemaError extends Error {}
export class HashMismatchError extends Error {}

export interface Csv {
  header: string[];
  rows: number[][];
}

export interface SurfaceMeta {
  kind: string;
  R?: number;
  L1?: number;
  L2?: number;
}

export interface Sidecar {
  surface?: SurfaceMeta;
  config_hash?: string;
  provenance?: string;
  eps?: number | null;
  t_star?: number;
  collided?: boolean;
  [key: string]: unknown;
}

export function parseCsv(text: string): Csv {
  const lines = text.trim().split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) throw new SchemaError("empty CSV");
  const header = lines[0].split(",").map((h) => h.trim());
  const rows: number[][] = [];
  for (const line of lines.slice(1)) {
    const cells = line.split(",").map(Number);
    if (cells.length !== header.length || cells.some((v) => Number.isNaN(v))) {
      throw new SchemaError(`malformed CSV row: ${line}`);
    }
    rows.push(cells);
  }
  return { header, rows };
}

export function readCsv(path: string): Csv {
  return parseCsv(readFileSync(path, "utf8"));
}

export function readSidecar(path: string): Sidecar {
  return JSON.parse(readFileSync(path + ".json", "utf8"));
}

export function column(csv: Csv, name: string): number[] {
  const i = csv.header.indexOf(name);
  if (i < 0) throw new SchemaError(`missing column '${name}' (have: ${csv.header.join(",")})`);
  return csv.rows.map((r) => r[i]);
}

/** Refuse to overlay inputs whose config hashes or surfaces differ. */
export function checkCompatible(sidecars: Sidecar[]): void {
  const hashes = new Set(sidecars.map((s) => s.config_hash ?? "<none>"));
  if (hashes.size > 1) {
    throw new HashMismatchError(`config hashes differ: ${[...hashes].join(" vs ")}`);
  }
  const kinds = new Set(sidecars.map((s) => s.surface?.kind ?? "<none>"));
  if (kinds.size > 1) {
    throw new SchemaError(`surfaces differ: ${[...kinds].join(" vs ")}`);
  }
}

export interface Track {
  id: number;
  charge: number;
  t: number[];
  x1: number[];
  x2: number[];
}

export interface TrajectoryFile {
  tracks: Track[];
  sidecar: Sidecar;
}

export function readTrajectory(path: string): TrajectoryFile {
  const csv = readCsv(path);
  for (const col of ["t", "vortex_id", "charge", "x1", "x2"]) {
    if (!csv.header.includes(col)) throw new SchemaError(`missing column '${col}' in ${path}`);
  }
  const t = column(csv, "t");
  const vid = column(csv, "vortex_id");
  const charge = column(csv, "charge");
  const x1 = column(csv, "x1");
  const x2 = column(csv, "x2");
  const byId = new Map<number, Track>();
  for (let k = 0; k < t.length; k++) {
    let tr = byId.get(vid[k]);
    if (!tr) {
      tr = { id: vid[k], charge: charge[k], t: [], x1: [], x2: [] };
      byId.set(vid[k], tr);
    }
    tr.t.push(t[k]);
    tr.x1.push(x1[k]);
    tr.x2.push(x2[k]);
  }
  return { tracks: [...byId.values()], sidecar: readSidecar(path) };
}

const wrapc = (d: number, L: number) => d - L * Math.round(d / L);

/**
 * Unwrap a torus track: cumulative minimal displacements from its first
 * point, so seam crossings draw as continuous curves.
 */
export function unwrapTrack(track: Track, surface?: SurfaceMeta): Track {
  if (!surface || surface.kind !== "torus" || track.x1.length === 0) return track;
  const L1 = surface.L1 ?? 1;
  const L2 = surface.L2 ?? 1;
  const x1 = [track.x1[0]];
  const x2 = [track.x2[0]];
  for (let k = 1; k < track.x1.length; k++) {
    x1.push(x1[k - 1] + wrapc(track.x1[k] - track.x1[k - 1], L1));
    x2.push(x2[k - 1] + wrapc(track.x2[k] - track.x2[k - 1], L2));
  }
  return { ...track, x1, x2 };
}
