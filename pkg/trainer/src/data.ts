/**
 * Dataset loading: the generator's manifest.json + 8-bit grayscale PNGs.
 *
 * Images are 128x128 uint8; the model works on a pooled-down copy, so the
 * loader exposes raw pixel arrays and leaves resizing to the model itself.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { PNG } from "pngjs";

export type FunctionKind = "ssin" | "suum" | "class";

export interface SampleRecord {
  id: string;
  split: "train" | "val";
  image: string;
  labels: Record<FunctionKind, number>;
}

export interface Manifest {
  schema_version: number;
  samples: SampleRecord[];
}

export interface LoadedSplit {
  /** Row-major uint8 pixels, one Uint8Array per image. */
  pixels: Uint8Array[];
  labels: Float32Array;
  width: number;
  height: number;
  ids: string[];
}

export function readManifest(datasetDir: string): Manifest {
  const manifestPath = path.join(datasetDir, "manifest.json");
  const manifest = JSON.parse(fs.readFileSync(manifestPath, "utf8")) as Manifest;
  if (manifest.schema_version !== 1) {
    throw new Error(`unsupported manifest schema version ${manifest.schema_version}`);
  }
  return manifest;
}

/** Decode one grayscale PNG to row-major uint8 (RGBA collapses to R). */
export function decodeGrayPng(filePath: string): {
  pixels: Uint8Array;
  width: number;
  height: number;
} {
  const png = PNG.sync.read(fs.readFileSync(filePath));
  const pixels = new Uint8Array(png.width * png.height);
  for (let i = 0; i < pixels.length; i++) {
    pixels[i] = png.data[4 * i];
  }
  return { pixels, width: png.width, height: png.height };
}

export function loadSplit(
  datasetDir: string,
  split: "train" | "val",
  functionKind: FunctionKind,
  limit?: number,
): LoadedSplit {
  const manifest = readManifest(datasetDir);
  const records = manifest.samples.filter((s) => s.split === split);
  const chosen = limit === undefined ? records : records.slice(0, limit);
  if (chosen.length === 0) {
    throw new Error(`dataset has no '${split}' samples`);
  }
  const pixels: Uint8Array[] = [];
  const labels = new Float32Array(chosen.length);
  const ids: string[] = [];
  let width = 0;
  let height = 0;
  chosen.forEach((record, i) => {
    const decoded = decodeGrayPng(path.join(datasetDir, record.image));
    if (i === 0) {
      width = decoded.width;
      height = decoded.height;
    } else if (decoded.width !== width || decoded.height !== height) {
      throw new Error(`image ${record.id} has inconsistent dimensions`);
    }
    pixels.push(decoded.pixels);
    labels[i] = record.labels[functionKind];
    ids.push(record.id);
  });
  return { pixels, labels, width, height, ids };
}

/** Deterministic in-place Fisher-Yates with a 64-bit LCG stream. */
export function seededShuffle<T>(items: T[], seed: number): T[] {
  let state = BigInt(seed) & 0xffffffffffffffffn;
  const next = () => {
    state = (state * 6364136223846793005n + 1442695040888963407n) & 0xffffffffffffffffn;
    return Number(state >> 11n) / 2 ** 53;
  };
  for (let i = items.length - 1; i > 0; i--) {
    const j = Math.floor(next() * (i + 1));
    [items[i], items[j]] = [items[j], items[i]];
  }
  return items;
}
