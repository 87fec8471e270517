/**
 * Checkpoint format: a directory with model.json (topology), weights.bin
 * and meta.json (function kind + training summary).  Plain tf.io handlers,
 * no tfjs-node dependency.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import * as tf from "@tensorflow/tfjs";

export interface CheckpointMeta {
  function: "ssin" | "suum" | "class";
  is_classifier: boolean;
  image_size: number;
  best_metric: number;
  metric_name: string;
  epochs_trained: number;
  seed: number;
}

export async function saveCheckpoint(
  model: tf.LayersModel,
  meta: CheckpointMeta,
  dir: string,
): Promise<void> {
  fs.mkdirSync(dir, { recursive: true });
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      const topology = {
        modelTopology: artifacts.modelTopology,
        weightsManifest: [
          { paths: ["weights.bin"], weights: artifacts.weightSpecs },
        ],
        format: artifacts.format,
        generatedBy: artifacts.generatedBy,
        convertedBy: null,
      };
      fs.writeFileSync(path.join(dir, "model.json"), JSON.stringify(topology));
      fs.writeFileSync(
        path.join(dir, "weights.bin"),
        Buffer.from(artifacts.weightData as ArrayBuffer),
      );
      return { modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: "JSON" } };
    }),
  );
  fs.writeFileSync(path.join(dir, "meta.json"), JSON.stringify(meta, null, 1));
}

export async function loadCheckpoint(
  dir: string,
): Promise<{ model: tf.LayersModel; meta: CheckpointMeta }> {
  const meta = JSON.parse(
    fs.readFileSync(path.join(dir, "meta.json"), "utf8"),
  ) as CheckpointMeta;
  const manifest = JSON.parse(fs.readFileSync(path.join(dir, "model.json"), "utf8"));
  const weightData = fs.readFileSync(path.join(dir, "weights.bin"));
  const model = await tf.loadLayersModel(
    tf.io.fromMemory({
      modelTopology: manifest.modelTopology,
      weightSpecs: manifest.weightsManifest[0].weights,
      weightData: weightData.buffer.slice(
        weightData.byteOffset,
        weightData.byteOffset + weightData.byteLength,
      ),
    }),
  );
  return { model, meta };
}
