/**
 * The compact CNN: an average-pooling stem that shrinks the 128px input to
 * the working resolution, three conv+ReLU+maxpool blocks, then two dense
 * layers.  Classification adds a sigmoid head; regression stays linear.
 * All initializers are seeded, so training is reproducible.
 */

import * as tf from "@tensorflow/tfjs";

export interface ModelSpec {
  functionKind: "ssin" | "suum" | "class";
  imageSize: number; // wire input side (pixels)
  poolFactor: number; // stem pooling, e.g. 4 maps 128 -> 32
  baseFilters: number;
  denseUnits: number;
  seed: number;
}

export const DEFAULT_SPEC: Omit<ModelSpec, "functionKind"> = {
  imageSize: 128,
  poolFactor: 4,
  baseFilters: 8,
  denseUnits: 64,
  seed: 1,
};

export function isClassifier(functionKind: string): boolean {
  return functionKind === "class";
}

export function buildModel(spec: ModelSpec): tf.LayersModel {
  const init = (offset: number) =>
    tf.initializers.glorotUniform({ seed: spec.seed + offset });
  const input = tf.input({ shape: [spec.imageSize, spec.imageSize, 1] });
  let x = tf.layers
    .avgPooling2d({ poolSize: spec.poolFactor, strides: spec.poolFactor })
    .apply(input) as tf.SymbolicTensor;
  let filters = spec.baseFilters;
  for (let block = 0; block < 3; block++) {
    x = tf.layers
      .conv2d({
        filters,
        kernelSize: 3,
        padding: "same",
        activation: "relu",
        kernelInitializer: init(block),
      })
      .apply(x) as tf.SymbolicTensor;
    x = tf.layers.maxPooling2d({ poolSize: 2, strides: 2 }).apply(x) as tf.SymbolicTensor;
    filters *= 2;
  }
  x = tf.layers.flatten().apply(x) as tf.SymbolicTensor;
  x = tf.layers
    .dense({ units: spec.denseUnits, activation: "relu", kernelInitializer: init(10) })
    .apply(x) as tf.SymbolicTensor;
  // Linear head named so the server can serve raw logits for classifiers.
  x = tf.layers
    .dense({ units: 1, kernelInitializer: init(11), name: "head" })
    .apply(x) as tf.SymbolicTensor;
  if (isClassifier(spec.functionKind)) {
    x = tf.layers.activation({ activation: "sigmoid", name: "sigmoid_head" })
      .apply(x) as tf.SymbolicTensor;
  }
  return tf.model({ inputs: input, outputs: x as tf.SymbolicTensor });
}

/** View of the same weights that stops before the final sigmoid. */
export function rawLogitView(model: tf.LayersModel): tf.LayersModel {
  const head = model.getLayer("head");
  return tf.model({ inputs: model.inputs, outputs: head.output as tf.SymbolicTensor });
}

export function pixelsToTensor(
  batch: Uint8Array[],
  side: number,
): tf.Tensor4D {
  const flat = new Float32Array(batch.length * side * side);
  batch.forEach((pixels, i) => {
    const base = i * side * side;
    for (let p = 0; p < pixels.length; p++) {
      flat[base + p] = pixels[p] / 255;
    }
  });
  return tf.tensor4d(flat, [batch.length, side, side, 1]);
}
