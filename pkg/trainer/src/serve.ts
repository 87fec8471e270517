/**
 * Serve a trained checkpoint over the bridge line protocol.
 *
 *   tsx src/serve.ts --checkpoint ckpt/class_shape [--raw-logit]
 *
 * --raw-logit strips the classifier's sigmoid head and serves the linear
 * output instead (advertised in the handshake).
 */

import * as path from "node:path";

import * as tf from "@tensorflow/tfjs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { loadCheckpoint } from "./checkpoint.js";
import { pixelsToTensor, rawLogitView } from "./model.js";
import { decodePixels, PROTO_VERSION, runServer, type ImageSpec } from "./protocol.js";

export async function serveCheckpoint(
  checkpointDir: string,
  rawLogit: boolean,
  streams?: { stdin?: NodeJS.ReadableStream; stdout?: NodeJS.WritableStream },
): Promise<void> {
  const { model, meta } = await loadCheckpoint(checkpointDir);
  if (rawLogit && !meta.is_classifier) {
    throw new Error("--raw-logit only applies to classification checkpoints");
  }
  const network = rawLogit ? rawLogitView(model) : model;

  const handler = async (images: ImageSpec[]): Promise<number[]> => {
    const pixels = images.map((spec) => {
      if (spec.w !== meta.image_size || spec.h !== meta.image_size) {
        throw new Error(
          `model expects ${meta.image_size}x${meta.image_size} images, ` +
            `got ${spec.w}x${spec.h}`,
        );
      }
      return decodePixels(spec);
    });
    const x = pixelsToTensor(pixels, meta.image_size);
    const out = network.predict(x) as tf.Tensor;
    const values = Array.from((await out.data()) as Float32Array);
    x.dispose();
    out.dispose();
    return values;
  };

  await runServer({
    handshake: {
      proto: PROTO_VERSION,
      name: `cnn-${meta.function}`,
      is_classifier: meta.is_classifier,
      raw_logit: rawLogit,
    },
    handler,
    stdin: streams?.stdin as never,
    stdout: streams?.stdout as never,
  });
}

async function main(): Promise<void> {
  const args = await yargs(hideBin(process.argv))
    .option("checkpoint", { type: "string", demandOption: true })
    .option("raw-logit", { type: "boolean", default: false })
    .strict()
    .parse();
  await serveCheckpoint(args.checkpoint, args["raw-logit"]);
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(path.basename(process.argv[1]));
if (invokedDirectly) {
  main().catch((err) => {
    console.error(`serve failed: ${(err as Error).message}`);
    process.exit(1);
  });
}
