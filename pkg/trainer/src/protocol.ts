/**
 * Bridge line protocol: newline-delimited JSON over stdin/stdout.
 *
 * handshake (first line out): {"proto":1,"name":...,"is_classifier":...,"raw_logit":...}
 * request:  {"id":int,"images":[{"w":int,"h":int,"pix_b64":base64 row-major uint8}]}
 * response: {"id":int,"values":[number,...]} or {"id":int,"error":string}
 *
 * Responses preserve request order; malformed requests get an error reply
 * with the offending id (-1 if it cannot be parsed), never a silent drop.
 */

import { createInterface } from "node:readline";
import type { Readable, Writable } from "node:stream";

export const PROTO_VERSION = 1;

export interface Handshake {
  proto: number;
  name: string;
  is_classifier: boolean;
  raw_logit: boolean;
}

export interface ImageSpec {
  w: number;
  h: number;
  pix_b64: string;
}

export interface Request {
  id: number;
  images: ImageSpec[];
}

export function decodePixels(spec: ImageSpec): Uint8Array {
  const bytes = Buffer.from(spec.pix_b64, "base64");
  if (bytes.length !== spec.w * spec.h) {
    throw new Error(
      `pixel payload is ${bytes.length} bytes, expected ${spec.w * spec.h}`,
    );
  }
  return new Uint8Array(bytes);
}

export function parseRequest(line: string): Request {
  let parsed: unknown;
  try {
    parsed = JSON.parse(line);
  } catch {
    throw new Error("request is not valid JSON");
  }
  const req = parsed as Partial<Request>;
  if (typeof req.id !== "number" || !Array.isArray(req.images)) {
    throw new Error("request must carry a numeric id and an images array");
  }
  for (const spec of req.images) {
    if (
      typeof spec?.w !== "number" ||
      typeof spec?.h !== "number" ||
      typeof spec?.pix_b64 !== "string"
    ) {
      throw new Error("each image needs w, h and pix_b64");
    }
  }
  return req as Request;
}

export type BatchHandler = (images: ImageSpec[]) => Promise<number[]>;

export interface ServerOptions {
  handshake: Handshake;
  handler: BatchHandler;
  stdin?: Readable;
  stdout?: Writable;
}

/**
 * Run the child side of the protocol until stdin closes or SIGTERM arrives.
 * SIGTERM flushes the in-flight response before exiting.
 */
export async function runServer(options: ServerOptions): Promise<void> {
  const stdin = options.stdin ?? process.stdin;
  const stdout = options.stdout ?? process.stdout;
  const write = (payload: unknown) =>
    new Promise<void>((resolve, reject) => {
      stdout.write(JSON.stringify(payload) + "\n", (err) =>
        err ? reject(err) : resolve(),
      );
    });

  await write(options.handshake);

  let draining = Promise.resolve();
  let terminated = false;
  const onTerm = () => {
    terminated = true;
    // Let the current response finish, then leave cleanly.
    void draining.then(() => process.exit(0));
  };
  process.on("SIGTERM", onTerm);

  const lines = createInterface({ input: stdin, crlfDelay: Infinity });
  try {
    for await (const line of lines) {
      if (terminated) break;
      if (!line.trim()) continue;
      let reply: unknown;
      let requestId = -1;
      try {
        const request = parseRequest(line);
        requestId = request.id;
        const values = await options.handler(request.images);
        if (values.length !== request.images.length) {
          throw new Error("handler returned the wrong number of values");
        }
        reply = { id: request.id, values };
      } catch (err) {
        reply = { id: requestId, error: (err as Error).message };
      }
      draining = write(reply);
      await draining;
    }
  } finally {
    process.removeListener("SIGTERM", onTerm);
  }
}
