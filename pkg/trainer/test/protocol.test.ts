import { PassThrough } from "node:stream";
import { describe, expect, it } from "vitest";

import {
  decodePixels,
  parseRequest,
  runServer,
  type ImageSpec,
} from "../src/protocol.js";

function encodeImage(bytes: Uint8Array, w: number, h: number): ImageSpec {
  return { w, h, pix_b64: Buffer.from(bytes).toString("base64") };
}

describe("parseRequest", () => {
  it("accepts a well-formed request", () => {
    const req = parseRequest(
      JSON.stringify({ id: 3, images: [encodeImage(new Uint8Array(4), 2, 2)] }),
    );
    expect(req.id).toBe(3);
    expect(req.images).toHaveLength(1);
  });

  it("rejects non-JSON", () => {
    expect(() => parseRequest("nope")).toThrow(/JSON/);
  });

  it("rejects missing fields", () => {
    expect(() => parseRequest(JSON.stringify({ id: 1 }))).toThrow(/images/);
    expect(() =>
      parseRequest(JSON.stringify({ id: 1, images: [{ w: 2 }] })),
    ).toThrow(/pix_b64/);
  });
});

describe("decodePixels", () => {
  it("round-trips bytes", () => {
    const bytes = new Uint8Array([0, 127, 255, 4]);
    expect(Array.from(decodePixels(encodeImage(bytes, 2, 2)))).toEqual([
      0, 127, 255, 4,
    ]);
  });

  it("rejects wrong payload size", () => {
    expect(() => decodePixels(encodeImage(new Uint8Array(3), 2, 2))).toThrow(
      /expected 4/,
    );
  });
});

describe("runServer", () => {
  async function exchange(lines: string[]): Promise<string[]> {
    const stdin = new PassThrough();
    const stdout = new PassThrough();
    const server = runServer({
      handshake: { proto: 1, name: "t", is_classifier: false, raw_logit: false },
      handler: async (images) => images.map((img) => img.w + img.h),
      stdin,
      stdout,
    });
    for (const line of lines) {
      stdin.write(line + "\n");
    }
    stdin.end();
    await server;
    return stdout.read().toString().trim().split("\n");
  }

  it("emits the handshake first and answers in order", async () => {
    const out = await exchange([
      JSON.stringify({ id: 0, images: [encodeImage(new Uint8Array(4), 2, 2)] }),
      JSON.stringify({
        id: 1,
        images: [encodeImage(new Uint8Array(6), 3, 2), encodeImage(new Uint8Array(1), 1, 1)],
      }),
    ]);
    expect(JSON.parse(out[0])).toMatchObject({ proto: 1, name: "t" });
    expect(JSON.parse(out[1])).toEqual({ id: 0, values: [4] });
    expect(JSON.parse(out[2])).toEqual({ id: 1, values: [5, 2] });
  });

  it("answers malformed requests with an error, never drops them", async () => {
    const out = await exchange([
      "garbage",
      JSON.stringify({ id: 7, images: [encodeImage(new Uint8Array(4), 2, 2)] }),
    ]);
    expect(JSON.parse(out[1])).toMatchObject({ id: -1 });
    expect(JSON.parse(out[1]).error).toMatch(/JSON/);
    expect(JSON.parse(out[2])).toEqual({ id: 7, values: [4] });
  });

  it("reports handler failures with the request id", async () => {
    const stdin = new PassThrough();
    const stdout = new PassThrough();
    const server = runServer({
      handshake: { proto: 1, name: "t", is_classifier: false, raw_logit: false },
      handler: async () => {
        throw new Error("model exploded");
      },
      stdin,
      stdout,
    });
    stdin.write(
      JSON.stringify({ id: 5, images: [encodeImage(new Uint8Array(4), 2, 2)] }) + "\n",
    );
    stdin.end();
    await server;
    const lines = stdout.read().toString().trim().split("\n");
    expect(JSON.parse(lines[1])).toEqual({ id: 5, error: "model exploded" });
  });
});
