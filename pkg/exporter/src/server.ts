import http from "node:http";

import { EmbeddingBackend } from "./backend.js";
import { embedBatched, normalizeVector } from "./job.js";

/**
 * Local embedding server speaking the provider shape the primary toolkit
 * already talks to: POST /embeddings with {"model", "input": [texts]} in,
 * {"data": [{"index", "embedding"}, ...]} out. Responses are unit vectors.
 *
 * Requests run strictly one at a time. This is a test fixture standing in
 * for a hosted provider, not a production service.
 */
export function createServer(backend: EmbeddingBackend): http.Server {
  let queue: Promise<unknown> = Promise.resolve();

  const server = http.createServer((req, res) => {
    const chunks: Buffer[] = [];
    req.on("data", (c) => chunks.push(c));
    req.on("end", () => {
      queue = queue
        .catch(() => undefined)
        .then(() => handle(backend, req, Buffer.concat(chunks), res));
    });
  });
  return server;
}

function reply(res: http.ServerResponse, status: number, payload: unknown): void {
  const body = JSON.stringify(payload);
  res.writeHead(status, { "Content-Type": "application/json" });
  res.end(body);
}

function fail(res: http.ServerResponse, status: number, message: string): void {
  reply(res, status, { error: { message } });
}

async function handle(
  backend: EmbeddingBackend,
  req: http.IncomingMessage,
  body: Buffer,
  res: http.ServerResponse,
): Promise<void> {
  if (req.method !== "POST" || req.url !== "/embeddings") {
    fail(res, 404, `no ${req.method} handler for ${req.url}`);
    return;
  }
  let parsed: { model?: unknown; input?: unknown };
  try {
    parsed = JSON.parse(body.toString("utf8"));
  } catch (err) {
    fail(res, 400, `request body is not JSON: ${err}`);
    return;
  }
  const input = parsed.input;
  if (!Array.isArray(input) || !input.every((t) => typeof t === "string")) {
    fail(res, 400, "request must carry an input field listing texts");
    return;
  }
  if (typeof parsed.model === "string" && parsed.model !== backend.modelName) {
    fail(
      res,
      400,
      `this server embeds with ${backend.modelName}, not ${parsed.model}; ` +
        "point --model at the served model so cache keys line up",
    );
    return;
  }

  let vectors: Float64Array[];
  try {
    vectors = await embedBatched(backend, input, Math.max(1, input.length));
    // same normalization as the export path, so both produce identical bytes
    vectors.forEach((v, i) => normalizeVector(v, `input ${i}`));
  } catch (err) {
    fail(res, 500, String(err));
    return;
  }
  const data = vectors.map((values, index) => ({
    index,
    embedding: Array.from(values),
  }));
  reply(res, 200, { model: backend.modelName, data });
}

/** Start listening and resolve with the bound port (0 picks a free one). */
export function listen(server: http.Server, port: number): Promise<number> {
  return new Promise((resolve, reject) => {
    server.once("error", reject);
    server.listen(port, "127.0.0.1", () => {
      const addr = server.address();
      if (addr === null || typeof addr === "string") {
        reject(new Error("server has no bound port"));
        return;
      }
      resolve(addr.port);
    });
  });
}
