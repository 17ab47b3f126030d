/**
 * embed-exporter: run a local embedding model over a text file and write a
 * negadapt store file, or serve the model over the provider HTTP shape.
 *
 *   embed-exporter export --model <name> --in <path> --out <path>
 *                         --format jsonl|packed [--prefix <text>]
 *                         [--normalize] [--batch-size <n>]
 *   embed-exporter serve  --model <name> --port <n>
 *
 * Model names resolve through @xenova/transformers (install it separately);
 * the "dev:<dim>" scheme selects a deterministic offline stand-in for tests.
 * Exit codes: 0 ok, 2 bad usage or input, 3 model failure, 1 anything else.
 */

import { parseArgs } from "node:util";

import { loadBackend, ModelLoadError } from "./backend.js";
import { ExportError, runExport } from "./job.js";
import { StoreFormat } from "./store.js";
import { createServer, listen } from "./server.js";

const USAGE = `usage:
  embed-exporter export --model <name> --in <path> --out <path> --format jsonl|packed
                        [--prefix <text>] [--normalize] [--batch-size <n>]
  embed-exporter serve  --model <name> --port <n>`;

class UsageError extends Error {}

function required(values: Record<string, unknown>, name: string): string {
  const v = values[name];
  if (typeof v !== "string" || v === "") {
    throw new UsageError(`--${name} is required`);
  }
  return v;
}

async function runExportCommand(argv: string[]): Promise<void> {
  const { values } = parseArgs({
    args: argv,
    options: {
      model: { type: "string" },
      in: { type: "string" },
      out: { type: "string" },
      format: { type: "string" },
      prefix: { type: "string" },
      normalize: { type: "boolean" },
      "batch-size": { type: "string" },
    },
  });
  const format = required(values, "format");
  if (format !== "jsonl" && format !== "packed") {
    throw new UsageError(`--format must be jsonl or packed, got ${format}`);
  }
  const batch = values["batch-size"];
  const result = await runExport({
    modelName: required(values, "model"),
    textsPath: required(values, "in"),
    outputPath: required(values, "out"),
    format: format as StoreFormat,
    instructionPrefix: values.prefix,
    normalize: values.normalize ?? false,
    batchSize: batch === undefined ? undefined : Number(batch),
  });
  console.log(
    `wrote ${result.count} vectors (dim ${result.dim}) to ${values.out}`,
  );
}

async function runServeCommand(argv: string[]): Promise<void> {
  const { values } = parseArgs({
    args: argv,
    options: {
      model: { type: "string" },
      port: { type: "string" },
    },
  });
  const portArg = required(values, "port");
  const port = Number(portArg);
  if (!Number.isInteger(port) || port < 0 || port > 65535) {
    throw new UsageError(`--port must be 0..65535, got ${portArg}`);
  }
  const backend = await loadBackend(required(values, "model"));
  const server = createServer(backend);
  const bound = await listen(server, port);
  // tests and scripts scrape this line for the ephemeral port
  console.log(`listening on http://127.0.0.1:${bound} (model ${backend.modelName})`);
  process.on("SIGINT", () => server.close(() => process.exit(0)));
  process.on("SIGTERM", () => server.close(() => process.exit(0)));
}

export async function main(argv: string[]): Promise<number> {
  try {
    const [command, ...rest] = argv;
    if (command === "export") {
      await runExportCommand(rest);
    } else if (command === "serve") {
      await runServeCommand(rest);
    } else {
      throw new UsageError(USAGE);
    }
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    if (err instanceof UsageError || err instanceof ExportError) return 2;
    if (err instanceof ModelLoadError) return 3;
    if (err && typeof err === "object" && "code" in err) {
      // parseArgs option errors are usage problems, not crashes
      const code = String((err as { code: unknown }).code);
      if (code.startsWith("ERR_PARSE_ARGS")) return 2;
      if (code === "ENOENT" || code === "EACCES") return 2;
    }
    return 1;
  }
}

