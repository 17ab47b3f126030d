import { createHash } from "node:crypto";

/** Produces one raw (un-normalized) float64 vector per input text. */
export interface EmbeddingBackend {
  readonly modelName: string;
  embed(texts: string[]): Promise<Float64Array[]>;
}

export class ModelLoadError extends Error {}

const DEV_DEFAULT_DIM = 32;

/**
 * Offline stand-in for a hub model, selected with the "dev:" scheme
 * ("dev:" for dim 32, "dev:384" for dim 384). Vectors are pseudo-random
 * but fully determined by the text bytes, so exports and serve responses
 * are reproducible anywhere with no model download. Use it for tests and
 * plumbing checks only; it knows nothing about language.
 */
export function devBackend(modelName: string): EmbeddingBackend {
  const spec = modelName.slice("dev:".length);
  const dim = spec === "" ? DEV_DEFAULT_DIM : Number(spec);
  if (!Number.isInteger(dim) || dim < 1) {
    throw new ModelLoadError(`bad dev model dim ${JSON.stringify(spec)}`);
  }
  return {
    modelName,
    embed: async (texts) => texts.map((t) => devVector(t, dim)),
  };
}

function devVector(text: string, dim: number): Float64Array {
  const seed = createHash("sha256").update(text, "utf8").digest();
  const values = new Float64Array(dim);
  let filled = 0;
  for (let block = 0; filled < dim; block++) {
    const counter = Buffer.alloc(4);
    counter.writeUInt32BE(block);
    const bytes = createHash("sha256").update(seed).update(counter).digest();
    for (let k = 0; k + 4 <= bytes.length && filled < dim; k += 4) {
      // uint32 -> [-1, 1); exact in float64 (power-of-two division)
      values[filled++] = bytes.readUInt32BE(k) / 2 ** 31 - 1;
    }
  }
  return values;
}

async function transformersBackend(modelName: string): Promise<EmbeddingBackend> {
  const runtime = "@xenova/transformers";
  let mod: any;
  try {
    mod = await import(runtime);
  } catch (err) {
    throw new ModelLoadError(
      `model runtime is not installed; run "npm install ${runtime}" ` +
        `to use hub models (${err})`,
    );
  }
  let extractor: any;
  try {
    extractor = await mod.pipeline("feature-extraction", modelName);
  } catch (err) {
    throw new ModelLoadError(`could not load model ${modelName}: ${err}`);
  }
  return {
    modelName,
    embed: async (texts) => {
      const out = await extractor(texts, { pooling: "mean", normalize: false });
      const rows: number[][] = out.tolist();
      return rows.map((r) => Float64Array.from(r));
    },
  };
}

export async function loadBackend(modelName: string): Promise<EmbeddingBackend> {
  if (modelName.startsWith("dev:")) return devBackend(modelName);
  return transformersBackend(modelName);
}
