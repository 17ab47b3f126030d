import { EmbeddingBackend, loadBackend } from "./backend.js";
import { textDigest } from "./digest.js";
import { StoredVector, StoreFormat, writeStore } from "./store.js";
import { readTexts } from "./texts.js";

export interface ExportJob {
  modelName: string;
  textsPath: string;
  outputPath: string;
  format: StoreFormat;
  instructionPrefix?: string;
  batchSize?: number;
  normalize?: boolean;
}

export interface ExportResult {
  count: number;
  dim: number;
}

const DEFAULT_BATCH = 32;

export class ExportError extends Error {}

/** Unit-normalize in place. Rejects zero vectors instead of emitting NaN. */
export function normalizeVector(values: Float64Array, label: string): void {
  let sq = 0;
  for (const x of values) sq += x * x;
  const norm = Math.sqrt(sq);
  if (norm === 0) {
    throw new ExportError(`cannot normalize zero vector (${label})`);
  }
  for (let i = 0; i < values.length; i++) values[i] /= norm;
}

export async function embedBatched(
  backend: EmbeddingBackend,
  texts: string[],
  batchSize: number,
): Promise<Float64Array[]> {
  const vectors: Float64Array[] = [];
  for (let start = 0; start < texts.length; start += batchSize) {
    const batch = texts.slice(start, start + batchSize);
    let rows: Float64Array[];
    try {
      rows = await backend.embed(batch);
    } catch (err) {
      throw new ExportError(
        `inference failed on texts ${start}..${start + batch.length - 1}: ` +
          `${err}; if this is an out-of-memory failure, try a smaller --batch-size`,
      );
    }
    if (rows.length !== batch.length) {
      throw new ExportError(
        `backend returned ${rows.length} vectors for ${batch.length} texts`,
      );
    }
    vectors.push(...rows);
  }
  return vectors;
}

/**
 * Embed every unique text in the job's input file and write a store file.
 *
 * Ids are the cache digests of (prefix, text), and the prefix is prepended
 * to the text the model sees, so the output is exactly what the primary
 * toolkit would have cached had it fetched the same texts itself.
 */
export async function runExport(
  job: ExportJob,
  backend?: EmbeddingBackend,
): Promise<ExportResult> {
  const batchSize = job.batchSize ?? DEFAULT_BATCH;
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    throw new ExportError(`batch size must be a positive integer, got ${batchSize}`);
  }
  if (job.format !== "jsonl" && job.format !== "packed") {
    throw new ExportError(`format must be jsonl or packed, got ${job.format}`);
  }
  const prefix = job.instructionPrefix ?? "";
  const texts = readTexts(job.textsPath);
  backend ??= await loadBackend(job.modelName);

  const raw = await embedBatched(backend, texts.map((t) => prefix + t), batchSize);

  const dim = raw.length ? raw[0].length : 0;
  const vectors: StoredVector[] = raw.map((values, i) => {
    if (values.length !== dim) {
      throw new ExportError(
        `inconsistent dims: text ${i} got ${values.length}, expected ${dim}`,
      );
    }
    if (job.normalize) normalizeVector(values, textDigest(texts[i], prefix));
    return {
      id: textDigest(texts[i], prefix),
      model: job.modelName,
      values,
    };
  });

  writeStore(vectors, job.outputPath, job.format);
  return { count: vectors.length, dim };
}
