/**
 * Writers (and readers, for round-trip tests) for the two negadapt vector
 * store formats.
 *
 * JSONL: one object per line, {"id", "model", "dim", "vector"}, full float64.
 * Packed: "NEGV" magic, then a little-endian header of uint32 version (1),
 * uint32 dim, uint64 count, then per record a uint16 id byte length, the
 * UTF-8 id, and dim float32 values. Packed quantizes to binary32; that is
 * the format's one deliberate precision loss.
 */

import { endianness } from "node:os";
import { readFileSync, writeFileSync } from "node:fs";

export interface StoredVector {
  id: string;
  model: string;
  values: Float64Array;
}

export type StoreFormat = "jsonl" | "packed";

const MAGIC = Buffer.from("NEGV", "latin1");
const VERSION = 1;
const HEADER_BYTES = 4 + 4 + 4 + 8;

export class StoreFormatError extends Error {}

function checkDims(vectors: StoredVector[]): number {
  const dim = vectors.length ? vectors[0].values.length : 0;
  for (const v of vectors) {
    if (v.values.length !== dim) {
      throw new StoreFormatError(
        `vector ${v.id} has dim ${v.values.length}, expected ${dim}`,
      );
    }
  }
  return dim;
}

export function encodeJsonl(vectors: StoredVector[]): string {
  checkDims(vectors);
  const lines = vectors.map((v) =>
    JSON.stringify({
      id: v.id,
      model: v.model,
      dim: v.values.length,
      vector: Array.from(v.values),
    }),
  );
  return lines.length ? lines.join("\n") + "\n" : "";
}

export function encodePacked(vectors: StoredVector[]): Buffer {
  const dim = checkDims(vectors);
  const header = Buffer.alloc(HEADER_BYTES);
  MAGIC.copy(header, 0);
  header.writeUInt32LE(VERSION, 4);
  header.writeUInt32LE(dim, 8);
  header.writeBigUInt64LE(BigInt(vectors.length), 12);

  const chunks: Buffer[] = [header];
  for (const v of vectors) {
    const id = Buffer.from(v.id, "utf8");
    if (id.length > 0xffff) {
      throw new StoreFormatError(`id too long for packed format: ${id.length} bytes`);
    }
    const len = Buffer.alloc(2);
    len.writeUInt16LE(id.length);
    // Float32Array conversion is the IEEE round-to-nearest double->single
    // cast; the file is little-endian regardless of platform.
    const f32 = new Float32Array(v.values);
    const body = Buffer.from(f32.buffer, f32.byteOffset, f32.byteLength);
    if (endianness() !== "LE") body.swap32();
    chunks.push(len, id, body);
  }
  return Buffer.concat(chunks);
}

export function writeStore(
  vectors: StoredVector[],
  path: string,
  format: StoreFormat,
): void {
  if (format === "jsonl") {
    writeFileSync(path, encodeJsonl(vectors), "utf8");
  } else if (format === "packed") {
    writeFileSync(path, encodePacked(vectors));
  } else {
    throw new StoreFormatError(`unknown store format: ${format}`);
  }
}

export function readStore(path: string): StoredVector[] {
  const data = readFileSync(path);
  if (data.subarray(0, 4).equals(MAGIC)) return decodePacked(data);
  return decodeJsonl(data.toString("utf8"));
}

function decodeJsonl(text: string): StoredVector[] {
  const vectors: StoredVector[] = [];
  for (const [i, line] of text.split("\n").entries()) {
    if (!line.trim()) continue;
    let obj: { id?: unknown; model?: unknown; dim?: unknown; vector?: unknown };
    try {
      obj = JSON.parse(line);
    } catch (err) {
      throw new StoreFormatError(`line ${i + 1}: invalid JSON (${err})`);
    }
    if (typeof obj.id !== "string" || !Array.isArray(obj.vector)) {
      throw new StoreFormatError(`line ${i + 1}: missing id or vector`);
    }
    if (obj.dim !== obj.vector.length) {
      throw new StoreFormatError(
        `line ${i + 1}: dim ${obj.dim} != vector length ${obj.vector.length}`,
      );
    }
    vectors.push({
      id: obj.id,
      model: typeof obj.model === "string" ? obj.model : "",
      values: Float64Array.from(obj.vector as number[]),
    });
  }
  return vectors;
}

function decodePacked(data: Buffer): StoredVector[] {
  if (data.length < HEADER_BYTES) {
    throw new StoreFormatError("truncated packed header");
  }
  const version = data.readUInt32LE(4);
  if (version !== VERSION) {
    throw new StoreFormatError(
      `packed store version ${version}; this reader speaks ${VERSION}`,
    );
  }
  const dim = data.readUInt32LE(8);
  const count = Number(data.readBigUInt64LE(12));

  const vectors: StoredVector[] = [];
  let offset = HEADER_BYTES;
  for (let i = 0; i < count; i++) {
    if (offset + 2 > data.length) {
      throw new StoreFormatError(`record ${i}: id length truncated`);
    }
    const idLen = data.readUInt16LE(offset);
    offset += 2;
    if (offset + idLen + dim * 4 > data.length) {
      throw new StoreFormatError(`record ${i}: truncated`);
    }
    const id = data.subarray(offset, offset + idLen).toString("utf8");
    offset += idLen;
    const values = new Float64Array(dim);
    for (let k = 0; k < dim; k++) {
      values[k] = data.readFloatLE(offset + 4 * k);
    }
    offset += dim * 4;
    vectors.push({ id, model: "", values });
  }
  if (offset !== data.length) {
    throw new StoreFormatError(
      `${data.length - offset} trailing bytes after last record`,
    );
  }
  return vectors;
}
