/**
 * Pulls the texts to embed out of an input file. Three shapes are accepted:
 * the toolkit's JSONL datasets (choice items or negation triplets), its
 * sentence-pair TSV, and plain one-text-per-line files. Order of first
 * appearance is kept; duplicates collapse.
 */

import { readFileSync } from "node:fs";

export function readTexts(path: string): string[] {
  const lines = readFileSync(path, "utf8").split("\n");
  const first = lines.find((l) => l.trim() !== "");
  const out: string[] = [];
  if (first === undefined) return out;

  if (first.trimStart().startsWith("{")) {
    collectJsonl(lines, out);
  } else if (first.split("\t").length >= 3) {
    collectPairsTsv(lines, out);
  } else {
    for (const line of lines) {
      if (line.trim() !== "") out.push(line);
    }
  }
  return [...new Set(out)];
}

function collectJsonl(lines: string[], out: string[]): void {
  for (const [i, line] of lines.entries()) {
    if (!line.trim()) continue;
    let obj: Record<string, unknown>;
    try {
      obj = JSON.parse(line);
    } catch (err) {
      throw new Error(`line ${i + 1}: invalid JSON (${err})`);
    }
    if (Array.isArray(obj.candidates) && typeof obj.anchor === "string") {
      out.push(obj.anchor, ...(obj.candidates as string[]));
    } else if (typeof obj.anchor === "string" && typeof obj.paraphrase === "string") {
      out.push(obj.anchor, obj.paraphrase);
      if (typeof obj.negation === "string") out.push(obj.negation);
    } else {
      throw new Error(`line ${i + 1}: not a choice item or triplet`);
    }
  }
}

function collectPairsTsv(lines: string[], out: string[]): void {
  for (const [i, line] of lines.entries()) {
    if (!line.trim()) continue;
    const fields = line.split("\t");
    if (fields.length < 3) {
      throw new Error(`line ${i + 1}: expected at least 3 tab-separated fields`);
    }
    // header rows are the ones whose score column is not a number
    if (i === 0 && fields[2].trim() !== "" && Number.isNaN(Number(fields[2]))) {
      continue;
    }
    out.push(fields[0], fields[1]);
    if (fields.length > 3 && fields[3] !== "") out.push(fields[3]);
  }
}
