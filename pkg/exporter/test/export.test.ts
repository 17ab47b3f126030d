import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, describe, expect, test } from "vitest";

import { devBackend } from "../src/backend.js";
import { textDigest } from "../src/digest.js";
import { ExportError, runExport } from "../src/job.js";
import { readStore } from "../src/store.js";
import { readTexts } from "../src/texts.js";

const dir = mkdtempSync(join(tmpdir(), "export-test-"));
afterAll(() => rmSync(dir, { recursive: true, force: true }));

let seq = 0;
function file(name: string, content: string): string {
  const path = join(dir, `${seq++}-${name}`);
  writeFileSync(path, content, "utf8");
  return path;
}

const THREE = "first sentence\nsecond sentence\nthird sentence\n";

describe("readTexts", () => {
  test("plain lines, order kept, duplicates collapse", () => {
    const path = file("plain.txt", "b\na\nb\n\nc\n");
    expect(readTexts(path)).toEqual(["b", "a", "c"]);
  });

  test("choice jsonl pulls anchor and candidates", () => {
    const path = file(
      "choice.jsonl",
      JSON.stringify({
        id: "1",
        anchor: "A",
        candidates: ["B", "C", "D"],
        correct_index: 0,
      }) + "\n",
    );
    expect(readTexts(path)).toEqual(["A", "B", "C", "D"]);
  });

  test("triplet jsonl pulls all three texts", () => {
    const path = file(
      "trip.jsonl",
      JSON.stringify({ anchor: "A", paraphrase: "P", negation: "N" }) + "\n",
    );
    expect(readTexts(path)).toEqual(["A", "P", "N"]);
  });

  test("pairs tsv skips the header and the score column", () => {
    const path = file(
      "pairs.tsv",
      "sentence1\tsentence2\tscore\tneg_sentence1\n" +
        "It rains.\tWater falls.\t4.5\tIt does not rain.\n" +
        "Dogs bark.\tDogs are loud.\t3.0\t\n",
    );
    expect(readTexts(path)).toEqual([
      "It rains.",
      "Water falls.",
      "It does not rain.",
      "Dogs bark.",
      "Dogs are loud.",
    ]);
  });

  test("unrecognized jsonl objects are rejected", () => {
    const path = file("junk.jsonl", '{"sentence": "no known fields"}\n');
    expect(() => readTexts(path)).toThrow(/not a choice item or triplet/);
  });
});

describe("runExport", () => {
  test("three texts, jsonl: three records of one dim", async () => {
    const out = join(dir, "three.jsonl");
    const result = await runExport({
      modelName: "dev:24",
      textsPath: file("three.txt", THREE),
      outputPath: out,
      format: "jsonl",
    });
    expect(result).toEqual({ count: 3, dim: 24 });
    const vectors = readStore(out);
    expect(vectors.map((v) => v.values.length)).toEqual([24, 24, 24]);
    expect(vectors.map((v) => v.model)).toEqual(["dev:24", "dev:24", "dev:24"]);
  });

  test("ids are the cache digests of (prefix, text)", async () => {
    const out = join(dir, "ids.jsonl");
    await runExport({
      modelName: "dev:8",
      textsPath: file("ids.txt", THREE),
      outputPath: out,
      format: "jsonl",
      instructionPrefix: "query: ",
    });
    const ids = readStore(out).map((v) => v.id);
    expect(ids).toEqual([
      textDigest("first sentence", "query: "),
      textDigest("second sentence", "query: "),
      textDigest("third sentence", "query: "),
    ]);
  });

  test("prefix changes vectors too, not just ids", async () => {
    const texts = file("pfx.txt", "only line\n");
    const plain = join(dir, "plain.jsonl");
    const prefixed = join(dir, "prefixed.jsonl");
    await runExport({
      modelName: "dev:16", textsPath: texts, outputPath: plain, format: "jsonl",
    });
    await runExport({
      modelName: "dev:16", textsPath: texts, outputPath: prefixed,
      format: "jsonl", instructionPrefix: "query: ",
    });
    const [a] = readStore(plain);
    const [b] = readStore(prefixed);
    expect(b.id).not.toBe(a.id);
    expect(Array.from(b.values)).not.toEqual(Array.from(a.values));
  });

  test("same job twice writes byte-identical files", async () => {
    const texts = file("det.txt", THREE);
    for (const format of ["jsonl", "packed"] as const) {
      const one = join(dir, `det1.${format}`);
      const two = join(dir, `det2.${format}`);
      for (const outputPath of [one, two]) {
        await runExport({
          modelName: "dev:48", textsPath: texts, outputPath, format,
          normalize: true,
        });
      }
      expect(readFileSync(one).equals(readFileSync(two))).toBe(true);
    }
  });

  test("normalize yields unit vectors", async () => {
    const out = join(dir, "unit.jsonl");
    await runExport({
      modelName: "dev:96",
      textsPath: file("unit.txt", THREE),
      outputPath: out,
      format: "jsonl",
      normalize: true,
    });
    for (const v of readStore(out)) {
      expect(Math.abs(Math.hypot(...v.values) - 1)).toBeLessThan(1e-12);
    }
  });

  test("batch size does not change the output", async () => {
    const texts = file(
      "batches.txt",
      Array.from({ length: 7 }, (_, i) => `text number ${i}`).join("\n") + "\n",
    );
    const small = join(dir, "b1.jsonl");
    const large = join(dir, "b64.jsonl");
    await runExport({
      modelName: "dev:32", textsPath: texts, outputPath: small,
      format: "jsonl", batchSize: 2,
    });
    await runExport({
      modelName: "dev:32", textsPath: texts, outputPath: large,
      format: "jsonl", batchSize: 64,
    });
    expect(readFileSync(small, "utf8")).toBe(readFileSync(large, "utf8"));
  });

  test("batch size below 1 is rejected", async () => {
    await expect(
      runExport({
        modelName: "dev:8",
        textsPath: file("bad.txt", THREE),
        outputPath: join(dir, "never.jsonl"),
        format: "jsonl",
        batchSize: 0,
      }),
    ).rejects.toThrow(ExportError);
  });

  test("a backend that miscounts is caught", async () => {
    const broken = {
      modelName: "broken",
      embed: async (texts: string[]) =>
        texts.slice(1).map(() => Float64Array.from([1])),
    };
    await expect(
      runExport(
        {
          modelName: "broken",
          textsPath: file("count.txt", THREE),
          outputPath: join(dir, "never2.jsonl"),
          format: "jsonl",
        },
        broken,
      ),
    ).rejects.toThrow(/3 texts/);
  });

  test("inference failures point at the batch flag", async () => {
    const oom = {
      modelName: "oom",
      embed: async () => {
        throw new Error("allocation failed");
      },
    };
    await expect(
      runExport(
        {
          modelName: "oom",
          textsPath: file("oom.txt", THREE),
          outputPath: join(dir, "never3.jsonl"),
          format: "jsonl",
        },
        oom,
      ),
    ).rejects.toThrow(/--batch-size/);
  });

  test("injected backend overrides the model scheme", async () => {
    const constant = {
      modelName: "fixture",
      embed: async (texts: string[]) =>
        texts.map(() => Float64Array.from([3, 4])),
    };
    const out = join(dir, "fixture.jsonl");
    await runExport(
      {
        modelName: "fixture",
        textsPath: file("fixture.txt", "one line\n"),
        outputPath: out,
        format: "jsonl",
        normalize: true,
      },
      constant,
    );
    expect(Array.from(readStore(out)[0].values)).toEqual([0.6, 0.8]);
  });
});
