"""Command-line front end.

Wires datasets, the embedding store, the adapter, evaluation and stats into
file-level workflows. Configuration layers resolve as flags > environment >
config file > defaults. Exit codes: 0 success, 2 I/O, 3 provider failure,
4 data/validation, 5 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .adapter import DEFAULT_GRID, grid_search_a, learn_weights, load_weights, save_weights
from .datasets import (
    _is_number,
    load_choice_items,
    load_scored_pairs,
    load_triplets_jsonl,
    pairs_to_triplets,
)
from .diagnose import (
    diagnose,
    save_diagnosis,
    save_diagnosis_csv,
    weighted_diagnose,
)
from .errors import (
    CannotNegate,
    EmptyTrainingSet,
    InvariantViolation,
    NegadaptError,
    ProviderError,
    RetriesExhausted,
)
from .evaluate import (
    RunMatrix,
    eval_choice,
    eval_stsb,
    load_runmatrix,
    run_experiment,
    save_runmatrix,
    save_runmatrix_csv,
    summarize_matrix,
)
from .negation import negate_sentence
from .stats import DEFAULT_ALPHA, cd_data, save_cd_csv, save_cd_edges_csv, save_cd_json
from .store import DEFAULT_BATCH_SIZE, FetchStats, StoreKey, VectorStoreCache, get_or_fetch, read_store
from .vectors import EmbeddingVector

EVAL_FORMAT = "negadapt-eval/1"
DEFAULT_CACHE_DIR = "./negadapt-cache"
_DIGEST_RE = re.compile(r"[0-9a-f]{64}$")

# keys allowed in the config file; credentials are deliberately absent
_CONFIG_KEYS = {
    "endpoint", "model", "cache_dir", "batch_size",
    "instruction_prefix", "seed", "grid", "output_dir",
}
_SECRET_KEYS = {"api_key", "apikey", "token", "credentials", "secret"}


@dataclass(frozen=True)
class RunConfig:
    endpoint: str | None
    model: str | None
    cache_dir: str
    batch_size: int
    instruction_prefix: str
    seed: int
    grid: tuple[float, ...]
    output_dir: str

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.grid:
            raise ValueError("grid must be non-empty")
        if list(self.grid) != sorted(self.grid):
            raise ValueError("grid must be sorted ascending")
        if any(a < 0 for a in self.grid):
            raise ValueError("grid values must be >= 0")


def _load_config_file(path: str) -> dict:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(obj, dict):
        raise ValueError(f"config file {path} must hold a flat JSON object")
    for key in obj:
        if key.lower() in _SECRET_KEYS:
            raise ValueError(
                f"config key {key!r} looks like a credential; use the "
                "NEGADAPT_API_KEY environment variable or --credentials-file"
            )
        if key not in _CONFIG_KEYS:
            raise ValueError(f"unknown config key {key!r}")
    return obj


def _parse_grid(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    """Merge flags > environment > config file > defaults into one RunConfig."""
    file_cfg = {}
    config_path = getattr(ns, "config", None)
    if config_path:
        file_cfg = _load_config_file(config_path)

    def pick(flag_name: str, env_name: str | None, file_key: str, default):
        value = getattr(ns, flag_name, None)
        if value is not None:
            return value
        if env_name and os.environ.get(env_name):
            return os.environ[env_name]
        if file_key in file_cfg:
            return file_cfg[file_key]
        return default

    grid = pick("grid_values", None, "grid", DEFAULT_GRID)
    if isinstance(grid, str):
        grid = _parse_grid(grid)
    return RunConfig(
        endpoint=pick("endpoint", None, "endpoint", None),
        model=pick("model", None, "model", None),
        cache_dir=str(pick("cache_dir", "NEGADAPT_CACHE_DIR", "cache_dir", DEFAULT_CACHE_DIR)),
        batch_size=int(pick("batch_size", None, "batch_size", DEFAULT_BATCH_SIZE)),
        instruction_prefix=str(pick("prefix", None, "instruction_prefix", "")),
        seed=int(pick("seed", None, "seed", 0)),
        grid=tuple(float(a) for a in grid),
        output_dir=str(pick("output", None, "output_dir", ".")),
    )


def resolve_credentials(ns: argparse.Namespace) -> str | None:
    """Secrets come from a file flag or the environment, never the config file."""
    path = getattr(ns, "credentials_file", None)
    if path:
        return Path(path).read_text(encoding="utf-8").strip()
    return os.environ.get("NEGADAPT_API_KEY") or None


def _require(value, name: str):
    if not value:
        raise ValueError(f"{name} is required (flag --{name} or config file)")
    return value


def _out_dir(cfg: RunConfig) -> Path:
    path = Path(cfg.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _gather(
    texts: Sequence[str], cfg: RunConfig, credentials: str | None
) -> tuple[dict[str, EmbeddingVector], FetchStats]:
    vectors, stats = get_or_fetch(
        texts,
        _require(cfg.model, "model"),
        VectorStoreCache(cfg.cache_dir),
        _require(cfg.endpoint, "endpoint"),
        credentials,
        instruction_prefix=cfg.instruction_prefix,
        batch_size=cfg.batch_size,
    )
    return dict(zip(texts, vectors)), stats


def _write_json(obj: dict, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


# --- dataset text extraction -------------------------------------------------

def _detect_kind(path: str) -> str:
    with open(path, encoding="utf-8") as f:
        first = ""
        for line in f:
            if line.strip():
                first = line.strip()
                break
    if first.startswith("{"):
        obj = json.loads(first)
        return "triplets" if "negation" in obj else "choice"
    fields = first.split("\t" if "\t" in first else ",")
    if len(fields) >= 3:
        return "pairs"
    return "choice"


def _texts_for(kind: str, path: str, seed: int) -> list[str]:
    texts: list[str] = []
    if kind == "pairs":
        for p in load_scored_pairs(path):
            texts.append(p.sentence1)
            texts.append(p.sentence2)
            if p.neg_sentence1 is not None:
                texts.append(p.neg_sentence1)
    elif kind == "choice":
        for item in load_choice_items(path, shuffle_seed=seed):
            texts.append(item.anchor)
            texts.extend(item.candidates)
    elif kind == "triplets":
        for t in load_triplets_jsonl(path):
            texts.extend((t.anchor, t.paraphrase, t.negation))
    else:
        raise ValueError(f"unknown dataset kind {kind!r}")
    return list(dict.fromkeys(texts))


# --- subcommands -------------------------------------------------------------

def cmd_negate(ns: argparse.Namespace) -> int:
    try:
        raw = Path(ns.input).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read {ns.input}: {exc}", file=sys.stderr)
        return 2

    lines = raw.splitlines()
    out_lines: list[str] = []
    failures = malformed = 0
    start = 0
    if not lines or not any(line.strip() for line in lines):
        out_lines.append("sentence1\tsentence2\tscore\tneg_sentence1")
        print(f"{ns.input}: no data rows; wrote header only", file=sys.stderr)
    else:
        head = lines[0].split("\t")
        if len(head) >= 3 and not _is_number(head[2]):
            out_lines.append("\t".join(head[:3]) + "\tneg_sentence1")
            start = 1
        for line in lines[start:]:
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) < 3:
                out_lines.append(line)  # copied unchanged; schema unknown
                malformed += 1
                continue
            try:
                neg = negate_sentence(fields[0])
            except CannotNegate:
                neg = ""
                failures += 1
            out_lines.append("\t".join(fields[:3]) + "\t" + neg)

    Path(ns.output).write_text("\n".join(out_lines) + "\n", encoding="utf-8")
    if failures:
        print(f"{failures} rows could not be negated (empty column emitted)", file=sys.stderr)
    if malformed:
        print(f"{malformed} malformed rows copied unchanged", file=sys.stderr)
    return 0


def cmd_embed(ns: argparse.Namespace) -> int:
    cfg = resolve_config(ns)
    cache = VectorStoreCache(cfg.cache_dir)

    if not ns.from_store and not ns.dataset:
        raise ValueError("a dataset path or --from-store is required")

    if ns.from_store:
        loaded = skipped = 0
        for vec in read_store(ns.from_store):
            model = vec.model_tag or cfg.model
            if not model or not _DIGEST_RE.fullmatch(vec.id):
                skipped += 1
                continue
            cache.put(StoreKey(model, vec.id), vec)
            loaded += 1
        print(f"store import: {loaded} vectors cached, {skipped} skipped")
        if not ns.dataset:
            return 0

    kind = ns.kind if ns.kind != "auto" else _detect_kind(ns.dataset)
    texts = _texts_for(kind, ns.dataset, cfg.seed)
    _, stats = _gather(texts, cfg, resolve_credentials(ns))
    print(
        f"{stats.unique_texts} unique texts | {stats.hits} cache hits | "
        f"{stats.misses} fetched | {stats.requests_made} provider requests"
    )
    return 0


def cmd_diagnose(ns: argparse.Namespace) -> int:
    cfg = resolve_config(ns)
    pairs = load_scored_pairs(ns.dataset)
    texts = _texts_for("pairs", ns.dataset, cfg.seed)
    embeddings, _ = _gather(texts, cfg, resolve_credentials(ns))

    if ns.weights:
        w = load_weights(ns.weights)
        report = weighted_diagnose(pairs, embeddings, w, n_bins=ns.bins)
    else:
        report = diagnose(pairs, embeddings, n_bins=ns.bins)

    out = _out_dir(cfg)
    save_diagnosis(report, out / "diagnosis.json")
    save_diagnosis_csv(report, out / "diagnosis.csv")
    if not getattr(ns, "no_figures", False):
        from .plots import plot_diagnosis

        plot_diagnosis(report, out / "diagnosis.png")

    for g in report.groups:
        frac = "-" if g.frac_neg_wins is None else f"{g.frac_neg_wins:.3f}"
        print(f"group {g.index}: n={g.n_pairs} frac_neg_wins={frac}")
    if report.excluded_missing_negation:
        print(f"excluded (no negation): {report.excluded_missing_negation}")
    print(f"wrote {out / 'diagnosis.json'}")
    return 0


def _load_training_triplets(ns: argparse.Namespace):
    kind = ns.kind if ns.kind != "auto" else _detect_kind(ns.dataset)
    if kind == "triplets":
        triplets = load_triplets_jsonl(ns.dataset)
        if not triplets:
            raise EmptyTrainingSet(f"{ns.dataset} holds no triplets")
        return triplets, []
    pairs = load_scored_pairs(ns.dataset)
    result = pairs_to_triplets(pairs, min_score=ns.min_score)
    missing = [p.pair_id for p in pairs if p.neg_sentence1 is None]
    if not len(result):
        raise EmptyTrainingSet(
            f"no usable triplets: {result.skipped_missing_negation} rows miss "
            f"negations (pair ids {', '.join(missing[:8])}"
            + (", ..." if len(missing) > 8 else "") + ")"
        )
    return tuple(result), missing


def cmd_learn(ns: argparse.Namespace) -> int:
    cfg = resolve_config(ns)
    triplets, _ = _load_training_triplets(ns)
    texts: list[str] = []
    for t in triplets:
        texts.extend((t.anchor, t.paraphrase, t.negation))
    embeddings, _ = _gather(list(dict.fromkeys(texts)), cfg, resolve_credentials(ns))

    out = _out_dir(cfg)
    if ns.a is not None:
        w = learn_weights(tuple(triplets), embeddings, ns.a, dataset_id=ns.dataset)
    else:
        search = grid_search_a(tuple(triplets), embeddings, grid=cfg.grid)
        for a, acc in search.train_accuracy_by_a:
            print(f"a={a:<6g} train_accuracy={acc:.4f}")
        print(f"best a={search.best_a:g} train_accuracy={search.best_accuracy:.4f}")
        w = learn_weights(tuple(triplets), embeddings, search.best_a, dataset_id=ns.dataset)
        if not getattr(ns, "no_figures", False):
            from .plots import plot_grid_search

            plot_grid_search(search, out / "grid_search.png")

    save_weights(w, out / "weights.json")
    print(f"wrote {out / 'weights.json'} (a={w.a:g}, dim={w.weights.shape[0]})")
    return 0


def cmd_eval(ns: argparse.Namespace) -> int:
    cfg = resolve_config(ns)
    w = load_weights(ns.weights) if ns.weights else None
    out = _out_dir(cfg)
    credentials = resolve_credentials(ns)

    if ns.task == "stsb":
        pairs = load_scored_pairs(ns.dataset)
        embeddings, _ = _gather(_texts_for("pairs", ns.dataset, cfg.seed), cfg, credentials)
        result = eval_stsb(pairs, embeddings, w)
        payload = {
            "format": EVAL_FORMAT,
            "task": "stsb",
            "model_tag": result.model_tag,
            "n": result.n,
            "correct_count": result.correct_count,
            "accuracy": result.accuracy,
            "pearson": result.pearson,
            "weighted": result.weighted,
            "a": result.a,
        }
        print(f"accuracy {result.accuracy:.4f} (n={result.n}) pearson {result.pearson:.4f}")
        _write_json(payload, out / "eval_stsb.json")
        print(f"wrote {out / 'eval_stsb.json'}")
    else:
        items = load_choice_items(ns.dataset, shuffle_seed=cfg.seed)
        embeddings, _ = _gather(_texts_for("choice", ns.dataset, cfg.seed), cfg, credentials)
        result = eval_choice(items, embeddings, w)
        payload = {
            "format": EVAL_FORMAT,
            "task": "choice",
            "n": result.n,
            "correct_count": result.correct_count,
            "accuracy": float(result),
            "tie_item_ids": list(result.tie_item_ids),
            "weighted": w is not None,
            "a": None if w is None else w.a,
        }
        print(f"accuracy {float(result):.4f} (n={result.n}, ties={len(result.tie_item_ids)})")
        _write_json(payload, out / "eval_choice.json")
        print(f"wrote {out / 'eval_choice.json'}")
    return 0


def cmd_experiment(ns: argparse.Namespace) -> int:
    cfg = resolve_config(ns)
    items = load_choice_items(ns.dataset, shuffle_seed=cfg.seed)
    embeddings, _ = _gather(
        _texts_for("choice", ns.dataset, cfg.seed), cfg, resolve_credentials(ns)
    )
    sizes = [int(s) for s in ns.train_sizes.split(",") if s.strip()]
    matrices = run_experiment(
        items, embeddings, sizes,
        repeats=ns.repeats, base_seed=cfg.seed, grid=cfg.grid, pool_size=ns.pool,
    )

    out = _out_dir(cfg)
    for ts, matrix in sorted(matrices.items()):
        save_runmatrix(matrix, out / f"runmatrix_{ts}.json")
        save_runmatrix_csv(matrix, out / f"runmatrix_{ts}.csv")
        cells = "  ".join(
            f"{tag} {mean:.4f}±{std:.4f}"
            for tag, (mean, std) in summarize_matrix(matrix).items()
        )
        print(f"train_size {ts}: {cells}")
    if not getattr(ns, "no_figures", False):
        from .plots import plot_experiment

        plot_experiment(matrices, out / "experiment.png")
    print(f"wrote {len(matrices)} run matrices to {out}")
    return 0


def _stack_matrices(paths: Sequence[str]) -> RunMatrix:
    matrices = [load_runmatrix(p) for p in paths]
    base = matrices[0]
    for m in matrices[1:]:
        if m.run_count != base.run_count or m.seeds != base.seeds:
            raise ValueError("run matrices disagree on run count or seeds")

    chosen: list[tuple[str, int, tuple[float, ...]]] = []
    for m in matrices:
        for tag, row in zip(m.method_tags, m.scores):
            if any(t == tag and r == row for t, _, r in chosen):
                continue  # same method with identical scores: keep one copy
            chosen.append((tag, m.train_size, row))
    counts = Counter(t for t, _, _ in chosen)
    labels = [t if counts[t] == 1 else f"{t}@{ts}" for t, ts, _ in chosen]
    if len(set(labels)) != len(labels):
        raise ValueError("method labels collide even after train-size qualification")
    sizes = {m.train_size for m in matrices}
    return RunMatrix(
        method_tags=tuple(labels),
        run_count=base.run_count,
        scores=tuple(r for _, _, r in chosen),
        train_size=base.train_size if len(sizes) == 1 else 0,
        seeds=base.seeds,
    )


def cmd_compare(ns: argparse.Namespace) -> int:
    cfg = resolve_config(ns)
    matrix = _stack_matrices(ns.results)
    data = cd_data(matrix, alpha=ns.alpha)

    out = _out_dir(cfg)
    save_cd_json(data, out / "cd.json")
    save_cd_csv(data, out / "cd.csv")
    save_cd_edges_csv(data, out / "cd_edges.csv")
    if not getattr(ns, "no_figures", False):
        from .plots import plot_cd

        plot_cd(data, out / "cd.png")

    for tag, rank in zip(data.method_tags, data.avg_ranks):
        print(f"{tag}: avg rank {rank:.3f}")
    for clique in data.cliques:
        names = ", ".join(data.method_tags[i] for i in clique)
        print(f"clique: {names}")
    for note in data.notes:
        print(f"note: {note}")
    print(f"wrote {out / 'cd.json'}")
    return 0


# --- parser and dispatch -----------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS defaults let the flags appear before or after the subcommand
    # without the subparser's defaults clobbering already-parsed values
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--endpoint", help="embedding provider base URL")
    common.add_argument("--model", help="embedding model identifier")
    common.add_argument("--cache-dir", dest="cache_dir")
    common.add_argument("--seed", type=int)
    common.add_argument("--config", help="flat JSON config file")
    common.add_argument("--output", help="output directory")
    common.add_argument("--batch-size", dest="batch_size", type=int)
    common.add_argument("--prefix", help="instruction prefix sent with every text")
    common.add_argument("--grid-values", dest="grid_values",
                        help="comma-separated sharpness grid")
    common.add_argument("--credentials-file", dest="credentials_file",
                        help="file holding the provider API key")
    common.add_argument("--no-figures", dest="no_figures", action="store_true")

    parser = argparse.ArgumentParser(
        prog="negadapt",
        description="Diagnose and patch negation blindness in text embeddings.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("negate", parents=[common],
                       help="append a negated-sentence column to a TSV")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_negate)

    p = sub.add_parser("embed", parents=[common], help="populate the embedding cache")
    p.add_argument("dataset", nargs="?", default=None)
    p.add_argument("--kind", choices=["auto", "pairs", "choice", "triplets"], default="auto")
    p.add_argument("--from-store", dest="from_store", default=None,
                   help="pre-warm the cache from a store file")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("diagnose", parents=[common],
                       help="per-group paraphrase vs negation similarity report")
    p.add_argument("dataset")
    p.add_argument("--weights", default=None)
    p.add_argument("--bins", type=int, default=20)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("learn", parents=[common], help="fit softmax weights")
    p.add_argument("dataset")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--a", type=float, default=None, help="fixed sharpness; skip the search")
    mode.add_argument("--grid", action="store_true",
                      help="grid-search the sharpness (the default when --a is absent)")
    p.add_argument("--kind", choices=["auto", "pairs", "triplets"], default="auto")
    p.add_argument("--min-score", dest="min_score", type=float, default=0.8)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("eval", parents=[common], help="run an evaluation task")
    p.add_argument("task", choices=["stsb", "choice"])
    p.add_argument("dataset")
    p.add_argument("--weights", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment", parents=[common],
                       help="repeated train/test runs across train sizes")
    p.add_argument("dataset")
    p.add_argument("--train-sizes", dest="train_sizes", default="200,500,1000")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--pool", type=int, default=None,
                   help="train pool size per run (default: largest train size)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("compare", parents=[common],
                       help="pairwise significance tests over run matrices")
    p.add_argument("results", nargs="+")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return ns.func(ns)
    except (ProviderError, RetriesExhausted) as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return 3
    except InvariantViolation as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return 5
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except (NegadaptError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except Exception as exc:  # anything unclassified is a bug
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
