"""Paraphrase-vs-negation evaluation tasks and the repeated-sampling runner.

Two tasks: scored-pair detection (is sentence2 closer to sentence1 than the
negation is, plus Pearson correlation against human scores) and 1-of-3
paraphrase selection. The runner repeats train/test splits, fits softmax
weights per run, and collects accuracy into a RunMatrix for the stats layer.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .adapter import DEFAULT_GRID, NegationTriplet, grid_search_a, learn_weights
from .datasets import ChoiceItem, ScoredPair, TripletBuildResult, stratified_split
from .errors import (
    DegenerateInput,
    FormatError,
    LengthMismatch,
    MissingEmbedding,
    TrainSizeTooLarge,
)
from .vectors import EmbeddingVector, WeightVector, cosine, weighted_cosine

RUNMATRIX_FORMAT = "negadapt-runmatrix/1"


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation, two-pass (centering before products)."""
    if len(xs) != len(ys):
        raise LengthMismatch(f"{len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise DegenerateInput("need at least 2 observations")
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.sqrt(np.dot(xc, xc)))
    sy = float(np.sqrt(np.dot(yc, yc)))
    if sx == 0.0 or sy == 0.0:
        raise DegenerateInput("constant sequence has no defined correlation")
    return float(np.dot(xc, yc) / (sx * sy))


@dataclass(frozen=True)
class StsbEvalResult:
    """Accuracy over negation-bearing pairs plus correlation over all pairs."""

    model_tag: str
    n: int
    correct_count: int
    accuracy: float
    pearson: float
    weighted: bool
    a: float | None = None

    def __post_init__(self) -> None:
        if self.n <= 0:
            raise ValueError("n must be positive")
        if self.accuracy != self.correct_count / self.n:
            raise ValueError("accuracy does not match recorded counts")


def _resolve(embeddings: Mapping[str, EmbeddingVector], text: str) -> EmbeddingVector:
    try:
        return embeddings[text]
    except KeyError:
        raise MissingEmbedding(text) from None


def eval_stsb(
    pairs: Sequence[ScoredPair],
    embeddings: Mapping[str, EmbeddingVector],
    w: WeightVector | None = None,
    model_tag: str | None = None,
) -> StsbEvalResult:
    """Score detection accuracy and Pearson correlation on scored pairs.

    Accuracy counts a pair correct iff sim(s1,s2) strictly exceeds
    sim(s1,neg_s1); pairs without negations are skipped for accuracy but
    still enter the correlation, which compares sim(s1,s2) to human scores
    over every supplied pair.
    """
    simfn = (lambda x, y: weighted_cosine(x, y, w)) if w is not None else cosine
    sims12: list[float] = []
    human: list[float] = []
    n = correct = 0
    tag = model_tag
    for p in pairs:
        e1 = _resolve(embeddings, p.sentence1)
        e2 = _resolve(embeddings, p.sentence2)
        if tag is None:
            tag = e1.model_tag
        s12 = simfn(e1, e2)
        sims12.append(s12)
        human.append(p.score)
        if p.neg_sentence1 is None:
            continue
        s1n = simfn(e1, _resolve(embeddings, p.neg_sentence1))
        n += 1
        if s12 > s1n:
            correct += 1
    if n == 0:
        raise DegenerateInput("no pairs carry negations; accuracy undefined")
    return StsbEvalResult(
        model_tag=tag or "",
        n=n,
        correct_count=correct,
        accuracy=correct / n,
        pearson=pearson(sims12, human),
        weighted=w is not None,
        a=None if w is None else w.a,
    )


class ChoiceEvalResult(float):
    """Accuracy that also carries counts and tie flags.

    Behaves as a plain float (the accuracy); .tie_item_ids lists items whose
    argmax was ambiguous and fell back to the lowest index.
    """

    n: int
    correct_count: int
    tie_item_ids: tuple[str, ...]

    def __new__(cls, accuracy: float, n: int, correct_count: int, tie_item_ids=()):
        obj = super().__new__(cls, accuracy)
        obj.n = n
        obj.correct_count = correct_count
        obj.tie_item_ids = tuple(tie_item_ids)
        return obj


def eval_choice(
    items: Sequence[ChoiceItem],
    embeddings: Mapping[str, EmbeddingVector],
    w: WeightVector | None = None,
) -> ChoiceEvalResult:
    """Fraction of items whose anchor is closest to the true paraphrase.

    Exact similarity ties resolve to the lowest candidate index and flag
    the item; this never inflates accuracy when the tie involves the
    correct candidate at a higher index.
    """
    if not items:
        raise DegenerateInput("no choice items supplied")
    simfn = (lambda x, y: weighted_cosine(x, y, w)) if w is not None else cosine
    correct = 0
    ties: list[str] = []
    for item in items:
        anchor = _resolve(embeddings, item.anchor)
        sims = [simfn(anchor, _resolve(embeddings, c)) for c in item.candidates]
        best = max(sims)
        predicted = sims.index(best)
        if sims.count(best) > 1:
            ties.append(item.item_id)
        if predicted == item.correct_index:
            correct += 1
    return ChoiceEvalResult(correct / len(items), len(items), correct, ties)


def choice_to_triplets(items: Sequence[ChoiceItem]) -> TripletBuildResult:
    """Two triplets per item: (anchor, correct candidate, each wrong candidate)."""
    triplets: list[NegationTriplet] = []
    invalid = 0
    for item in items:
        wrong_rank = 0
        for idx, cand in enumerate(item.candidates):
            if idx == item.correct_index:
                continue
            try:
                triplets.append(NegationTriplet(
                    item.anchor, item.correct, cand,
                    triplet_id=f"{item.item_id}-{wrong_rank}",
                ))
            except ValueError:
                invalid += 1
            wrong_rank += 1
    return TripletBuildResult(tuple(triplets), 0, invalid)


@dataclass(frozen=True)
class RunMatrix:
    """Accuracy per method per run at one train size."""

    method_tags: tuple[str, ...]
    run_count: int
    scores: tuple[tuple[float, ...], ...]
    train_size: int
    seeds: tuple[int, ...]
    best_a_by_run: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        if len(self.scores) != len(self.method_tags):
            raise ValueError("one score row per method required")
        for row in self.scores:
            if len(row) != self.run_count:
                raise ValueError("matrix must be fully populated")
            if any(not 0.0 <= s <= 1.0 for s in row):
                raise ValueError("accuracies must lie in [0,1]")
        if len(self.seeds) != self.run_count:
            raise ValueError("one seed per run required")

    def row(self, method: str) -> tuple[float, ...]:
        return self.scores[self.method_tags.index(method)]


def summarize_matrix(matrix: RunMatrix) -> dict[str, tuple[float, float]]:
    """Per-method (mean, sample std with divisor R-1); std is 0 for a single run."""
    out: dict[str, tuple[float, float]] = {}
    for tag, row in zip(matrix.method_tags, matrix.scores):
        arr = np.asarray(row, dtype=np.float64)
        mean = float(arr.mean())
        std = float(arr.std(ddof=1)) if len(row) > 1 else 0.0
        out[tag] = (mean, std)
    return out


def run_experiment(
    items: Sequence[ChoiceItem],
    embeddings: Mapping[str, EmbeddingVector],
    train_sizes: Sequence[int],
    repeats: int = 10,
    base_seed: int = 0,
    grid: Sequence[float] = DEFAULT_GRID,
    pool_size: int | None = None,
) -> dict[int, RunMatrix]:
    """Repeated stratified sampling: learn weights on train, score on test.

    Each run r (seed base_seed+r) first splits off a fixed train pool
    (pool_size, default the largest train size); every requested train size
    is then subsampled from that pool, so smaller budgets nest inside the
    same run's pool and all sizes share the run's test partition.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    if not train_sizes:
        raise ValueError("at least one train size required")
    pool = max(train_sizes) if pool_size is None else pool_size
    if max(train_sizes) > pool:
        raise TrainSizeTooLarge(f"train size {max(train_sizes)} exceeds pool {pool}")
    if not 0 < pool < len(items):
        raise TrainSizeTooLarge(f"pool {pool} not in 1..{len(items) - 1}")

    acc: dict[int, dict[str, list[float]]] = {
        ts: {"original": [], "weighted": [], "best_a": []} for ts in train_sizes
    }
    seeds = tuple(base_seed + r for r in range(repeats))
    for seed in seeds:
        train_pool, test = stratified_split(items, pool, seed)
        for ts in train_sizes:
            subset = train_pool if ts == pool else stratified_split(train_pool, ts, seed)[0]
            triplets = choice_to_triplets(subset)
            search = grid_search_a(tuple(triplets), embeddings, grid=tuple(grid))
            w = learn_weights(tuple(triplets), embeddings, search.best_a)
            acc[ts]["original"].append(float(eval_choice(test, embeddings)))
            acc[ts]["weighted"].append(float(eval_choice(test, embeddings, w)))
            acc[ts]["best_a"].append(search.best_a)

    return {
        ts: RunMatrix(
            method_tags=("original", "weighted"),
            run_count=repeats,
            scores=(tuple(acc[ts]["original"]), tuple(acc[ts]["weighted"])),
            train_size=ts,
            seeds=seeds,
            best_a_by_run=tuple(acc[ts]["best_a"]),
        )
        for ts in train_sizes
    }


def runmatrix_to_dict(matrix: RunMatrix) -> dict:
    summary = summarize_matrix(matrix)
    return {
        "format": RUNMATRIX_FORMAT,
        "method_tags": list(matrix.method_tags),
        "run_count": matrix.run_count,
        "train_size": matrix.train_size,
        "seeds": list(matrix.seeds),
        "scores": [list(row) for row in matrix.scores],
        "best_a_by_run": list(matrix.best_a_by_run),
        "summary": {
            tag: {"mean": mean, "std": std} for tag, (mean, std) in summary.items()
        },
    }


def save_runmatrix(matrix: RunMatrix, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(runmatrix_to_dict(matrix), indent=2) + "\n", encoding="utf-8"
    )


def load_runmatrix(path: str | Path) -> RunMatrix:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("format") != RUNMATRIX_FORMAT:
        raise FormatError(f"expected format {RUNMATRIX_FORMAT!r}, got {obj.get('format')!r}")
    return RunMatrix(
        method_tags=tuple(obj["method_tags"]),
        run_count=obj["run_count"],
        scores=tuple(tuple(row) for row in obj["scores"]),
        train_size=obj["train_size"],
        seeds=tuple(obj["seeds"]),
        best_a_by_run=tuple(obj.get("best_a_by_run", ())),
    )


def save_runmatrix_csv(matrix: RunMatrix, path: str | Path) -> None:
    """Long-form rows (method, run, seed, train_size, accuracy)."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["method", "run", "seed", "train_size", "accuracy"])
        for tag, row in zip(matrix.method_tags, matrix.scores):
            for r, score in enumerate(row):
                writer.writerow([tag, r, matrix.seeds[r], matrix.train_size, score])
