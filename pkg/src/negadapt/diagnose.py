"""Per-group similarity distributions for scored pairs and their negations.

For every pair the report compares sim(sentence1, sentence2) against
sim(sentence1, neg_sentence1), bucketed by human similarity group. A high
"negated pair wins" fraction in the top group is the signature of negation
blindness: the embedding places a sentence closer to its own negation than
to a true paraphrase.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .datasets import ScoredPair, assign_groups
from .errors import FormatError, MissingEmbedding
from .vectors import EmbeddingVector, WeightVector, cosine, weighted_cosine

DIAGNOSIS_FORMAT = "negadapt-diagnosis/1"
DEFAULT_BINS = 20


@dataclass(frozen=True)
class GroupDiagnosis:
    """Distribution summary for one similarity group."""

    index: int
    n_pairs: int
    hist_sim12: tuple[int, ...]
    hist_sim1neg1: tuple[int, ...]
    frac_neg_wins: float | None
    mean_sim12: float | None
    mean_sim1neg1: float | None

    def __post_init__(self) -> None:
        if sum(self.hist_sim12) != self.n_pairs or sum(self.hist_sim1neg1) != self.n_pairs:
            raise ValueError(f"group {self.index}: histogram counts do not sum to n_pairs")
        if (self.n_pairs == 0) != (self.frac_neg_wins is None):
            raise ValueError(f"group {self.index}: empty groups carry no fractions")


@dataclass(frozen=True)
class DiagnosisReport:
    model_tag: str
    groups: tuple[GroupDiagnosis, ...]
    n_bins: int = DEFAULT_BINS
    excluded_missing_negation: int = 0

    @property
    def n_pairs(self) -> int:
        return sum(g.n_pairs for g in self.groups)


def _bin_index(sim: float, n_bins: int) -> int:
    # cosine may stray outside [0,1] on synthetic data; clamp for binning only
    clamped = min(1.0, max(0.0, sim))
    return min(n_bins - 1, int(clamped * n_bins))


def _resolve(embeddings: Mapping[str, EmbeddingVector], text: str) -> EmbeddingVector:
    try:
        return embeddings[text]
    except KeyError:
        raise MissingEmbedding(text) from None


def _build_report(
    pairs: Sequence[ScoredPair],
    embeddings: Mapping[str, EmbeddingVector],
    simfn: Callable[[EmbeddingVector, EmbeddingVector], float],
    model_tag: str | None,
    n_bins: int,
) -> DiagnosisReport:
    usable: list[ScoredPair] = []
    excluded = 0
    for p in pairs:
        if p.neg_sentence1 is None:
            excluded += 1
        else:
            usable.append(p)

    sims: dict[str, tuple[float, float]] = {}
    tag = model_tag
    for p in usable:
        e1 = _resolve(embeddings, p.sentence1)
        e2 = _resolve(embeddings, p.sentence2)
        en = _resolve(embeddings, p.neg_sentence1)
        if tag is None:
            tag = e1.model_tag
        sims[p.pair_id] = (simfn(e1, e2), simfn(e1, en))

    groups = []
    for g in assign_groups(usable):
        h12 = [0] * n_bins
        h1n = [0] * n_bins
        wins = 0
        tot12 = 0.0
        tot1n = 0.0
        for pid in g.members:
            s12, s1n = sims[pid]
            h12[_bin_index(s12, n_bins)] += 1
            h1n[_bin_index(s1n, n_bins)] += 1
            if s1n > s12:
                wins += 1
            tot12 += s12
            tot1n += s1n
        n = len(g.members)
        groups.append(GroupDiagnosis(
            index=g.index,
            n_pairs=n,
            hist_sim12=tuple(h12),
            hist_sim1neg1=tuple(h1n),
            frac_neg_wins=wins / n if n else None,
            mean_sim12=tot12 / n if n else None,
            mean_sim1neg1=tot1n / n if n else None,
        ))
    return DiagnosisReport(
        model_tag=tag or "",
        groups=tuple(groups),
        n_bins=n_bins,
        excluded_missing_negation=excluded,
    )


def diagnose(
    pairs: Sequence[ScoredPair],
    embeddings: Mapping[str, EmbeddingVector],
    model_tag: str | None = None,
    n_bins: int = DEFAULT_BINS,
) -> DiagnosisReport:
    """Compare paraphrase vs negated-pair cosine similarity per group.

    Pairs without a negation are excluded from both histograms and counted
    in excluded_missing_negation. Ties never count as negation wins.
    """
    return _build_report(pairs, embeddings, cosine, model_tag, n_bins)


def weighted_diagnose(
    pairs: Sequence[ScoredPair],
    embeddings: Mapping[str, EmbeddingVector],
    w: WeightVector,
    model_tag: str | None = None,
    n_bins: int = DEFAULT_BINS,
) -> DiagnosisReport:
    """diagnose() with weighted cosine; the model tag records the weights used."""
    simfn = lambda x, y: weighted_cosine(x, y, w)  # noqa: E731
    report = _build_report(pairs, embeddings, simfn, model_tag, n_bins)
    return DiagnosisReport(
        model_tag=f"{report.model_tag}+weights(a={w.a:g})",
        groups=report.groups,
        n_bins=report.n_bins,
        excluded_missing_negation=report.excluded_missing_negation,
    )


def diagnosis_to_dict(report: DiagnosisReport) -> dict:
    return {
        "format": DIAGNOSIS_FORMAT,
        "model_tag": report.model_tag,
        "n_bins": report.n_bins,
        "excluded_missing_negation": report.excluded_missing_negation,
        "groups": [
            {
                "index": g.index,
                "n_pairs": g.n_pairs,
                "hist_sim12": list(g.hist_sim12),
                "hist_sim1neg1": list(g.hist_sim1neg1),
                "frac_neg_wins": g.frac_neg_wins,
                "mean_sim12": g.mean_sim12,
                "mean_sim1neg1": g.mean_sim1neg1,
            }
            for g in report.groups
        ],
    }


def save_diagnosis(report: DiagnosisReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(diagnosis_to_dict(report), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def load_diagnosis(path: str | Path) -> DiagnosisReport:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("format") != DIAGNOSIS_FORMAT:
        raise FormatError(f"expected format {DIAGNOSIS_FORMAT!r}, got {obj.get('format')!r}")
    groups = tuple(
        GroupDiagnosis(
            index=g["index"],
            n_pairs=g["n_pairs"],
            hist_sim12=tuple(g["hist_sim12"]),
            hist_sim1neg1=tuple(g["hist_sim1neg1"]),
            frac_neg_wins=g["frac_neg_wins"],
            mean_sim12=g["mean_sim12"],
            mean_sim1neg1=g["mean_sim1neg1"],
        )
        for g in obj["groups"]
    )
    return DiagnosisReport(
        model_tag=obj["model_tag"],
        groups=groups,
        n_bins=obj["n_bins"],
        excluded_missing_negation=obj["excluded_missing_negation"],
    )


def save_diagnosis_csv(report: DiagnosisReport, path: str | Path) -> None:
    """Per-group summary rows for external plotting."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["group", "n_pairs", "frac_neg_wins", "mean_sim12", "mean_sim1neg1"]
        )
        for g in report.groups:
            writer.writerow([g.index, g.n_pairs, g.frac_neg_wins, g.mean_sim12, g.mean_sim1neg1])
