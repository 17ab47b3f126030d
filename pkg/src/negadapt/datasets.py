"""Loaders for scored sentence pairs and multiple-choice paraphrase items.

Scored pairs follow the STSB shape (two sentences plus a human similarity
score, rescaled to [0,1]); choice items follow the SemAntoNeg shape (an
anchor and three candidates, one of which is the true paraphrase). Both
loaders report malformed rows instead of dropping them.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

from ._detrandom import det_sample, det_shuffle
from .adapter import NegationTriplet
from .errors import MalformedGroup, NoValidRows, ScoreOutOfRange, TrainSizeTooLarge
from .negation import negate_sentence  # noqa: F401  (re-exported)

GROUP_BOUNDS = ((0.0, 0.2), (0.2, 0.4), (0.4, 0.6), (0.6, 0.8), (0.8, 1.0))

# Accepts float noise from rescaling hand-edited files; a genuinely
# mis-scaled score (e.g. raw 0-5 passed as 0-1) still trips ScoreOutOfRange.
_SCORE_TOL = 1e-6


@dataclass(frozen=True)
class ScoredPair:
    """A sentence pair with a human similarity score rescaled to [0,1]."""

    pair_id: str
    sentence1: str
    sentence2: str
    score: float
    neg_sentence1: str | None = None

    def __post_init__(self) -> None:
        if not self.sentence1 or not self.sentence2:
            raise ValueError("sentences must be non-empty")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0,1]")


@dataclass(frozen=True)
class SimilarityGroup:
    """One of the five similarity buckets; members are pair ids."""

    index: int
    lower: float
    upper: float
    members: tuple[str, ...]

    def __post_init__(self) -> None:
        if not 1 <= self.index <= 5:
            raise ValueError(f"group index {self.index} outside 1..5")
        if (self.lower, self.upper) != GROUP_BOUNDS[self.index - 1]:
            raise ValueError(f"bounds {(self.lower, self.upper)} do not match group {self.index}")


@dataclass(frozen=True)
class ChoiceItem:
    """An anchor with three candidates, exactly one a true paraphrase."""

    item_id: str
    anchor: str
    candidates: tuple[str, str, str]
    correct_index: int
    stratum: str | None = None

    def __post_init__(self) -> None:
        if len(self.candidates) != 3:
            raise ValueError("exactly 3 candidates required")
        if any(not c for c in self.candidates):
            raise ValueError("candidates must be non-empty")
        if len(set(self.candidates)) != 3:
            raise ValueError("candidates must be pairwise distinct")
        if not 0 <= self.correct_index <= 2:
            raise ValueError(f"correct_index {self.correct_index} outside 0..2")

    @property
    def correct(self) -> str:
        return self.candidates[self.correct_index]


@dataclass(frozen=True)
class RejectedRow:
    line_no: int
    reason: str
    raw: str


@dataclass(frozen=True)
class PairLoadResult(Sequence):
    """Loaded pairs plus the rows that failed to parse."""

    pairs: tuple[ScoredPair, ...]
    rejects: tuple[RejectedRow, ...] = ()

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]

    def __iter__(self) -> Iterator[ScoredPair]:
        return iter(self.pairs)


def _sniff_delimiter(sample_line: str) -> str:
    return "\t" if "\t" in sample_line else ","


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_scored_pairs(path: str | Path, score_scale: float = 5.0) -> PairLoadResult:
    """Read a TSV/CSV of (sentence1, sentence2, score[, neg_sentence1]) rows.

    Scores are divided by score_scale and clamped to [0,1]; anything beyond
    a small overshoot raises ScoreOutOfRange because it usually means the
    wrong scale was passed. Structurally bad rows land in the rejects list.
    """
    if score_scale <= 0:
        raise ValueError(f"score_scale must be positive, got {score_scale}")
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    first_data = next((ln for ln in lines if ln.strip()), "")
    delim = _sniff_delimiter(first_data)
    quoting = csv.QUOTE_NONE if delim == "\t" else csv.QUOTE_MINIMAL
    reader = csv.reader(lines, delimiter=delim, quoting=quoting)

    pairs: list[ScoredPair] = []
    rejects: list[RejectedRow] = []
    saw_first = False
    for row in reader:
        line_no = reader.line_num
        if not row or all(not f.strip() for f in row):
            continue
        if not saw_first:
            saw_first = True
            if len(row) >= 3 and not _is_number(row[2]):
                continue  # header
        raw = delim.join(row)
        if len(row) < 3 or len(row) > 4:
            rejects.append(RejectedRow(line_no, f"expected 3 or 4 fields, got {len(row)}", raw))
            continue
        s1, s2, score_text = row[0], row[1], row[2]
        neg = row[3] if len(row) == 4 and row[3] != "" else None
        if not s1 or not s2:
            rejects.append(RejectedRow(line_no, "empty sentence", raw))
            continue
        if not _is_number(score_text):
            rejects.append(RejectedRow(line_no, f"non-numeric score {score_text!r}", raw))
            continue
        score = float(score_text) / score_scale
        if score < -_SCORE_TOL or score > 1.0 + _SCORE_TOL:
            raise ScoreOutOfRange(
                f"line {line_no}: score {score_text} exceeds scale {score_scale} "
                f"(rescaled {score:.6g} outside [0,1])"
            )
        score = min(1.0, max(0.0, score))
        pairs.append(ScoredPair(str(len(pairs) + 1), s1, s2, score, neg))

    if not pairs:
        raise NoValidRows(f"{path}: no valid scored-pair rows")
    return PairLoadResult(tuple(pairs), tuple(rejects))


def save_scored_pairs(pairs: Sequence[ScoredPair], path: str | Path) -> None:
    """Write pairs as UTF-8 TSV with a header; 4th column only when negations exist."""
    path = Path(path)
    has_neg = any(p.neg_sentence1 is not None for p in pairs)
    cols = ["sentence1", "sentence2", "score"] + (["neg_sentence1"] if has_neg else [])
    out = ["\t".join(cols)]
    for p in pairs:
        fields = [p.sentence1, p.sentence2, str(p.score)]
        if has_neg:
            fields.append(p.neg_sentence1 or "")
        for f in fields:
            if "\t" in f or "\n" in f:
                raise ValueError(f"pair {p.pair_id}: field contains tab or newline")
        out.append("\t".join(fields))
    path.write_text("\n".join(out) + "\n", encoding="utf-8")


def assign_groups(pairs: Sequence[ScoredPair]) -> tuple[SimilarityGroup, ...]:
    """Partition pairs into the five similarity buckets by score.

    Buckets are half-open [lower, upper) except the last, which closes at 1.
    """
    members: list[list[str]] = [[] for _ in GROUP_BOUNDS]
    for p in pairs:
        for i, (lo, hi) in enumerate(GROUP_BOUNDS):
            if lo <= p.score < hi or (i == 4 and p.score <= hi):
                members[i].append(p.pair_id)
                break
    return tuple(
        SimilarityGroup(i + 1, lo, hi, tuple(m))
        for i, ((lo, hi), m) in enumerate(zip(GROUP_BOUNDS, members))
    )


def _parse_choice_jsonl(lines: list[str]) -> list[ChoiceItem]:
    items: list[ChoiceItem] = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedGroup(f"line {line_no}: invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict):
            raise MalformedGroup(f"line {line_no}: expected an object")
        try:
            candidates = tuple(obj["candidates"])
            item = ChoiceItem(
                item_id=str(obj.get("id", len(items) + 1)),
                anchor=obj["anchor"],
                candidates=candidates,
                correct_index=obj["correct_index"],
                stratum=obj.get("stratum"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedGroup(f"line {line_no}: {exc}") from exc
        items.append(item)
    return items


def _parse_choice_blocks(lines: list[str], shuffle_seed: int) -> list[ChoiceItem]:
    # blocks of 4 non-blank lines: anchor then candidates, correct first;
    # candidate order is shuffled here so position cannot leak the answer
    blocks: list[tuple[int, list[str]]] = []
    current: list[str] = []
    start = 0
    for line_no, line in enumerate(lines, start=1):
        if line.strip():
            if not current:
                start = line_no
            current.append(line.strip())
        elif current:
            blocks.append((start, current))
            current = []
    if current:
        blocks.append((start, current))

    rng = random.Random(shuffle_seed)
    items: list[ChoiceItem] = []
    for start, block in blocks:
        if len(block) != 4:
            raise MalformedGroup(
                f"group starting at line {start}: expected 4 lines, got {len(block)}"
            )
        order = [0, 1, 2]
        det_shuffle(order, rng)
        candidates = tuple(block[1 + k] for k in order)
        try:
            item = ChoiceItem(
                item_id=str(len(items) + 1),
                anchor=block[0],
                candidates=candidates,
                correct_index=order.index(0),
            )
        except ValueError as exc:
            raise MalformedGroup(f"group starting at line {start}: {exc}") from exc
        items.append(item)
    return items


def load_choice_items(path: str | Path, shuffle_seed: int = 0) -> tuple[ChoiceItem, ...]:
    """Read choice items from JSONL or the 4-line block format.

    JSONL objects carry an explicit correct_index; 4-line blocks list the
    correct candidate first and are shuffled with shuffle_seed at load.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    first = next((ln for ln in lines if ln.strip()), "")
    if first.lstrip().startswith("{"):
        return tuple(_parse_choice_jsonl(lines))
    if not first:
        raise MalformedGroup(f"{path}: empty file")
    return tuple(_parse_choice_blocks(lines, shuffle_seed))


def stratified_split(
    items: Sequence[ChoiceItem], train_size: int, seed: int
) -> tuple[tuple[ChoiceItem, ...], tuple[ChoiceItem, ...]]:
    """Split items into (train, test) without replacement, deterministically.

    When stratum labels are present, train preserves per-stratum proportions
    via largest-remainder rounding; otherwise sampling is plain uniform.
    Both outputs keep the original item order.
    """
    n = len(items)
    if not 0 < train_size < n:
        raise TrainSizeTooLarge(f"train_size {train_size} not in 1..{n - 1}")
    rng = random.Random(seed)

    if all(it.stratum is None for it in items):
        chosen = set(det_sample(range(n), train_size, rng))
    else:
        by_stratum: dict[str | None, list[int]] = {}
        for i, it in enumerate(items):
            by_stratum.setdefault(it.stratum, []).append(i)
        label_key = lambda s: "" if s is None else str(s)  # noqa: E731
        quotas: dict[str | None, int] = {}
        remainders = []
        for s, idxs in by_stratum.items():
            quotas[s] = train_size * len(idxs) // n
            remainders.append((-(train_size * len(idxs) % n), -len(idxs), label_key(s), s))
        leftover = train_size - sum(quotas.values())
        for entry in sorted(remainders)[:leftover]:
            quotas[entry[3]] += 1
        chosen = set()
        for s in sorted(by_stratum, key=label_key):
            chosen.update(det_sample(by_stratum[s], quotas[s], rng))

    train = tuple(items[i] for i in sorted(chosen))
    test = tuple(items[i] for i in range(n) if i not in chosen)
    return train, test


@dataclass(frozen=True)
class TripletBuildResult(Sequence):
    """Triplets built from scored pairs, plus skip counts."""

    triplets: tuple[NegationTriplet, ...]
    skipped_missing_negation: int = 0
    skipped_invalid: int = 0

    def __len__(self) -> int:
        return len(self.triplets)

    def __getitem__(self, i):
        return self.triplets[i]

    def __iter__(self) -> Iterator[NegationTriplet]:
        return iter(self.triplets)


def pairs_to_triplets(pairs: Sequence[ScoredPair], min_score: float = 0.8) -> TripletBuildResult:
    """Turn high-similarity pairs into (anchor, paraphrase, negation) triplets.

    Pairs below min_score are excluded; pairs without a negation, or whose
    negation equals the anchor, are skipped and counted.
    """
    triplets: list[NegationTriplet] = []
    missing = invalid = 0
    for p in pairs:
        if p.score < min_score:
            continue
        if p.neg_sentence1 is None:
            missing += 1
            continue
        try:
            triplets.append(
                NegationTriplet(p.sentence1, p.sentence2, p.neg_sentence1, triplet_id=p.pair_id)
            )
        except ValueError:
            invalid += 1
    return TripletBuildResult(tuple(triplets), missing, invalid)


def save_triplets_jsonl(triplets: Sequence[NegationTriplet], path: str | Path) -> None:
    path = Path(path)
    out = []
    for t in triplets:
        out.append(json.dumps(
            {"anchor": t.anchor, "paraphrase": t.paraphrase,
             "negation": t.negation, "id": t.triplet_id},
            ensure_ascii=False,
        ))
    path.write_text("\n".join(out) + ("\n" if out else ""), encoding="utf-8")


def load_triplets_jsonl(path: str | Path) -> tuple[NegationTriplet, ...]:
    path = Path(path)
    triplets: list[NegationTriplet] = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            triplets.append(NegationTriplet(
                obj["anchor"], obj["paraphrase"], obj["negation"],
                triplet_id=str(obj.get("id", "")),
            ))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise MalformedGroup(f"line {line_no}: {exc}") from exc
    return tuple(triplets)
