"""Method comparison across runs: Wilcoxon signed-rank, Holm, CD-diagram data.

The exact two-sided Wilcoxon p-value is computed by counting sign
assignments through a subset-sum table over doubled ranks (tie-averaged
ranks are half-integers, so doubling keeps everything in integers); this
equals full enumeration of the 2^n sign patterns without the 2^n loop.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import DegenerateInput, InvalidPValue, LengthMismatch
from .evaluate import RunMatrix

CD_FORMAT = "negadapt-cd/1"
DEFAULT_ALPHA = 0.00001
EXACT_LIMIT = 25


@dataclass(frozen=True)
class PairwiseTestResult:
    method_a: str
    method_b: str
    statistic_w: float
    p_value: float
    n_effective: int
    exact: bool

    def __post_init__(self) -> None:
        if not 0.0 < self.p_value <= 1.0:
            raise ValueError(f"p_value {self.p_value} outside (0,1]")
        if self.exact != (self.n_effective <= EXACT_LIMIT):
            raise ValueError("exact flag inconsistent with n_effective")


def _tie_averaged_ranks(values: Sequence[float]) -> list[float]:
    """1-based ascending ranks; tied values share the average of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j + 2) / 2  # positions are i+1 .. j+1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _exact_p_two_sided(doubled_ranks: Sequence[int], doubled_w: int, n: int) -> float:
    # subset-sum counts of sign patterns whose positive-rank sum is <= W
    counts = [0] * (doubled_w + 1)
    counts[0] = 1
    for r in doubled_ranks:
        for s in range(doubled_w, r - 1, -1):
            counts[s] += counts[s - r]
    below = sum(counts)
    return min(1.0, 2.0 * below / 2.0 ** n)


def wilcoxon_signed_rank(
    xs: Sequence[float],
    ys: Sequence[float],
    method_a: str = "x",
    method_b: str = "y",
) -> PairwiseTestResult:
    """Two-sided Wilcoxon signed-rank test with W = min(W+, W-).

    Zero differences are dropped; n <= 25 uses exact enumeration, larger n
    a normal approximation with tie-corrected variance and 0.5 continuity
    correction.
    """
    if len(xs) != len(ys):
        raise LengthMismatch(f"{len(xs)} vs {len(ys)}")
    diffs = [float(x) - float(y) for x, y in zip(xs, ys)]
    diffs = [d for d in diffs if d != 0.0]
    n = len(diffs)
    if n < 5:
        raise DegenerateInput(f"only {n} non-zero differences; need at least 5")

    abs_diffs = [abs(d) for d in diffs]
    ranks = _tie_averaged_ranks(abs_diffs)
    w_plus = sum(r for r, d in zip(ranks, diffs) if d > 0)
    total = n * (n + 1) / 2
    w = min(w_plus, total - w_plus)

    if n <= EXACT_LIMIT:
        doubled = [int(round(2 * r)) for r in ranks]
        p = _exact_p_two_sided(doubled, int(round(2 * w)), n)
        exact = True
    else:
        mu = n * (n + 1) / 4
        tie_term = 0.0
        seen: dict[float, int] = {}
        for ad in abs_diffs:
            seen[ad] = seen.get(ad, 0) + 1
        for t in seen.values():
            tie_term += t ** 3 - t
        sigma2 = n * (n + 1) * (2 * n + 1) / 24 - tie_term / 48
        if sigma2 <= 0:
            raise DegenerateInput("zero variance under the null; all ranks tied away")
        p = min(1.0, math.erfc((mu - w - 0.5) / math.sqrt(2 * sigma2)))
        exact = False

    return PairwiseTestResult(
        method_a=method_a,
        method_b=method_b,
        statistic_w=float(w),
        p_value=p,
        n_effective=n,
        exact=exact,
    )


def holm_correct(p_values: Sequence[float]) -> tuple[float, ...]:
    """Step-down Holm adjustment, returned in the original input order."""
    m = len(p_values)
    if m == 0:
        raise InvalidPValue("empty p-value family")
    for p in p_values:
        if not 0.0 < p <= 1.0:
            raise InvalidPValue(f"p-value {p} outside (0,1]")
    order = sorted(range(m), key=lambda i: p_values[i])
    adjusted = [0.0] * m
    running = 0.0
    for pos, idx in enumerate(order):
        running = max(running, min(1.0, (m - pos) * p_values[idx]))
        adjusted[idx] = running
    return tuple(adjusted)


def average_ranks(matrix: RunMatrix) -> tuple[tuple[str, float], ...]:
    """Mean rank per method across runs; rank 1 is the best accuracy, ties averaged."""
    m = len(matrix.method_tags)
    sums = [0.0] * m
    for r in range(matrix.run_count):
        column = [-matrix.scores[i][r] for i in range(m)]  # negate: rank 1 = highest
        for i, rank in enumerate(_tie_averaged_ranks(column)):
            sums[i] += rank
    return tuple(
        (tag, sums[i] / matrix.run_count) for i, tag in enumerate(matrix.method_tags)
    )


@dataclass(frozen=True)
class CdDiagramData:
    """Everything needed to draw a critical-difference diagram.

    Indices in edges/cliques refer to method_tags, which are sorted by
    average rank ascending (input order preserved on ties).
    """

    method_tags: tuple[str, ...]
    avg_ranks: tuple[float, ...]
    cliques: tuple[tuple[int, ...], ...]
    alpha: float
    edges: tuple[tuple[int, int], ...] = ()
    notes: tuple[str, ...] = ()
    pairwise: tuple[PairwiseTestResult, ...] = ()
    adjusted_p: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if list(self.avg_ranks) != sorted(self.avg_ranks):
            raise ValueError("avg_ranks must be sorted ascending")
        if len(self.adjusted_p) != len(self.pairwise):
            raise ValueError("one adjusted p per pairwise result required")


def _maximal_cliques(n: int, edge_set: set[tuple[int, int]]) -> list[tuple[int, ...]]:
    adj = {v: set() for v in range(n)}
    for a, b in edge_set:
        adj[a].add(b)
        adj[b].add(a)

    out: list[tuple[int, ...]] = []

    def extend(r: set, p: set, x: set) -> None:
        if not p and not x:
            out.append(tuple(sorted(r)))
            return
        for v in sorted(p):
            extend(r | {v}, p & adj[v], x & adj[v])
            p = p - {v}
            x = x | {v}

    extend(set(), set(range(n)), set())
    return sorted(out)


def cd_data(matrix: RunMatrix, alpha: float = DEFAULT_ALPHA) -> CdDiagramData:
    """All-pairs Wilcoxon with Holm correction, plus maximal non-significance cliques.

    An edge joins two methods whose Holm-adjusted p is >= alpha (no
    significant difference). Pairs with degenerate differences (identical
    score columns) cannot be tested; they get an edge and a note.
    """
    m = len(matrix.method_tags)
    if m < 2:
        raise DegenerateInput("need at least 2 methods to compare")

    ranked = average_ranks(matrix)
    order = sorted(range(m), key=lambda i: (ranked[i][1], i))
    tags = tuple(matrix.method_tags[i] for i in order)
    ranks = tuple(ranked[i][1] for i in order)
    rows = [matrix.scores[i] for i in order]

    results: list[PairwiseTestResult] = []
    tested_pairs: list[tuple[int, int]] = []
    degenerate_pairs: list[tuple[int, int]] = []
    notes: list[str] = []
    for i in range(m):
        for j in range(i + 1, m):
            try:
                results.append(
                    wilcoxon_signed_rank(rows[i], rows[j], tags[i], tags[j])
                )
                tested_pairs.append((i, j))
            except DegenerateInput:
                degenerate_pairs.append((i, j))
                notes.append(
                    f"{tags[i]} vs {tags[j]}: degenerate differences; "
                    "treated as not significantly different"
                )

    adjusted = holm_correct([r.p_value for r in results]) if results else ()
    edge_set = set(degenerate_pairs)
    for (i, j), adj_p in zip(tested_pairs, adjusted):
        if adj_p >= alpha:
            edge_set.add((i, j))

    cliques = tuple(_maximal_cliques(m, edge_set))
    return CdDiagramData(
        method_tags=tags,
        avg_ranks=ranks,
        cliques=cliques,
        alpha=alpha,
        edges=tuple(sorted(edge_set)),
        notes=tuple(notes),
        pairwise=tuple(results),
        adjusted_p=tuple(adjusted),
    )


def cd_to_dict(data: CdDiagramData) -> dict:
    return {
        "format": CD_FORMAT,
        "alpha": data.alpha,
        "method_tags": list(data.method_tags),
        "avg_ranks": list(data.avg_ranks),
        "cliques": [list(c) for c in data.cliques],
        "edges": [list(e) for e in data.edges],
        "notes": list(data.notes),
        "pairwise": [
            {
                "method_a": r.method_a,
                "method_b": r.method_b,
                "statistic_w": r.statistic_w,
                "p_value": r.p_value,
                "adjusted_p": ap,
                "n_effective": r.n_effective,
                "exact": r.exact,
            }
            for r, ap in zip(data.pairwise, data.adjusted_p)
        ],
    }


def save_cd_json(data: CdDiagramData, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cd_to_dict(data), indent=2) + "\n", encoding="utf-8")


def save_cd_csv(data: CdDiagramData, path: str | Path) -> None:
    """(method, avg_rank) rows for external plotting."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["method", "avg_rank"])
        for tag, rank in zip(data.method_tags, data.avg_ranks):
            writer.writerow([tag, rank])


def save_cd_edges_csv(data: CdDiagramData, path: str | Path) -> None:
    """(method_a, method_b) rows, one per non-significant pair."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["method_a", "method_b"])
        for a, b in data.edges:
            writer.writerow([data.method_tags[a], data.method_tags[b]])
