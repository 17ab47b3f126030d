"""Learning per-dimension weights from negation triplets.

The pipeline: average the per-dimension (paraphrase minus negation) cosine
contributions over a training set, rescale by the maximum, and map through a
softmax whose sharpness `a` trades negation sensitivity against leaving the
embedding untouched. `a` is picked by grid search on training paraphrase
accuracy.
"""

import datetime
import json
import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateRescaleWarning,
    EmptyTrainingSet,
    FormatError,
    MissingEmbedding,
    NonFiniteInput,
)
from .vectors import ContributionVector, WeightVector, triplet_contribution, weighted_cosine

WEIGHTS_FORMAT = "negadapt-weights/1"

# 0 to 5 in steps of 0.25; 0.25 is exactly representable so the endpoints are exact
DEFAULT_GRID = tuple(i * 0.25 for i in range(21))

_RESCALE_EPS = 1e-12


@dataclass(frozen=True)
class NegationTriplet:
    """An (anchor, paraphrase, negation) text triple, the adapter's training unit."""

    anchor: str
    paraphrase: str
    negation: str
    triplet_id: str = ""

    def __post_init__(self):
        for name in ("anchor", "paraphrase", "negation"):
            if not getattr(self, name).strip():
                raise ValueError(f"triplet {self.triplet_id!r}: empty {name}")
        if self.anchor == self.negation:
            raise ValueError(f"triplet {self.triplet_id!r}: anchor equals negation")


@dataclass(frozen=True)
class GridSearchResult:
    best_a: float
    candidate_grid: tuple
    train_accuracy_by_a: tuple      # ((a, accuracy), ...) in grid order
    objective: str = "train_paraphrase_accuracy"

    def __post_init__(self):
        if self.best_a not in self.candidate_grid:
            raise ValueError("best_a must be a member of the candidate grid")
        if tuple(a for a, _ in self.train_accuracy_by_a) != tuple(self.candidate_grid):
            raise ValueError("accuracy table must cover the grid exactly once, in order")

    @property
    def best_accuracy(self):
        return dict(self.train_accuracy_by_a)[self.best_a]


def resolve(embeddings, text):
    """Look a text up in an embedding mapping, raising MissingEmbedding."""
    try:
        return embeddings[text]
    except KeyError:
        raise MissingEmbedding(text) from None


def mean_contribution(triplet_vectors) -> ContributionVector:
    """Average triplet contributions over (anchor, paraphrase, negation) vector triples."""
    triplet_vectors = list(triplet_vectors)
    if not triplet_vectors:
        raise EmptyTrainingSet("no triplets supplied")
    total = None
    for t, p, n in triplet_vectors:
        v = triplet_contribution(t, p, n)
        total = v.values if total is None else total + v.values
    return ContributionVector(values=total / len(triplet_vectors),
                              n_triplets=len(triplet_vectors))


def rescale_contribution(v: ContributionVector) -> ContributionVector:
    """Divide by the maximum entry so the best dimension sits at 1.

    When no entry is meaningfully positive there is nothing to anchor the
    rescale to; the vector is returned unchanged with a warning (dividing by
    a negative maximum would flip every sign).
    """
    m = float(np.max(v.values))
    if m <= _RESCALE_EPS:
        warnings.warn(
            f"mean contribution max is {m!r}; skipping rescale",
            DegenerateRescaleWarning, stacklevel=2)
        return v
    return ContributionVector(values=v.values / m, n_triplets=v.n_triplets)


def softmax_weights(v: ContributionVector, a: float, source=None) -> WeightVector:
    """Softmax of a*v with max-subtraction stabilization."""
    if not math.isfinite(a):
        raise NonFiniteInput(f"hyperparameter a is not finite: {a!r}")
    if a < 0:
        raise ValueError("hyperparameter a must be nonnegative")
    z = a * v.values
    z = z - np.max(z)
    e = np.exp(z)
    return WeightVector(weights=e / np.sum(e), a=float(a), source=source or {})


def _created_timestamp():
    # honors SOURCE_DATE_EPOCH so outputs can be byte-reproducible
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        ts = datetime.datetime.fromtimestamp(int(epoch), tz=datetime.timezone.utc)
    else:
        ts = datetime.datetime.now(tz=datetime.timezone.utc)
    return ts.replace(microsecond=0).isoformat()


def _resolve_triplets(triplets, embeddings):
    resolved = []
    for tr in triplets:
        resolved.append((resolve(embeddings, tr.anchor),
                         resolve(embeddings, tr.paraphrase),
                         resolve(embeddings, tr.negation)))
    return resolved


def learn_weights(triplets, embeddings, a, dataset_id="") -> WeightVector:
    """Full pipeline: contributions -> mean -> rescale -> softmax at sharpness a."""
    triplets = list(triplets)
    if not triplets:
        raise EmptyTrainingSet("no training triplets")
    vbar = rescale_contribution(mean_contribution(_resolve_triplets(triplets, embeddings)))
    source = {
        "dataset_id": dataset_id,
        "n_triplets": len(triplets),
        "created": _created_timestamp(),
    }
    return softmax_weights(vbar, a, source=source)


def _train_accuracy(resolved, w):
    correct = sum(
        1 for t, p, n in resolved
        if weighted_cosine(t, p, w) > weighted_cosine(t, n, w)
    )
    return correct / len(resolved)


def grid_search_a(triplets_train, embeddings, grid=DEFAULT_GRID) -> GridSearchResult:
    """Score every candidate a by training paraphrase accuracy.

    Ties break toward the smallest a, which stays closest to the unweighted
    embedding. The mean contribution is computed once; only the softmax and
    the scoring depend on a.
    """
    grid = tuple(float(a) for a in grid)
    if not grid:
        raise ValueError("candidate grid must be non-empty")
    triplets_train = list(triplets_train)
    if not triplets_train:
        raise EmptyTrainingSet("no training triplets")

    resolved = _resolve_triplets(triplets_train, embeddings)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateRescaleWarning)
        vbar = rescale_contribution(mean_contribution(resolved))

    table = []
    for a in grid:
        w = softmax_weights(vbar, a)
        table.append((a, _train_accuracy(resolved, w)))

    best_acc = max(acc for _, acc in table)
    best_a = min(a for a, acc in table if acc == best_acc)
    return GridSearchResult(best_a=best_a, candidate_grid=grid,
                            train_accuracy_by_a=tuple(table))


# --- persistence (format shared with the embedding store) -------------------

def weights_to_dict(w: WeightVector) -> dict:
    return {
        "format": WEIGHTS_FORMAT,
        "dim": w.dim,
        "a": w.a,
        "weights": [float(x) for x in w.weights],
        "source": dict(w.source),
    }


def save_weights(w: WeightVector, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(weights_to_dict(w), fh)
        fh.write("\n")


def load_weights(path) -> WeightVector:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != WEIGHTS_FORMAT:
        raise FormatError(f"unexpected weights format: {doc.get('format')!r}")
    weights = np.asarray(doc["weights"], dtype=np.float64)
    if weights.size != doc["dim"]:
        raise FormatError(f"weights length {weights.size} != declared dim {doc['dim']}")
    return WeightVector(weights=weights, a=float(doc["a"]), source=doc.get("source", {}))
