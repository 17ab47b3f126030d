"""Deterministic vector arithmetic: cosine similarity, its per-dimension
decomposition, and per-dimension weight application.

All arithmetic runs in double precision regardless of how vectors were stored.
Reductions use numpy's fixed-order float64 kernels, so results are
bit-reproducible across runs on one platform and cosine is exactly symmetric
in its arguments.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvariantViolation, NonFiniteInput, ZeroVector

# overshoot beyond [-1, 1] tolerated before declaring a bug
_CLAMP_TOL = 1e-12


def _readonly_f64(values, owner):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{owner} values must be one-dimensional")
    if arr.size < 1:
        raise ValueError(f"{owner} must have at least one dimension")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{owner} contains NaN or Inf")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class EmbeddingVector:
    """One model's representation of one text.

    `id` is an opaque identifier (a text, a digest, a row id); `normalized`
    records whether values were unit-normalized at ingestion.
    """

    id: str
    values: np.ndarray
    model_tag: str = ""
    normalized: bool = False

    def __post_init__(self):
        arr = _readonly_f64(self.values, "EmbeddingVector")
        if not np.any(arr):
            raise ZeroVector(f"embedding {self.id!r} has zero norm")
        object.__setattr__(self, "values", arr)

    @property
    def dim(self):
        return self.values.size

    def norm(self):
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True)
class ContributionVector:
    """Per-dimension cosine terms, or their paraphrase-minus-negation
    differences after aggregation over `n_triplets` triplets."""

    values: np.ndarray
    n_triplets: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly_f64(self.values, "ContributionVector"))
        if self.n_triplets < 0:
            raise ValueError("n_triplets must be nonnegative")

    @property
    def dim(self):
        return self.values.size


@dataclass(frozen=True)
class WeightVector:
    """Per-dimension weights on the probability simplex.

    `a` is the softmax sharpness hyperparameter the weights were derived with;
    `source` records training provenance (dataset id, triplet count, creation
    timestamp).
    """

    weights: np.ndarray
    a: float
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = _readonly_f64(self.weights, "WeightVector")
        if self.a < 0:
            raise ValueError("hyperparameter a must be nonnegative")
        if np.any(arr <= 0):
            raise ValueError("weights must be strictly positive")
        total = float(np.sum(arr))
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1 (got {total!r})")
        if self.a == 0 and np.max(np.abs(arr - 1.0 / arr.size)) > 1e-12:
            raise ValueError("a=0 requires uniform weights")
        object.__setattr__(self, "weights", arr)

    @property
    def dim(self):
        return self.weights.size

    @classmethod
    def uniform(cls, dim, source=None):
        return cls(weights=np.full(dim, 1.0 / dim), a=0.0, source=source or {})


def _check_dims(*vecs):
    dims = {v.dim for v in vecs}
    if len(dims) > 1:
        raise DimensionMismatch(f"dimension mismatch: {sorted(dims)}")


def _clamp_unit(c):
    if c > 1.0:
        if c > 1.0 + _CLAMP_TOL:
            raise InvariantViolation(f"cosine overshoot beyond tolerance: {c!r}")
        return 1.0
    if c < -1.0:
        if c < -1.0 - _CLAMP_TOL:
            raise InvariantViolation(f"cosine overshoot beyond tolerance: {c!r}")
        return -1.0
    return c


def cosine(x: EmbeddingVector, y: EmbeddingVector) -> float:
    """Cosine similarity in [-1, 1]."""
    _check_dims(x, y)
    denom = x.norm() * y.norm()
    return _clamp_unit(float(np.dot(x.values, y.values)) / denom)


def cosine_decompose(x: EmbeddingVector, y: EmbeddingVector) -> ContributionVector:
    """Per-dimension terms whose sum is cosine(x, y)."""
    _check_dims(x, y)
    denom = x.norm() * y.norm()
    return ContributionVector(values=x.values * y.values / denom)


def triplet_contribution(t: EmbeddingVector, p: EmbeddingVector,
                         n: EmbeddingVector) -> ContributionVector:
    """Per-dimension difference between the (t, p) and (t, n) decompositions.

    Sums to cosine(t, p) - cosine(t, n); dimensions with larger values help
    separate the paraphrase from the negation.
    """
    _check_dims(t, p, n)
    u_p = cosine_decompose(t, p)
    u_n = cosine_decompose(t, n)
    return ContributionVector(values=u_p.values - u_n.values, n_triplets=1)


def apply_weights(x: EmbeddingVector, w: WeightVector) -> EmbeddingVector:
    """Element-wise product of a vector with a weight vector.

    The result keeps the id and model tag; the normalized flag is cleared
    because weighting changes the norm.
    """
    _check_dims(x, w)
    return EmbeddingVector(id=x.id, values=w.weights * x.values,
                           model_tag=x.model_tag, normalized=False)


def weighted_cosine(x: EmbeddingVector, y: EmbeddingVector, w: WeightVector) -> float:
    """Cosine similarity after weighting both vectors element-wise.

    Because the weights multiply both sides, this equals a weighted cosine
    whose per-dimension weights are w_k**2. Uniform weights cancel in the
    ratio and reproduce plain cosine.
    """
    _check_dims(x, y, w)
    return cosine(apply_weights(x, w), apply_weights(y, w))
