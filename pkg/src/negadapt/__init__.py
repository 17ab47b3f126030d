"""Toolkit for diagnosing negation blindness in text-embedding models and
learning a parameter-free per-dimension re-weighting adapter."""

from .adapter import (
    DEFAULT_GRID,
    GridSearchResult,
    NegationTriplet,
    grid_search_a,
    learn_weights,
    load_weights,
    mean_contribution,
    rescale_contribution,
    save_weights,
    softmax_weights,
)
from .datasets import (
    ChoiceItem,
    ScoredPair,
    assign_groups,
    load_choice_items,
    load_scored_pairs,
    load_triplets_jsonl,
    pairs_to_triplets,
    save_scored_pairs,
    save_triplets_jsonl,
    stratified_split,
)
from .diagnose import (
    DiagnosisReport,
    GroupDiagnosis,
    diagnose,
    load_diagnosis,
    save_diagnosis,
    weighted_diagnose,
)
from .evaluate import (
    RunMatrix,
    StsbEvalResult,
    eval_choice,
    eval_stsb,
    load_runmatrix,
    pearson,
    run_experiment,
    save_runmatrix,
    summarize_matrix,
)
from .negation import negate_sentence
from .stats import (
    CdDiagramData,
    average_ranks,
    cd_data,
    holm_correct,
    wilcoxon_signed_rank,
)
from .store import (
    EmbedRequest,
    StoreKey,
    VectorStoreCache,
    fetch_embeddings,
    get_or_fetch,
    read_store,
    write_store,
)
from .vectors import (
    ContributionVector,
    EmbeddingVector,
    WeightVector,
    apply_weights,
    cosine,
    cosine_decompose,
    triplet_contribution,
    weighted_cosine,
)

__version__ = "0.1.0"

__all__ = [
    "CdDiagramData",
    "ChoiceItem",
    "ContributionVector",
    "DEFAULT_GRID",
    "DiagnosisReport",
    "EmbedRequest",
    "EmbeddingVector",
    "GridSearchResult",
    "GroupDiagnosis",
    "NegationTriplet",
    "RunMatrix",
    "ScoredPair",
    "StoreKey",
    "StsbEvalResult",
    "VectorStoreCache",
    "WeightVector",
    "apply_weights",
    "assign_groups",
    "average_ranks",
    "cd_data",
    "cosine",
    "cosine_decompose",
    "diagnose",
    "eval_choice",
    "eval_stsb",
    "fetch_embeddings",
    "get_or_fetch",
    "grid_search_a",
    "holm_correct",
    "learn_weights",
    "load_choice_items",
    "load_diagnosis",
    "load_runmatrix",
    "load_scored_pairs",
    "load_triplets_jsonl",
    "load_weights",
    "mean_contribution",
    "negate_sentence",
    "pairs_to_triplets",
    "pearson",
    "read_store",
    "rescale_contribution",
    "run_experiment",
    "save_diagnosis",
    "save_runmatrix",
    "save_scored_pairs",
    "save_triplets_jsonl",
    "save_weights",
    "softmax_weights",
    "stratified_split",
    "summarize_matrix",
    "triplet_contribution",
    "weighted_cosine",
    "weighted_diagnose",
    "wilcoxon_signed_rank",
    "write_store",
    "__version__",
]
