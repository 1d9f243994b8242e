"""Beyond-worst-case dimensionality reduction for sparse non-negative
vectors: max-pool hash embeddings, the linear sum-hash baseline, probes for
the matching lower bounds, and downstream geometric applications."""

from .embeddings import (
    BirthdayMap,
    EmbedParams,
    MaxHashMap,
    StackedEmbedding,
    birthday_embed,
    build_stack,
    estimate_distance,
    estimate_sum_norm,
    max_embed,
    max_pool,
    plan_params,
    stack_embed,
    sum_pool,
)
from .errors import (
    DimensionMismatch,
    EmbeddingMismatch,
    InternalCheckError,
    NonNegativeRequired,
    ParseError,
    PatternBudgetError,
    PreconditionColumns,
    PreconditionError,
    PreconditionShape,
    SketchError,
)
from .hashing import HashSpec, hash_bucket, mix64
from .vectors import (
    INF,
    Dataset,
    SparseVector,
    diff_vectors,
    lp_dist,
    lp_norm,
    scale_vector,
    sum_vectors,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
