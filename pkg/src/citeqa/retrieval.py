"""Chunk and sentence retrieval with a per-sentence budget.

Two interchangeable scorers: embedding cosine (needs an embedding backend)
and a lexical fallback that runs with zero network access. Score ties always
break toward the lower unit id so replay runs are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .modelgate import EmbeddingBackend, EmbeddingVector
from .textseg import Context, approx_token_spans


class Scorer(Enum):
    EMBEDDING_COSINE = "embedding-cosine"
    LEXICAL_OVERLAP = "lexical-overlap"


class RetrievalUnit(Enum):
    CHUNK = "chunk"
    SENTENCE = "sentence"


@dataclass(frozen=True)
class RetrievalConfig:
    l_max: int = 10
    k: int = 40
    scorer: Scorer = Scorer.LEXICAL_OVERLAP

    def __post_init__(self) -> None:
        if self.l_max < 1 or self.k < 1:
            raise ValueError("l_max and k must be >= 1")


@dataclass(frozen=True)
class ScoredChunk:
    chunk_id: int
    score: float


def per_sentence_budget(l_max: int, k: int, n_sent: int) -> int:
    """Chunks retained per answer sentence: ``min(l_max, ceil(k / n_sent))``,
    so roughly ``k`` chunks survive in total."""
    if n_sent == 0:
        raise ValueError("n_sent must be >= 1")
    if l_max < 1 or k < 1 or n_sent < 0:
        raise ValueError("all budget arguments must be >= 1")
    return min(l_max, -(-k // n_sent))


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------


def _lexical_tokens(text: str) -> frozenset[str]:
    return frozenset(text[a:b].lower() for a, b in approx_token_spans(text))


def lexical_overlap(query: str, candidate: str) -> float:
    """Binary-cosine token overlap: |Q ∩ C| / sqrt(|Q|·|C|), in [0, 1]."""
    q = _lexical_tokens(query)
    c = _lexical_tokens(candidate)
    if not q or not c:
        return 0.0
    return len(q & c) / math.sqrt(len(q) * len(c))


def _cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    dot = sum(x * y for x, y in zip(a.values, b.values))
    na = math.sqrt(sum(x * x for x in a.values))
    nb = math.sqrt(sum(y * y for y in b.values))
    if na == 0 or nb == 0:
        return 0.0
    return dot / (na * nb)


def _unit_texts(context: Context, unit: RetrievalUnit) -> list[str]:
    if unit is RetrievalUnit.CHUNK:
        return [context.chunk_text(c.id) for c in context.chunks]
    return [s.text for s in context.sentences]


def score_units(
    queries: Sequence[str],
    unit_texts: Sequence[str],
    scorer: Scorer,
    backend: EmbeddingBackend | None = None,
) -> list[list[float]]:
    """Score matrix [query][unit]; one embedding call covers everything."""
    if scorer is Scorer.LEXICAL_OVERLAP:
        return [[lexical_overlap(q, u) for u in unit_texts] for q in queries]
    if backend is None:
        raise ValueError("embedding scorer requires an embedding backend")
    vectors = backend.embed(list(queries) + list(unit_texts))
    query_vecs = vectors[: len(queries)]
    unit_vecs = vectors[len(queries) :]
    return [[_cosine(qv, uv) for uv in unit_vecs] for qv in query_vecs]


def _top_ids(scores: Sequence[float], limit: int) -> list[int]:
    ranked = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return ranked[:limit]


# ---------------------------------------------------------------------------
# Retrieval operations
# ---------------------------------------------------------------------------


def retrieve_for_answer(
    answer_sentences: Sequence[str],
    context: Context,
    cfg: RetrievalConfig,
    backend: EmbeddingBackend | None = None,
    unit: RetrievalUnit = RetrievalUnit.CHUNK,
) -> list[int]:
    """Retrieve units for a whole answer, top-``l`` per answer sentence.

    The per-sentence budget ``l`` comes from :func:`per_sentence_budget`; the
    union of all kept ids is deduplicated and returned in ascending document
    order. Duplicated answer sentences cannot change the result.
    """
    if not answer_sentences:
        raise ValueError("answer_sentences must be non-empty")
    unit_texts = _unit_texts(context, unit)
    if not unit_texts:
        return []
    budget = per_sentence_budget(cfg.l_max, cfg.k, len(answer_sentences))
    matrix = score_units(answer_sentences, unit_texts, cfg.scorer, backend)
    kept: set[int] = set()
    for row in matrix:
        kept.update(_top_ids(row, budget))
    return sorted(kept)


def retrieve_for_query(
    query: str,
    context: Context,
    k: int,
    unit: RetrievalUnit,
    scorer: Scorer = Scorer.LEXICAL_OVERLAP,
    backend: EmbeddingBackend | None = None,
) -> list[int]:
    """Top-``k`` units for a query, returned in ascending document order."""
    if k < 1:
        raise ValueError("k must be >= 1")
    unit_texts = _unit_texts(context, unit)
    if not unit_texts:
        return []
    matrix = score_units([query], unit_texts, scorer, backend)
    return sorted(_top_ids(matrix[0], k))
