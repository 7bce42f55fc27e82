"""Citation-grounded long-context QA: synthesis, strategies, evaluation."""

__version__ = "0.1.0"

from .citemark import (
    AnnotatedResponse,
    CitationSpan,
    Granularity,
    Statement,
    normalize_spans,
    parse_annotated,
    serialize_annotated,
    strip_citations,
)
from .metrics import (
    CorrectnessScale,
    MetricReport,
    RelevanceVerdict,
    SupportVerdict,
    aggregate,
    citation_f1,
    correctness_ratio,
    score_citations,
)
from .modelgate import Backends, ChatRequest, Transcript, TranscriptBackend
from .pipeline import (
    CitedInstance,
    Discarded,
    PipelineConfig,
    QAInstance,
    TaskType,
    annotate_answer,
    filter_instance,
    run_pipeline,
)
from .retrieval import RetrievalConfig, RetrievalUnit, Scorer, per_sentence_budget
from .strategies import StrategyConfig, StrategyId, StrategyOutput, run_strategy
from .textseg import (
    Chunk,
    Context,
    Language,
    SentenceSpan,
    TokenCounter,
    build_chunks,
    build_context,
    count_tokens,
    expand_chunk,
    render_numbered_sentences,
    split_sentences,
)

__all__ = [
    "AnnotatedResponse",
    "Backends",
    "ChatRequest",
    "Chunk",
    "CitationSpan",
    "CitedInstance",
    "Context",
    "CorrectnessScale",
    "Discarded",
    "Granularity",
    "Language",
    "MetricReport",
    "PipelineConfig",
    "QAInstance",
    "RelevanceVerdict",
    "RetrievalConfig",
    "RetrievalUnit",
    "Scorer",
    "SentenceSpan",
    "Statement",
    "StrategyConfig",
    "StrategyId",
    "StrategyOutput",
    "SupportVerdict",
    "TaskType",
    "TokenCounter",
    "Transcript",
    "TranscriptBackend",
    "aggregate",
    "annotate_answer",
    "build_chunks",
    "build_context",
    "citation_f1",
    "correctness_ratio",
    "count_tokens",
    "expand_chunk",
    "filter_instance",
    "normalize_spans",
    "parse_annotated",
    "per_sentence_budget",
    "render_numbered_sentences",
    "run_pipeline",
    "run_strategy",
    "score_citations",
    "serialize_annotated",
    "split_sentences",
    "strip_citations",
]
