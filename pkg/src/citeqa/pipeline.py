"""Coarse-to-fine synthesis of QA instances with sentence-level citations.

Four stages, each a plain function so they compose and test independently:

1. question generation + vanilla answering over the raw document,
2. chunk-level citation insertion over answer-retrieved chunks,
3. sentence-level extraction from each cited chunk (expanded with its
   neighbors, then renumbered back to global sentence ids),
4. a coverage filter that discards answers where fewer than a configured
   fraction of statements carry citations.

All model calls flow through a chat backend, so a recorded transcript makes
an entire run bit-deterministic.
"""

from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .citemark import (
    AnnotatedResponse,
    CitationSpan,
    Granularity,
    ParseWarning,
    Statement,
    normalize_spans,
    parse_annotated,
)
from .modelgate import Backends, ChatBackend, user_request
from .prompts import (
    DEFAULT_PROMPTS,
    NO_RELEVANT_INFORMATION,
    PromptSet,
    build_fine_extraction_prompt,
    build_question_generation_prompt,
    build_snippet_insertion_prompt,
    build_vanilla_qa_prompt,
)
from .retrieval import RetrievalConfig, Scorer, retrieve_for_answer
from .textseg import (
    Context,
    Language,
    build_context,
    expand_chunk,
    split_sentences,
)

logger = logging.getLogger(__name__)


class MalformedGeneration(Exception):
    """The model output for a stage could not be used at all."""

    def __init__(self, stage: str, detail: str) -> None:
        super().__init__(f"{stage}: {detail}")
        self.stage = stage
        self.detail = detail


class TaskType(Enum):
    GENERAL = "general"
    SUMMARY = "summary"
    MULTI_HOP = "multi_hop"
    INFO_EXTRACT = "info_extract"


@dataclass(frozen=True)
class PipelineConfig:
    chunk_size: int = 128
    l_max: int = 10
    k: int = 40
    min_cited_fraction: float = 0.2
    question_fanout: int = 5
    scorer: Scorer = Scorer.LEXICAL_OVERLAP
    prompts: PromptSet = DEFAULT_PROMPTS

    def __post_init__(self) -> None:
        if not (0.0 <= self.min_cited_fraction <= 1.0):
            raise ValueError("min_cited_fraction must be in [0, 1]")

    def retrieval(self) -> RetrievalConfig:
        return RetrievalConfig(l_max=self.l_max, k=self.k, scorer=self.scorer)


@dataclass(frozen=True)
class QAInstance:
    context_ref: str
    query: str
    answer: str
    task_type: TaskType
    language: Language

    def __post_init__(self) -> None:
        if not self.query or not self.answer:
            raise ValueError("query and answer must be non-empty")


@dataclass
class Provenance:
    """Every intermediate artifact of a pipeline run, for audit and replay."""

    document_id: str
    language: str
    task_type: str
    seed: str
    questions: list[str] = field(default_factory=list)
    retrieved_chunk_ids: list[int] = field(default_factory=list)
    chunk_citations: list[list[int]] = field(default_factory=list)
    extraction_spans: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    prompt_hashes: dict[str, str] = field(default_factory=dict)
    counter_name: str = ""
    answer_altered: bool = False
    chat_calls: int = 0


@dataclass
class CitedInstance:
    """An SFT-ready instance: instruction + context + query in, an answer
    with sentence-level citations out."""

    instruction: str
    context: str
    query: str
    annotated_answer: AnnotatedResponse
    provenance: Provenance


@dataclass
class Discarded:
    document_id: str
    stage: str
    reason: str


# ---------------------------------------------------------------------------
# Stage 1: QA generation
# ---------------------------------------------------------------------------

_NUMBERED_ITEM_RE = re.compile(r"^\s*(\d+)\s*[:.、．]\s*(.+?)\s*$", re.MULTILINE)


def parse_numbered_list(text: str) -> list[str]:
    return [m.group(2) for m in _NUMBERED_ITEM_RE.finditer(text)]


def generate_questions(
    context: Context,
    task_type: TaskType,
    backend: ChatBackend,
    cfg: PipelineConfig = PipelineConfig(),
) -> tuple[list[str], list[str]]:
    """Ask for ``question_fanout`` candidate questions; returns whatever
    parses plus warnings when the model under-delivers."""
    prompt = build_question_generation_prompt(
        context.raw_text, task_type.value, context.language
    )
    raw = backend.complete(user_request(prompt, temperature=1.0))
    questions = parse_numbered_list(raw)[: cfg.question_fanout]
    if not questions:
        raise MalformedGeneration("question_generation", "no numbered questions parsed")
    warnings = []
    if len(questions) < cfg.question_fanout:
        warnings.append(
            f"question_generation: expected {cfg.question_fanout} questions, "
            f"parsed {len(questions)}"
        )
    return questions, warnings


def select_question(questions: Sequence[str], rng_seed: int | str) -> str:
    """Uniform seeded choice; a fixed seed always picks the same question."""
    if not questions:
        raise ValueError("no questions to select from")
    return random.Random(rng_seed).choice(list(questions))


def generate_answer(
    context: Context,
    query: str,
    backend: ChatBackend,
    cfg: PipelineConfig = PipelineConfig(),
) -> str:
    """Vanilla long-context QA; any markup-looking tokens in the output are
    passed through untouched (stage 2 must tolerate them)."""
    prompt = build_vanilla_qa_prompt(context.raw_text, query)
    answer = backend.complete(user_request(prompt))
    if not answer.strip():
        raise MalformedGeneration("answer_generation", "empty answer")
    return answer


# ---------------------------------------------------------------------------
# Stage 2: chunk-level citations
# ---------------------------------------------------------------------------


def add_chunk_citations(
    query: str,
    answer: str,
    retrieved_chunks: Sequence[str],
    backend: ChatBackend,
    cfg: PipelineConfig = PipelineConfig(),
) -> tuple[AnnotatedResponse, list[ParseWarning]]:
    """Segment the answer into statements and attach local snippet numbers.

    ``retrieved_chunks`` must already be in document order; they are shown to
    the model as ``Snippet [1] ..`` with 1-based local numbers, and the
    returned response keeps those local numbers for stage 3.
    """
    prompt = build_snippet_insertion_prompt(cfg.prompts, retrieved_chunks, query, answer)
    raw = backend.complete(user_request(prompt))
    response, warnings = parse_annotated(
        raw, Granularity.CHUNK, max_index=len(retrieved_chunks)
    )
    kept_statements = []
    for statement in response.statements:
        spans = tuple(s for s in statement.citations if s.start >= 1)
        if len(spans) != len(statement.citations):
            warnings = list(warnings) + [
                ParseWarning("snippet_zero_index", statement.text[:60])
            ]
        kept_statements.append(Statement(statement.text, spans))
    response = AnnotatedResponse(tuple(kept_statements), Granularity.CHUNK)
    if response.n_statements == 0 or not response.plain_text().strip():
        raise MalformedGeneration("chunk_citation", "no statements parsed")
    return response, list(warnings)


def _squash_whitespace(text: str) -> str:
    return "".join(text.split())


def answer_preserved(original: str, response: AnnotatedResponse) -> bool:
    """Whitespace-insensitive equality between the original answer and the
    concatenated statement texts."""
    return _squash_whitespace(original) == _squash_whitespace(response.plain_text())


# ---------------------------------------------------------------------------
# Stage 3: sentence-level extraction
# ---------------------------------------------------------------------------

_FINE_SPAN_RE = re.compile(r"\[(\d+)(?:-(\d+))?\]")


def extract_sentence_citations(
    statement: Statement,
    cited_chunk_id: int,
    context: Context,
    backend: ChatBackend,
    cfg: PipelineConfig = PipelineConfig(),
) -> tuple[list[CitationSpan], list[str]]:
    """Extract supporting sentences for one statement from one cited chunk.

    The chunk is expanded with its neighbors and renumbered locally; model
    spans are mapped back to global sentence ids and coalesced. The explicit
    no-information sentinel yields an empty list; irregular spans are dropped
    with a warning.
    """
    expanded = expand_chunk(context, cited_chunk_id)
    prompt = build_fine_extraction_prompt(
        cfg.prompts, expanded.numbered_text, statement.text
    )
    raw = backend.complete(user_request(prompt))
    warnings: list[str] = []
    local_spans: list[CitationSpan] = []
    n_local = len(expanded.sentence_ids)
    matches = list(_FINE_SPAN_RE.finditer(raw))
    if not matches:
        if NO_RELEVANT_INFORMATION.lower() in raw.lower():
            return [], warnings
        raise MalformedGeneration(
            "sentence_extraction", f"unrecognized output {raw[:80]!r}"
        )
    for m in matches:
        a = int(m.group(1))
        b = int(m.group(2)) if m.group(2) is not None else a
        if b < a or b >= n_local:
            warnings.append(f"sentence_extraction: dropped irregular span {m.group()}")
            continue
        local_spans.append(CitationSpan(a, b))
    return normalize_spans(local_spans, expanded.local_to_global), warnings


# ---------------------------------------------------------------------------
# Stage 4: filtering
# ---------------------------------------------------------------------------


def filter_instance(response: AnnotatedResponse, threshold: float) -> bool:
    """Keep iff at least ``threshold`` of the statements carry a citation;
    a fraction exactly at the threshold is kept."""
    if response.n_statements == 0:
        raise ValueError("cannot filter an empty response")
    return response.cited_fraction() >= threshold


# ---------------------------------------------------------------------------
# Composition
# ---------------------------------------------------------------------------


def attach_sentence_citations(
    context: Context,
    query: str,
    answer: str,
    backends: Backends,
    cfg: PipelineConfig,
    provenance: Provenance,
) -> AnnotatedResponse:
    """Stages 2 and 3: chunk-level insertion, then per-(statement, chunk)
    extraction with span union and merge."""
    answer_sentences = [s.text for s in split_sentences(answer, context.language)]
    if not answer_sentences:
        raise MalformedGeneration("chunk_citation", "answer has no sentences")
    retrieved_ids = retrieve_for_answer(
        answer_sentences, context, cfg.retrieval(), backends.embed
    )
    provenance.retrieved_chunk_ids = retrieved_ids
    snippets = [context.chunk_text(cid) for cid in retrieved_ids]
    chunk_response, parse_warnings = add_chunk_citations(
        query, answer, snippets, backends.chat, cfg
    )
    provenance.chat_calls += 1
    provenance.warnings.extend(f"{w.code}: {w.detail}" for w in parse_warnings)
    provenance.chunk_citations = [
        sorted({retrieved_ids[span.start - 1] for span in statement.citations})
        for statement in chunk_response.statements
    ]
    if not answer_preserved(answer, chunk_response):
        provenance.answer_altered = True
        provenance.warnings.append("chunk_citation: statement texts diverge from answer")

    final_statements: list[Statement] = []
    for idx, statement in enumerate(chunk_response.statements):
        chunk_ids = provenance.chunk_citations[idx]
        collected: list[CitationSpan] = []
        for chunk_id in chunk_ids:
            # a malformed extraction aborts the whole instance; the caller
            # turns it into a Discarded record and the corpus run continues
            spans, extraction_warnings = extract_sentence_citations(
                statement, chunk_id, context, backends.chat, cfg
            )
            provenance.chat_calls += 1
            provenance.warnings.extend(extraction_warnings)
            provenance.extraction_spans.append(
                {
                    "statement": idx,
                    "chunk_id": chunk_id,
                    "spans": [[s.start, s.end] for s in spans],
                }
            )
            collected.extend(spans)
        merged = normalize_spans(collected)
        final_statements.append(Statement(statement.text, tuple(merged)))
    return AnnotatedResponse(tuple(final_statements), Granularity.SENTENCE)


def annotate_answer(
    document: str,
    query: str,
    answer: str,
    cfg: PipelineConfig,
    backends: Backends,
    document_id: str = "doc",
    language: Language | None = None,
    seed: str = "",
    counter_name: str = "approx-v1",
    task_type: TaskType = TaskType.GENERAL,
    extra_provenance: Provenance | None = None,
) -> CitedInstance | Discarded:
    """Stages 2-4 over an existing QA pair: the post-hoc entry point that
    augments any long-context QA dataset with citations."""
    context = build_context(document, language=language, chunk_size=cfg.chunk_size)
    provenance = extra_provenance or Provenance(
        document_id=document_id,
        language=context.language.value,
        task_type=task_type.value,
        seed=seed,
        prompt_hashes=cfg.prompts.hashes(),
        counter_name=counter_name,
    )
    try:
        response = attach_sentence_citations(
            context, query, answer, backends, cfg, provenance
        )
    except MalformedGeneration as exc:
        logger.warning("document %s discarded: %s", document_id, exc)
        return Discarded(document_id, exc.stage, exc.detail)
    if not filter_instance(response, cfg.min_cited_fraction):
        return Discarded(
            document_id,
            "filter",
            f"cited fraction {response.cited_fraction():.3f} "
            f"< {cfg.min_cited_fraction}",
        )
    for statement in response.statements:
        for span in statement.citations:
            if span.end >= context.n_sentences:
                return Discarded(
                    document_id, "validation", f"span [{span.start}-{span.end}] out of range"
                )
    return CitedInstance(
        instruction=cfg.prompts.one_pass_instruction,
        context=document,
        query=query,
        annotated_answer=response,
        provenance=provenance,
    )


def run_pipeline(
    document: str,
    cfg: PipelineConfig,
    backends: Backends,
    rng_seed: int | str = 0,
    document_id: str = "doc",
    language: Language | None = None,
    task_type: TaskType | None = None,
) -> CitedInstance | Discarded:
    """All four stages over a raw document.

    Any stage's :class:`MalformedGeneration` turns into a :class:`Discarded`
    record rather than an exception, so corpus runs keep going.
    """
    context = build_context(document, language=language, chunk_size=cfg.chunk_size)
    if task_type is None:
        task_type = random.Random(f"{rng_seed}:{document_id}:task").choice(list(TaskType))
    provenance = Provenance(
        document_id=document_id,
        language=context.language.value,
        task_type=task_type.value,
        seed=str(rng_seed),
        prompt_hashes=cfg.prompts.hashes(),
        counter_name="approx-v1",
    )
    try:
        questions, question_warnings = generate_questions(
            context, task_type, backends.chat, cfg
        )
        provenance.chat_calls += 1
        provenance.questions = questions
        provenance.warnings.extend(question_warnings)
        query = select_question(questions, f"{rng_seed}:{document_id}:select")
        answer = generate_answer(context, query, backends.chat, cfg)
        provenance.chat_calls += 1
        qa = QAInstance(
            context_ref=document_id,
            query=query,
            answer=answer,
            task_type=task_type,
            language=context.language,
        )
    except MalformedGeneration as exc:
        logger.warning("document %s discarded: %s", document_id, exc)
        return Discarded(document_id, exc.stage, exc.detail)
    return annotate_answer(
        document,
        qa.query,
        qa.answer,
        cfg,
        backends,
        document_id=document_id,
        language=language,
        seed=str(rng_seed),
        task_type=qa.task_type,
        extra_provenance=provenance,
    )
