"""The answering-strategy menu for long-context QA with citations.

One-pass strategies read a (possibly retrieved) numbered context and emit
answer plus citations in a single chat call. Post-hoc strategies first get a
vanilla answer, then insert citations in a second pass, which preserves the
original answer text. The coarse-fine strategy reuses the pipeline's
chunk-insertion and sentence-extraction stages on the vanilla answer.

Naming: ``LAC``/``RAC`` = long-context / retrieved-context answering with
citations, suffixed ``_C``/``_S`` for chunk- or sentence-level granularity;
``POST_LC``/``POST_RC`` are their post-hoc counterparts.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from enum import Enum

from .citemark import (
    AnnotatedResponse,
    CitationSpan,
    Granularity,
    Statement,
    parse_annotated,
    strip_citations,
)
from .modelgate import Backends, user_request
from .pipeline import (
    PipelineConfig,
    Provenance,
    answer_preserved,
    attach_sentence_citations,
    generate_answer,
)
from .prompts import (
    DEFAULT_PROMPTS,
    PromptSet,
    build_one_pass_prompt,
    build_sentence_insertion_prompt,
    build_snippet_insertion_prompt,
)
from .retrieval import RetrievalUnit, Scorer, retrieve_for_answer, retrieve_for_query
from .textseg import (
    DEFAULT_COUNTER,
    Context,
    TokenCounter,
    render_numbered_chunks,
    render_numbered_sentences,
    split_sentences,
)

logger = logging.getLogger(__name__)


class StrategyId(Enum):
    LAC_C = "lac-c"
    LAC_S = "lac-s"
    RAC_C = "rac-c"
    RAC_S = "rac-s"
    POST_LC_C = "post-lc-c"
    POST_LC_S = "post-lc-s"
    POST_RC_C = "post-rc-c"
    POST_RC_S = "post-rc-s"
    COARSE_FINE = "coarse-fine"

    @classmethod
    def from_name(cls, name: str) -> "StrategyId":
        for member in cls:
            if member.value == name:
                return member
        raise ValueError(f"unknown strategy {name!r}")


@dataclass(frozen=True)
class StrategyConfig:
    chunk_size: int = 128
    l_max: int = 10
    k: int = 40
    scorer: Scorer = Scorer.LEXICAL_OVERLAP
    window_tokens: int | None = None
    prompts: PromptSet = DEFAULT_PROMPTS
    counter: TokenCounter = DEFAULT_COUNTER

    def pipeline(self) -> PipelineConfig:
        return PipelineConfig(
            chunk_size=self.chunk_size,
            l_max=self.l_max,
            k=self.k,
            scorer=self.scorer,
            prompts=self.prompts,
        )


@dataclass
class StrategyOutput:
    strategy: StrategyId
    response: AnnotatedResponse
    plain_answer: str
    calls: int
    latency_breakdown: tuple[tuple[str, float], ...]
    warnings: tuple[str, ...] = ()

    @property
    def granularity(self) -> Granularity:
        return self.response.granularity


class _Timer:
    def __init__(self) -> None:
        self.laps: list[tuple[str, float]] = []

    def timed(self, label: str, fn, *args):
        started = time.perf_counter()
        result = fn(*args)
        self.laps.append((label, time.perf_counter() - started))
        return result


def _truncate_to_window(
    numbered: str, cfg: StrategyConfig, warnings: list[str]
) -> str:
    if cfg.window_tokens is None:
        return numbered
    spans = cfg.counter.token_spans(numbered)
    if len(spans) <= cfg.window_tokens:
        return numbered
    cut = spans[cfg.window_tokens][0]
    warnings.append(
        f"context truncated to {cfg.window_tokens} tokens "
        f"({len(spans)} before truncation)"
    )
    return numbered[:cut]


def _parse_best_effort(
    raw: str, granularity: Granularity, max_index: int, warnings: list[str]
) -> AnnotatedResponse:
    response, parse_warnings = parse_annotated(raw, granularity, max_index)
    warnings.extend(f"{w.code}: {w.detail}" for w in parse_warnings)
    return response


def _one_pass(
    strategy: StrategyId,
    context: Context,
    query: str,
    cfg: StrategyConfig,
    backends: Backends,
) -> StrategyOutput:
    warnings: list[str] = []
    timer = _Timer()
    sentence_level = strategy in (StrategyId.LAC_S, StrategyId.RAC_S)
    if strategy is StrategyId.LAC_S:
        numbered = render_numbered_sentences(context)
        max_index = context.n_sentences - 1
    elif strategy is StrategyId.LAC_C:
        numbered = render_numbered_chunks(context)
        max_index = context.n_chunks - 1
    else:
        unit = RetrievalUnit.SENTENCE if sentence_level else RetrievalUnit.CHUNK
        ids = retrieve_for_query(query, context, cfg.k, unit, cfg.scorer, backends.embed)
        # retrieved units keep their document-wide numbers, so model output
        # is already in global coordinates
        if sentence_level:
            numbered = " ".join(f"<C{i}>{context.sentences[i].text}" for i in ids)
            max_index = context.n_sentences - 1
        else:
            numbered = " ".join(f"<C{i}>{context.chunk_text(i).strip()}" for i in ids)
            max_index = context.n_chunks - 1
    numbered = _truncate_to_window(numbered, cfg, warnings)
    prompt = build_one_pass_prompt(cfg.prompts, numbered, query)
    raw = timer.timed("answer_with_citations", backends.chat.complete, user_request(prompt))
    granularity = Granularity.SENTENCE if sentence_level else Granularity.CHUNK
    response = _parse_best_effort(raw, granularity, max_index, warnings)
    return StrategyOutput(
        strategy=strategy,
        response=response,
        plain_answer=strip_citations(raw),
        calls=1,
        latency_breakdown=tuple(timer.laps),
        warnings=tuple(warnings),
    )


def _post_hoc(
    strategy: StrategyId,
    context: Context,
    query: str,
    cfg: StrategyConfig,
    backends: Backends,
) -> StrategyOutput:
    warnings: list[str] = []
    timer = _Timer()
    pipeline_cfg = cfg.pipeline()
    answer = timer.timed(
        "vanilla_answer", generate_answer, context, query, backends.chat, pipeline_cfg
    )
    sentence_level = strategy in (StrategyId.POST_LC_S, StrategyId.POST_RC_S)

    if strategy is StrategyId.POST_LC_C:
        snippet_ids = list(range(context.n_chunks))
    elif strategy is StrategyId.POST_LC_S:
        snippet_ids = list(range(context.n_sentences))
    else:
        unit = (
            RetrievalUnit.SENTENCE
            if strategy is StrategyId.POST_RC_S
            else RetrievalUnit.CHUNK
        )
        answer_sentences = [s.text for s in split_sentences(answer, context.language)]
        snippet_ids = retrieve_for_answer(
            answer_sentences, context, pipeline_cfg.retrieval(), backends.embed, unit=unit
        )

    if sentence_level:
        numbered = " ".join(f"<C{i}>{context.sentences[i].text}" for i in snippet_ids)
        numbered = _truncate_to_window(numbered, cfg, warnings)
        prompt = build_sentence_insertion_prompt(cfg.prompts, numbered, query, answer)
        raw = timer.timed("insert_citations", backends.chat.complete, user_request(prompt))
        response = _parse_best_effort(
            raw, Granularity.SENTENCE, context.n_sentences - 1, warnings
        )
    else:
        snippets = [context.chunk_text(i) for i in snippet_ids]
        prompt = build_snippet_insertion_prompt(cfg.prompts, snippets, query, answer)
        raw = timer.timed("insert_citations", backends.chat.complete, user_request(prompt))
        local, parse_warnings = parse_annotated(
            raw, Granularity.CHUNK, max_index=len(snippets)
        )
        warnings.extend(f"{w.code}: {w.detail}" for w in parse_warnings)
        # local snippet numbers are 1-based; remap to global chunk ids
        statements = []
        for statement in local.statements:
            ids = sorted(
                {
                    snippet_ids[span.start - 1]
                    for span in statement.citations
                    if span.start >= 1
                }
            )
            statements.append(
                Statement(statement.text, tuple(CitationSpan(i, i) for i in ids))
            )
        response = AnnotatedResponse(tuple(statements), Granularity.CHUNK)

    if not answer_preserved(answer, response):
        warnings.append("citation insertion altered the answer text")
    return StrategyOutput(
        strategy=strategy,
        response=response,
        plain_answer=answer,
        calls=2,
        latency_breakdown=tuple(timer.laps),
        warnings=tuple(warnings),
    )


def _coarse_fine(
    context: Context,
    query: str,
    cfg: StrategyConfig,
    backends: Backends,
) -> StrategyOutput:
    warnings: list[str] = []
    timer = _Timer()
    pipeline_cfg = cfg.pipeline()
    answer = timer.timed(
        "vanilla_answer", generate_answer, context, query, backends.chat, pipeline_cfg
    )
    provenance = Provenance(
        document_id="strategy-run",
        language=context.language.value,
        task_type="n/a",
        seed="",
        prompt_hashes=cfg.prompts.hashes(),
    )
    started = time.perf_counter()
    response = attach_sentence_citations(
        context, query, answer, backends, pipeline_cfg, provenance
    )
    timer.laps.append(("coarse_fine_citations", time.perf_counter() - started))
    warnings.extend(provenance.warnings)
    return StrategyOutput(
        strategy=StrategyId.COARSE_FINE,
        response=response,
        plain_answer=answer,
        calls=1 + provenance.chat_calls,
        latency_breakdown=tuple(timer.laps),
        warnings=tuple(warnings),
    )


def run_strategy(
    strategy: StrategyId,
    context: Context,
    query: str,
    cfg: StrategyConfig,
    backends: Backends,
) -> StrategyOutput:
    """Run one strategy over one (context, query) pair.

    Call counts are part of the contract: one-pass strategies make exactly 1
    chat call, post-hoc strategies exactly 2, and coarse-fine 2 plus one
    extraction call per (statement, cited chunk) pair. Embedding calls are
    not counted here.
    """
    if strategy in (StrategyId.LAC_C, StrategyId.LAC_S, StrategyId.RAC_C, StrategyId.RAC_S):
        return _one_pass(strategy, context, query, cfg, backends)
    if strategy is StrategyId.COARSE_FINE:
        return _coarse_fine(context, query, cfg, backends)
    return _post_hoc(strategy, context, query, cfg, backends)
