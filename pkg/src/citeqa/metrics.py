"""Judge-based evaluation of citation quality and answer correctness.

Citation recall is scored per statement: cited statements are judged against
the concatenation of their snippets (full/partial/no support = 1/0.5/0);
uncited statements are judged for whether they needed a citation at all
(functional sentences score 1, uncited factual claims score 0). Citation
precision is binary per citation. F1 combines the two per response and is
averaged per response, never recomputed from averaged P and R. Citation
length is the mean token count of cited snippets and guards against
cite-everything hacks.

Correctness is judged on the stripped response against reference answers on
a per-dataset scale, then normalized to 0-100. The correctness ratio divides
cited-answer correctness by vanilla-QA correctness; table cells show it
truncated to whole percent.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from statistics import fmean
from typing import Sequence

from .citemark import AnnotatedResponse, Granularity, strip_citations
from .modelgate import ChatBackend, user_request
from .prompts import (
    DEFAULT_PROMPTS,
    PromptSet,
    build_correctness_chat_prompt,
    build_correctness_zero_shot_prompt,
    build_need_citation_judge_prompt,
    build_relevance_judge_prompt,
    build_support_judge_prompt,
)
from .textseg import DEFAULT_COUNTER, Context, TokenCounter

logger = logging.getLogger(__name__)

JUDGE_RETRIES = 2


class JudgeParseError(Exception):
    pass


class OutOfScaleRating(Exception):
    pass


class SupportVerdict(Enum):
    FULL = 1.0
    PARTIAL = 0.5
    NONE = 0.0


class RelevanceVerdict(Enum):
    RELEVANT = 1
    IRRELEVANT = 0


class CorrectnessScale(Enum):
    CHAT10 = ("chat10", 10)
    QA3 = ("qa3", 3)
    SUMM5 = ("summ5", 5)

    @property
    def max_rating(self) -> int:
        return self.value[1]

    @classmethod
    def from_name(cls, name: str) -> "CorrectnessScale":
        for member in cls:
            if member.value[0] == name.lower():
                return member
        raise ValueError(f"unknown correctness scale {name!r}")


DATASET_SCALES = {
    "longbench-chat": CorrectnessScale.CHAT10,
    "multifieldqa-en": CorrectnessScale.QA3,
    "multifieldqa-zh": CorrectnessScale.QA3,
    "hotpotqa": CorrectnessScale.QA3,
    "dureader": CorrectnessScale.QA3,
    "govreport": CorrectnessScale.SUMM5,
}

_BRACKET_RE = re.compile(r"\[\[(.*?)\]\]", re.DOTALL)

_SUPPORT_LABELS = {
    "fully supported": SupportVerdict.FULL,
    "partially supported": SupportVerdict.PARTIAL,
    "no support": SupportVerdict.NONE,
}


def _first_bracketed(raw: str) -> str | None:
    m = _BRACKET_RE.search(raw)
    return m.group(1).strip() if m else None


def _ask(judge: ChatBackend, prompt: str, parser, retries: int = JUDGE_RETRIES):
    """Call the judge, parse, retry on unparseable output, then give up."""
    last_raw = ""
    for _ in range(retries + 1):
        last_raw = judge.complete(user_request(prompt))
        parsed = parser(last_raw)
        if parsed is not None:
            return parsed
    raise JudgeParseError(f"unparseable judge output: {last_raw[:120]!r}")


# ---------------------------------------------------------------------------
# Judge operations
# ---------------------------------------------------------------------------


def judge_statement_support(
    question: str,
    statement: str,
    cited_snippets: str,
    judge: ChatBackend,
    prompts: PromptSet = DEFAULT_PROMPTS,
) -> SupportVerdict:
    prompt = build_support_judge_prompt(prompts, question, statement, cited_snippets)

    def parse(raw: str) -> SupportVerdict | None:
        label = _first_bracketed(raw)
        if label is None:
            return None
        return _SUPPORT_LABELS.get(label.lower())

    return _ask(judge, prompt, parse)


def judge_need_citation(
    question: str,
    full_response: str,
    statement: str,
    judge: ChatBackend,
    prompts: PromptSet = DEFAULT_PROMPTS,
) -> bool:
    """True when the judge says the uncited statement is a factual claim
    that needed a citation (which costs it its recall point)."""
    prompt = build_need_citation_judge_prompt(prompts, question, full_response, statement)

    def parse(raw: str) -> bool | None:
        label = _first_bracketed(raw)
        if label is None:
            return None
        lowered = label.lower()
        if lowered == "yes":
            return True
        if lowered == "no":
            return False
        return None

    return _ask(judge, prompt, parse)


def judge_citation_relevance(
    question: str,
    statement: str,
    snippet: str,
    judge: ChatBackend,
    prompts: PromptSet = DEFAULT_PROMPTS,
) -> RelevanceVerdict:
    prompt = build_relevance_judge_prompt(prompts, question, statement, snippet)

    def parse(raw: str) -> RelevanceVerdict | None:
        label = _first_bracketed(raw)
        if label is None:
            return None
        lowered = label.lower()
        if lowered == "relevant":
            return RelevanceVerdict.RELEVANT
        if lowered in ("unrelevant", "irrelevant"):
            return RelevanceVerdict.IRRELEVANT
        return None

    return _ask(judge, prompt, parse)


def judge_correctness(
    scale: CorrectnessScale,
    question: str,
    groundtruths: Sequence[str],
    response: str,
    judge: ChatBackend,
    prompts: PromptSet = DEFAULT_PROMPTS,
    few_shot: Sequence[tuple[str, int]] = (),
) -> int:
    """Rate the (already stripped) response against reference answers.

    The response is stripped again defensively: the judge must never see
    citation markup.
    """
    clean = strip_citations(response)
    reference = "\n".join(groundtruths)
    if scale is CorrectnessScale.CHAT10:
        prompt = build_correctness_chat_prompt(
            prompts, question, reference, clean, few_shot
        )
    elif scale is CorrectnessScale.QA3:
        prompt = build_correctness_zero_shot_prompt(
            prompts.correctness_qa, question, reference, clean
        )
    else:
        prompt = build_correctness_zero_shot_prompt(
            prompts.correctness_summary, question, reference, clean
        )

    def parse(raw: str) -> int | None:
        label = _first_bracketed(raw)
        if label is None or not re.fullmatch(r"\d+", label):
            return None
        return int(label)

    rating = _ask(judge, prompt, parse)
    if not (1 <= rating <= scale.max_rating):
        raise OutOfScaleRating(f"rating {rating} outside 1..{scale.max_rating}")
    return rating


# ---------------------------------------------------------------------------
# Citation scoring
# ---------------------------------------------------------------------------


def citation_f1(precision: float, recall: float) -> float:
    """Harmonic mean of per-response precision and recall; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def resolve_span(context: Context, span, granularity: Granularity) -> str:
    if granularity is Granularity.SENTENCE:
        return context.sentence_slice(span.start, span.end)
    return context.chunk_slice(span.start, span.end)


@dataclass
class CitationScore:
    recall: float
    precision: float
    f1: float
    citation_length: float
    n_statements: int
    n_citations: int
    judge_failures: int = 0


def score_citations(
    response: AnnotatedResponse,
    context: Context,
    question: str,
    judge: ChatBackend,
    counter: TokenCounter = DEFAULT_COUNTER,
    prompts: PromptSet = DEFAULT_PROMPTS,
) -> CitationScore:
    """Score one response: recall, precision, F1, citation length.

    A response with zero citations anywhere gets precision 0 (and hence
    F1 = 0): it has not attempted the citing task. Judge failures after
    bounded retries score their unit conservatively (0) and are counted so a
    flaky judge can only deflate, never inflate, the metrics.
    """
    # the need-citation judge reads the whole response; joined with spaces
    # since parsing drops inter-statement whitespace
    plain = " ".join(s.text for s in response.statements)
    recalls: list[float] = []
    precisions: list[float] = []
    snippet_lengths: list[int] = []
    failures = 0
    for statement in response.statements:
        if statement.citations:
            snippets = [
                resolve_span(context, span, response.granularity)
                for span in statement.citations
            ]
            snippet_lengths.extend(counter.count(s) for s in snippets)
            try:
                verdict = judge_statement_support(
                    question, statement.text, "\n".join(snippets), judge, prompts
                )
                recalls.append(verdict.value)
            except JudgeParseError:
                failures += 1
                recalls.append(0.0)
            for snippet in snippets:
                try:
                    relevance = judge_citation_relevance(
                        question, statement.text, snippet, judge, prompts
                    )
                    precisions.append(float(relevance.value))
                except JudgeParseError:
                    failures += 1
                    precisions.append(0.0)
        else:
            try:
                needs = judge_need_citation(
                    question, plain, statement.text, judge, prompts
                )
                recalls.append(0.0 if needs else 1.0)
            except JudgeParseError:
                failures += 1
                recalls.append(0.0)
    recall = fmean(recalls) if recalls else 0.0
    precision = fmean(precisions) if precisions else 0.0
    return CitationScore(
        recall=recall,
        precision=precision,
        f1=citation_f1(precision, recall),
        citation_length=fmean(snippet_lengths) if snippet_lengths else 0.0,
        n_statements=response.n_statements,
        n_citations=sum(len(s.citations) for s in response.statements),
        judge_failures=failures,
    )


# ---------------------------------------------------------------------------
# Correctness ratio and aggregation
# ---------------------------------------------------------------------------


def correctness_ratio(correctness: float, correctness_vanilla: float) -> float:
    """Cited-answer correctness over vanilla correctness, as an exact
    percentage."""
    if correctness_vanilla == 0:
        raise ZeroDivisionError("vanilla correctness is zero")
    return correctness / correctness_vanilla * 100.0


def table_percent(ratio: float) -> int:
    """Whole-percent table rendering of a correctness ratio (truncated)."""
    return int(ratio)


def normalized_correctness(rating: int, scale: CorrectnessScale) -> float:
    return rating / scale.max_rating * 100.0


@dataclass
class ResponseMetrics:
    """Per-response metric record; correctness values are normalized 0-100."""

    id: str
    dataset: str
    recall: float
    precision: float
    f1: float
    citation_length: float
    n_statements: int = 0
    n_citations: int = 0
    judge_failures: int = 0
    correctness: float | None = None
    correctness_vanilla: float | None = None


@dataclass
class DatasetAggregate:
    n: int
    recall: float
    precision: float
    f1: float
    citation_length: float
    correctness: float | None = None
    correctness_vanilla: float | None = None
    correctness_ratio: float | None = None


@dataclass
class MetricReport:
    counter_name: str
    datasets: dict[str, DatasetAggregate] = field(default_factory=dict)
    average: DatasetAggregate | None = None
    per_response: list[ResponseMetrics] = field(default_factory=list)


def _aggregate_group(rows: Sequence[ResponseMetrics]) -> DatasetAggregate:
    correctness_rows = [r.correctness for r in rows if r.correctness is not None]
    vanilla_rows = [
        r.correctness_vanilla for r in rows if r.correctness_vanilla is not None
    ]
    correctness = fmean(correctness_rows) if correctness_rows else None
    vanilla = fmean(vanilla_rows) if vanilla_rows else None
    ratio = None
    if correctness is not None and vanilla:
        ratio = correctness_ratio(correctness, vanilla)
    return DatasetAggregate(
        n=len(rows),
        recall=fmean(r.recall for r in rows),
        precision=fmean(r.precision for r in rows),
        # mean of per-response F1, never F1 of the mean P and mean R
        f1=fmean(r.f1 for r in rows),
        citation_length=fmean(r.citation_length for r in rows),
        correctness=correctness,
        correctness_vanilla=vanilla,
        correctness_ratio=ratio,
    )


def _macro(values: Sequence[float | None]) -> float | None:
    present = [v for v in values if v is not None]
    return fmean(present) if present else None


def aggregate(per_response: Sequence[ResponseMetrics], counter_name: str = "approx-v1") -> MetricReport:
    """Average rows within each dataset; the overall column macro-averages
    the dataset columns."""
    if not per_response:
        raise ValueError("nothing to aggregate")
    report = MetricReport(counter_name=counter_name, per_response=list(per_response))
    by_dataset: dict[str, list[ResponseMetrics]] = {}
    for row in per_response:
        by_dataset.setdefault(row.dataset, []).append(row)
    for name in sorted(by_dataset):
        report.datasets[name] = _aggregate_group(by_dataset[name])
    groups = list(report.datasets.values())
    average_correctness = _macro([g.correctness for g in groups])
    average_vanilla = _macro([g.correctness_vanilla for g in groups])
    average_ratio = None
    if average_correctness is not None and average_vanilla:
        average_ratio = correctness_ratio(average_correctness, average_vanilla)
    report.average = DatasetAggregate(
        n=sum(g.n for g in groups),
        recall=fmean(g.recall for g in groups),
        precision=fmean(g.precision for g in groups),
        f1=fmean(g.f1 for g in groups),
        citation_length=fmean(g.citation_length for g in groups),
        correctness=average_correctness,
        correctness_vanilla=average_vanilla,
        correctness_ratio=average_ratio,
    )
    return report


def render_markdown(report: MetricReport, run_id: str = "") -> str:
    """One row per dataset plus the macro-average row; R/P/F1 are reported
    x100 with one decimal."""

    def pct(value: float) -> str:
        return f"{value * 100:.1f}"

    def corr(value: float | None) -> str:
        return f"{value:.1f}" if value is not None else "-"

    def ratio(value: float | None) -> str:
        return f"{table_percent(value)}%" if value is not None else "-"

    provenance = f", run: {run_id}" if run_id else ""
    lines = [
        f"Citation metrics (counter: {report.counter_name}{provenance})",
        "",
        "| Dataset | N | R | P | F1 | CL | C | C_vanilla | CR |",
        "|---|---|---|---|---|---|---|---|---|",
    ]
    rows = list(report.datasets.items())
    if report.average is not None:
        rows.append(("Avg", report.average))
    for name, agg in rows:
        lines.append(
            f"| {name} | {agg.n} | {pct(agg.recall)} | {pct(agg.precision)} | "
            f"{pct(agg.f1)} | {agg.citation_length:.1f} | {corr(agg.correctness)} | "
            f"{corr(agg.correctness_vanilla)} | {ratio(agg.correctness_ratio)} |"
        )
    return "\n".join(lines) + "\n"
