"""Parser, serializer, and normalizer for the citation markup.

The wire format encloses each response statement in ``<statement>`` tags and
appends a ``<cite>`` block holding zero or more citation tokens::

    <statement>The mill closed in 1987.<cite>[4-5][9-9]</cite></statement>

Sentence-level tokens are inclusive index ranges ``[a-b]`` (a singleton
serializes as ``[k-k]``); chunk-level tokens are single indexes ``[k]``.
Parsing is total: malformed input degrades into warnings, never exceptions,
because open models routinely emit nonconforming markup that still has to be
scored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

STATEMENT_OPEN = "<statement>"
STATEMENT_CLOSE = "</statement>"

_CITE_SECTION_RE = re.compile(r"<cite>(.*?)</cite>", re.DOTALL)
_CITE_TOKEN_RE = re.compile(r"\[(\d+)(?:-(\d+))?\]")
_ANY_TAG_RE = re.compile(r"</?(?:statement|cite)>")


class Granularity(Enum):
    CHUNK = "chunk"
    SENTENCE = "sentence"


@dataclass(frozen=True)
class CitationSpan:
    """Inclusive index range into the context's sentence or chunk index."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if not (0 <= self.start <= self.end):
            raise ValueError(f"invalid citation span [{self.start}-{self.end}]")

    def indices(self) -> range:
        return range(self.start, self.end + 1)


@dataclass(frozen=True)
class Statement:
    text: str
    citations: tuple[CitationSpan, ...] = ()

    def __post_init__(self) -> None:
        if _ANY_TAG_RE.search(self.text):
            raise ValueError("statement text must not contain markup tags")


@dataclass(frozen=True)
class AnnotatedResponse:
    statements: tuple[Statement, ...]
    granularity: Granularity

    @property
    def n_statements(self) -> int:
        return len(self.statements)

    def plain_text(self) -> str:
        return "".join(s.text for s in self.statements)

    def cited_fraction(self) -> float:
        if not self.statements:
            return 0.0
        cited = sum(1 for s in self.statements if s.citations)
        return cited / len(self.statements)


@dataclass(frozen=True)
class ParseWarning:
    code: str
    detail: str


def _parse_cite_tokens(
    raw: str,
    granularity: Granularity,
    max_index: int,
    warnings: list[ParseWarning],
) -> list[CitationSpan]:
    spans: list[CitationSpan] = []
    consumed_end = 0
    leftovers: list[str] = []
    for m in _CITE_TOKEN_RE.finditer(raw):
        if raw[consumed_end : m.start()].strip():
            leftovers.append(raw[consumed_end : m.start()].strip())
        consumed_end = m.end()
        a = int(m.group(1))
        b = int(m.group(2)) if m.group(2) is not None else a
        if b < a:
            warnings.append(ParseWarning("reversed_span", m.group()))
            continue
        if b > max_index:
            warnings.append(ParseWarning("index_out_of_range", m.group()))
            continue
        if granularity is Granularity.CHUNK and b > a:
            # chunk citations are single indexes; a range is normalized to
            # the singletons it names
            warnings.append(ParseWarning("chunk_range_expanded", m.group()))
            spans.extend(CitationSpan(i, i) for i in range(a, b + 1))
        else:
            spans.append(CitationSpan(a, b))
    if raw[consumed_end:].strip():
        leftovers.append(raw[consumed_end:].strip())
    for junk in leftovers:
        warnings.append(ParseWarning("unparsed_citation_text", junk[:80]))
    return spans


def _remove_all_markup(text: str) -> str:
    """Strip cite sections and bare tags to a fixpoint.

    A single pass is not total: removing one token can splice a new one
    together (``<ci<cite>x</cite>te>`` leaves ``<cite>``), so iterate until
    nothing changes. Each pass shortens the text, so this terminates.
    """
    while True:
        cleaned = _ANY_TAG_RE.sub("", _CITE_SECTION_RE.sub("", text))
        if cleaned == text:
            return cleaned
        text = cleaned


def _clean_statement_text(
    block: str, warnings: list[ParseWarning], outside: bool = False
) -> str:
    """Remove any residual markup from a statement body."""
    if STATEMENT_OPEN in block:
        warnings.append(ParseWarning("nested_statement", "flattened inner tag"))
    cleaned = _remove_all_markup(block)
    if cleaned != block and not outside and STATEMENT_OPEN not in block:
        warnings.append(ParseWarning("stray_tag", "removed unmatched tag"))
    return cleaned


def parse_annotated(
    text: str, granularity: Granularity, max_index: int
) -> tuple[AnnotatedResponse, list[ParseWarning]]:
    """Parse markup into an :class:`AnnotatedResponse`, never raising.

    Irregular citation tokens (reversed ranges, indexes beyond ``max_index``,
    unparseable junk) are dropped with a warning. Non-whitespace text outside
    any ``<statement>`` block becomes a citation-free statement, also with a
    warning, so nonconforming responses remain scoreable.
    """
    warnings: list[ParseWarning] = []
    statements: list[Statement] = []

    def add_outside(segment: str) -> None:
        if not segment.strip():
            return
        warnings.append(ParseWarning("text_outside_statement", segment.strip()[:80]))
        cite_sections = _CITE_SECTION_RE.findall(segment)
        if any(s.strip() for s in cite_sections):
            warnings.append(ParseWarning("citation_outside_statement", ""))
        body = _CITE_SECTION_RE.sub("", segment)
        statements.append(Statement(_clean_statement_text(body, warnings, outside=True)))

    pos = 0
    while True:
        open_at = text.find(STATEMENT_OPEN, pos)
        if open_at < 0:
            add_outside(text[pos:])
            break
        add_outside(text[pos:open_at])
        body_start = open_at + len(STATEMENT_OPEN)
        close_at = text.find(STATEMENT_CLOSE, body_start)
        if close_at < 0:
            warnings.append(ParseWarning("unterminated_statement", ""))
            block = text[body_start:]
            pos = len(text)
        else:
            block = text[body_start:close_at]
            pos = close_at + len(STATEMENT_CLOSE)
        spans: list[CitationSpan] = []
        cite_sections = _CITE_SECTION_RE.findall(block)
        if not cite_sections:
            warnings.append(ParseWarning("missing_cite_block", block.strip()[:80]))
        for section in cite_sections:
            spans.extend(_parse_cite_tokens(section, granularity, max_index, warnings))
        body = _CITE_SECTION_RE.sub("", block)
        statements.append(
            Statement(_clean_statement_text(body, warnings), tuple(spans))
        )
        if close_at < 0:
            break
    return AnnotatedResponse(tuple(statements), granularity), warnings


def serialize_annotated(response: AnnotatedResponse) -> str:
    """Render the exact wire markup; inverse of a warning-free parse."""
    parts = []
    for statement in response.statements:
        tokens = []
        for span in statement.citations:
            if response.granularity is Granularity.CHUNK:
                if span.start != span.end:
                    raise ValueError("chunk-level citations must be single indexes")
                tokens.append(f"[{span.start}]")
            else:
                tokens.append(f"[{span.start}-{span.end}]")
        parts.append(
            f"{STATEMENT_OPEN}{statement.text}<cite>{''.join(tokens)}</cite>{STATEMENT_CLOSE}"
        )
    return "".join(parts)


def strip_citations(text: str) -> str:
    """Drop all citation markup, preserving statement texts byte-for-byte."""
    return _remove_all_markup(text)


def normalize_spans(
    spans: list[CitationSpan] | tuple[CitationSpan, ...],
    mapping: dict[int, int] | None = None,
) -> list[CitationSpan]:
    """Remap span indexes through ``mapping`` and coalesce the result.

    Output intervals are sorted, pairwise disjoint, and non-adjacent:
    overlapping or touching ranges (``[2-4][5-7]``) merge into one
    (``[2-7]``). With ``mapping=None`` indexes are kept as-is (pure merge).
    Otherwise every index of every input span must be a key of ``mapping``;
    a missing key means the caller failed to drop an irregular span earlier,
    so it raises instead of warning.
    """
    ids: set[int] = set()
    for span in spans:
        for index in span.indices():
            if mapping is None:
                ids.add(index)
                continue
            try:
                ids.add(mapping[index])
            except KeyError:
                raise ValueError(
                    f"span [{span.start}-{span.end}] references unmapped index {index}"
                ) from None
    if not ids:
        return []
    ordered = sorted(ids)
    merged: list[CitationSpan] = []
    run_start = prev = ordered[0]
    for gid in ordered[1:]:
        if gid == prev + 1:
            prev = gid
            continue
        merged.append(CitationSpan(run_start, prev))
        run_start = prev = gid
    merged.append(CitationSpan(run_start, prev))
    return merged
