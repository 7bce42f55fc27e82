"""Deterministic sentence and chunk indexing for long documents.

A document is indexed twice: into sentences (the unit of fine-grained
citations) and into fixed-size token chunks (the unit of coarse citations
and retrieval). Both indexes are pure functions of the text and a token
counter, so every downstream artifact is reproducible.

Segmentation is rule-based and frozen (see ``SEGMENTER_VERSION``): English
sentences end at ``. ! ?`` with an abbreviation guard, Chinese sentences end
at ``。！？；``, and the rule is picked per terminator character so mixed
documents work without a language switch. Chunk boundaries are token-aligned
but sentence-agnostic: a chunk may well start or end mid-sentence.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from itertools import pairwise
from typing import Callable, Sequence

SEGMENTER_VERSION = "v1"

DEFAULT_CHUNK_SIZE = 128


class Language(Enum):
    ENGLISH = "en"
    CHINESE = "zh"
    MIXED = "mixed"


# ---------------------------------------------------------------------------
# Token counting
# ---------------------------------------------------------------------------

# CJK ranges treated as one token per character. U+3000 (ideographic space)
# is whitespace, so the punctuation block starts at U+3001.
_CJK_CLASS = (
    "、-〿"
    "぀-ヿ"
    "㐀-䶿"
    "一-鿿"
    "豈-﫿"
    "＀-￯"
)
_TOKEN_RE = re.compile(f"[{_CJK_CLASS}]|[^\\s{_CJK_CLASS}]+")
_CJK_CHAR_RE = re.compile(f"[{_CJK_CLASS}]")


def approx_token_spans(text: str) -> list[tuple[int, int]]:
    """Token spans of the approximate counter: one token per CJK character,
    one per maximal whitespace-delimited non-CJK run."""
    return [m.span() for m in _TOKEN_RE.finditer(text)]


@dataclass(frozen=True)
class TokenCounter:
    """A named token counting scheme.

    ``count_fn`` is always required; ``span_fn`` (token offsets) is needed by
    :func:`build_chunks` so chunk boundaries never split a token. Counters
    backed by real tokenizers can supply offsets via their offset mapping.
    """

    name: str
    count_fn: Callable[[str], int]
    span_fn: Callable[[str], list[tuple[int, int]]] | None = None

    def count(self, text: str) -> int:
        return self.count_fn(text)

    def token_spans(self, text: str) -> list[tuple[int, int]]:
        if self.span_fn is None:
            raise ValueError(f"counter {self.name!r} does not expose token offsets")
        return self.span_fn(text)


DEFAULT_COUNTER = TokenCounter(
    name="approx-v1",
    count_fn=lambda text: len(approx_token_spans(text)),
    span_fn=approx_token_spans,
)


def count_tokens(counter: TokenCounter, text: str) -> int:
    return counter.count(text)


def detect_language(text: str) -> Language:
    cjk = len(_CJK_CHAR_RE.findall(text))
    ascii_letters = sum(1 for ch in text if ("a" <= ch <= "z") or ("A" <= ch <= "Z"))
    total = cjk + ascii_letters
    if total == 0 or cjk == 0:
        return Language.ENGLISH
    ratio = cjk / total
    if ratio >= 0.95:
        return Language.CHINESE
    if ratio <= 0.05:
        return Language.ENGLISH
    return Language.MIXED


# ---------------------------------------------------------------------------
# Sentence segmentation
# ---------------------------------------------------------------------------

_ASCII_TERMINATORS = ".!?"
_CJK_TERMINATORS = "。！？；"  # 。！？；
_CLOSERS = "\"')]」』”’）】》〉›»"

# Frozen abbreviation table (v1). Dotted forms are matched against the whole
# trailing letter/dot run, plain forms against the trailing word.
_ABBREVIATIONS = frozenset(
    {
        "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "etc", "vs", "cf",
        "al", "fig", "figs", "eq", "eqs", "sec", "vol", "pp", "ed", "eds",
        "dept", "univ", "inc", "ltd", "co", "corp", "approx", "mt",
        "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept",
        "oct", "nov", "dec",
        "e.g", "i.e", "u.s", "u.k", "u.s.a", "a.m", "p.m", "ph.d", "m.d",
    }
)


def _is_ascii_letter(ch: str) -> bool:
    return ("a" <= ch <= "z") or ("A" <= ch <= "Z")


def _abbrev_guarded(text: str, dot: int) -> bool:
    """True when the ``.`` at ``dot`` ends a known abbreviation."""
    j = dot
    while j > 0 and (_is_ascii_letter(text[j - 1]) or text[j - 1] == "."):
        j -= 1
    candidate = text[j:dot].lower().lstrip(".")
    return bool(candidate) and candidate in _ABBREVIATIONS


@dataclass(frozen=True)
class SentenceSpan:
    id: int
    start: int
    end: int
    text: str


def split_sentences(text: str, language: Language | None = None) -> list[SentenceSpan]:
    """Split ``text`` into indexed sentence spans.

    The split rule is chosen per terminator character, so the ``language``
    hint does not change behavior under the frozen v1 rules; it is accepted
    so callers can pass the document language along with the text. Any
    newline also ends the current sentence, which keeps headings and list
    items out of their neighbors. Spans exclude surrounding whitespace, so
    the gaps between consecutive spans are whitespace-only.
    """
    spans: list[tuple[int, int]] = []
    n = len(text)
    i = 0
    start = -1

    def close(end: int) -> None:
        nonlocal start
        while end > start and text[end - 1].isspace():
            end -= 1
        if end > start:
            spans.append((start, end))
        start = -1

    while i < n:
        ch = text[i]
        if start < 0:
            if ch.isspace():
                i += 1
                continue
            start = i
        if ch == "\n":
            close(i)
            i += 1
            continue
        if ch in _CJK_TERMINATORS:
            j = i + 1
            while j < n and (
                text[j] in _CLOSERS
                or text[j] in _CJK_TERMINATORS
                or text[j] in _ASCII_TERMINATORS
            ):
                j += 1
            close(j)
            i = j
            continue
        if ch in _ASCII_TERMINATORS:
            if ch == "." and _abbrev_guarded(text, i):
                i += 1
                continue
            j = i + 1
            while j < n and (
                text[j] in _ASCII_TERMINATORS
                or text[j] in _CJK_TERMINATORS
                or text[j] in _CLOSERS
            ):
                j += 1
            # A boundary needs following whitespace, end of text, or a
            # script change into CJK; "3.14" and "a.b" stay whole.
            if j >= n or text[j].isspace() or _CJK_CHAR_RE.match(text[j]):
                close(j)
                i = j
                continue
            i = j
            continue
        i += 1
    if start >= 0:
        close(n)
    return [SentenceSpan(idx, s, e, text[s:e]) for idx, (s, e) in enumerate(spans)]


# ---------------------------------------------------------------------------
# Chunking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Chunk:
    id: int
    start: int
    end: int
    token_count: int
    covered_sentences: tuple[int, ...] = ()


def build_chunks(
    context_text: str,
    counter: TokenCounter = DEFAULT_COUNTER,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    sentences: Sequence[SentenceSpan] | None = None,
) -> list[Chunk]:
    """Greedy left-to-right packing into chunks of exactly ``chunk_size``
    tokens (the last chunk may be shorter).

    Chunk boundaries sit at token starts, and the chunk spans tile the whole
    text, so concatenating the slices reproduces the input byte-for-byte.
    """
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    token_spans = counter.token_spans(context_text)
    if not token_spans:
        if not context_text:
            return []
        covered = tuple(s.id for s in sentences) if sentences else ()
        return [Chunk(0, 0, len(context_text), 0, covered)]
    bounds = [0]
    for k in range(chunk_size, len(token_spans), chunk_size):
        bounds.append(token_spans[k][0])
    bounds.append(len(context_text))
    chunks = []
    for cid, (lo, hi) in enumerate(pairwise(bounds)):
        token_count = min(chunk_size, len(token_spans) - cid * chunk_size)
        covered: tuple[int, ...] = ()
        if sentences is not None:
            covered = tuple(s.id for s in sentences if s.start < hi and s.end > lo)
        chunks.append(Chunk(cid, lo, hi, token_count, covered))
    return chunks


# ---------------------------------------------------------------------------
# Context
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Context:
    """A document plus its immutable sentence and chunk indexes."""

    raw_text: str
    language: Language
    sentences: tuple[SentenceSpan, ...]
    chunks: tuple[Chunk, ...]

    @property
    def n_sentences(self) -> int:
        return len(self.sentences)

    @property
    def n_chunks(self) -> int:
        return len(self.chunks)

    def sentence_slice(self, first: int, last: int) -> str:
        """Raw text from the start of sentence ``first`` to the end of
        sentence ``last`` (inclusive ids)."""
        if not (0 <= first <= last < len(self.sentences)):
            raise IndexError(f"sentence span [{first}-{last}] out of range")
        return self.raw_text[self.sentences[first].start : self.sentences[last].end]

    def chunk_slice(self, first: int, last: int) -> str:
        if not (0 <= first <= last < len(self.chunks)):
            raise IndexError(f"chunk span [{first}-{last}] out of range")
        return self.raw_text[self.chunks[first].start : self.chunks[last].end]

    def chunk_text(self, chunk_id: int) -> str:
        return self.chunk_slice(chunk_id, chunk_id)


def build_context(
    text: str,
    language: Language | None = None,
    counter: TokenCounter = DEFAULT_COUNTER,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> Context:
    if language is None:
        language = detect_language(text)
    sentences = split_sentences(text, language)
    chunks = build_chunks(text, counter, chunk_size, sentences)
    return Context(text, language, tuple(sentences), tuple(chunks))


# ---------------------------------------------------------------------------
# Numbered rendering and chunk expansion
# ---------------------------------------------------------------------------


def render_numbered_sentences(context: Context) -> str:
    """Render ``<C0>s0 <C1>s1 ...``; joining whitespace belongs to the
    preceding sentence's slot, never to the next prefix."""
    return " ".join(f"<C{s.id}>{s.text}" for s in context.sentences)


def render_numbered_chunks(context: Context) -> str:
    return " ".join(
        f"<C{c.id}>{context.chunk_text(c.id).strip()}" for c in context.chunks
    )


@dataclass(frozen=True)
class ExpandedChunk:
    chunk_id: int
    region_start: int
    region_end: int
    sentence_ids: tuple[int, ...]
    numbered_text: str

    @property
    def local_to_global(self) -> dict[int, int]:
        return {local: gid for local, gid in enumerate(self.sentence_ids)}


def expand_chunk(context: Context, chunk_id: int) -> ExpandedChunk:
    """Expand a chunk with its neighbors and renumber complete sentences.

    The region is chunks ``[chunk_id-1, chunk_id+1]`` clipped to the
    document. Only sentences lying wholly inside the region survive;
    fragments cut at either edge are dropped. Retained sentences are
    renumbered locally from 0; ``local_to_global`` maps them back to the
    document-wide sentence index.
    """
    if not (0 <= chunk_id < len(context.chunks)):
        raise IndexError(f"chunk id {chunk_id} out of range")
    lo = max(0, chunk_id - 1)
    hi = min(len(context.chunks) - 1, chunk_id + 1)
    region_start = context.chunks[lo].start
    region_end = context.chunks[hi].end
    retained = [
        s
        for s in context.sentences
        if s.start >= region_start and s.end <= region_end
    ]
    numbered = " ".join(f"<C{local}>{s.text}" for local, s in enumerate(retained))
    return ExpandedChunk(
        chunk_id=chunk_id,
        region_start=region_start,
        region_end=region_end,
        sentence_ids=tuple(s.id for s in retained),
        numbered_text=numbered,
    )
