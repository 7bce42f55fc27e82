import random
import re
from pathlib import Path

import pytest

from citeqa.citemark import AnnotatedResponse, CitationSpan, Granularity, Statement
from citeqa.modelgate import FunctionBackend

DATA_DIR = Path(__file__).parent / "data"

# seed used when recording the shipped transcripts; replays must match
FIXTURE_SEED = 7


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


_TEXT_ALPHABET = (
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
    " .,;:!?()[]-'\"你好世界中文句子"
)


def random_statement_text(rng: random.Random, max_len: int = 40) -> str:
    return "".join(rng.choice(_TEXT_ALPHABET) for _ in range(rng.randrange(max_len)))


def random_response(
    rng: random.Random,
    granularity: Granularity = Granularity.SENTENCE,
    max_index: int = 30,
    max_statements: int = 5,
) -> AnnotatedResponse:
    statements = []
    for _ in range(rng.randrange(max_statements + 1)):
        citations = []
        for _ in range(rng.randrange(4)):
            a = rng.randrange(max_index + 1)
            if granularity is Granularity.CHUNK:
                citations.append(CitationSpan(a, a))
            else:
                b = rng.randrange(a, max_index + 1)
                citations.append(CitationSpan(a, b))
        statements.append(Statement(random_statement_text(rng), tuple(citations)))
    return AnnotatedResponse(tuple(statements), granularity)


_FUZZ_PIECES = [
    "<statement>",
    "</statement>",
    "<cite>",
    "</cite>",
    "[",
    "]",
    "-",
    "[3]",
    "[1-4]",
    "[9-2]",
    "<",
    ">",
    "abc",
    "。",
    "статья",
    "中文",
    " ",
    "\n",
    "0",
    "7",
    "99999999999999999999",
    "<stat",
    "cite>",
    "\x00",
]


def random_fuzz_string(rng: random.Random, max_pieces: int = 12) -> str:
    return "".join(rng.choice(_FUZZ_PIECES) for _ in range(rng.randrange(max_pieces)))


class ScriptedJudge:
    """Answers support/need/relevance judge prompts from verdict tables
    keyed by statement text and snippet text."""

    def __init__(self, support=None, need=None, relevance=None):
        self.support = support or {}
        self.need = need or {}
        self.relevance = relevance or {}
        self.backend = FunctionBackend(self._answer)

    def _statement(self, prompt: str) -> str:
        return re.search(r"<statement>\n(.*?)\n</statement>", prompt, re.S).group(1)

    def _snippet(self, prompt: str) -> str:
        return re.search(r"<snippet>\n(.*?)\n</snippet>", prompt, re.S).group(1)

    def _answer(self, request) -> str:
        prompt = request.last_content()
        if "Need Citation" in prompt:
            needs = self.need[self._statement(prompt)]
            return f"Need Citation: [[{'Yes' if needs else 'No'}]] Analysis: ..."
        if "whether this statement is supported" in prompt:
            label = self.support[self._statement(prompt)]
            return f"Rating: [[{label}]] Analysis: ..."
        relevant = self.relevance[(self._statement(prompt), self._snippet(prompt))]
        return f"Rating: [[{'Relevant' if relevant else 'Unrelevant'}]] Analysis: ..."
