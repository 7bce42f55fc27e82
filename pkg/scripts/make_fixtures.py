#!/usr/bin/env python3
"""Regenerate the deterministic fixtures under tests/data/.

The scripted model outputs below are the source of truth for the golden
pipeline expectations; the key derived values (merged span [10-13], span
[7-7], keep/discard decisions) were worked out by hand from these outputs
and are asserted independently in the tests. Re-run this script only when
prompts or request shapes change, then re-verify the hand checks.
"""

from __future__ import annotations

import json
from pathlib import Path

from citeqa.citemark import parse_annotated, serialize_annotated
from citeqa.cli import instance_row
from citeqa.metrics import judge_correctness, score_citations
from citeqa.modelgate import Backends, FunctionBackend, RecordingBackend, Transcript
from citeqa.pipeline import CitedInstance, Discarded, PipelineConfig, run_pipeline
from citeqa.strategies import StrategyConfig, StrategyId, run_strategy
from citeqa.textseg import build_context

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"
SEED = 7
CHUNK_SIZE = 10

NUM_WORDS = [
    "zero", "one", "two", "three", "four", "five", "six", "seven",
    "eight", "nine", "ten", "eleven", "twelve", "thirteen", "fourteen",
]
GOLDEN_DOC = " ".join(f"Fact {w}." for w in NUM_WORDS)
ALPHA_DOC = " ".join(
    f"Alpha {w}." for w in ["one", "two", "three", "four", "five",
                            "six", "seven", "eight", "nine", "ten"]
)

QUESTIONS_RESPONSE = (
    "1: What facts hold in the record?\n"
    "2: Which fact comes first?\n"
    "3: Which fact comes last?\n"
    "4: How many facts are listed?\n"
    "5: What does the record describe?"
)
GOLDEN_ANSWER = (
    "Intro sentence. Fact ten and fact thirteen hold. "
    "Fact seven holds. Nothing else matters."
)
GOLDEN_COARSE = (
    "<statement>Intro sentence.<cite></cite></statement>"
    "<statement>Fact ten and fact thirteen hold.<cite>[2][3]</cite></statement>"
    "<statement>Fact seven holds.<cite>[2]</cite></statement>"
    "<statement>Nothing else matters.<cite></cite></statement>"
)
ALPHA_ANSWER = "Alpha statement. Another alpha."
ALPHA_COARSE = (
    "<statement>Alpha statement.<cite>[1]</cite></statement>"
    "<statement>Another alpha.<cite></cite></statement>"
)


def pipeline_script(request) -> str:
    prompt = request.last_content()
    if "[Passage Start]" in prompt:
        if "Fact ten and fact thirteen hold." in prompt:
            # whole-document expansion carries <C14>; the clipped one does not
            return "[10-11]" if "<C14>" in prompt else "[7-8]"
        if "Fact seven holds." in prompt:
            return "[9-0]\n[7-7]"
        if "Alpha statement." in prompt:
            return "No relevant information"
        raise RuntimeError(f"unmatched extraction prompt: {prompt[:80]!r}")
    if "[Existing Answer Start]" in prompt:
        return GOLDEN_COARSE if "Fact zero." in prompt else ALPHA_COARSE
    if "propose 5" in prompt or "请根据" in prompt:
        return QUESTIONS_RESPONSE
    if prompt.startswith("Fact zero."):
        return GOLDEN_ANSWER
    if prompt.startswith("Alpha one."):
        return ALPHA_ANSWER
    raise RuntimeError(f"unmatched pipeline prompt: {prompt[:80]!r}")


BENCH_RECORDS = [
    {
        "id": "b1",
        "dataset": "hotpotqa",
        "context": (
            "Paris is the capital of France. Berlin is the capital of Germany. "
            "Rome is the capital of Italy."
        ),
        "query": "What is the capital of France?",
        "groundtruths": ["Paris"],
        "scale": "qa3",
    },
    {
        "id": "b2",
        "dataset": "hotpotqa",
        "context": (
            "The river flows north. The dam was built in 1970. "
            "Fish returned in 1995."
        ),
        "query": "When was the dam built?",
        "groundtruths": ["1970"],
        "scale": "qa3",
    },
    {
        "id": "b3",
        "dataset": "govreport",
        "context": (
            "The agency reviewed programs. Several lagged schedule. Costs grew."
        ),
        "query": "Summarize the report.",
        "groundtruths": ["Programs lag and costs grow."],
        "scale": "summ5",
    },
]

BENCH_ANSWERS = {
    "What is the capital of France?": (
        "<statement>Paris is the capital of France.<cite>[0-0]</cite></statement>"
    ),
    "When was the dam built?": (
        "<statement>The dam was built in 1970.<cite>[1-1]</cite></statement>"
        "<statement>So it is decades old.<cite></cite></statement>"
    ),
    "Summarize the report.": (
        "<statement>The agency reviewed programs and several lagged."
        "<cite>[0-1]</cite></statement>"
    ),
}

VANILLA_ANSWERS = {
    "b1": "Paris.",
    "b2": "It was built in 1970.",
    "b3": "Programs lag and costs grow.",
}


def bench_script(request) -> str:
    prompt = request.last_content()
    for question, markup in BENCH_ANSWERS.items():
        if question in prompt:
            return markup
    raise RuntimeError(f"unmatched bench prompt: {prompt[:80]!r}")


def judge_script(request) -> str:
    prompt = request.last_content()
    if "Need Citation" in prompt:
        return "Need Citation: [[No]] Analysis: functional sentence."
    if "whether this statement is supported" in prompt:
        return "Rating: [[Fully supported]] Analysis: aligned."
    if "contains some key information" in prompt:
        return "Rating: [[Relevant]] Analysis: on point."
    if "integer rating in 1, 2, 3" in prompt:
        return "[[3]]"
    if "scale of 1 to 5" in prompt:
        return "[[4]]"
    if "from 1 to 10" in prompt:
        return "[[8]]"
    raise RuntimeError(f"unmatched judge prompt: {prompt[:80]!r}")


def make_pipeline_fixtures() -> None:
    transcript = Transcript()
    backend = RecordingBackend(FunctionBackend(pipeline_script), transcript)
    backends = Backends(chat=backend, embed=None)
    cfg = PipelineConfig(chunk_size=CHUNK_SIZE)

    golden = run_pipeline(GOLDEN_DOC, cfg, backends, rng_seed=SEED, document_id="doc-001")
    assert isinstance(golden, CitedInstance), golden
    spans = [
        [[s.start, s.end] for s in st.citations]
        for st in golden.annotated_answer.statements
    ]
    assert spans == [[], [[10, 13]], [[7, 7]]] + [[]], spans
    assert golden.provenance.chat_calls == 6

    alpha = run_pipeline(ALPHA_DOC, cfg, backends, rng_seed=SEED, document_id="doc-002")
    assert isinstance(alpha, Discarded) and alpha.stage == "filter", alpha

    transcript.save(DATA / "pipeline_transcript.jsonl")
    (DATA / "golden_instance.json").write_text(
        json.dumps(instance_row(golden, "golden"), sort_keys=True, ensure_ascii=False, indent=2)
        + "\n",
        encoding="utf-8",
    )
    with open(DATA / "corpus.jsonl", "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"id": "doc-001", "text": GOLDEN_DOC}) + "\n")
        fh.write(json.dumps({"id": "doc-002", "text": ALPHA_DOC}) + "\n")


def make_bench_fixtures() -> None:
    with open(DATA / "bench.jsonl", "w", encoding="utf-8") as fh:
        for record in BENCH_RECORDS:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    with open(DATA / "vanilla_responses.jsonl", "w", encoding="utf-8") as fh:
        for rid, answer in VANILLA_ANSWERS.items():
            fh.write(json.dumps({"id": rid, "plain_answer": answer}) + "\n")

    answers_transcript = Transcript()
    chat = RecordingBackend(FunctionBackend(bench_script), answers_transcript)
    cfg = StrategyConfig(chunk_size=CHUNK_SIZE)
    markups = {}
    for record in BENCH_RECORDS:
        context = build_context(record["context"], chunk_size=CHUNK_SIZE)
        output = run_strategy(
            StrategyId.LAC_S, context, record["query"], cfg, Backends(chat=chat)
        )
        markups[record["id"]] = serialize_annotated(output.response)
    answers_transcript.save(DATA / "bench_answers_transcript.jsonl")

    judge_transcript = Transcript()
    judge = RecordingBackend(FunctionBackend(judge_script), judge_transcript)
    from citeqa.citemark import Granularity
    from citeqa.metrics import CorrectnessScale

    for record in BENCH_RECORDS:
        context = build_context(record["context"], chunk_size=CHUNK_SIZE)
        parsed, _ = parse_annotated(
            markups[record["id"]], Granularity.SENTENCE, context.n_sentences - 1
        )
        score_citations(parsed, context, record["query"], judge)
        scale = CorrectnessScale.from_name(record["scale"])
        judge_correctness(
            scale, record["query"], record["groundtruths"], markups[record["id"]], judge
        )
        judge_correctness(
            scale,
            record["query"],
            record["groundtruths"],
            VANILLA_ANSWERS[record["id"]],
            judge,
        )
    judge_transcript.save(DATA / "judge_transcript.jsonl")


def make_config() -> None:
    (DATA / "config.yaml").write_text(
        "version: 1\n"
        "pipeline:\n"
        f"  chunk_size: {CHUNK_SIZE}\n"
        "run:\n"
        f"  seed: {SEED}\n",
        encoding="utf-8",
    )


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    make_pipeline_fixtures()
    make_bench_fixtures()
    make_config()
    print(f"fixtures written to {DATA}")


if __name__ == "__main__":
    main()
