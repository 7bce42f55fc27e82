#!/usr/bin/env python3
"""Run the whole offline flow against the shipped transcripts.

Produces instances, responses, metrics, and a Markdown report under
``demo_out/`` without any network access. Useful as a smoke check and as a
worked example of the CLI surface.
"""

from __future__ import annotations

import sys
from pathlib import Path

from citeqa.cli import main

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"
OUT = Path("demo_out")


def run() -> int:
    OUT.mkdir(exist_ok=True)
    steps = [
        [
            "generate",
            "--input", str(DATA / "corpus.jsonl"),
            "--output", str(OUT / "instances.jsonl"),
            "--discarded", str(OUT / "discarded.jsonl"),
            "--config", str(DATA / "config.yaml"),
            "--seed", "7",
            "--mock-transcript", str(DATA / "pipeline_transcript.jsonl"),
        ],
        [
            "answer",
            "--input", str(DATA / "bench.jsonl"),
            "--output", str(OUT / "responses.jsonl"),
            "--strategy", "lac-s",
            "--config", str(DATA / "config.yaml"),
            "--mock-transcript", str(DATA / "bench_answers_transcript.jsonl"),
        ],
        [
            "evaluate",
            "--input", str(DATA / "bench.jsonl"),
            "--responses", str(OUT / "responses.jsonl"),
            "--output", str(OUT / "metrics.json"),
            "--vanilla-responses", str(DATA / "vanilla_responses.jsonl"),
            "--judge-cache", str(OUT / "judge_cache.jsonl"),
            "--config", str(DATA / "config.yaml"),
            "--mock-transcript", str(DATA / "judge_transcript.jsonl"),
        ],
        [
            "report",
            "--metrics", str(OUT / "metrics.json"),
            "--output", str(OUT / "report.md"),
        ],
    ]
    for step in steps:
        code = main(step)
        if code != 0:
            print(f"step {step[0]} failed with exit code {code}", file=sys.stderr)
            return code
    print(f"\nartifacts written to {OUT.resolve()}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
