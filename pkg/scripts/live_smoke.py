#!/usr/bin/env python3
"""Optional live-mode spot check against any OpenAI-compatible endpoint.

Runs one answering strategy over a small 5-record benchmark slice, then the
judge-based evaluation, and prints the resulting table. No numeric values
are asserted; this only verifies the live plumbing end to end.

Environment:
    CITEQA_BASE_URL   chat completions base URL (e.g. https://host/v1)
    CITEQA_MODEL      model name for answering
    CITEQA_JUDGE_MODEL  model name for judging (defaults to CITEQA_MODEL)
    CITEQA_API_KEY    bearer token (optional for local servers)

Usage:
    python scripts/live_smoke.py [--strategy lac-s] [--input slice.jsonl]
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from citeqa.cli import main

SLICE = [
    {
        "id": "live-1",
        "dataset": "hotpotqa",
        "context": (
            "The Halvorsen Bridge crosses the Miren River just south of the old "
            "customs house. It was completed in 1911 after four years of work. "
            "The bridge replaced a rope ferry that had operated since the 1840s. "
            "A major renovation in 1987 widened the deck for modern traffic. "
            "Today the bridge carries both a regional road and a walking path."
        ),
        "query": "When was the Halvorsen Bridge completed, and what did it replace?",
        "groundtruths": ["It was completed in 1911 and replaced a rope ferry."],
        "scale": "qa3",
    },
    {
        "id": "live-2",
        "dataset": "hotpotqa",
        "context": (
            "Marta Eklund founded the observatory on Brae Hill in 1923. "
            "Her sister Ingrid managed its finances for two decades. "
            "The main telescope was donated by a shipping magnate from Oslo. "
            "The observatory closed during the war and reopened in 1948. "
            "It now operates as a teaching facility for the regional university."
        ),
        "query": "Who founded the Brae Hill observatory and when did it reopen?",
        "groundtruths": ["Marta Eklund founded it; it reopened in 1948."],
        "scale": "qa3",
    },
    {
        "id": "live-3",
        "dataset": "govreport",
        "context": (
            "The audit reviewed twelve municipal water systems. Seven systems met "
            "all federal quality standards. Three systems reported aging pipe "
            "networks beyond their service life. Two systems lacked certified "
            "operators for night shifts. The audit recommends a replacement "
            "schedule and a shared certification program. Funding options include "
            "state grants and a regional bond measure."
        ),
        "query": "Summarize the audit findings and recommendations.",
        "groundtruths": [
            "Seven of twelve systems met standards; aging pipes and missing "
            "certified operators were the main gaps; the audit recommends a "
            "replacement schedule, shared certification, and grant or bond funding."
        ],
        "scale": "summ5",
    },
    {
        "id": "live-4",
        "dataset": "multifieldqa-en",
        "context": (
            "Glassblowing arrived in the valley with Venetian craftsmen in the "
            "seventeenth century. The first furnace stood beside the mill race. "
            "Local sand proved too coarse, so raw material was imported by barge. "
            "By 1800 the workshops employed over two hundred artisans. Cheap "
            "machine-made glass ended the trade within a single generation."
        ),
        "query": "Why did the valley workshops import their raw material?",
        "groundtruths": ["Local sand was too coarse for glassmaking."],
        "scale": "qa3",
    },
    {
        "id": "live-5",
        "dataset": "multifieldqa-en",
        "context": (
            "The coastal railway opened in stages between 1899 and 1906. "
            "Landslides closed the Kettle Cove section twice in its first decade. "
            "A sea wall built in 1914 finally stabilized the route. Passenger "
            "service ended in 1962, but freight trains still run weekly. "
            "A heritage society maintains the original signal box at Kettle Cove."
        ),
        "query": "What stabilized the Kettle Cove section of the railway?",
        "groundtruths": ["A sea wall built in 1914."],
        "scale": "qa3",
    },
]


def build_config(path: Path) -> None:
    base_url = os.environ.get("CITEQA_BASE_URL", "")
    model = os.environ.get("CITEQA_MODEL", "")
    judge_model = os.environ.get("CITEQA_JUDGE_MODEL", model)
    if not base_url or not model:
        print(
            "live mode needs CITEQA_BASE_URL and CITEQA_MODEL set "
            "(and usually CITEQA_API_KEY)",
            file=sys.stderr,
        )
        raise SystemExit(2)
    path.write_text(
        json.dumps(
            {
                "version": 1,
                "backends": {
                    "chat": {"base_url": base_url, "model": model},
                    "judge": {"base_url": base_url, "model": judge_model},
                    "embedding": {"kind": "hash", "dimension": 64},
                },
            }
        ),
        encoding="utf-8",
    )


def run() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--strategy", default="lac-s")
    parser.add_argument("--input", help="benchmark slice JSONL (default: built-in)")
    parser.add_argument("--out", default="live_out")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(exist_ok=True)
    config_path = out / "live_config.yaml"
    build_config(config_path)
    if args.input:
        slice_path = Path(args.input)
    else:
        slice_path = out / "slice.jsonl"
        with open(slice_path, "w", encoding="utf-8") as fh:
            for row in SLICE:
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")

    code = main(
        [
            "answer",
            "--input", str(slice_path),
            "--output", str(out / "responses.jsonl"),
            "--strategy", args.strategy,
            "--config", str(config_path),
        ]
    )
    if code != 0:
        return code
    code = main(
        [
            "evaluate",
            "--input", str(slice_path),
            "--responses", str(out / "responses.jsonl"),
            "--output", str(out / "metrics.json"),
            "--judge-cache", str(out / "judge_cache.jsonl"),
            "--config", str(config_path),
        ]
    )
    if code != 0:
        return code
    return main(["report", "--metrics", str(out / "metrics.json")])


if __name__ == "__main__":
    sys.exit(run())
