"""Operator-facing command line.

Verbs:

* ``generate``  - run the full coarse-to-fine pipeline over a document corpus
* ``annotate``  - add sentence citations to existing (context, query, answer)
* ``answer``    - run a named strategy over a benchmark file
* ``evaluate``  - score responses (citation quality + correctness)
* ``report``    - render a metrics JSON into a Markdown table

All verbs are resumable (completed ids are skipped via the existing output
file), seeded, and runnable fully offline with ``--mock-transcript``. Every
emitted record embeds the run id of the manifest that produced it.

Exit codes: 0 ok, 1 partial failures, 2 config or I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import yaml

from . import __version__
from .citemark import Granularity, parse_annotated, serialize_annotated
from .metrics import (
    DATASET_SCALES,
    CorrectnessScale,
    JudgeParseError,
    MetricReport,
    OutOfScaleRating,
    ResponseMetrics,
    aggregate,
    judge_correctness,
    normalized_correctness,
    render_markdown,
    score_citations,
)
from .modelgate import (
    Backends,
    CachedChatBackend,
    DiskCache,
    HashEmbeddingBackend,
    RemoteChatBackend,
    RemoteConfig,
    RemoteEmbeddingBackend,
    Transcript,
    TranscriptBackend,
)
from .pipeline import (
    CitedInstance,
    Discarded,
    PipelineConfig,
    annotate_answer,
    run_pipeline,
)
from .prompts import DEFAULT_PROMPTS
from .retrieval import Scorer
from .strategies import StrategyConfig, StrategyId, run_strategy
from .textseg import DEFAULT_COUNTER, Language, build_context

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2

CONFIG_VERSION = 1

DEFAULT_CONFIG: dict[str, Any] = {
    "version": CONFIG_VERSION,
    "pipeline": {
        "chunk_size": 128,
        "l_max": 10,
        "k": 40,
        "min_cited_fraction": 0.2,
        "question_fanout": 5,
    },
    "retrieval": {"scorer": "lexical-overlap"},
    "backends": {
        "chat": {"base_url": "", "model": "", "api_key_env": "CITEQA_API_KEY"},
        "judge": {"base_url": "", "model": "", "api_key_env": "CITEQA_API_KEY"},
        "embedding": {"kind": "hash", "dimension": 64, "base_url": "", "model": ""},
    },
    "run": {"seed": 0, "parallelism": 1},
}


class ConfigError(Exception):
    pass


class Unreadable(Exception):
    pass


class EmptyDataset(Exception):
    pass


def _deep_merge(base: dict, override: dict) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(path: str | None) -> dict:
    if path is None:
        return json.loads(json.dumps(DEFAULT_CONFIG))
    try:
        with open(path, encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(loaded, dict):
        raise ConfigError("config root must be a mapping")
    version = loaded.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version}")
    return _deep_merge(DEFAULT_CONFIG, loaded)


# ---------------------------------------------------------------------------
# Dataset ingestion
# ---------------------------------------------------------------------------


@dataclass
class DatasetRecord:
    id: str
    dataset: str
    context: str
    query: str
    groundtruths: list[str] = field(default_factory=list)
    scale: str | None = None
    language: str | None = None
    few_shot: list[tuple[str, int]] = field(default_factory=list)

    def correctness_scale(self) -> CorrectnessScale | None:
        if self.scale:
            return CorrectnessScale.from_name(self.scale)
        return DATASET_SCALES.get(self.dataset.lower())


def ingest(path: str | Path, fmt: str = "jsonl") -> tuple[list[DatasetRecord], list[str]]:
    """Read benchmark records; malformed lines become diagnostics with line
    numbers and the run continues."""
    if fmt != "jsonl":
        raise ConfigError(f"unsupported dataset format {fmt!r}")
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise Unreadable(f"cannot read dataset {path}: {exc}") from exc
    records: list[DatasetRecord] = []
    diagnostics: list[str] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            few_shot = [
                (item["answer"], int(item["rating"]))
                for item in row.get("few_shot", [])
            ]
            record = DatasetRecord(
                id=str(row["id"]),
                dataset=str(row.get("dataset", "default")),
                context=row["context"],
                query=row["query"],
                groundtruths=[str(g) for g in row.get("groundtruths", [])],
                scale=row.get("scale"),
                language=row.get("language"),
                few_shot=few_shot,
            )
            if not record.context or not record.query:
                raise ValueError("context and query must be non-empty")
            if record.scale:
                explicit = CorrectnessScale.from_name(record.scale)
                family = DATASET_SCALES.get(record.dataset.lower())
                if family is not None and family is not explicit:
                    raise ValueError(
                        f"scale {record.scale!r} contradicts dataset "
                        f"{record.dataset!r} ({family.value[0]})"
                    )
            records.append(record)
        except (KeyError, ValueError, TypeError) as exc:
            diagnostics.append(f"line {lineno}: {exc}")
    if not records and not diagnostics:
        raise EmptyDataset(f"{path} contains no records")
    return records, diagnostics


# ---------------------------------------------------------------------------
# Manifests and resumable JSONL output
# ---------------------------------------------------------------------------


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def make_manifest(command: str, config: dict, input_path: str | Path, seed: int) -> dict:
    core = {
        "command": command,
        "config": config,
        "counter": DEFAULT_COUNTER.name,
        "input_digest": file_digest(input_path),
        "prompt_hashes": DEFAULT_PROMPTS.hashes(),
        "seed": seed,
    }
    run_id = hashlib.sha256(
        json.dumps(core, sort_keys=True, ensure_ascii=False).encode("utf-8")
    ).hexdigest()[:16]
    manifest = dict(core)
    manifest["run_id"] = run_id
    manifest["tool_version"] = __version__
    manifest["created_at"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    return manifest


def write_manifest(manifest: dict, output_path: str | Path) -> None:
    sidecar = Path(str(output_path) + ".manifest.json")
    sidecar.write_text(
        json.dumps(manifest, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def load_completed_ids(path: Path) -> set[str]:
    """Ids already present in the output file; a torn trailing line (from an
    interrupted run) is dropped so its record gets reprocessed."""
    if not path.exists():
        return set()
    valid_lines: list[str] = []
    ids: set[str] = set()
    torn = False
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                ids.add(str(row["id"]))
                valid_lines.append(line if line.endswith("\n") else line + "\n")
            except (ValueError, KeyError):
                torn = True
    if torn:
        path.write_text("".join(valid_lines), encoding="utf-8")
    return ids


def dump_row(row: dict) -> str:
    return json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n"


def _for_each_record(
    items: Sequence,
    worker: Callable,
    parallelism: int,
) -> list:
    """Apply ``worker`` to every item; results come back in input order so
    output files are byte-stable regardless of scheduling."""
    if parallelism <= 1:
        return [worker(item) for item in items]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        futures = [pool.submit(worker, item) for item in items]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# Backend wiring
# ---------------------------------------------------------------------------


def build_backends(config: dict, mock_transcript: str | None, judge_cache: str | None) -> Backends:
    if mock_transcript:
        transcript = Transcript.load(mock_transcript)
        chat = TranscriptBackend(transcript, strict=True)
        judge = chat
        embed = HashEmbeddingBackend(
            dimension=int(config["backends"]["embedding"].get("dimension", 64))
        )
    else:
        chat_cfg = config["backends"]["chat"]
        if not chat_cfg.get("base_url"):
            raise ConfigError(
                "no chat backend configured; set backends.chat.base_url or use "
                "--mock-transcript"
            )
        chat = RemoteChatBackend(
            RemoteConfig(
                base_url=chat_cfg["base_url"],
                model=chat_cfg.get("model", ""),
                api_key_env=chat_cfg.get("api_key_env", "CITEQA_API_KEY"),
            )
        )
        judge_cfg = config["backends"].get("judge") or chat_cfg
        if judge_cfg.get("base_url"):
            judge = RemoteChatBackend(
                RemoteConfig(
                    base_url=judge_cfg["base_url"],
                    model=judge_cfg.get("model", ""),
                    api_key_env=judge_cfg.get("api_key_env", "CITEQA_API_KEY"),
                )
            )
        else:
            judge = chat
        embed_cfg = config["backends"]["embedding"]
        if embed_cfg.get("kind", "hash") == "remote":
            embed = RemoteEmbeddingBackend(
                RemoteConfig(
                    base_url=embed_cfg["base_url"],
                    model=embed_cfg.get("model", ""),
                    api_key_env=embed_cfg.get("api_key_env", "CITEQA_API_KEY"),
                )
            )
        else:
            embed = HashEmbeddingBackend(dimension=int(embed_cfg.get("dimension", 64)))
    if judge_cache:
        judge = CachedChatBackend(judge, DiskCache(judge_cache))
    return Backends(chat=chat, embed=embed, judge=judge)


def pipeline_config(config: dict) -> PipelineConfig:
    p = config["pipeline"]
    return PipelineConfig(
        chunk_size=int(p["chunk_size"]),
        l_max=int(p["l_max"]),
        k=int(p["k"]),
        min_cited_fraction=float(p["min_cited_fraction"]),
        question_fanout=int(p["question_fanout"]),
        scorer=Scorer(config["retrieval"]["scorer"]),
    )


def strategy_config(config: dict) -> StrategyConfig:
    p = config["pipeline"]
    return StrategyConfig(
        chunk_size=int(p["chunk_size"]),
        l_max=int(p["l_max"]),
        k=int(p["k"]),
        scorer=Scorer(config["retrieval"]["scorer"]),
        window_tokens=p.get("window_tokens"),
    )


# ---------------------------------------------------------------------------
# Record serialization
# ---------------------------------------------------------------------------


def instance_row(instance: CitedInstance, run_id: str) -> dict:
    return {
        "id": instance.provenance.document_id,
        "run_id": run_id,
        "instruction": instance.instruction,
        "context": instance.context,
        "query": instance.query,
        "answer_markup": serialize_annotated(instance.annotated_answer),
        "granularity": instance.annotated_answer.granularity.value,
        "statements": [
            {
                "text": s.text,
                "citations": [[span.start, span.end] for span in s.citations],
            }
            for s in instance.annotated_answer.statements
        ],
        "provenance": asdict(instance.provenance),
    }


def discarded_row(discarded: Discarded, run_id: str) -> dict:
    return {
        "id": discarded.document_id,
        "run_id": run_id,
        "stage": discarded.stage,
        "reason": discarded.reason,
    }


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _read_corpus(path: str, required: tuple[str, ...] = ("text",)) -> tuple[list[dict], list[str]]:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise Unreadable(f"cannot read corpus {path}: {exc}") from exc
    docs, diagnostics = [], []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            if "id" not in row:
                raise ValueError("missing 'id'")
            for name in required:
                if not row.get(name):
                    raise ValueError(f"need non-empty {name!r}")
            docs.append(row)
        except (ValueError, KeyError) as exc:
            diagnostics.append(f"line {lineno}: {exc}")
    if not docs and not diagnostics:
        raise EmptyDataset(f"{path} contains no documents")
    return docs, diagnostics


def _language_of(row: dict) -> Language | None:
    name = row.get("language")
    if not name:
        return None
    return {"en": Language.ENGLISH, "zh": Language.CHINESE, "mixed": Language.MIXED}[
        str(name).lower()
    ]


def cmd_generate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    seed = args.seed if args.seed is not None else int(config["run"]["seed"])
    parallelism = args.parallelism or int(config["run"]["parallelism"])
    cfg = pipeline_config(config)
    backends = build_backends(config, args.mock_transcript, None)
    required = ("text", "query", "answer") if args.annotate_mode else ("text",)
    docs, diagnostics = _read_corpus(args.input, required)
    for diag in diagnostics:
        logger.error("corpus %s", diag)
    manifest = make_manifest("generate" if not args.annotate_mode else "annotate", config, args.input, seed)
    run_id = manifest["run_id"]
    output = Path(args.output)
    output.parent.mkdir(parents=True, exist_ok=True)
    write_manifest(manifest, output)
    done = load_completed_ids(output)
    discarded_path = Path(args.discarded) if args.discarded else None
    discarded_done = load_completed_ids(discarded_path) if discarded_path else set()
    pending = [
        d for d in docs if str(d["id"]) not in done and str(d["id"]) not in discarded_done
    ]

    def work(doc: dict):
        try:
            if args.annotate_mode:
                return annotate_answer(
                    doc["text"],
                    doc["query"],
                    doc["answer"],
                    cfg,
                    backends,
                    document_id=str(doc["id"]),
                    language=_language_of(doc),
                    seed=str(seed),
                )
            return run_pipeline(
                doc["text"],
                cfg,
                backends,
                rng_seed=seed,
                document_id=str(doc["id"]),
                language=_language_of(doc),
            )
        except Exception as exc:  # record-level isolation: the run continues
            logger.error("document %s failed: %s", doc["id"], exc)
            return Discarded(str(doc["id"]), "error", str(exc))

    results = _for_each_record(pending, work, parallelism)
    failures = sum(
        1 for r in results if isinstance(r, Discarded) and r.stage == "error"
    )
    with open(output, "a", encoding="utf-8") as out_fh:
        discarded_fh = (
            open(discarded_path, "a", encoding="utf-8") if discarded_path else None
        )
        try:
            for result in results:
                if isinstance(result, CitedInstance):
                    out_fh.write(dump_row(instance_row(result, run_id)))
                    out_fh.flush()
                else:
                    row = dump_row(discarded_row(result, run_id))
                    logger.info("discarded %s (%s)", result.document_id, result.stage)
                    if discarded_fh:
                        discarded_fh.write(row)
                        discarded_fh.flush()
        finally:
            if discarded_fh:
                discarded_fh.close()
    kept = sum(1 for r in results if isinstance(r, CitedInstance))
    print(f"generate: {kept} instances kept, {len(results) - kept} discarded, run {run_id}")
    if diagnostics or failures:
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_answer(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    seed = args.seed if args.seed is not None else int(config["run"]["seed"])
    parallelism = args.parallelism or int(config["run"]["parallelism"])
    cfg = strategy_config(config)
    strategy = StrategyId.from_name(args.strategy)
    backends = build_backends(config, args.mock_transcript, None)
    records, diagnostics = ingest(args.input)
    for diag in diagnostics:
        logger.error("dataset %s", diag)
    manifest = make_manifest(f"answer:{strategy.value}", config, args.input, seed)
    run_id = manifest["run_id"]
    output = Path(args.output)
    output.parent.mkdir(parents=True, exist_ok=True)
    write_manifest(manifest, output)
    done = load_completed_ids(output)
    pending = [r for r in records if r.id not in done]

    def work(record: DatasetRecord):
        try:
            context = build_context(record.context, chunk_size=cfg.chunk_size)
            return record, run_strategy(strategy, context, record.query, cfg, backends)
        except Exception as exc:  # record-level isolation: the run continues
            logger.error("record %s failed: %s", record.id, exc)
            return record, None

    failures = 0
    rows = []
    for item in _for_each_record(pending, work, parallelism):
        record, result = item
        if result is None:
            failures += 1
            continue
        rows.append(
            {
                "id": record.id,
                "run_id": run_id,
                "dataset": record.dataset,
                "strategy": strategy.value,
                "granularity": result.granularity.value,
                "response_markup": serialize_annotated(result.response),
                "plain_answer": result.plain_answer,
                "calls": result.calls,
                "warnings": list(result.warnings),
            }
        )
    with open(output, "a", encoding="utf-8") as fh:
        for row in rows:
            fh.write(dump_row(row))
    print(f"answer[{strategy.value}]: {len(rows)} responses, run {run_id}")
    return EXIT_PARTIAL if (diagnostics or failures) else EXIT_OK


def _load_responses(path: str) -> dict[str, dict]:
    responses = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                row = json.loads(line)
                responses[str(row["id"])] = row
    return responses


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    seed = args.seed if args.seed is not None else int(config["run"]["seed"])
    parallelism = args.parallelism or int(config["run"]["parallelism"])
    chunk_size = int(config["pipeline"]["chunk_size"])
    backends = build_backends(config, args.mock_transcript, args.judge_cache)
    judge = backends.judge_or_chat()
    records, diagnostics = ingest(args.input)
    for diag in diagnostics:
        logger.error("dataset %s", diag)
    responses = _load_responses(args.responses)
    vanilla = _load_responses(args.vanilla_responses) if args.vanilla_responses else {}
    manifest = make_manifest("evaluate", config, args.responses, seed=seed)
    run_id = manifest["run_id"]
    scored_records = [r for r in records if r.id in responses]
    missing = [r.id for r in records if r.id not in responses]
    for rid in missing:
        logger.warning("no response for record %s; skipped", rid)

    def work(record: DatasetRecord) -> ResponseMetrics | None:
        try:
            return _score_record(record)
        except Exception as exc:  # record-level isolation: the run continues
            logger.error("scoring %s failed: %s", record.id, exc)
            return None

    def _score_record(record: DatasetRecord) -> ResponseMetrics:
        row = responses[record.id]
        context = build_context(record.context, chunk_size=chunk_size)
        granularity = Granularity(row.get("granularity", "sentence"))
        max_index = (
            context.n_sentences - 1
            if granularity is Granularity.SENTENCE
            else context.n_chunks - 1
        )
        parsed, _ = parse_annotated(row["response_markup"], granularity, max_index)
        score = score_citations(parsed, context, record.query, judge)
        correctness = None
        correctness_vanilla = None
        scale = record.correctness_scale()
        if scale and record.groundtruths:
            try:
                rating = judge_correctness(
                    scale,
                    record.query,
                    record.groundtruths,
                    row["response_markup"],
                    judge,
                    few_shot=record.few_shot,
                )
                correctness = normalized_correctness(rating, scale)
            except (JudgeParseError, OutOfScaleRating) as exc:
                logger.warning("correctness judging failed for %s: %s", record.id, exc)
            vanilla_row = vanilla.get(record.id)
            if vanilla_row:
                try:
                    rating = judge_correctness(
                        scale,
                        record.query,
                        record.groundtruths,
                        vanilla_row.get("plain_answer") or vanilla_row["response_markup"],
                        judge,
                        few_shot=record.few_shot,
                    )
                    correctness_vanilla = normalized_correctness(rating, scale)
                except (JudgeParseError, OutOfScaleRating) as exc:
                    logger.warning("vanilla judging failed for %s: %s", record.id, exc)
        return ResponseMetrics(
            id=record.id,
            dataset=record.dataset,
            recall=score.recall,
            precision=score.precision,
            f1=score.f1,
            citation_length=score.citation_length,
            n_statements=score.n_statements,
            n_citations=score.n_citations,
            judge_failures=score.judge_failures,
            correctness=correctness,
            correctness_vanilla=correctness_vanilla,
        )

    scored = _for_each_record(scored_records, work, parallelism)
    failures = sum(1 for r in scored if r is None)
    per_response = [r for r in scored if r is not None]
    if not per_response:
        logger.error("no scoreable responses (dataset/responses mismatch?)")
        return EXIT_CONFIG
    report = aggregate(per_response, counter_name=DEFAULT_COUNTER.name)
    payload = {
        "run_id": run_id,
        "counter": report.counter_name,
        "datasets": {name: asdict(agg) for name, agg in report.datasets.items()},
        "average": asdict(report.average) if report.average else None,
        "per_response": [asdict(r) for r in report.per_response],
    }
    output = Path(args.output)
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(
        json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )
    write_manifest(manifest, output)
    if isinstance(judge, CachedChatBackend):
        print(f"evaluate: judge cache hits={judge.hits} misses={judge.misses}")
    print(f"evaluate: {len(per_response)} responses scored, run {run_id}")
    return EXIT_PARTIAL if (diagnostics or missing or failures) else EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    try:
        payload = json.loads(Path(args.metrics).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        logger.error("cannot read metrics: %s", exc)
        return EXIT_CONFIG
    from .metrics import DatasetAggregate

    report = MetricReport(counter_name=payload.get("counter", "unknown"))
    for name, agg in payload.get("datasets", {}).items():
        report.datasets[name] = DatasetAggregate(**agg)
    if payload.get("average"):
        report.average = DatasetAggregate(**payload["average"])
    markdown = render_markdown(report, run_id=payload.get("run_id", ""))
    if args.output:
        Path(args.output).write_text(markdown, encoding="utf-8")
    print(markdown, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML config file")
    parser.add_argument("--seed", type=int, default=None, help="run seed")
    parser.add_argument("--parallelism", type=int, default=None)
    parser.add_argument(
        "--mock-transcript", help="replay chat/judge calls from a transcript JSONL"
    )


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(
        prog="citeqa",
        description="Synthesize, answer, and evaluate long-context QA with citations",
    )
    sub = parser.add_subparsers(dest="command")

    p_generate = sub.add_parser("generate", help="run the annotation pipeline over a corpus")
    p_generate.add_argument("--input", required=True, help="corpus JSONL {id, text, language?}")
    p_generate.add_argument("--output", required=True, help="instances JSONL")
    p_generate.add_argument("--discarded", help="sidecar JSONL of rejected instances")
    _add_common(p_generate)

    p_annotate = sub.add_parser(
        "annotate", help="add citations to existing QA pairs (pipeline stages 2-4)"
    )
    p_annotate.add_argument(
        "--input", required=True, help="QA JSONL {id, text, query, answer, language?}"
    )
    p_annotate.add_argument("--output", required=True)
    p_annotate.add_argument("--discarded")
    _add_common(p_annotate)

    p_answer = sub.add_parser("answer", help="run an answering strategy over a benchmark")
    p_answer.add_argument("--input", required=True, help="benchmark JSONL")
    p_answer.add_argument("--output", required=True, help="responses JSONL")
    p_answer.add_argument(
        "--strategy",
        required=True,
        choices=[s.value for s in StrategyId],
    )
    _add_common(p_answer)

    p_evaluate = sub.add_parser("evaluate", help="score responses against a benchmark")
    p_evaluate.add_argument("--input", required=True, help="benchmark JSONL")
    p_evaluate.add_argument("--responses", required=True, help="responses JSONL")
    p_evaluate.add_argument("--output", required=True, help="metrics JSON")
    p_evaluate.add_argument(
        "--vanilla-responses", help="vanilla-QA responses for correctness ratio"
    )
    p_evaluate.add_argument("--judge-cache", help="judge cache JSONL path")
    _add_common(p_evaluate)

    p_report = sub.add_parser("report", help="render metrics JSON as Markdown")
    p_report.add_argument("--metrics", required=True)
    p_report.add_argument("--output")

    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return EXIT_CONFIG
    try:
        if args.command == "generate":
            args.annotate_mode = False
            return cmd_generate(args)
        if args.command == "annotate":
            args.annotate_mode = True
            return cmd_generate(args)
        if args.command == "answer":
            return cmd_answer(args)
        if args.command == "evaluate":
            return cmd_evaluate(args)
        if args.command == "report":
            return cmd_report(args)
    except (ConfigError, Unreadable, EmptyDataset) as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
