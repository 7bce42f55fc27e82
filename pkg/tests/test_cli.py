import json
from pathlib import Path

import pytest

from citeqa.cli import (
    EmptyDataset,
    Unreadable,
    build_backends,
    ingest,
    load_completed_ids,
    load_config,
    main,
)

from conftest import FIXTURE_SEED


def read_rows(path: Path) -> list[dict]:
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


class TestIngest:
    def test_valid_records(self, tmp_path):
        path = tmp_path / "d.jsonl"
        rows = [
            {"id": i, "dataset": "hotpotqa", "context": "c", "query": "q"}
            for i in range(3)
        ]
        path.write_text("".join(json.dumps(r) + "\n" for r in rows))
        records, diagnostics = ingest(path)
        assert len(records) == 3
        assert diagnostics == []
        assert records[0].correctness_scale() is not None

    def test_malformed_line_reported_with_number(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text(
            json.dumps({"id": 1, "context": "c", "query": "q"})
            + "\n{not json}\n"
        )
        records, diagnostics = ingest(path)
        assert len(records) == 1
        assert len(diagnostics) == 1
        assert diagnostics[0].startswith("line 2:")

    def test_empty_file(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text("")
        with pytest.raises(EmptyDataset):
            ingest(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(Unreadable):
            ingest(tmp_path / "absent.jsonl")

    def test_unknown_scale_is_diagnostic(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text(
            json.dumps({"id": 1, "context": "c", "query": "q", "scale": "weird"}) + "\n"
        )
        records, diagnostics = ingest(path)
        assert records == []
        assert len(diagnostics) == 1

    def test_scale_contradicting_dataset_family_is_diagnostic(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text(
            json.dumps(
                {"id": 1, "dataset": "govreport", "context": "c", "query": "q", "scale": "qa3"}
            )
            + "\n"
        )
        records, diagnostics = ingest(path)
        assert records == []
        assert "contradicts" in diagnostics[0]

    def test_custom_dataset_with_explicit_scale_accepted(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text(
            json.dumps(
                {"id": 1, "dataset": "mybench", "context": "c", "query": "q", "scale": "summ5"}
            )
            + "\n"
        )
        records, diagnostics = ingest(path)
        assert len(records) == 1
        assert diagnostics == []


class TestLoadConfig:
    def test_defaults_without_file(self):
        config = load_config(None)
        assert config["pipeline"]["chunk_size"] == 128
        assert config["pipeline"]["l_max"] == 10
        assert config["pipeline"]["k"] == 40
        assert config["pipeline"]["min_cited_fraction"] == 0.2

    def test_partial_file_merges_defaults(self, data_dir):
        config = load_config(str(data_dir / "config.yaml"))
        assert config["pipeline"]["chunk_size"] == 10
        assert config["pipeline"]["k"] == 40
        assert config["run"]["seed"] == FIXTURE_SEED


class TestBuildBackends:
    def test_mock_transcript_wires_replay_and_hash_embeddings(self, data_dir):
        from citeqa.modelgate import HashEmbeddingBackend, TranscriptBackend

        backends = build_backends(
            load_config(None), str(data_dir / "judge_transcript.jsonl"), None
        )
        assert isinstance(backends.chat, TranscriptBackend)
        assert backends.judge is backends.chat
        assert isinstance(backends.embed, HashEmbeddingBackend)

    def test_remote_wiring_with_cache(self, tmp_path):
        from citeqa.modelgate import (
            CachedChatBackend,
            RemoteChatBackend,
            RemoteEmbeddingBackend,
        )

        config = load_config(None)
        config["backends"]["chat"]["base_url"] = "http://chat.example"
        config["backends"]["judge"]["base_url"] = "http://judge.example"
        config["backends"]["embedding"] = {
            "kind": "remote",
            "base_url": "http://embed.example",
            "model": "emb-1",
        }
        backends = build_backends(config, None, str(tmp_path / "cache.jsonl"))
        assert isinstance(backends.chat, RemoteChatBackend)
        assert isinstance(backends.judge, CachedChatBackend)
        assert isinstance(backends.judge.inner, RemoteChatBackend)
        assert isinstance(backends.embed, RemoteEmbeddingBackend)

    def test_no_backend_at_all_is_config_error(self):
        from citeqa.cli import ConfigError

        with pytest.raises(ConfigError):
            build_backends(load_config(None), None, None)


class TestLoadCompletedIds:
    def test_torn_trailing_line_dropped(self, tmp_path):
        path = tmp_path / "out.jsonl"
        path.write_text('{"id": "a", "x": 1}\n{"id": "b", "x"')
        assert load_completed_ids(path) == {"a"}
        # the torn line was removed from the file
        assert path.read_text() == '{"id": "a", "x": 1}\n'


def _generate_args(data_dir, out_dir, output="instances.jsonl"):
    return [
        "generate",
        "--input", str(data_dir / "corpus.jsonl"),
        "--output", str(out_dir / output),
        "--discarded", str(out_dir / "discarded.jsonl"),
        "--config", str(data_dir / "config.yaml"),
        "--seed", str(FIXTURE_SEED),
        "--mock-transcript", str(data_dir / "pipeline_transcript.jsonl"),
    ]


class TestGenerate:
    def test_end_to_end(self, data_dir, tmp_path):
        assert main(_generate_args(data_dir, tmp_path)) == 0
        rows = read_rows(tmp_path / "instances.jsonl")
        assert len(rows) == 1
        assert rows[0]["id"] == "doc-001"
        assert rows[0]["run_id"]
        discarded = read_rows(tmp_path / "discarded.jsonl")
        assert [d["id"] for d in discarded] == ["doc-002"]
        assert discarded[0]["stage"] == "filter"
        manifest = json.loads((tmp_path / "instances.jsonl.manifest.json").read_text())
        assert manifest["run_id"] == rows[0]["run_id"]
        assert manifest["seed"] == FIXTURE_SEED

    def test_rerun_is_noop(self, data_dir, tmp_path):
        main(_generate_args(data_dir, tmp_path))
        before = (tmp_path / "instances.jsonl").read_bytes()
        assert main(_generate_args(data_dir, tmp_path)) == 0
        assert (tmp_path / "instances.jsonl").read_bytes() == before

    def test_interrupt_and_resume_matches_uninterrupted(self, data_dir, tmp_path):
        full_dir = tmp_path / "full"
        resumed_dir = tmp_path / "resumed"
        full_dir.mkdir()
        resumed_dir.mkdir()
        main(_generate_args(data_dir, full_dir))
        # simulate an interrupted run: doc-001 done, doc-002 never processed,
        # plus a torn trailing half-line
        full_lines = (full_dir / "instances.jsonl").read_text().splitlines(True)
        (resumed_dir / "instances.jsonl").write_text(full_lines[0] + '{"id": "doc-0')
        assert main(_generate_args(data_dir, resumed_dir)) == 0
        assert (resumed_dir / "instances.jsonl").read_bytes() == (
            full_dir / "instances.jsonl"
        ).read_bytes()
        assert (resumed_dir / "discarded.jsonl").read_bytes() == (
            full_dir / "discarded.jsonl"
        ).read_bytes()

    def test_determinism_across_directories(self, data_dir, tmp_path):
        dir_a = tmp_path / "a"
        dir_b = tmp_path / "b"
        dir_a.mkdir()
        dir_b.mkdir()
        main(_generate_args(data_dir, dir_a))
        main(_generate_args(data_dir, dir_b))
        assert (dir_a / "instances.jsonl").read_bytes() == (
            dir_b / "instances.jsonl"
        ).read_bytes()


def _answer_args(data_dir, out_dir):
    return [
        "answer",
        "--input", str(data_dir / "bench.jsonl"),
        "--output", str(out_dir / "responses.jsonl"),
        "--strategy", "lac-s",
        "--config", str(data_dir / "config.yaml"),
        "--mock-transcript", str(data_dir / "bench_answers_transcript.jsonl"),
    ]


def _evaluate_args(data_dir, out_dir, cache="judge_cache.jsonl"):
    return [
        "evaluate",
        "--input", str(data_dir / "bench.jsonl"),
        "--responses", str(out_dir / "responses.jsonl"),
        "--output", str(out_dir / "metrics.json"),
        "--vanilla-responses", str(data_dir / "vanilla_responses.jsonl"),
        "--judge-cache", str(out_dir / cache),
        "--config", str(data_dir / "config.yaml"),
        "--mock-transcript", str(data_dir / "judge_transcript.jsonl"),
    ]


class TestAnswerAndEvaluate:
    def test_answer_deterministic_responses(self, data_dir, tmp_path):
        assert main(_answer_args(data_dir, tmp_path)) == 0
        rows = read_rows(tmp_path / "responses.jsonl")
        assert [r["id"] for r in rows] == ["b1", "b2", "b3"]
        assert all(r["strategy"] == "lac-s" for r in rows)
        assert all(r["calls"] == 1 for r in rows)
        assert rows[0]["response_markup"] == (
            "<statement>Paris is the capital of France.<cite>[0-0]</cite></statement>"
        )

    def test_evaluate_scores_and_report(self, data_dir, tmp_path):
        main(_answer_args(data_dir, tmp_path))
        assert main(_evaluate_args(data_dir, tmp_path)) == 0
        payload = json.loads((tmp_path / "metrics.json").read_text())
        hotpot = payload["datasets"]["hotpotqa"]
        assert hotpot["recall"] == 1.0
        assert hotpot["precision"] == 1.0
        assert hotpot["f1"] == 1.0
        assert hotpot["citation_length"] == 6.0
        assert hotpot["correctness"] == 100.0
        assert hotpot["correctness_ratio"] == 100.0
        gov = payload["datasets"]["govreport"]
        assert gov["citation_length"] == 7.0
        assert gov["correctness"] == 80.0
        assert payload["average"]["citation_length"] == 6.5

        assert main(
            [
                "report",
                "--metrics", str(tmp_path / "metrics.json"),
                "--output", str(tmp_path / "report.md"),
            ]
        ) == 0
        markdown = (tmp_path / "report.md").read_text()
        assert "| hotpotqa |" in markdown
        assert "| Avg |" in markdown

    def test_warm_cache_second_run_identical_and_callfree(self, data_dir, tmp_path, capsys):
        main(_answer_args(data_dir, tmp_path))
        main(_evaluate_args(data_dir, tmp_path))
        first = (tmp_path / "metrics.json").read_bytes()
        capsys.readouterr()
        assert main(_evaluate_args(data_dir, tmp_path)) == 0
        second = (tmp_path / "metrics.json").read_bytes()
        assert first == second
        out = capsys.readouterr().out
        assert "misses=0" in out


class TestExitCodes:
    def test_missing_config_file(self, data_dir, tmp_path):
        args = _generate_args(data_dir, tmp_path)
        args[args.index("--config") + 1] = str(tmp_path / "nope.yaml")
        assert main(args) == 2

    def test_missing_input(self, data_dir, tmp_path):
        args = _generate_args(data_dir, tmp_path)
        args[args.index("--input") + 1] = str(tmp_path / "nope.jsonl")
        assert main(args) == 2

    def test_no_backend_configured(self, data_dir, tmp_path):
        args = _generate_args(data_dir, tmp_path)
        args.remove("--mock-transcript")
        args.remove(str(data_dir / "pipeline_transcript.jsonl"))
        assert main(args) == 2

    def test_partial_failure_on_malformed_corpus_line(self, data_dir, tmp_path):
        corpus = tmp_path / "corpus.jsonl"
        good = (data_dir / "corpus.jsonl").read_text().splitlines()[0]
        corpus.write_text(good + "\nnot json\n")
        args = _generate_args(data_dir, tmp_path)
        args[args.index("--input") + 1] = str(corpus)
        assert main(args) == 1

    def test_no_command_prints_help(self, capsys):
        assert main([]) == 2


class TestAnnotate:
    def test_annotate_existing_pairs(self, data_dir, tmp_path):
        # reuse the recorded stage-2/3 calls: same document, query, answer
        # as the pipeline fixture, entering at the post-hoc surface
        corpus = [
            json.loads(line)
            for line in (data_dir / "corpus.jsonl").read_text().splitlines()
        ]
        golden = json.loads((data_dir / "golden_instance.json").read_text())
        qa_file = tmp_path / "qa.jsonl"
        qa_file.write_text(
            json.dumps(
                {
                    "id": "doc-001",
                    "text": corpus[0]["text"],
                    "query": golden["query"],
                    "answer": "Intro sentence. Fact ten and fact thirteen hold. "
                    "Fact seven holds. Nothing else matters.",
                }
            )
            + "\n"
        )
        result = main(
            [
                "annotate",
                "--input", str(qa_file),
                "--output", str(tmp_path / "annotated.jsonl"),
                "--config", str(data_dir / "config.yaml"),
                "--seed", str(FIXTURE_SEED),
                "--mock-transcript", str(data_dir / "pipeline_transcript.jsonl"),
            ]
        )
        assert result == 0
        rows = read_rows(tmp_path / "annotated.jsonl")
        assert rows[0]["answer_markup"] == golden["answer_markup"]
