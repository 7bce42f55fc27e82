import pytest

from citeqa.citemark import CitationSpan, Granularity, parse_annotated, strip_citations
from citeqa.modelgate import Backends, FunctionBackend, HashEmbeddingBackend
from citeqa.pipeline import answer_preserved
from citeqa.strategies import StrategyConfig, StrategyId, run_strategy
from citeqa.textseg import build_context

CONTEXT_TEXT = (
    "The plant opened in 1960. It employed two hundred people. "
    "The plant closed in 1994. The site became a museum. "
    "Visitors arrive every summer. Tickets fund the archive."
)
QUERY = "When did the plant close?"

ONE_PASS_MARKUP = "<statement>The plant closed in 1994.<cite>[2-2]</cite></statement>"
VANILLA_ANSWER = "The plant closed in 1994. The site is now a museum."
INSERTION_MARKUP = (
    "<statement>The plant closed in 1994.<cite>[2-2]</cite></statement>"
    "<statement>The site is now a museum.<cite>[3-3]</cite></statement>"
)
INSERTION_MARKUP_CHUNK = (
    "<statement>The plant closed in 1994.<cite>[1]</cite></statement>"
    "<statement>The site is now a museum.<cite>[2]</cite></statement>"
)
EXTRACTION_OUTPUT = "[2-2]"


def scripted_backend() -> FunctionBackend:
    def script(request):
        prompt = request.last_content()
        if "[Passage Start]" in prompt:
            return EXTRACTION_OUTPUT
        if "[Existing Answer Start]" in prompt:
            if "Snippet [1]" in prompt:
                return INSERTION_MARKUP_CHUNK
            return INSERTION_MARKUP
        if "[Remind]" in prompt:
            return ONE_PASS_MARKUP
        return VANILLA_ANSWER

    return FunctionBackend(script)


@pytest.fixture
def context():
    ctx = build_context(CONTEXT_TEXT, chunk_size=12)
    assert ctx.n_sentences == 6
    assert ctx.n_chunks >= 2
    return ctx


@pytest.fixture
def cfg():
    return StrategyConfig(chunk_size=12, l_max=10, k=40)


def run(strategy, context, cfg, backend=None):
    backend = backend or scripted_backend()
    backends = Backends(chat=backend, embed=HashEmbeddingBackend(16))
    return backend, run_strategy(strategy, context, QUERY, cfg, backends)


class TestCallCounts:
    @pytest.mark.parametrize(
        "strategy",
        [StrategyId.LAC_C, StrategyId.LAC_S, StrategyId.RAC_C, StrategyId.RAC_S],
    )
    def test_one_pass_strategies_make_one_call(self, context, cfg, strategy):
        backend, output = run(strategy, context, cfg)
        assert backend.calls == 1
        assert output.calls == 1

    @pytest.mark.parametrize(
        "strategy",
        [
            StrategyId.POST_LC_C,
            StrategyId.POST_LC_S,
            StrategyId.POST_RC_C,
            StrategyId.POST_RC_S,
        ],
    )
    def test_post_hoc_strategies_make_two_calls(self, context, cfg, strategy):
        backend, output = run(strategy, context, cfg)
        assert backend.calls == 2
        assert output.calls == 2

    def test_coarse_fine_makes_two_plus_fanout(self, context, cfg):
        # insertion output has 2 statements x 1 cited chunk = 2 extractions
        backend, output = run(StrategyId.COARSE_FINE, context, cfg)
        assert backend.calls == 2 + 2
        assert output.calls == backend.calls


class TestOnePass:
    def test_lac_s_replay_matches_recorded_parse(self, context, cfg):
        _, output = run(StrategyId.LAC_S, context, cfg)
        expected, _ = parse_annotated(
            ONE_PASS_MARKUP, Granularity.SENTENCE, context.n_sentences - 1
        )
        assert output.response == expected
        assert output.plain_answer == strip_citations(ONE_PASS_MARKUP)

    def test_lac_s_prompt_numbers_sentences(self, context, cfg):
        backend, _ = run(StrategyId.LAC_S, context, cfg)
        prompt = backend.requests[0].last_content()
        for i in range(context.n_sentences):
            assert f"<C{i}>" in prompt

    def test_lac_c_prompt_numbers_chunks(self, context, cfg):
        backend, output = run(StrategyId.LAC_C, context, cfg)
        prompt = backend.requests[0].last_content()
        for i in range(context.n_chunks):
            assert f"<C{i}>" in prompt
        assert output.granularity is Granularity.CHUNK

    def test_rac_s_presents_retrieved_sentences_in_order(self, context):
        cfg = StrategyConfig(chunk_size=12, k=3)
        backend, _ = run(StrategyId.RAC_S, context, cfg)
        prompt = backend.requests[0].last_content()
        # the one-shot example also holds a numbered document; look only at
        # the test-case block, which comes last
        start = prompt.rindex("[Document Start]")
        end = prompt.rindex("[Document End]")
        presented = prompt[start:end]
        markers = [f"<C{i}>" in presented for i in range(context.n_sentences)]
        assert sum(markers) == 3
        positions = [
            presented.index(f"<C{i}>")
            for i, present in enumerate(markers)
            if present
        ]
        assert positions == sorted(positions)

    def test_rac_c_output_keeps_global_chunk_ids(self, context):
        cfg = StrategyConfig(chunk_size=12, k=2)

        def script(request):
            return "<statement>X.<cite>[1]</cite></statement>"

        _, output = run(StrategyId.RAC_C, context, cfg, FunctionBackend(script))
        assert output.response.statements[0].citations == (CitationSpan(1, 1),)


class TestPostHoc:
    @pytest.mark.parametrize(
        "strategy",
        [
            StrategyId.POST_LC_C,
            StrategyId.POST_LC_S,
            StrategyId.POST_RC_C,
            StrategyId.POST_RC_S,
        ],
    )
    def test_plain_answer_is_vanilla_and_preserved(self, context, cfg, strategy):
        _, output = run(strategy, context, cfg)
        assert output.plain_answer == VANILLA_ANSWER
        assert answer_preserved(output.plain_answer, output.response)

    def test_post_lc_c_remaps_snippets_to_global_chunks(self, context, cfg):
        _, output = run(StrategyId.POST_LC_C, context, cfg)
        # snippet [1] is chunk 0, snippet [2] is chunk 1
        assert output.response.statements[0].citations == (CitationSpan(0, 0),)
        assert output.response.statements[1].citations == (CitationSpan(1, 1),)
        assert output.granularity is Granularity.CHUNK

    def test_post_lc_s_keeps_global_sentence_ids(self, context, cfg):
        _, output = run(StrategyId.POST_LC_S, context, cfg)
        assert output.response.statements[0].citations == (CitationSpan(2, 2),)

    def test_altered_answer_is_flagged(self, context, cfg):
        def script(request):
            prompt = request.last_content()
            if "[Existing Answer Start]" in prompt:
                return "<statement>Mutated text.<cite>[0-0]</cite></statement>"
            return VANILLA_ANSWER

        _, output = run(StrategyId.POST_LC_S, context, cfg, FunctionBackend(script))
        assert any("altered" in w for w in output.warnings)


class TestCoarseFine:
    def test_sentence_level_output(self, context, cfg):
        _, output = run(StrategyId.COARSE_FINE, context, cfg)
        assert output.granularity is Granularity.SENTENCE
        assert output.plain_answer == VANILLA_ANSWER
        # both statements extract [2-2] from their cited chunk's expansion;
        # chunk expansions cover the whole 2-3 chunk document here, so local
        # ids are offset by the expansion start
        assert all(
            span.start == span.end for s in output.response.statements for span in s.citations
        )


class TestWindowTruncation:
    def test_truncates_and_warns(self, context):
        cfg = StrategyConfig(chunk_size=12, window_tokens=5)
        backend, output = run(StrategyId.LAC_S, context, cfg)
        assert any("truncated" in w for w in output.warnings)
        prompt = backend.requests[0].last_content()
        assert "<C5>" not in prompt

    def test_no_truncation_when_window_fits(self, context):
        cfg = StrategyConfig(chunk_size=12, window_tokens=10_000)
        _, output = run(StrategyId.LAC_S, context, cfg)
        assert not any("truncated" in w for w in output.warnings)


class TestLatency:
    def test_breakdown_labels(self, context, cfg):
        _, output = run(StrategyId.POST_LC_S, context, cfg)
        labels = [label for label, _ in output.latency_breakdown]
        assert labels == ["vanilla_answer", "insert_citations"]
        assert all(elapsed >= 0 for _, elapsed in output.latency_breakdown)


def test_strategy_id_round_trip():
    for strategy in StrategyId:
        assert StrategyId.from_name(strategy.value) is strategy
    with pytest.raises(ValueError):
        StrategyId.from_name("bogus")
