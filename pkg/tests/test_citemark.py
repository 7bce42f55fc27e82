import random
from itertools import combinations_with_replacement

import hypothesis.strategies as st
import pytest
from hypothesis import given, settings

from citeqa.citemark import (
    AnnotatedResponse,
    CitationSpan,
    Granularity,
    Statement,
    normalize_spans,
    parse_annotated,
    serialize_annotated,
    strip_citations,
)

from conftest import random_fuzz_string, random_response


class TestParseAnnotated:
    def test_simple_statement_with_range(self):
        response, warnings = parse_annotated(
            "<statement>A.<cite>[3-5]</cite></statement>", Granularity.SENTENCE, 10
        )
        assert response.statements == (
            Statement("A.", (CitationSpan(3, 5),)),
        )
        assert warnings == []

    def test_empty_cite_block(self):
        response, warnings = parse_annotated(
            "<statement>B.<cite></cite></statement>", Granularity.SENTENCE, 10
        )
        assert response.statements == (Statement("B.", ()),)
        assert warnings == []

    def test_irregular_spans_dropped_with_warning(self):
        response, warnings = parse_annotated(
            "<statement>C.<cite>[9-2][4]</cite></statement>", Granularity.SENTENCE, 10
        )
        assert response.statements[0].citations == (CitationSpan(4, 4),)
        assert [w.code for w in warnings] == ["reversed_span"]

    def test_index_beyond_max_dropped(self):
        response, warnings = parse_annotated(
            "<statement>D.<cite>[11][2-11][3]</cite></statement>", Granularity.SENTENCE, 10
        )
        assert response.statements[0].citations == (CitationSpan(3, 3),)
        assert {w.code for w in warnings} == {"index_out_of_range"}

    def test_text_outside_statement_becomes_citation_free(self):
        response, warnings = parse_annotated(
            "preamble <statement>A.<cite>[1]</cite></statement> coda",
            Granularity.SENTENCE,
            5,
        )
        texts = [s.text for s in response.statements]
        assert "preamble" in texts[0]
        assert response.statements[0].citations == ()
        assert "coda" in texts[-1]
        assert any(w.code == "text_outside_statement" for w in warnings)

    def test_whitespace_between_statements_is_silent(self):
        raw = (
            "<statement>A.<cite>[1]</cite></statement>\n "
            "<statement>B.<cite></cite></statement>"
        )
        response, warnings = parse_annotated(raw, Granularity.SENTENCE, 5)
        assert [s.text for s in response.statements] == ["A.", "B."]
        assert warnings == []

    def test_nested_statement_flattened(self):
        raw = "<statement>A <statement>B.<cite>[1]</cite></statement>"
        response, warnings = parse_annotated(raw, Granularity.SENTENCE, 5)
        assert response.statements[0].text == "A B."
        assert any(w.code == "nested_statement" for w in warnings)

    def test_unterminated_statement(self):
        response, warnings = parse_annotated(
            "<statement>A.<cite>[1]</cite>", Granularity.SENTENCE, 5
        )
        assert response.statements[0].text == "A."
        assert response.statements[0].citations == (CitationSpan(1, 1),)
        assert any(w.code == "unterminated_statement" for w in warnings)

    def test_unparsed_citation_junk_warns(self):
        _, warnings = parse_annotated(
            "<statement>A.<cite>[x] stuff [-1]</cite></statement>",
            Granularity.SENTENCE,
            5,
        )
        assert any(w.code == "unparsed_citation_text" for w in warnings)

    def test_chunk_level_range_expands_to_singletons(self):
        response, warnings = parse_annotated(
            "<statement>A.<cite>[2-4]</cite></statement>", Granularity.CHUNK, 10
        )
        assert response.statements[0].citations == (
            CitationSpan(2, 2),
            CitationSpan(3, 3),
            CitationSpan(4, 4),
        )
        assert any(w.code == "chunk_range_expanded" for w in warnings)

    def test_totality_on_fuzz_sample(self):
        rng = random.Random(1234)
        for _ in range(10_000):
            raw = random_fuzz_string(rng)
            response, _ = parse_annotated(raw, Granularity.SENTENCE, 20)
            assert isinstance(response, AnnotatedResponse)


class TestSerializeAnnotated:
    def test_sentence_range(self):
        response = AnnotatedResponse(
            (Statement("X", (CitationSpan(2, 4),)),), Granularity.SENTENCE
        )
        assert (
            serialize_annotated(response)
            == "<statement>X<cite>[2-4]</cite></statement>"
        )

    def test_sentence_singleton_renders_k_k(self):
        response = AnnotatedResponse(
            (Statement("X", (CitationSpan(3, 3),)),), Granularity.SENTENCE
        )
        assert "[3-3]" in serialize_annotated(response)

    def test_chunk_singleton_renders_k(self):
        response = AnnotatedResponse(
            (Statement("X", (CitationSpan(3, 3),)),), Granularity.CHUNK
        )
        assert "<cite>[3]</cite>" in serialize_annotated(response)

    def test_empty_citations_render_empty_cite(self):
        response = AnnotatedResponse((Statement("X"),), Granularity.SENTENCE)
        assert "<cite></cite>" in serialize_annotated(response)

    def test_chunk_range_rejected(self):
        response = AnnotatedResponse(
            (Statement("X", (CitationSpan(1, 2),)),), Granularity.CHUNK
        )
        with pytest.raises(ValueError):
            serialize_annotated(response)

    def test_round_trip_seeded_sample(self):
        rng = random.Random(99)
        for _ in range(300):
            granularity = rng.choice(list(Granularity))
            response = random_response(rng, granularity)
            parsed, warnings = parse_annotated(
                serialize_annotated(response), granularity, 30
            )
            assert warnings == []
            assert parsed == response


class TestStripCitations:
    def test_single_statement(self):
        assert strip_citations("<statement>A.<cite>[1]</cite></statement>") == "A."

    def test_plain_text_unchanged(self):
        text = "no markup here, just [3] brackets."
        assert strip_citations(text) == text

    def test_strip_of_serialize_is_concatenation(self):
        rng = random.Random(5)
        for _ in range(200):
            response = random_response(rng)
            assert strip_citations(serialize_annotated(response)) == response.plain_text()


@st.composite
def responses(draw):
    granularity = draw(st.sampled_from(list(Granularity)))
    statements = []
    for _ in range(draw(st.integers(0, 4))):
        text = draw(st.text(st.characters(blacklist_characters="<"), max_size=30))
        spans = []
        for _ in range(draw(st.integers(0, 3))):
            a = draw(st.integers(0, 30))
            b = a if granularity is Granularity.CHUNK else draw(st.integers(a, 30))
            spans.append(CitationSpan(a, b))
        statements.append(Statement(text, tuple(spans)))
    return AnnotatedResponse(tuple(statements), granularity)


@given(responses())
@settings(max_examples=300)
def test_round_trip_property(response):
    raw = serialize_annotated(response)
    parsed, warnings = parse_annotated(raw, response.granularity, 30)
    assert warnings == []
    assert parsed == response
    assert strip_citations(raw) == response.plain_text()


class TestNormalizeSpans:
    def test_shift_through_mapping(self):
        assert normalize_spans([CitationSpan(0, 1)], {0: 10, 1: 11}) == [
            CitationSpan(10, 11)
        ]

    def test_adjacent_spans_merge(self):
        assert normalize_spans([CitationSpan(10, 12), CitationSpan(13, 13)]) == [
            CitationSpan(10, 13)
        ]

    def test_empty(self):
        assert normalize_spans([]) == []

    def test_unmapped_index_raises(self):
        with pytest.raises(ValueError):
            normalize_spans([CitationSpan(0, 2)], {0: 5, 1: 6})

    def test_brute_force_oracle_over_all_pairs(self):
        # oracle: normalize == the maximal consecutive runs of the id set
        def oracle(spans):
            ids = sorted({i for s in spans for i in range(s.start, s.end + 1)})
            runs = []
            for i in ids:
                if runs and i == runs[-1][1] + 1:
                    runs[-1][1] = i
                else:
                    runs.append([i, i])
            return [CitationSpan(a, b) for a, b in runs]

        singles = [
            CitationSpan(a, b) for a in range(7) for b in range(a, 7)
        ]
        for pair in combinations_with_replacement(singles, 2):
            expected = oracle(pair)
            assert normalize_spans(list(pair)) == expected
            # confluence: input order never matters
            assert normalize_spans(list(reversed(pair))) == expected

    @given(
        st.lists(
            st.tuples(st.integers(0, 40), st.integers(0, 10)).map(
                lambda t: CitationSpan(t[0], t[0] + t[1])
            ),
            max_size=6,
        )
    )
    @settings(max_examples=200)
    def test_output_disjoint_sorted_nonadjacent(self, spans):
        merged = normalize_spans(spans)
        for first, second in zip(merged, merged[1:]):
            assert first.end + 1 < second.start
        covered = {i for s in merged for i in range(s.start, s.end + 1)}
        wanted = {i for s in spans for i in range(s.start, s.end + 1)}
        assert covered == wanted
