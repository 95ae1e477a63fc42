"""Tokenizer, n-gram expansion, and entity matching."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from medgraph.entity_index import build_index
from medgraph.query import (
    NoMatchError,
    embed_query,
    expand,
    levenshtein,
    match_candidates,
    match_text,
    normalized_distance,
    tokenize,
)
from medgraph.tables import MentionRow

WORDS = st.text(st.characters(min_codepoint=97, max_codepoint=122), max_size=7)


def reference_levenshtein(a: str, b: str) -> int:
    # independent recursive formulation, memoized
    @lru_cache(maxsize=None)
    def dist(i: int, j: int) -> int:
        if i == 0:
            return j
        if j == 0:
            return i
        return min(
            dist(i - 1, j) + 1,
            dist(i, j - 1) + 1,
            dist(i - 1, j - 1) + (a[i - 1] != b[j - 1]),
        )

    return dist(len(a), len(b))


def index_of(*surface_specs):
    mentions = [
        MentionRow("1", surface, str(eid), etype)
        for surface, eid, etype in surface_specs
    ]
    return build_index(mentions, {"1"})


class TestTokenize:
    def test_query_verbs_and_stopwords_removed(self):
        assert tokenize("show me articles on depression and type 2 diabetes") == [
            "articles",
            "depression",
            "type",
            "2",
            "diabetes",
        ]

    def test_punctuation_becomes_spaces(self):
        assert tokenize("alzheimer's disease, type-2!") == [
            "alzheimer",
            "s",
            "disease",
            "type",
            "2",
        ]

    def test_articles_token_survives(self):
        assert "articles" in tokenize("articles")

    def test_case_folding(self):
        assert tokenize("Diabetes MELLITUS") == ["diabetes", "mellitus"]

    def test_custom_stop_tokens(self):
        assert tokenize("alpha beta", stop_tokens=frozenset({"beta"})) == ["alpha"]

    def test_empty_input(self):
        assert tokenize("") == []
        assert tokenize("the of and") == []


class TestExpand:
    TOKENS = ["articles", "depression", "type", "2", "diabetes"]

    def test_contains_printed_expansion(self):
        out = expand(self.TOKENS)
        printed = [
            "articles",
            "depression",
            "type",
            "2",
            "diabetes",
            "articles depression",
            "depression type",
            "type 2",
            "2 diabetes",
            "articles depression type",
            "depression type 2",
            "type 2 diabetes",
        ]
        for gram in printed:
            assert gram in out
        # four-grams complete the expansion
        assert "articles depression type 2" in out
        assert "depression type 2 diabetes" in out
        assert len(out) == 14

    def test_single_token(self):
        assert expand(["x"]) == ["x"]

    def test_duplicates_keep_first_position(self):
        assert expand(["a", "a", "b"]) == ["a", "b", "a a", "a b", "a a b"]

    @given(st.lists(WORDS.filter(bool), max_size=9))
    def test_size_law(self, tokens):
        out = expand(tokens)
        upper = sum(max(0, len(tokens) - n + 1) for n in range(1, 5))
        assert len(out) <= upper
        assert len(out) == len(set(out))
        if len(set(tokens)) == len(tokens):
            assert len(out) == upper


class TestLevenshtein:
    CASES = [
        ("", "", 0),
        ("a", "", 1),
        ("", "abc", 3),
        ("kitten", "sitting", 3),
        ("diabetes", "diabets", 1),
        ("flaw", "lawn", 2),
        ("abc", "abc", 0),
    ]

    @pytest.mark.parametrize("a,b,expected", CASES)
    def test_known_distances(self, a, b, expected):
        assert levenshtein(a, b) == expected

    @given(WORDS, WORDS)
    def test_matches_reference(self, a, b):
        assert levenshtein(a, b) == reference_levenshtein(a, b)

    @given(WORDS, WORDS, WORDS)
    def test_metric_axioms(self, a, b, c):
        assert levenshtein(a, b) == levenshtein(b, a)
        assert levenshtein(a, a) == 0
        assert levenshtein(a, b) <= levenshtein(a, c) + levenshtein(c, b)

    def test_normalized_distance(self):
        assert normalized_distance("diabetes", "diabets") == 1 / 8
        assert normalized_distance("", "") == 0.0
        assert normalized_distance("ab", "") == 1.0


class TestMatch:
    def test_exact_match_wins_over_fuzzy(self):
        index = index_of(("type 2 diabetes", 1, "disease"), ("type 1 diabetes", 2, "disease"))
        match = match_candidates(["type 2 diabetes"], index)
        assert match.matches[0].surface == "type 2 diabetes"
        assert match.matches[0].distance == 0.0
        assert match.matches[0].nodes == ("disease/eid/1",)

    def test_fuzzy_match_within_threshold(self):
        index = index_of(("diabetes", 1, "disease"))
        match = match_candidates(["diabets"], index)
        assert match.matches[0].surface == "diabetes"
        assert match.matches[0].distance == pytest.approx(1 / 8)

    def test_threshold_boundary_inclusive(self):
        index = index_of(("abcd", 1, "drug"))
        assert match_candidates(["abce"], index).matches[0].distance == 0.25
        with pytest.raises(NoMatchError):
            match_candidates(["abxy"], index, threshold=0.25)

    def test_distance_tie_prefers_smaller_surface(self):
        index = index_of(("abce", 1, "drug"), ("abcf", 2, "drug"))
        match = match_candidates(["abcd"], index)
        assert match.matches[0].surface == "abce"

    def test_unmatched_candidates_recorded(self):
        index = index_of(("diabetes", 1, "disease"))
        match = match_candidates(["diabetes", "zzzzzz"], index)
        assert match.unmatched == ["zzzzzz"]

    def test_no_match_raises_with_candidates(self):
        index = index_of(("diabetes", 1, "disease"))
        with pytest.raises(NoMatchError) as err:
            match_candidates(["qqqq", "wwww"], index)
        assert err.value.candidates == ["qqqq", "wwww"]

    def test_match_text_end_to_end(self):
        index = index_of(("depression", 3, "disease"), ("type 2 diabetes", 4, "disease"))
        match = match_text("show me articles on depression and type 2 diabetes", index)
        nodes = match.node_ids()
        assert "disease/eid/3" in nodes
        assert "disease/eid/4" in nodes

    def test_node_ids_deduplicated_in_first_seen_order(self):
        index = index_of(("asa", 7, "drug"), ("aspirin", 7, "drug"), ("flu", 9, "disease"))
        match = match_candidates(["aspirin", "asa", "flu"], index)
        assert match.node_ids() == ["drug/eid/7", "disease/eid/9"]

    def test_ambiguous_surface_returns_all_nodes(self):
        index = index_of(("cold", 1, "disease"), ("cold", 2, "species"))
        match = match_candidates(["cold"], index)
        assert match.matches[0].nodes == ("disease/eid/1", "species/eid/2")

    def test_subspan_suppression_off_by_default(self):
        index = index_of(
            ("type 2", 5, "disease"), ("type 2 diabetes", 4, "disease")
        )
        candidates = ["type 2", "type 2 diabetes"]
        union = match_candidates(candidates, index)
        assert [m.candidate for m in union.matches] == candidates

    def test_subspan_suppression_drops_contained_matches(self):
        index = index_of(
            ("type 2", 5, "disease"),
            ("diabetes", 6, "disease"),
            ("type 2 diabetes", 4, "disease"),
            ("flu", 9, "disease"),
        )
        match = match_candidates(
            ["type 2", "diabetes", "type 2 diabetes", "flu"],
            index,
            suppress_subspans=True,
        )
        assert [m.candidate for m in match.matches] == ["type 2 diabetes", "flu"]
        assert match.node_ids() == ["disease/eid/4", "disease/eid/9"]


class FakeEmbeddings:
    def __init__(self, table):
        self.table = table

    def vector(self, node):
        return self.table[node]


class TestEmbedQuery:
    def test_mean_of_matched_vectors(self):
        emb = FakeEmbeddings(
            {"drug/eid/1": np.array([1.0, 0.0]), "disease/eid/2": np.array([0.0, 1.0])}
        )
        vec = embed_query(["drug/eid/1", "disease/eid/2"], emb)
        assert np.allclose(vec, [0.5, 0.5])

    def test_single_node_is_identity(self):
        emb = FakeEmbeddings({"drug/eid/1": np.array([2.0, -1.0])})
        assert np.allclose(embed_query(["drug/eid/1"], emb), [2.0, -1.0])

    def test_empty_nodes_rejected(self):
        with pytest.raises(ValueError):
            embed_query([], FakeEmbeddings({}))
