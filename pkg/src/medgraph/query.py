"""Free-text query handling: tokenize, expand, match against the entity index.

A query like "show me articles on depression and type 2 diabetes" is
lowercased, stripped of punctuation, stopwords, and query verbs, then
expanded into contiguous n-grams (n = 1..4) that are matched against
indexed surface forms, exactly first and by edit distance second.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import NamedTuple, Sequence

import numpy as np

from .entity_index import EntityIndex

MAX_NGRAM = 4
DEFAULT_THRESHOLD = 0.25


class NoMatchError(Exception):
    """No candidate from the query matched any indexed surface form."""

    def __init__(self, candidates: Sequence[str]):
        self.candidates = list(candidates)
        shown = ", ".join(repr(c) for c in self.candidates) or "<empty query>"
        super().__init__(f"no entity match for any of: {shown}")


def _load_wordlist(name: str) -> frozenset[str]:
    text = resources.files("medgraph.resources").joinpath(name).read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


@lru_cache(maxsize=None)
def default_stop_tokens() -> frozenset[str]:
    """Stopwords plus query verbs; dropped during tokenization."""
    return _load_wordlist("stopwords.txt") | _load_wordlist("query_verbs.txt")


def tokenize(text: str, stop_tokens: frozenset[str] | None = None) -> list[str]:
    """Lowercase, replace punctuation with spaces, split, drop stop tokens."""
    if stop_tokens is None:
        stop_tokens = default_stop_tokens()
    lowered = text.lower()
    cleaned = "".join(ch if ch.isalnum() else " " for ch in lowered)
    return [tok for tok in cleaned.split() if tok not in stop_tokens]


def expand(tokens: Sequence[str], max_n: int = MAX_NGRAM) -> list[str]:
    """All contiguous n-grams for n = 1..max_n, space-joined, first-seen order."""
    out: list[str] = []
    seen: set[str] = set()
    for n in range(1, max_n + 1):
        for i in range(len(tokens) - n + 1):
            gram = " ".join(tokens[i : i + n])
            if gram not in seen:
                seen.add(gram)
                out.append(gram)
    return out


def levenshtein(a: str, b: str) -> int:
    """Edit distance with unit-cost insert, delete, and substitute."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def normalized_distance(a: str, b: str) -> float:
    """Levenshtein distance scaled by the longer length; 0.0 for two empties."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return levenshtein(a, b) / longest


class MatchResult(NamedTuple):
    candidate: str
    surface: str
    distance: float
    nodes: tuple[str, ...]


@dataclass
class QueryMatch:
    """Outcome of matching expanded candidates against the index."""

    matches: list[MatchResult]
    unmatched: list[str]

    def node_ids(self) -> list[str]:
        """Distinct matched entity nodes, first-seen order."""
        out: list[str] = []
        seen: set[str] = set()
        for match in self.matches:
            for node in match.nodes:
                if node not in seen:
                    seen.add(node)
                    out.append(node)
        return out


def _is_subspan(inner: tuple[str, ...], outer: tuple[str, ...]) -> bool:
    if len(inner) >= len(outer):
        return False
    return any(
        outer[i : i + len(inner)] == inner
        for i in range(len(outer) - len(inner) + 1)
    )


def _suppress_subspans(matches: list[MatchResult]) -> list[MatchResult]:
    spans = [tuple(m.candidate.lower().split()) for m in matches]
    return [
        m
        for m, span in zip(matches, spans)
        if not any(_is_subspan(span, other) for other in spans)
    ]


def match_candidates(
    candidates: Sequence[str],
    index: EntityIndex,
    threshold: float = DEFAULT_THRESHOLD,
    suppress_subspans: bool = False,
) -> QueryMatch:
    """Resolve candidates to entity nodes, exact matches first.

    A candidate missing from the index falls back to the surface with the
    smallest normalized edit distance; ties pick the lexicographically
    smaller surface.  Distances above ``threshold`` leave the candidate
    unmatched.  If nothing matches at all, raises :class:`NoMatchError`.
    With ``suppress_subspans`` a matched candidate is dropped when its
    tokens appear contiguously inside a longer matched candidate.
    """
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    surfaces = index.surfaces()
    matches: list[MatchResult] = []
    unmatched: list[str] = []
    for candidate in candidates:
        exact = index.lookup(candidate)
        if exact:
            matches.append(MatchResult(candidate, candidate.lower(), 0.0, exact))
            continue
        best_surface = None
        best_distance = np.inf
        for surface in surfaces:
            distance = normalized_distance(candidate.lower(), surface)
            if distance < best_distance:
                best_surface, best_distance = surface, distance
        if best_surface is not None and best_distance <= threshold:
            matches.append(
                MatchResult(candidate, best_surface, best_distance, index.lookup(best_surface))
            )
        else:
            unmatched.append(candidate)
    if not matches:
        raise NoMatchError(candidates)
    if suppress_subspans:
        matches = _suppress_subspans(matches)
    return QueryMatch(matches=matches, unmatched=unmatched)


def match_text(
    text: str,
    index: EntityIndex,
    threshold: float = DEFAULT_THRESHOLD,
    stop_tokens: frozenset[str] | None = None,
    suppress_subspans: bool = False,
) -> QueryMatch:
    """Tokenize, expand, and match a raw query string."""
    return match_candidates(
        expand(tokenize(text, stop_tokens)),
        index,
        threshold,
        suppress_subspans=suppress_subspans,
    )


def embed_query(nodes: Sequence[str], embeddings) -> np.ndarray:
    """Mean of the embedding vectors of the matched entity nodes.

    ``embeddings`` is anything with a ``vector(node_id)`` method.  The
    node list must be non-empty; unknown nodes raise KeyError.
    """
    if not nodes:
        raise ValueError("cannot embed an empty node list")
    vectors = [np.asarray(embeddings.vector(node), dtype=np.float64) for node in nodes]
    return np.mean(vectors, axis=0)
