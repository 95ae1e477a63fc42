"""TF-IDF baseline over article titles and abstracts.

Shares the query tokenizer, so both retrieval methods see the same
token stream.  Document frequency is counted per document, weights are
``tf * ln(N/df)`` (terms in every document drop out), and ranking is by
cosine over the sparse vectors with the same tie rule as the graph
ranker.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .query import tokenize
from .ranker import RankedList

logger = logging.getLogger(__name__)

IDF_VARIANTS = ("raw", "smooth")


@dataclass
class Vocabulary:
    """Token ids and document frequencies over a fixed corpus."""

    tokens: list[str]
    df: np.ndarray
    n_docs: int

    def __post_init__(self) -> None:
        self._ids = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self._ids) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")
        if len(self.df) != len(self.tokens):
            raise ValueError("df length does not match vocabulary")

    def __len__(self) -> int:
        return len(self.tokens)

    def token_id(self, token: str) -> int | None:
        return self._ids.get(token)

    def idf(self, variant: str = "raw") -> np.ndarray:
        """ln(N/df) per token, or ln(1+N/df) for the smooth variant."""
        if variant not in IDF_VARIANTS:
            raise ValueError(f"unknown idf variant {variant!r}")
        ratio = self.n_docs / self.df.astype(np.float64)
        if variant == "smooth":
            return np.log1p(ratio)
        return np.log(ratio)

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            fh.write(f"{len(self.tokens)} {self.n_docs}\n")
            for token, df in zip(self.tokens, self.df):
                fh.write(f"{token}\t{int(df)}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        with Path(path).open(encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise ValueError(f"{path}: malformed vocabulary header")
            count, n_docs = int(header[0]), int(header[1])
            tokens: list[str] = []
            dfs: list[int] = []
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                token, df = line.split("\t")
                tokens.append(token)
                dfs.append(int(df))
        if len(tokens) != count:
            raise ValueError(f"{path}: expected {count} tokens, found {len(tokens)}")
        return cls(tokens=tokens, df=np.asarray(dfs, dtype=np.int64), n_docs=n_docs)


@dataclass
class SparseVector:
    """Sorted token ids with their weights; empty documents allowed."""

    ids: np.ndarray
    weights: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.weights))

    def dot(self, other: "SparseVector") -> float:
        i = j = 0
        total = 0.0
        while i < len(self.ids) and j < len(other.ids):
            a, b = self.ids[i], other.ids[j]
            if a == b:
                total += float(self.weights[i]) * float(other.weights[j])
                i += 1
                j += 1
            elif a < b:
                i += 1
            else:
                j += 1
        return total

    def cosine(self, other: "SparseVector") -> float:
        denom = self.norm * other.norm
        if denom == 0.0:
            raise ValueError("cosine undefined for zero-norm vector")
        return float(np.clip(self.dot(other) / denom, -1.0, 1.0))


def build_vocabulary(
    documents: Mapping[str, str],
    stop_tokens: frozenset[str] | None = None,
) -> Vocabulary:
    """Tokenize every document and collect sorted vocabulary with df counts.

    ``documents`` maps pmid to searchable text.  Raises ValueError when
    the corpus is empty or yields no tokens at all.
    """
    if not documents:
        raise ValueError("empty corpus")
    df: dict[str, int] = {}
    for text in documents.values():
        for token in set(tokenize(text, stop_tokens)):
            df[token] = df.get(token, 0) + 1
    if not df:
        raise ValueError("corpus produced no tokens")
    tokens = sorted(df)
    counts = np.asarray([df[t] for t in tokens], dtype=np.int64)
    return Vocabulary(tokens=tokens, df=counts, n_docs=len(documents))


def vectorize(
    text: str,
    vocab: Vocabulary,
    idf_variant: str = "raw",
    stop_tokens: frozenset[str] | None = None,
) -> SparseVector:
    """TF-IDF vector of one text; zero-weight and unknown tokens drop out."""
    idf = vocab.idf(idf_variant)
    tf: dict[int, int] = {}
    for token in tokenize(text, stop_tokens):
        tid = vocab.token_id(token)
        if tid is not None:
            tf[tid] = tf.get(tid, 0) + 1
    ids = []
    weights = []
    for tid in sorted(tf):
        weight = tf[tid] * float(idf[tid])
        if weight != 0.0:
            ids.append(tid)
            weights.append(weight)
    return SparseVector(
        ids=np.asarray(ids, dtype=np.int64),
        weights=np.asarray(weights, dtype=np.float64),
    )


def vectorize_corpus(
    documents: Mapping[str, str],
    vocab: Vocabulary,
    idf_variant: str = "raw",
    stop_tokens: frozenset[str] | None = None,
) -> dict[str, SparseVector]:
    return {
        pmid: vectorize(documents[pmid], vocab, idf_variant, stop_tokens)
        for pmid in sorted(documents)
    }


def rank_tfidf(
    query_text: str,
    vocab: Vocabulary,
    vectors: Mapping[str, SparseVector],
    k: int | None = None,
    query_id: str = "q0",
    idf_variant: str = "raw",
    stop_tokens: frozenset[str] | None = None,
) -> RankedList:
    """Rank documents by cosine between their vectors and the query's.

    Documents with zero-norm vectors are skipped and counted, matching
    the graph ranker.  A query whose tokens all miss the vocabulary has
    a zero vector, which is an error.
    """
    query_vector = vectorize(query_text, vocab, idf_variant, stop_tokens)
    if query_vector.norm == 0.0:
        raise ValueError("query has no weight in the vocabulary")
    scored: list[tuple[float, int, str]] = []
    skipped = 0
    for pmid, vector in vectors.items():
        if vector.norm == 0.0:
            skipped += 1
            continue
        scored.append((-query_vector.cosine(vector), int(pmid), pmid))
    if skipped:
        logger.warning("query %s: skipped %d zero-norm documents", query_id, skipped)
    scored.sort()
    entries = [(pmid, -neg) for neg, _, pmid in scored]
    ranked = RankedList(query_id=query_id, entries=entries, skipped=skipped)
    return ranked.truncated(k)


def save_vectors(path: str | Path, vectors: Mapping[str, SparseVector]) -> None:
    """One line per document: pmid, then id:weight pairs."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for pmid in sorted(vectors, key=int):
            vec = vectors[pmid]
            pairs = " ".join(
                f"{int(i)}:{repr(float(w))}" for i, w in zip(vec.ids, vec.weights)
            )
            fh.write(f"{pmid}\t{pairs}\n" if pairs else f"{pmid}\t\n")


def load_vectors(path: str | Path) -> dict[str, SparseVector]:
    vectors: dict[str, SparseVector] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            pmid, _, rest = line.partition("\t")
            ids: list[int] = []
            weights: list[float] = []
            for pair in rest.split():
                tid, _, weight = pair.partition(":")
                ids.append(int(tid))
                weights.append(float(weight))
            vectors[pmid] = SparseVector(
                ids=np.asarray(ids, dtype=np.int64),
                weights=np.asarray(weights, dtype=np.float64),
            )
    if not vectors:
        raise ValueError(f"{path}: no document vectors")
    return vectors
