"""Cosine ranking of article vectors against a query vector.

Produces ranked lists and reads/writes them in the six-column TREC run
format ``query_id Q0 pmid rank score tag``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

logger = logging.getLogger(__name__)

RUN_TAG = "medgraph"


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity clamped to [-1, 1]; zero-norm input is an error."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine undefined for zero-norm vector")
    return float(np.clip(float(u @ v) / (nu * nv), -1.0, 1.0))


def _pmid_of(key: str) -> str:
    # article vectors may be keyed by bare pmid or by article/pmid/<id>
    if "/" in key:
        parts = key.split("/")
        if len(parts) != 3 or parts[0] != "article" or parts[1] != "pmid":
            raise ValueError(f"not an article key: {key!r}")
        return parts[2]
    return key


@dataclass
class RankedList:
    """Articles sorted by descending score; ties broken by ascending pmid."""

    query_id: str
    entries: list[tuple[str, float]] = field(default_factory=list)
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    def pmids(self) -> list[str]:
        return [pmid for pmid, _ in self.entries]

    def truncated(self, k: int | None) -> "RankedList":
        if k is None or k >= len(self.entries):
            return self
        return RankedList(self.query_id, self.entries[:k], self.skipped)


def rank(
    query_vector: np.ndarray,
    articles: Mapping[str, np.ndarray],
    k: int | None = None,
    query_id: str = "q0",
) -> RankedList:
    """Score every article by cosine against the query and sort.

    Zero-norm article vectors cannot be scored; they are left out and
    counted in ``skipped``.  A zero-norm query vector is an error.
    """
    query_vector = np.asarray(query_vector, dtype=np.float64)
    if float(np.linalg.norm(query_vector)) == 0.0:
        raise ValueError("query vector has zero norm")
    scored: list[tuple[float, int, str]] = []
    skipped = 0
    for key, vector in articles.items():
        pmid = _pmid_of(key)
        vector = np.asarray(vector, dtype=np.float64)
        if float(np.linalg.norm(vector)) == 0.0:
            skipped += 1
            continue
        scored.append((-cosine(query_vector, vector), int(pmid), pmid))
    if skipped:
        logger.warning("query %s: skipped %d zero-norm article vectors", query_id, skipped)
    scored.sort()
    entries = [(pmid, -neg_score) for neg_score, _, pmid in scored]
    result = RankedList(query_id=query_id, entries=entries, skipped=skipped)
    return result.truncated(k)


def run_lines(ranked: RankedList, tag: str = RUN_TAG) -> list[str]:
    """TREC run rows: query_id Q0 pmid rank score tag, rank starting at 1."""
    return [
        f"{ranked.query_id} Q0 {pmid} {rank_} {repr(score)} {tag}"
        for rank_, (pmid, score) in enumerate(ranked.entries, start=1)
    ]


def write_run(
    path: str | Path,
    ranked_lists: Iterable[RankedList] | Mapping[str, RankedList],
    tag: str = RUN_TAG,
) -> None:
    if isinstance(ranked_lists, Mapping):
        ranked_lists = [ranked_lists[qid] for qid in sorted(ranked_lists)]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for ranked in ranked_lists:
            for line in run_lines(ranked, tag):
                fh.write(line + "\n")


def read_run(path: str | Path) -> dict[str, RankedList]:
    """Parse a TREC run file back into per-query ranked lists."""
    runs: dict[str, RankedList] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 6 or parts[1] != "Q0":
                raise ValueError(f"{path}:{lineno}: malformed run line")
            qid, _, pmid, rank_, score, _tag = parts
            ranked = runs.setdefault(qid, RankedList(query_id=qid))
            if int(rank_) != len(ranked.entries) + 1:
                raise ValueError(f"{path}:{lineno}: rank out of sequence")
            ranked.entries.append((pmid, float(score)))
    return runs
