"""Ranked-retrieval evaluation: P/R/F1 at K, average precision, MAP.

Two average-precision variants are computed.  "map" normalizes by
min(|relevant|, K); "map_by_k" divides by K itself, which penalizes
queries with fewer relevant documents than the cutoff.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .ranker import RankedList

DEFAULT_CUTOFFS = (1, 2, 5, 10, 25, 50, 75, 100, 150, 250, 500, 1000)
DEFAULT_METRICS = ("precision", "recall", "f1", "map", "map_by_k")
AP_VARIANTS = ("standard", "by_k")

Qrels = dict[str, list[str]]


def _pmids(retrieved: RankedList | Sequence[str]) -> list[str]:
    if isinstance(retrieved, RankedList):
        return retrieved.pmids()
    return list(retrieved)


def precision_recall_f1(
    retrieved: RankedList | Sequence[str],
    relevant: Iterable[str],
    k: int,
) -> tuple[float, float, float]:
    """(precision, recall, F1) at cutoff ``k``.

    Precision divides by the number of documents actually returned up to
    ``k``, so a short result list is not penalized for its length;
    recall divides by the number of relevant documents.  Either side
    being empty yields zeros.
    """
    if k < 1:
        raise ValueError("k must be positive")
    rel_set = set(relevant)
    top = _pmids(retrieved)[:k]
    if not top or not rel_set:
        return 0.0, 0.0, 0.0
    hits = sum(1 for pmid in top if pmid in rel_set)
    precision = hits / len(top)
    recall = hits / len(rel_set)
    if precision + recall == 0.0:
        return precision, recall, 0.0
    f1 = 2.0 * precision * recall / (precision + recall)
    return precision, recall, f1


def average_precision(
    retrieved: RankedList | Sequence[str],
    relevant: Iterable[str],
    k: int,
    variant: str = "standard",
) -> float:
    """AP at cutoff ``k`` under the chosen normalization.

    The running sum adds precision-at-i at every rank i <= k that holds
    a relevant document.  "standard" divides by min(|relevant|, k);
    "by_k" divides by k.
    """
    if variant not in AP_VARIANTS:
        raise ValueError(f"unknown AP variant {variant!r}")
    if k < 1:
        raise ValueError("k must be positive")
    rel_set = set(relevant)
    if not rel_set:
        return 0.0
    total = 0.0
    hits = 0
    for i, pmid in enumerate(_pmids(retrieved)[:k], start=1):
        if pmid in rel_set:
            hits += 1
            total += hits / i
    denom = k if variant == "by_k" else min(len(rel_set), k)
    return total / denom


def prune_relevant(qrels: Qrels, k: int) -> Qrels:
    """Keep only the first ``k`` relevant pmids per query, preserving order."""
    if k < 1:
        raise ValueError("k must be positive")
    return {qid: rels[:k] for qid, rels in qrels.items()}


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


@dataclass
class EvalReport:
    """Aggregate metric grid: one value per (metric, method, cutoff)."""

    cutoffs: tuple[int, ...]
    methods: tuple[str, ...]
    metrics: tuple[str, ...]
    values: dict[tuple[str, str], list[float]] = field(default_factory=dict)
    n_queries: int = 0
    missing: dict[str, int] = field(default_factory=dict)

    def value(self, metric: str, method: str, k: int) -> float:
        return self.values[(metric, method)][self.cutoffs.index(k)]

    def header(self) -> str:
        return "metric,method," + ",".join(f"K{k}" for k in self.cutoffs)

    def to_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            fh.write(self.header() + "\n")
            for metric in self.metrics:
                for method in self.methods:
                    row = self.values[(metric, method)]
                    cells = ",".join(repr(float(v)) for v in row)
                    fh.write(f"{metric},{method},{cells}\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "EvalReport":
        with Path(path).open(encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split(",")
            if header[:2] != ["metric", "method"] or not header[2:]:
                raise ValueError(f"{path}: malformed report header")
            cutoffs = tuple(int(col[1:]) for col in header[2:])
            values: dict[tuple[str, str], list[float]] = {}
            metrics: list[str] = []
            methods: list[str] = []
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                cells = line.split(",")
                if len(cells) != 2 + len(cutoffs):
                    raise ValueError(f"{path}: row width mismatch")
                metric, method = cells[0], cells[1]
                if metric not in metrics:
                    metrics.append(metric)
                if method not in methods:
                    methods.append(method)
                values[(metric, method)] = [float(c) for c in cells[2:]]
        return cls(
            cutoffs=cutoffs,
            methods=tuple(methods),
            metrics=tuple(metrics),
            values=values,
        )


def evaluate(
    runs: Mapping[str, Mapping[str, RankedList | Sequence[str]]],
    qrels: Qrels,
    cutoffs: Sequence[int] = DEFAULT_CUTOFFS,
    metrics: Sequence[str] = DEFAULT_METRICS,
) -> EvalReport:
    """Score every method over the qrels queries at every cutoff.

    A query present in the qrels but absent from a run contributes zero
    to every mean and is counted in ``missing`` for that method.
    """
    unknown = set(metrics) - set(DEFAULT_METRICS)
    if unknown:
        raise ValueError(f"unknown metrics: {sorted(unknown)}")
    if not qrels:
        raise ValueError("empty qrels")
    cutoffs = tuple(cutoffs)
    methods = tuple(sorted(runs))
    report = EvalReport(
        cutoffs=cutoffs,
        methods=methods,
        metrics=tuple(metrics),
        n_queries=len(qrels),
    )
    qids = sorted(qrels)
    for method in methods:
        run = runs[method]
        report.missing[method] = sum(1 for qid in qids if qid not in run)
        per_metric: dict[str, list[float]] = {m: [] for m in metrics}
        for k in cutoffs:
            collected: dict[str, list[float]] = {m: [] for m in metrics}
            for qid in qids:
                if qid not in run:
                    for m in metrics:
                        collected[m].append(0.0)
                    continue
                retrieved = run[qid]
                relevant = qrels[qid]
                p, r, f1 = precision_recall_f1(retrieved, relevant, k)
                scores = {
                    "precision": p,
                    "recall": r,
                    "f1": f1,
                }
                if "map" in collected:
                    scores["map"] = average_precision(retrieved, relevant, k, "standard")
                if "map_by_k" in collected:
                    scores["map_by_k"] = average_precision(retrieved, relevant, k, "by_k")
                for m in metrics:
                    collected[m].append(scores[m])
            for m in metrics:
                per_metric[m].append(_mean(collected[m]))
        for m in metrics:
            report.values[(m, method)] = per_metric[m]
    return report


def write_qrels(path: str | Path, qrels: Qrels) -> None:
    """Four-column relevance file: query_id 0 pmid rel, rel fixed at 1."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for qid in sorted(qrels):
            for pmid in qrels[qid]:
                fh.write(f"{qid} 0 {pmid} 1\n")


def read_qrels(path: str | Path) -> Qrels:
    """Parse qrels; per-query order follows the file, rel <= 0 rows are skipped."""
    qrels: Qrels = {}
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: malformed qrels line")
            qid, _, pmid, rel = parts
            if int(rel) > 0:
                qrels.setdefault(qid, []).append(pmid)
    if not qrels:
        raise ValueError(f"{path}: no relevance judgments")
    return qrels
