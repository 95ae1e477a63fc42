"""Two-stage neighborhood pooling of article vectors.

Stage one averages each article's raw embedding neighborhood: the
vectors of its distinct graph neighbors of any type, plus its own by
default.  Stage two averages the stage-one vectors of the articles it
cites or is cited by, excluding itself by default, which makes the
final representation lean on the citation structure.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .kg import KnowledgeGraph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PoolingConfig:
    include_self_stage1: bool = True
    include_self_stage2: bool = False


def _mean_rows(rows: Sequence[np.ndarray]) -> np.ndarray:
    return np.mean(np.asarray(rows, dtype=np.float64), axis=0)


def pool_stage1(
    graph: KnowledgeGraph,
    embeddings,
    config: PoolingConfig = PoolingConfig(),
    articles: Sequence[str] | None = None,
) -> dict[str, np.ndarray]:
    """Neighborhood mean of raw embeddings for each article node.

    ``embeddings`` is anything with a ``vector(node_id)`` method holding
    every graph node.  An article with no neighbors (and self excluded)
    falls back to its own raw embedding.
    """
    if articles is None:
        articles = graph.nodes_of_type("article")
    pooled: dict[str, np.ndarray] = {}
    fallbacks = 0
    for article in articles:
        rows = [np.asarray(embeddings.vector(n), dtype=np.float64) for n in graph.neighbors(article)]
        if config.include_self_stage1:
            rows.append(np.asarray(embeddings.vector(article), dtype=np.float64))
        if not rows:
            rows = [np.asarray(embeddings.vector(article), dtype=np.float64)]
            fallbacks += 1
        pooled[article] = _mean_rows(rows)
    if fallbacks:
        logger.warning("stage1: %d articles had no neighbors, kept raw vectors", fallbacks)
    return pooled


def pool_stage2(
    graph: KnowledgeGraph,
    stage1: Mapping[str, np.ndarray],
    config: PoolingConfig = PoolingConfig(),
    articles: Sequence[str] | None = None,
) -> dict[str, np.ndarray]:
    """Mean of stage-one vectors across each article's citation neighbors.

    Citation neighbors are graph neighbors joined by a cites edge, in
    either direction.  With no citation neighbors (and self excluded)
    the stage-one vector carries over unchanged.
    """
    if articles is None:
        articles = graph.nodes_of_type("article")
    pooled: dict[str, np.ndarray] = {}
    fallbacks = 0
    for article in articles:
        rows = [
            np.asarray(stage1[n], dtype=np.float64)
            for n in graph.neighbors(article)
            if graph.edge_type(article, n) == "cites"
        ]
        if config.include_self_stage2:
            rows.append(np.asarray(stage1[article], dtype=np.float64))
        if not rows:
            rows = [np.asarray(stage1[article], dtype=np.float64)]
            fallbacks += 1
        pooled[article] = _mean_rows(rows)
    if fallbacks:
        logger.warning("stage2: %d articles had no citation neighbors", fallbacks)
    return pooled
