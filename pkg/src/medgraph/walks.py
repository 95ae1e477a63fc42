"""Biased second-order random walks over the knowledge graph.

The step from ``cur`` with predecessor ``prev`` weights each neighbor x
by 1/p when x is prev (return), 1 when x is adjacent to prev (stay
near), and 1/q otherwise (move away).  Small q pushes walks outward.
The first step from each start node is uniform.  Edge types play no
role; the walk sees an unweighted undirected graph.

Every walk draws from its own RNG stream derived from (seed, node
index, walk index), so corpora are reproducible and independent of
scheduling order.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kg import KnowledgeGraph


@dataclass(frozen=True)
class WalkConfig:
    p: float = 2.0
    q: float = 0.5
    walk_length: int = 50
    walks_per_node: int = 5
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.p <= 0 or self.q <= 0:
            raise ValueError("p and q must be positive")
        if self.walk_length < 1:
            raise ValueError("walk_length must be at least 1")
        if self.walks_per_node < 1:
            raise ValueError("walks_per_node must be at least 1")


def transition_weights(
    graph: KnowledgeGraph, prev: str, cur: str, config: WalkConfig
) -> dict[str, float]:
    """Unnormalized weight for each neighbor of ``cur`` given ``prev``."""
    weights: dict[str, float] = {}
    for node in graph.neighbors(cur):
        if node == prev:
            weights[node] = 1.0 / config.p
        elif graph.has_edge(node, prev):
            weights[node] = 1.0
        else:
            weights[node] = 1.0 / config.q
    return weights


def transition_distribution(
    graph: KnowledgeGraph, prev: str, cur: str, config: WalkConfig
) -> dict[str, float]:
    """Transition weights normalized to a probability distribution."""
    weights = transition_weights(graph, prev, cur, config)
    total = sum(weights.values())
    return {node: w / total for node, w in weights.items()}


@dataclass
class WalkCorpus:
    """A list of node-id walks; the training corpus for the embedder."""

    walks: list[list[str]]

    def __len__(self) -> int:
        return len(self.walks)

    def token_count(self) -> int:
        return sum(len(w) for w in self.walks)

    def vocabulary(self) -> list[str]:
        return sorted({node for walk in self.walks for node in walk})

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            for walk in self.walks:
                fh.write(" ".join(walk) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "WalkCorpus":
        walks = []
        with Path(path).open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    walks.append(line.split(" "))
        return cls(walks=walks)


def _single_walk(
    graph: KnowledgeGraph,
    start: str,
    config: WalkConfig,
    rng: np.random.Generator,
) -> list[str]:
    walk = [start]
    if config.walk_length == 1 or graph.degree(start) == 0:
        return walk
    unbiased = config.p == 1.0 and config.q == 1.0
    inv_p = 1.0 / config.p
    inv_q = 1.0 / config.q
    prev: str | None = None
    cur = start
    while len(walk) < config.walk_length:
        nbrs = graph.neighbors(cur)
        if prev is None or unbiased:
            nxt = nbrs[int(rng.integers(len(nbrs)))]
        else:
            weights = np.empty(len(nbrs), dtype=np.float64)
            for i, node in enumerate(nbrs):
                if node == prev:
                    weights[i] = inv_p
                elif graph.has_edge(node, prev):
                    weights[i] = 1.0
                else:
                    weights[i] = inv_q
            cumulative = np.cumsum(weights)
            draw = rng.random() * cumulative[-1]
            nxt = nbrs[int(np.searchsorted(cumulative, draw, side="right"))]
        walk.append(nxt)
        prev, cur = cur, nxt
    return walk


def generate_walks(graph: KnowledgeGraph, config: WalkConfig) -> WalkCorpus:
    """``walks_per_node`` walks from every node, in sorted node order.

    Isolated nodes yield single-node walks, so every node of the graph
    appears in the corpus.  Walk (i, j) always uses the RNG stream
    seeded by (rng_seed, i, j), regardless of how many nodes exist.
    """
    walks: list[list[str]] = []
    for node_index, node in enumerate(graph.sorted_nodes()):
        for walk_index in range(config.walks_per_node):
            seed = np.random.SeedSequence((config.rng_seed, node_index, walk_index))
            rng = np.random.default_rng(seed)
            walks.append(_single_walk(graph, node, config, rng))
    return WalkCorpus(walks=walks)
