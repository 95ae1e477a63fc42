"""Typed knowledge graph built from the relational tables.

Nodes are strings of the form ``type/namespace/localid`` (for example
``article/pmid/652148`` or ``drug/eid/1256``).  Edges are undirected and
typed; every relation has the article as its subject, so a triple file
can be rebuilt into the same graph regardless of row order.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

from .tables import ENTITY_TYPES, RelationalTables

logger = logging.getLogger(__name__)

NODE_NAMESPACES: dict[str, str] = {
    "article": "pmid",
    "author": "aid",
    "nih_project": "project_id",
    "mesh_term": "mesh_id",
    "chemical_substance": "substance_id",
    "disease": "eid",
    "drug": "eid",
    "gene": "eid",
    "species": "eid",
}

NODE_TYPES = frozenset(NODE_NAMESPACES)

# predicate -> (subject type, object type); subjects are always articles
EDGE_TYPES: dict[str, tuple[str, str]] = {
    "cites": ("article", "article"),
    "writtenBy": ("article", "author"),
    "mentionsDisease": ("article", "disease"),
    "mentionsDrug": ("article", "drug"),
    "mentionsGene": ("article", "gene"),
    "mentionsSpecies": ("article", "species"),
    "fundedBy": ("article", "nih_project"),
    "relatedToMeSH": ("article", "mesh_term"),
    "relatedToSubstance": ("article", "chemical_substance"),
}

MENTION_PREDICATES = {kind: f"mentions{kind.capitalize()}" for kind in ENTITY_TYPES}


def make_node(node_type: str, local_id: str) -> str:
    """Build the canonical ``type/namespace/localid`` identifier."""
    try:
        namespace = NODE_NAMESPACES[node_type]
    except KeyError:
        raise ValueError(f"unknown node type {node_type!r}") from None
    if not local_id or "/" in local_id:
        raise ValueError(f"bad local id {local_id!r}")
    return f"{node_type}/{namespace}/{local_id}"


def parse_node(node_id: str) -> tuple[str, str, str]:
    """Split a node identifier into (type, namespace, local id).

    Raises ValueError unless the string is exactly three non-empty
    slash-delimited parts with a known type and its matching namespace.
    """
    parts = node_id.split("/")
    if len(parts) != 3 or not all(parts):
        raise ValueError(f"malformed node id {node_id!r}")
    node_type, namespace, local_id = parts
    expected = NODE_NAMESPACES.get(node_type)
    if expected is None:
        raise ValueError(f"unknown node type in {node_id!r}")
    if namespace != expected:
        raise ValueError(f"node id {node_id!r} should use namespace {expected!r}")
    return node_type, namespace, local_id


def node_type_of(node_id: str) -> str:
    return parse_node(node_id)[0]


def article_node(pmid: str) -> str:
    return make_node("article", pmid)


class Triple(NamedTuple):
    subject: str
    predicate: str
    object: str


class KnowledgeGraph:
    """Undirected multityped graph with at most one edge per node pair."""

    def __init__(self) -> None:
        self._types: dict[str, str] = {}
        self._adj: dict[str, dict[str, str]] = {}
        self._edge_count = 0
        self._sorted_neighbors: dict[str, tuple[str, ...]] = {}

    def add_node(self, node_id: str) -> None:
        node_type = node_type_of(node_id)
        if node_id not in self._types:
            self._types[node_id] = node_type
            self._adj[node_id] = {}

    def add_edge(self, u: str, v: str, edge_type: str) -> None:
        """Insert an undirected typed edge; duplicates and self-loops are dropped."""
        if edge_type not in EDGE_TYPES:
            raise ValueError(f"unknown edge type {edge_type!r}")
        if u == v:
            logger.debug("dropping self-loop on %s", u)
            return
        self.add_node(u)
        self.add_node(v)
        if v in self._adj[u]:
            return
        self._adj[u][v] = edge_type
        self._adj[v][u] = edge_type
        self._edge_count += 1
        self._sorted_neighbors.pop(u, None)
        self._sorted_neighbors.pop(v, None)

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._types

    def __len__(self) -> int:
        return len(self._types)

    @property
    def edge_count(self) -> int:
        return self._edge_count

    def node_type(self, node_id: str) -> str:
        return self._types[node_id]

    def nodes(self) -> Iterator[str]:
        return iter(self._types)

    def sorted_nodes(self) -> list[str]:
        return sorted(self._types)

    def nodes_of_type(self, node_type: str) -> list[str]:
        return sorted(n for n, t in self._types.items() if t == node_type)

    def degree(self, node_id: str) -> int:
        return len(self._adj[node_id])

    def neighbors(self, node_id: str) -> tuple[str, ...]:
        """Neighbors in sorted order; cached between mutations."""
        cached = self._sorted_neighbors.get(node_id)
        if cached is None:
            cached = tuple(sorted(self._adj[node_id]))
            self._sorted_neighbors[node_id] = cached
        return cached

    def has_edge(self, u: str, v: str) -> bool:
        return v in self._adj.get(u, ())

    def edge_type(self, u: str, v: str) -> str:
        try:
            return self._adj[u][v]
        except KeyError:
            raise KeyError(f"no edge between {u!r} and {v!r}") from None

    def edges(self) -> Iterator[tuple[str, str, str]]:
        """Each undirected edge once, endpoints in sorted order."""
        for u, nbrs in self._adj.items():
            for v, etype in nbrs.items():
                if u < v:
                    yield u, v, etype

    def triples(self) -> list[Triple]:
        """Edges as article-subject triples, sorted for stable output."""
        out = []
        for u, v, etype in self.edges():
            subj_type = EDGE_TYPES[etype][0]
            if self._types[u] == subj_type:
                out.append(Triple(u, etype, v))
            else:
                out.append(Triple(v, etype, u))
        out.sort()
        return out


def expand_citations(tables: RelationalTables, seeds: Iterable[str]) -> set[str]:
    """Close a seed pmid set over one hop of the citation table, both directions."""
    scope = set(seeds)
    expanded = set(scope)
    for row in tables.references:
        if row.pmid in scope:
            expanded.add(row.ref_pmid)
        if row.ref_pmid in scope:
            expanded.add(row.pmid)
    return expanded


def extract_triples(tables: RelationalTables, scope: Iterable[str]) -> list[Triple]:
    """Turn table rows for in-scope articles into deduplicated typed triples.

    Citation triples are kept only when both endpoints are in scope;
    self-citations are dropped.
    """
    in_scope = set(scope)
    triples: list[Triple] = []
    seen: set[Triple] = set()

    def emit(subject: str, predicate: str, obj: str) -> None:
        triple = Triple(subject, predicate, obj)
        if triple not in seen:
            seen.add(triple)
            triples.append(triple)

    for author in tables.authors:
        if author.pmid in in_scope:
            emit(article_node(author.pmid), "writtenBy", make_node("author", author.aid))
    for mention in tables.mentions:
        if mention.pmid in in_scope:
            predicate = MENTION_PREDICATES[mention.entity_type]
            emit(
                article_node(mention.pmid),
                predicate,
                make_node(mention.entity_type, mention.entity_id),
            )
    for link in tables.nih_links:
        if link.pmid in in_scope:
            emit(article_node(link.pmid), "fundedBy", make_node("nih_project", link.project_id))
    for link in tables.mesh_links:
        if link.pmid in in_scope:
            emit(article_node(link.pmid), "relatedToMeSH", make_node("mesh_term", link.mesh_id))
    for link in tables.substance_links:
        if link.pmid in in_scope:
            emit(
                article_node(link.pmid),
                "relatedToSubstance",
                make_node("chemical_substance", link.substance_id),
            )
    for ref in tables.references:
        if ref.pmid in in_scope and ref.ref_pmid in in_scope and ref.pmid != ref.ref_pmid:
            emit(article_node(ref.pmid), "cites", article_node(ref.ref_pmid))
    return triples


def build_graph(triples: Iterable[Triple], scope: Iterable[str] = ()) -> KnowledgeGraph:
    """Assemble the undirected graph from triples.

    Predicates must connect the node types they declare, article first.
    Scope pmids, if given, add article nodes even when no triple touches
    them, so fully isolated articles stay in the graph.
    """
    graph = KnowledgeGraph()
    for pmid in scope:
        graph.add_node(article_node(pmid))
    for subject, predicate, obj in triples:
        expected = EDGE_TYPES.get(predicate)
        if expected is None:
            raise ValueError(f"unknown predicate {predicate!r}")
        subj_type = node_type_of(subject)
        obj_type = node_type_of(obj)
        if (subj_type, obj_type) != expected:
            raise ValueError(
                f"triple ({subject}, {predicate}, {obj}) connects "
                f"({subj_type}, {obj_type}), expected {expected}"
            )
        graph.add_edge(subject, obj, predicate)
    return graph


@dataclass
class GraphStats:
    """Node counts per type and edge counts per relation."""

    node_counts: dict[str, int] = field(default_factory=dict)
    edge_counts: dict[str, int] = field(default_factory=dict)

    @property
    def total_nodes(self) -> int:
        return sum(self.node_counts.values())

    @property
    def total_edges(self) -> int:
        return sum(self.edge_counts.values())

    def lines(self) -> list[str]:
        out = [f"nodes\ttotal\t{self.total_nodes}"]
        out += [f"nodes\t{t}\t{self.node_counts[t]}" for t in sorted(self.node_counts)]
        out.append(f"edges\ttotal\t{self.total_edges}")
        out += [f"edges\t{t}\t{self.edge_counts[t]}" for t in sorted(self.edge_counts)]
        return out


def graph_stats(graph: KnowledgeGraph) -> GraphStats:
    """Census of the graph; every known type appears even at count zero."""
    stats = GraphStats(
        node_counts={t: 0 for t in sorted(NODE_TYPES)},
        edge_counts={t: 0 for t in sorted(EDGE_TYPES)},
    )
    for node in graph.nodes():
        stats.node_counts[graph.node_type(node)] += 1
    for _, _, etype in graph.edges():
        stats.edge_counts[etype] += 1
    return stats


def write_triples(path: str | Path, triples: Sequence[Triple]) -> None:
    """Three-column TSV, one triple per line, no header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for triple in triples:
            fh.write(f"{triple.subject}\t{triple.predicate}\t{triple.object}\n")


def read_triples(path: str | Path) -> list[Triple]:
    triples = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 columns, got {len(parts)}")
            triples.append(Triple(*parts))
    return triples
