"""Shared fixtures: table builders and a small reference graph."""
from __future__ import annotations

import pytest

from medgraph.kg import KnowledgeGraph, article_node
from medgraph.tables import (
    ArticleRow,
    AuthorRow,
    MentionRow,
    MeshLinkRow,
    NihLinkRow,
    ReferenceRow,
    RelationalTables,
    SubstanceLinkRow,
)


def make_tables(
    articles=(),
    authors=(),
    mentions=(),
    references=(),
    nih_links=(),
    mesh_links=(),
    substance_links=(),
) -> RelationalTables:
    tables = RelationalTables()
    tables.articles.extend(ArticleRow(*r) for r in articles)
    tables.authors.extend(AuthorRow(*r) for r in authors)
    tables.mentions.extend(MentionRow(*r) for r in mentions)
    tables.references.extend(ReferenceRow(*r) for r in references)
    tables.nih_links.extend(NihLinkRow(*r) for r in nih_links)
    tables.mesh_links.extend(MeshLinkRow(*r) for r in mesh_links)
    tables.substance_links.extend(SubstanceLinkRow(*r) for r in substance_links)
    return tables


@pytest.fixture
def walk_graph() -> KnowledgeGraph:
    """Five articles: edges 1-2, 1-3, 2-3, 3-4, 4-5, 2-5."""
    graph = KnowledgeGraph()
    for pair in ((1, 2), (1, 3), (2, 3), (3, 4), (4, 5), (2, 5)):
        graph.add_edge(article_node(str(pair[0])), article_node(str(pair[1])), "cites")
    return graph
