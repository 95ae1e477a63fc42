"""Loading and validation of the tab-separated bibliographic tables.

Seven tables feed the graph builder: articles, authors, entity mentions,
citation references, funding links, MeSH descriptor links, and chemical
substance links.  Each file is headered TSV.  Malformed rows are skipped
and counted rather than aborting the load.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

logger = logging.getLogger(__name__)

ENTITY_TYPES = ("disease", "drug", "gene", "species")

TABLE_COLUMNS: dict[str, tuple[str, ...]] = {
    "articles": ("pmid", "title", "abstract", "completion_date"),
    "authors": ("pmid", "aid", "display_name"),
    "mentions": ("pmid", "surface_form", "entity_id", "entity_type"),
    "references": ("pmid", "ref_pmid"),
    "nih_links": ("pmid", "project_id"),
    "mesh_links": ("pmid", "mesh_id", "term"),
    "substance_links": ("pmid", "substance_id", "name"),
}


class ArticleRow(NamedTuple):
    pmid: str
    title: str
    abstract: str
    completion_date: str


class AuthorRow(NamedTuple):
    pmid: str
    aid: str
    display_name: str


class MentionRow(NamedTuple):
    pmid: str
    surface_form: str
    entity_id: str
    entity_type: str


class ReferenceRow(NamedTuple):
    pmid: str
    ref_pmid: str


class NihLinkRow(NamedTuple):
    pmid: str
    project_id: str


class MeshLinkRow(NamedTuple):
    pmid: str
    mesh_id: str
    term: str


class SubstanceLinkRow(NamedTuple):
    pmid: str
    substance_id: str
    name: str


_ROW_TYPES = {
    "articles": ArticleRow,
    "authors": AuthorRow,
    "mentions": MentionRow,
    "references": ReferenceRow,
    "nih_links": NihLinkRow,
    "mesh_links": MeshLinkRow,
    "substance_links": SubstanceLinkRow,
}


@dataclass
class RelationalTables:
    """In-memory image of the seven input tables plus per-table skip counts."""

    articles: list[ArticleRow] = field(default_factory=list)
    authors: list[AuthorRow] = field(default_factory=list)
    mentions: list[MentionRow] = field(default_factory=list)
    references: list[ReferenceRow] = field(default_factory=list)
    nih_links: list[NihLinkRow] = field(default_factory=list)
    mesh_links: list[MeshLinkRow] = field(default_factory=list)
    substance_links: list[SubstanceLinkRow] = field(default_factory=list)
    malformed: dict[str, int] = field(default_factory=dict)

    def rows(self, table: str) -> list:
        if table not in TABLE_COLUMNS:
            raise KeyError(f"unknown table {table!r}")
        return getattr(self, table)

    def article_pmids(self) -> set[str]:
        return {row.pmid for row in self.articles}


def _row_is_valid(table: str, row: tuple[str, ...]) -> bool:
    # pmid columns must be decimal strings; entity_type must be a known kind
    if not row[0].isdigit():
        return False
    if table == "references" and not row[1].isdigit():
        return False
    if table == "mentions":
        if not row[1]:
            return False
        if row[3] not in ENTITY_TYPES:
            return False
    if table in ("authors", "nih_links", "mesh_links", "substance_links") and not row[1]:
        return False
    return True


def table_paths(directory: str | Path) -> dict[str, Path]:
    """Map each table name to ``<directory>/<name>.tsv``."""
    directory = Path(directory)
    return {name: directory / f"{name}.tsv" for name in TABLE_COLUMNS}


def load_tables(paths: Mapping[str, str | Path]) -> RelationalTables:
    """Read the seven TSV tables into a :class:`RelationalTables`.

    Every table must be present in ``paths`` and on disk.  A row with the
    wrong column count, a non-numeric pmid, an empty key field, or an
    unknown entity type is skipped and counted in ``malformed``.
    """
    missing = sorted(set(TABLE_COLUMNS) - set(paths))
    if missing:
        raise ValueError(f"missing tables: {', '.join(missing)}")
    tables = RelationalTables()
    for name in TABLE_COLUMNS:
        path = Path(paths[name])
        if not path.is_file():
            raise FileNotFoundError(f"table {name!r} not found at {path}")
        rows = tables.rows(name)
        row_type = _ROW_TYPES[name]
        width = len(TABLE_COLUMNS[name])
        skipped = 0
        with path.open(encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split("\t")
            if tuple(header) != TABLE_COLUMNS[name]:
                raise ValueError(
                    f"table {name!r} has header {header}, "
                    f"expected {list(TABLE_COLUMNS[name])}"
                )
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != width or not _row_is_valid(name, tuple(parts)):
                    skipped += 1
                    continue
                rows.append(row_type(*parts))
        tables.malformed[name] = skipped
        if skipped:
            logger.warning("table %s: skipped %d malformed rows", name, skipped)
    return tables


def write_table(path: str | Path, name: str, rows: Iterable[Sequence[str]]) -> None:
    """Write one headered TSV table; the inverse of :func:`load_tables`."""
    columns = TABLE_COLUMNS[name]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("\t".join(columns) + "\n")
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row {row!r} does not fit table {name!r}")
            fh.write("\t".join(row) + "\n")


def article_text(row: ArticleRow) -> str:
    """Title and abstract joined; the searchable text of an article."""
    return f"{row.title} {row.abstract}".strip()
