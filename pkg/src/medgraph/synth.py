"""Synthetic bibliographic corpus with planted community structure.

Articles are split into communities.  Every community gets its own
authors, funded projects, MeSH descriptors, substances, and a pool of
planted entities; articles mention, cite, and share metadata only
within their community, so the knowledge graph has no cross-community
edges by construction.

``entity_leak_fraction`` controls how much of that hidden structure is
visible to a text-only method: it is the fraction of each community's
articles whose title/abstract text actually contains a planted entity's
surface form.  Graph connectivity comes from the mention table and does
not depend on it.

Every article of a community is relevant to each of that community's
planted entities.  The qrels order textual mentioners before
graph-only relations, so truncating them keeps the easy hits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .evaluation import Qrels, write_qrels
from .kg import GraphStats, make_node
from .tables import ENTITY_TYPES, write_table

FILLER_WORDS = (
    "analysis", "approach", "assessment", "association", "baseline", "clinical",
    "cohort", "comparison", "control", "criteria", "data", "design", "effect",
    "enrollment", "estimate", "evidence", "exposure", "factor", "finding",
    "followup", "framework", "group", "hypothesis", "incidence", "indicator",
    "intervention", "longitudinal", "measure", "mechanism", "method", "model",
    "observation", "outcome", "parameter", "patient", "population", "prevalence",
    "procedure", "profile", "protocol", "randomized", "rate", "ratio", "record",
    "reduction", "region", "registry", "report", "response", "result", "risk",
    "sample", "screening", "signal", "significance", "stage", "strategy",
    "subject", "surveillance", "survey", "threshold", "treatment", "trend",
    "trial", "validation", "variable", "variant",
)

_SYLLABLES = (
    "ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du",
    "fa", "fe", "fi", "fo", "fu", "ga", "ge", "gi", "go", "gu",
    "la", "le", "li", "lo", "lu", "ma", "me", "mi", "mo", "mu",
    "na", "ne", "ni", "no", "nu", "ra", "re", "ri", "ro", "ru",
    "sa", "se", "si", "so", "su", "ta", "te", "ti", "to", "tu",
    "va", "ve", "vi", "vo", "vu", "za", "ze", "zi", "zo", "zu",
)


@dataclass(frozen=True)
class SynthConfig:
    communities: int = 2
    articles_per_community: int = 50
    entities_per_community: int = 5
    entity_leak_fraction: float = 0.1
    mentions_per_article: int = 2
    authors_per_community: int = 8
    authors_per_article: int = 2
    projects_per_community: int = 2
    mesh_per_community: int = 3
    mesh_per_article: int = 1
    substances_per_community: int = 2
    citations_per_article: int = 3
    abstract_words: int = 30
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.communities < 1 or self.articles_per_community < 1:
            raise ValueError("need at least one community and one article")
        if self.entities_per_community < 1:
            raise ValueError("need at least one entity per community")
        if not 0.0 <= self.entity_leak_fraction <= 1.0:
            raise ValueError("entity_leak_fraction must lie in [0, 1]")
        if self.mentions_per_article < 1:
            raise ValueError("mentions_per_article must be at least 1")
        if self.authors_per_article > self.authors_per_community:
            raise ValueError("more authors per article than the community pool")
        if self.mesh_per_article > self.mesh_per_community:
            raise ValueError("more mesh links per article than the community pool")


@dataclass
class PlantedEntity:
    node_id: str
    entity_id: str
    entity_type: str
    surface: str
    community: int
    textual_pmids: list[str] = field(default_factory=list)
    relevant_pmids: list[str] = field(default_factory=list)

    @property
    def query_id(self) -> str:
        return f"q{self.entity_id}"


@dataclass
class SynthResult:
    out_dir: Path
    table_paths: dict[str, Path]
    queries_path: Path
    qrels_path: Path
    stats_path: Path
    stats: GraphStats
    entities: list[PlantedEntity]
    queries: dict[str, str]
    qrels: Qrels
    pmids: list[str]
    communities: dict[str, int]


def _coin(rng: np.random.Generator, used: set[str], syllables: int = 3) -> str:
    while True:
        word = "".join(
            _SYLLABLES[int(i)] for i in rng.integers(0, len(_SYLLABLES), syllables)
        )
        if word not in used and word not in FILLER_WORDS:
            used.add(word)
            return word


def generate(config: SynthConfig, out_dir: str | Path) -> SynthResult:
    """Write the seven tables, queries, qrels, and expected graph stats.

    Deterministic for a given config: one RNG seeded by ``rng_seed``
    drives every draw in a fixed order.
    """
    rng = np.random.default_rng(config.rng_seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    used_words: set[str] = set()

    n_comm = config.communities
    n_art = config.articles_per_community
    def pmid_of(comm: int, j: int) -> str:
        # pmids interleave across communities so ids do not encode membership
        return str(100000 + j * n_comm + comm)

    entities: list[PlantedEntity] = []
    for comm in range(n_comm):
        for k in range(config.entities_per_community):
            idx = comm * config.entities_per_community + k
            etype = ENTITY_TYPES[idx % len(ENTITY_TYPES)]
            eid = str(5000 + idx)
            surface = _coin(rng, used_words)
            entities.append(
                PlantedEntity(
                    node_id=make_node(etype, eid),
                    entity_id=eid,
                    entity_type=etype,
                    surface=surface,
                    community=comm,
                )
            )

    def community_entities(comm: int) -> list[PlantedEntity]:
        base = comm * config.entities_per_community
        return entities[base : base + config.entities_per_community]

    author_pool = {
        comm: [
            (str(9000 + comm * config.authors_per_community + a),
             f"{_coin(rng, used_words, 2).capitalize()} {_coin(rng, used_words, 2).capitalize()}")
            for a in range(config.authors_per_community)
        ]
        for comm in range(n_comm)
    }
    project_pool = {
        comm: [
            str(4000 + comm * config.projects_per_community + p)
            for p in range(config.projects_per_community)
        ]
        for comm in range(n_comm)
    }
    mesh_pool = {
        comm: [
            (f"D{comm * config.mesh_per_community + m:06d}", _coin(rng, used_words))
            for m in range(config.mesh_per_community)
        ]
        for comm in range(n_comm)
    }
    substance_pool = {
        comm: [
            (str(7000 + comm * config.substances_per_community + s),
             _coin(rng, used_words))
            for s in range(config.substances_per_community)
        ]
        for comm in range(n_comm)
    }

    # per-entity article indices whose text carries the surface form
    n_leak = math.ceil(config.entity_leak_fraction * n_art)
    leaked: dict[str, set[int]] = {}
    for entity in entities:
        if n_leak:
            picks = rng.choice(n_art, size=n_leak, replace=False)
            leaked[entity.entity_id] = {int(i) for i in picks}
        else:
            leaked[entity.entity_id] = set()

    article_rows: list[tuple[str, ...]] = []
    author_rows: list[tuple[str, ...]] = []
    mention_rows: list[tuple[str, ...]] = []
    reference_rows: list[tuple[str, ...]] = []
    nih_rows: list[tuple[str, ...]] = []
    mesh_rows: list[tuple[str, ...]] = []
    substance_rows: list[tuple[str, ...]] = []

    used_authors: dict[int, set[str]] = {c: set() for c in range(n_comm)}
    cite_pairs: set[frozenset[str]] = set()
    written_pairs: set[tuple[str, str]] = set()
    mention_pairs: dict[str, set[tuple[str, str]]] = {t: set() for t in ENTITY_TYPES}
    funded_pairs: set[tuple[str, str]] = set()
    mesh_pairs: set[tuple[str, str]] = set()
    substance_pairs: set[tuple[str, str]] = set()

    pmids: list[str] = []
    community_of: dict[str, int] = {}
    for comm in range(n_comm):
        pool = community_entities(comm)
        for j in range(n_art):
            pmid = pmid_of(comm, j)
            pmids.append(pmid)
            community_of[pmid] = comm

            words = [
                FILLER_WORDS[int(i)]
                for i in rng.integers(0, len(FILLER_WORDS), config.abstract_words)
            ]
            for entity in pool:
                if j in leaked[entity.entity_id]:
                    entity.textual_pmids.append(pmid)
                    for _ in range(2):
                        pos = int(rng.integers(0, len(words) + 1))
                        words.insert(pos, entity.surface)
            title = " ".join(
                FILLER_WORDS[int(i)] for i in rng.integers(0, len(FILLER_WORDS), 3)
            )
            date = f"20{16 + comm % 4}-{(j % 12) + 1:02d}-{(j % 28) + 1:02d}"
            article_rows.append((pmid, title, " ".join(words), date))

            for t in range(config.authors_per_article):
                aid, name = author_pool[comm][(j + t) % config.authors_per_community]
                author_rows.append((pmid, aid, name))
                used_authors[comm].add(aid)
                written_pairs.add((pmid, aid))

            for t in range(config.mentions_per_article):
                entity = pool[(j + t) % len(pool)]
                mention_rows.append(
                    (pmid, entity.surface, entity.entity_id, entity.entity_type)
                )
                mention_pairs[entity.entity_type].add((pmid, entity.entity_id))

            project = project_pool[comm][j % config.projects_per_community]
            nih_rows.append((pmid, project))
            funded_pairs.add((pmid, project))

            for t in range(config.mesh_per_article):
                mesh_id, term = mesh_pool[comm][(j + t) % config.mesh_per_community]
                mesh_rows.append((pmid, mesh_id, term))
                mesh_pairs.add((pmid, mesh_id))

            sub_id, sub_name = substance_pool[comm][j % config.substances_per_community]
            substance_rows.append((pmid, sub_id, sub_name))
            substance_pairs.add((pmid, sub_id))

            if j > 0:
                n_cites = min(config.citations_per_article, j)
                targets = rng.choice(j, size=n_cites, replace=False)
                for target in sorted(int(t) for t in targets):
                    ref = pmid_of(comm, target)
                    reference_rows.append((pmid, ref))
                    cite_pairs.add(frozenset((pmid, ref)))

    for entity in entities:
        comm_pmids = [pmid_of(entity.community, j) for j in range(n_art)]
        textual = sorted(entity.textual_pmids, key=int)
        rest = sorted((p for p in comm_pmids if p not in set(textual)), key=int)
        entity.textual_pmids = textual
        entity.relevant_pmids = textual + rest

    table_paths = {name: out_dir / f"{name}.tsv" for name in (
        "articles", "authors", "mentions", "references",
        "nih_links", "mesh_links", "substance_links",
    )}
    write_table(table_paths["articles"], "articles", article_rows)
    write_table(table_paths["authors"], "authors", author_rows)
    write_table(table_paths["mentions"], "mentions", mention_rows)
    write_table(table_paths["references"], "references", reference_rows)
    write_table(table_paths["nih_links"], "nih_links", nih_rows)
    write_table(table_paths["mesh_links"], "mesh_links", mesh_rows)
    write_table(table_paths["substance_links"], "substance_links", substance_rows)

    mentioned = {eid for pairs in mention_pairs.values() for _, eid in pairs}
    queryable = [e for e in entities if e.entity_id in mentioned]
    queries = {e.query_id: f"retrieve {e.surface}" for e in queryable}
    queries_path = out_dir / "queries.tsv"
    with queries_path.open("w", encoding="utf-8") as fh:
        fh.write("query_id\ttext\n")
        for qid in sorted(queries):
            fh.write(f"{qid}\t{queries[qid]}\n")

    qrels: Qrels = {e.query_id: list(e.relevant_pmids) for e in queryable}
    qrels_path = out_dir / "qrels.txt"
    write_qrels(qrels_path, qrels)

    type_counts = {
        t: len({eid for _, eid in mention_pairs[t]}) for t in ENTITY_TYPES
    }
    stats = GraphStats(
        node_counts={
            "article": n_comm * n_art,
            "author": sum(len(a) for a in used_authors.values()),
            "chemical_substance": len({s for _, s in substance_pairs}),
            "mesh_term": len({m for _, m in mesh_pairs}),
            "nih_project": len({p for _, p in funded_pairs}),
            **type_counts,
        },
        edge_counts={
            "cites": len(cite_pairs),
            "writtenBy": len(written_pairs),
            "mentionsDisease": len(mention_pairs["disease"]),
            "mentionsDrug": len(mention_pairs["drug"]),
            "mentionsGene": len(mention_pairs["gene"]),
            "mentionsSpecies": len(mention_pairs["species"]),
            "fundedBy": len(funded_pairs),
            "relatedToMeSH": len(mesh_pairs),
            "relatedToSubstance": len(substance_pairs),
        },
    )
    stats_path = out_dir / "expected_stats.tsv"
    with stats_path.open("w", encoding="utf-8") as fh:
        for line in stats.lines():
            fh.write(line + "\n")

    return SynthResult(
        out_dir=out_dir,
        table_paths=table_paths,
        queries_path=queries_path,
        qrels_path=qrels_path,
        stats_path=stats_path,
        stats=stats,
        entities=entities,
        queries=queries,
        qrels=qrels,
        pmids=pmids,
        communities=community_of,
    )


def read_queries(path: str | Path) -> dict[str, str]:
    """Parse a queries.tsv written by :func:`generate`."""
    queries: dict[str, str] = {}
    with Path(path).open(encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header != ["query_id", "text"]:
            raise ValueError(f"{path}: malformed queries header")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: malformed query line")
            queries[parts[0]] = parts[1]
    return queries
