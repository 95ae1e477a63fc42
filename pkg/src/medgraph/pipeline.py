"""Stage-by-stage retrieval pipeline with a file manifest.

A work directory accumulates eight artifacts: scope, targets, triples,
walks, embeddings, stage1_vectors, stage2_vectors, and index.  The
manifest records where each artifact lives plus the configuration that
produced it, as sorted key=value lines.  Stages run independently, so
an interrupted build can resume; rerunning the whole pipeline on the
same inputs reproduces every artifact byte for byte.
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .entity_index import EntityIndex, build_index
from .kg import KnowledgeGraph, build_graph, expand_citations, extract_triples, graph_stats, read_triples, write_triples
from .pooling import PoolingConfig, pool_stage1, pool_stage2
from .query import DEFAULT_THRESHOLD, QueryMatch, embed_query, match_text
from .ranker import RankedList, rank
from .sgns import EmbeddingMatrix, TrainConfig, read_vectors, train, write_vectors
from .tables import RelationalTables, article_text, load_tables, table_paths
from .walks import WalkConfig, WalkCorpus, generate_walks

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.txt"
DATA_DIR_ENV = "MEDGRAPH_DATA_DIR"

ARTIFACT_FILES = {
    "scope": "scope.txt",
    "targets": "targets.txt",
    "triples": "triples.tsv",
    "walks": "walks.txt",
    "embeddings": "embeddings.txt",
    "stage1_vectors": "stage1_vectors.txt",
    "stage2_vectors": "stage2_vectors.txt",
    "index": "index.tsv",
}

_PRODUCED_BY = {
    "scope": "ingest",
    "targets": "ingest",
    "triples": "build-kg",
    "walks": "walks",
    "embeddings": "train",
    "stage1_vectors": "pool",
    "stage2_vectors": "pool",
    "index": "index",
}


class PipelineError(RuntimeError):
    """A stage cannot run: missing artifact, bad input, or failed step."""


def default_work_dir() -> Path:
    """Work directory root; the MEDGRAPH_DATA_DIR variable overrides it."""
    return Path(os.environ.get(DATA_DIR_ENV, "medgraph_data"))


@dataclass
class Manifest:
    directory: Path
    values: dict[str, str] = field(default_factory=dict)

    @property
    def path(self) -> Path:
        return self.directory / MANIFEST_NAME

    def set(self, key: str, value) -> None:
        if "=" in key or "\n" in key:
            raise ValueError(f"bad manifest key {key!r}")
        self.values[key] = str(value)

    def get(self, key: str, default: str | None = None) -> str | None:
        return self.values.get(key, default)

    def set_artifact(self, name: str, path: Path) -> None:
        if name not in ARTIFACT_FILES:
            raise ValueError(f"unknown artifact {name!r}")
        self.set(f"artifact.{name}", os.path.relpath(path, self.directory))

    def artifact(self, name: str) -> Path:
        if name not in ARTIFACT_FILES:
            raise ValueError(f"unknown artifact {name!r}")
        value = self.values.get(f"artifact.{name}")
        if value is None:
            raise PipelineError(
                f"artifact {name!r} missing from manifest; "
                f"run the {_PRODUCED_BY[name]} stage first"
            )
        path = self.directory / value
        if not path.is_file():
            raise PipelineError(f"artifact {name!r} not found at {path}")
        return path

    def snapshot(self, prefix: str, config) -> None:
        """Record every field of a config dataclass under ``prefix``."""
        for name, value in sorted(vars(config).items()):
            self.set(f"config.{prefix}.{name}", value)

    def save(self) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        with self.path.open("w", encoding="utf-8") as fh:
            for key in sorted(self.values):
                fh.write(f"{key}={self.values[key]}\n")

    @classmethod
    def load(cls, directory: str | Path) -> "Manifest":
        directory = Path(directory)
        manifest = cls(directory=directory)
        path = manifest.path
        if not path.is_file():
            raise PipelineError(f"no manifest at {path}; run ingest first")
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                key, sep, value = line.partition("=")
                if not sep or not key:
                    raise PipelineError(f"{path}:{lineno}: malformed manifest line")
                manifest.values[key] = value
        return manifest

    @classmethod
    def open_or_create(cls, directory: str | Path) -> "Manifest":
        directory = Path(directory)
        if (directory / MANIFEST_NAME).is_file():
            return cls.load(directory)
        return cls(directory=directory)


def _write_pmids(path: Path, pmids: Iterable[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for pmid in sorted(pmids, key=int):
            fh.write(pmid + "\n")


def read_pmids(path: Path) -> list[str]:
    with path.open(encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def _load_manifest_tables(manifest: Manifest) -> RelationalTables:
    tables_dir = manifest.get("meta.tables_dir")
    if tables_dir is None:
        raise PipelineError("manifest lacks meta.tables_dir; run ingest first")
    return load_tables(table_paths(tables_dir))


def stage_ingest(
    work_dir: str | Path,
    tables_dir: str | Path,
    seeds: Iterable[str] | None = None,
) -> Manifest:
    """Load tables, fix the target set, and close it over one citation hop.

    ``seeds`` defaults to every article in the corpus.  Scope drops
    cited pmids that have no row in the articles table.
    """
    work_dir = Path(work_dir)
    tables = load_tables(table_paths(tables_dir))
    known = tables.article_pmids()
    if not known:
        raise PipelineError("articles table is empty")
    if seeds is None:
        seed_list = sorted(known, key=int)
    else:
        seed_list = sorted(set(seeds), key=int)
        unknown = [s for s in seed_list if s not in known]
        if unknown:
            raise PipelineError(f"unknown seed pmids: {', '.join(unknown[:5])}")
        if not seed_list:
            raise PipelineError("empty seed list")
    scope = expand_citations(tables, seed_list) & known
    manifest = Manifest.open_or_create(work_dir)
    manifest.set("meta.tables_dir", Path(tables_dir).resolve())
    scope_path = work_dir / ARTIFACT_FILES["scope"]
    targets_path = work_dir / ARTIFACT_FILES["targets"]
    _write_pmids(scope_path, scope)
    _write_pmids(targets_path, seed_list)
    manifest.set_artifact("scope", scope_path)
    manifest.set_artifact("targets", targets_path)
    manifest.set("meta.scope_size", len(scope))
    manifest.set("meta.target_size", len(seed_list))
    manifest.save()
    logger.info("ingest: %d targets, %d articles in scope", len(seed_list), len(scope))
    return manifest


def stage_build_kg(work_dir: str | Path) -> Manifest:
    """Extract triples for the scoped articles and write them sorted."""
    manifest = Manifest.load(work_dir)
    tables = _load_manifest_tables(manifest)
    scope = read_pmids(manifest.artifact("scope"))
    triples = extract_triples(tables, scope)
    graph = build_graph(triples, scope=scope)
    triples_path = manifest.directory / ARTIFACT_FILES["triples"]
    write_triples(triples_path, graph.triples())
    manifest.set_artifact("triples", triples_path)
    stats = graph_stats(graph)
    with (manifest.directory / "graph_stats.tsv").open("w", encoding="utf-8") as fh:
        for line in stats.lines():
            fh.write(line + "\n")
    manifest.set("meta.nodes", len(graph))
    manifest.set("meta.edges", graph.edge_count)
    manifest.save()
    logger.info("build-kg: %d nodes, %d edges", len(graph), graph.edge_count)
    return manifest


def _load_graph(manifest: Manifest) -> KnowledgeGraph:
    triples = read_triples(manifest.artifact("triples"))
    scope = read_pmids(manifest.artifact("scope"))
    return build_graph(triples, scope=scope)


def stage_walks(work_dir: str | Path, config: WalkConfig = WalkConfig()) -> Manifest:
    """Generate the walk corpus from the stored triples."""
    manifest = Manifest.load(work_dir)
    graph = _load_graph(manifest)
    corpus = generate_walks(graph, config)
    walks_path = manifest.directory / ARTIFACT_FILES["walks"]
    corpus.save(walks_path)
    manifest.set_artifact("walks", walks_path)
    manifest.snapshot("walks", config)
    manifest.save()
    logger.info("walks: %d walks, %d tokens", len(corpus), corpus.token_count())
    return manifest


def stage_train(
    work_dir: str | Path,
    config: TrainConfig = TrainConfig(),
    threads: int = 1,
) -> Manifest:
    """Train node embeddings on the stored walk corpus."""
    manifest = Manifest.load(work_dir)
    corpus = WalkCorpus.load(manifest.artifact("walks"))
    embeddings = train(corpus, config, threads=threads)
    emb_path = manifest.directory / ARTIFACT_FILES["embeddings"]
    embeddings.save(emb_path)
    manifest.set_artifact("embeddings", emb_path)
    manifest.snapshot("train", config)
    manifest.set("meta.threads", threads)
    if embeddings.epoch_losses:
        manifest.set("meta.final_objective", repr(float(embeddings.epoch_losses[-1])))
    manifest.save()
    logger.info("train: %d vectors of dim %d", len(embeddings), embeddings.dim)
    return manifest


def stage_pool(
    work_dir: str | Path, config: PoolingConfig = PoolingConfig()
) -> Manifest:
    """Pool article vectors: neighborhood mean, then citation mean."""
    manifest = Manifest.load(work_dir)
    graph = _load_graph(manifest)
    embeddings = EmbeddingMatrix.load(manifest.artifact("embeddings"))
    stage1 = pool_stage1(graph, embeddings, config)
    stage2 = pool_stage2(graph, stage1, config)
    articles = list(stage1)
    s1_path = manifest.directory / ARTIFACT_FILES["stage1_vectors"]
    s2_path = manifest.directory / ARTIFACT_FILES["stage2_vectors"]
    write_vectors(s1_path, articles, np.asarray([stage1[a] for a in articles]))
    write_vectors(s2_path, articles, np.asarray([stage2[a] for a in articles]))
    manifest.set_artifact("stage1_vectors", s1_path)
    manifest.set_artifact("stage2_vectors", s2_path)
    manifest.snapshot("pool", config)
    manifest.save()
    logger.info("pool: %d article vectors", len(articles))
    return manifest


def stage_index(work_dir: str | Path) -> Manifest:
    """Build the surface-form index over in-scope mentions."""
    manifest = Manifest.load(work_dir)
    tables = _load_manifest_tables(manifest)
    scope = read_pmids(manifest.artifact("scope"))
    index = build_index(tables.mentions, scope)
    index_path = manifest.directory / ARTIFACT_FILES["index"]
    index.save(index_path)
    manifest.set_artifact("index", index_path)
    manifest.set("meta.surfaces", len(index))
    manifest.save()
    logger.info("index: %d surface forms", len(index))
    return manifest


_STAGES = ("ingest", "build-kg", "walks", "train", "pool", "index")


def run_pipeline(
    tables_dir: str | Path,
    work_dir: str | Path,
    seeds: Iterable[str] | None = None,
    walk_config: WalkConfig = WalkConfig(),
    train_config: TrainConfig = TrainConfig(),
    pooling_config: PoolingConfig = PoolingConfig(),
    threads: int = 1,
) -> Manifest:
    """Run every stage in order, halting on the first failure."""
    steps = [
        ("ingest", lambda: stage_ingest(work_dir, tables_dir, seeds)),
        ("build-kg", lambda: stage_build_kg(work_dir)),
        ("walks", lambda: stage_walks(work_dir, walk_config)),
        ("train", lambda: stage_train(work_dir, train_config, threads)),
        ("pool", lambda: stage_pool(work_dir, pooling_config)),
        ("index", lambda: stage_index(work_dir)),
    ]
    manifest = None
    for name, step in steps:
        try:
            manifest = step()
        except PipelineError as exc:
            raise PipelineError(f"stage {name}: {exc}") from exc
        except Exception as exc:
            raise PipelineError(f"stage {name} failed: {exc}") from exc
    assert manifest is not None
    return manifest


@dataclass
class SearchSession:
    """Loaded artifacts needed to answer free-text queries."""

    index: EntityIndex
    embeddings: EmbeddingMatrix
    articles: dict[str, np.ndarray]
    threshold: float = DEFAULT_THRESHOLD

    @classmethod
    def open(cls, work_dir: str | Path, threshold: float = DEFAULT_THRESHOLD) -> "SearchSession":
        """Load index, raw embeddings, and target article vectors."""
        manifest = Manifest.load(work_dir)
        index = EntityIndex.load(manifest.artifact("index"))
        embeddings = EmbeddingMatrix.load(manifest.artifact("embeddings"))
        ids, matrix = read_vectors(manifest.artifact("stage2_vectors"))
        targets = set(read_pmids(manifest.artifact("targets")))
        articles = {
            node: matrix[i]
            for i, node in enumerate(ids)
            if node.split("/")[-1] in targets
        }
        if not articles:
            raise PipelineError("no target article vectors; rerun pool")
        return cls(index=index, embeddings=embeddings, articles=articles, threshold=threshold)

    def run(
        self, text: str, k: int | None = 10, query_id: str = "q0"
    ) -> tuple[RankedList, QueryMatch]:
        """Match a query, embed it, and rank the target articles."""
        match = match_text(text, self.index, self.threshold)
        vector = embed_query(match.node_ids(), self.embeddings)
        ranked = rank(vector, self.articles, k=k, query_id=query_id)
        return ranked, match


def corpus_documents(tables: RelationalTables, scope: Iterable[str]) -> dict[str, str]:
    """pmid -> searchable text for every in-scope article."""
    in_scope = set(scope)
    return {
        row.pmid: article_text(row) for row in tables.articles if row.pmid in in_scope
    }
