"""Graph-embedding retrieval over bibliographic metadata.

The package turns relational article tables into a typed knowledge
graph, learns node embeddings from biased random walks, pools them into
article vectors, and answers free-text queries by matching entity
mentions and ranking articles by cosine similarity.  A TF-IDF baseline
and a ranked-retrieval evaluation harness ship alongside.
"""
from __future__ import annotations

import logging

from .entity_index import EntityIndex, build_index
from .evaluation import (
    DEFAULT_CUTOFFS,
    EvalReport,
    average_precision,
    evaluate,
    precision_recall_f1,
    prune_relevant,
    read_qrels,
    write_qrels,
)
from .kg import (
    EDGE_TYPES,
    NODE_TYPES,
    GraphStats,
    KnowledgeGraph,
    Triple,
    build_graph,
    expand_citations,
    extract_triples,
    graph_stats,
    make_node,
    parse_node,
    read_triples,
    write_triples,
)
from .pipeline import (
    Manifest,
    PipelineError,
    SearchSession,
    run_pipeline,
    stage_build_kg,
    stage_index,
    stage_ingest,
    stage_pool,
    stage_train,
    stage_walks,
)
from .pooling import PoolingConfig, pool_stage1, pool_stage2
from .query import (
    NoMatchError,
    QueryMatch,
    embed_query,
    expand,
    levenshtein,
    match_candidates,
    match_text,
    normalized_distance,
    tokenize,
)
from .ranker import RankedList, cosine, rank, read_run, write_run
from .sgns import (
    EmbeddingMatrix,
    NegativeSampler,
    TrainConfig,
    positive_pairs,
    read_vectors,
    sgns_gradients,
    sgns_loss,
    train,
    write_vectors,
)
from .synth import SynthConfig, generate, read_queries
from .tables import RelationalTables, load_tables, table_paths, write_table
from .tfidf import (
    SparseVector,
    Vocabulary,
    build_vocabulary,
    rank_tfidf,
    vectorize,
    vectorize_corpus,
)
from .walks import WalkConfig, WalkCorpus, generate_walks, transition_weights

__version__ = "0.1.0"

logging.getLogger(__name__).addHandler(logging.NullHandler())
