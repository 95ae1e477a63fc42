"""End-to-end acceptance checks for the retrieval engine.

Nine numbered criteria, each its own test, each printing one PASS or
FAIL line (visible with ``pytest -s`` or in the captured output of a
failing run).  The brute-force reference code here is written
independently of both the library and the unit-test oracles.
"""
from __future__ import annotations

import math
import time
from collections import Counter

import numpy as np
import pytest
from scipy import stats as scipy_stats

from medgraph.evaluation import (
    DEFAULT_CUTOFFS,
    EvalReport,
    average_precision,
    evaluate,
    precision_recall_f1,
)
from medgraph.kg import KnowledgeGraph, extract_triples
from medgraph.pipeline import SearchSession, corpus_documents, read_pmids, run_pipeline
from medgraph.pooling import pool_stage2
from medgraph.query import levenshtein, tokenize, expand
from medgraph.ranker import RankedList, rank, write_run
from medgraph.sgns import TrainConfig, sgns_gradients, sgns_loss
from medgraph.synth import SynthConfig, generate, read_queries
from medgraph.tables import load_tables, table_paths
from medgraph.tfidf import build_vocabulary, rank_tfidf, vectorize, vectorize_corpus
from medgraph.walks import WalkConfig, generate_walks, transition_weights

from conftest import make_tables


def _verdict(number: int, name: str, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"{status} criterion {number} ({name}): {detail}")
    assert ok, f"criterion {number} ({name}): {detail}"


# ---------------------------------------------------------------------------
# criterion 1: analytical SGNS gradients vs central finite differences


def test_criterion_1_gradient_correctness():
    started = time.perf_counter()
    rng = np.random.default_rng(20240801)
    worst = 0.0
    for trial in range(100):
        dim = int(rng.choice([2, 4, 8]))
        n_neg = int(rng.integers(0, 6))
        u = rng.normal(scale=0.7, size=dim)
        v = rng.normal(scale=0.7, size=dim)
        negs = rng.normal(scale=0.7, size=(n_neg, dim))

        grad_u, grad_v, grad_negs = sgns_gradients(u, v, negs)
        h = 1e-5

        def numeric(vec, assemble):
            out = np.zeros_like(vec)
            for i in range(vec.size):
                bump = np.zeros_like(vec)
                bump[i] = h
                hi = sgns_loss(*assemble(vec + bump))
                lo = sgns_loss(*assemble(vec - bump))
                out[i] = (hi - lo) / (2 * h)
            return out

        num_u = numeric(u, lambda x: (x, v, negs))
        num_v = numeric(v, lambda x: (u, x, negs))
        analytic = [grad_u, grad_v]
        numeric_all = [num_u, num_v]
        for j in range(n_neg):
            def assemble(x, j=j):
                bumped = negs.copy()
                bumped[j] = x
                return (u, v, bumped)

            analytic.append(grad_negs[j])
            numeric_all.append(numeric(negs[j].copy(), assemble))
        for got, want in zip(analytic, numeric_all):
            err = np.linalg.norm(got - want) / max(
                np.linalg.norm(got), np.linalg.norm(want), 1e-12
            )
            worst = max(worst, err)
    elapsed = time.perf_counter() - started
    _verdict(
        1,
        "gradient correctness",
        worst <= 1e-4 and elapsed < 5.0,
        f"max relative error {worst:.2e} over 100 configs in {elapsed:.2f}s",
    )


# ---------------------------------------------------------------------------
# criterion 2: second-order walk law, chi-square on a 5-node fixture


def _five_node_graph() -> KnowledgeGraph:
    graph = KnowledgeGraph()
    edges = [(1, 2), (1, 3), (2, 3), (3, 4), (4, 5), (2, 5)]
    for a, b in edges:
        graph.add_edge(f"article/pmid/{a}", f"article/pmid/{b}", "cites")
    return graph


def test_criterion_2_walk_law():
    started = time.perf_counter()
    graph = _five_node_graph()
    config = WalkConfig(p=2.0, q=0.5, walk_length=2002, walks_per_node=10, rng_seed=9)
    corpus = generate_walks(graph, config)

    observed: dict[tuple[str, str], Counter] = {}
    total_steps = 0
    for walk in corpus.walks:
        for prev, cur, nxt in zip(walk, walk[1:], walk[2:]):
            observed.setdefault((prev, cur), Counter())[nxt] += 1
            total_steps += 1

    statistic = 0.0
    dof = 0
    for (prev, cur), counts in observed.items():
        weights = transition_weights(graph, prev, cur, config)
        total_weight = sum(weights.values())
        n = sum(counts.values())
        for node, weight in weights.items():
            expected = n * weight / total_weight
            statistic += (counts.get(node, 0) - expected) ** 2 / expected
        dof += len(weights) - 1
    p_value = float(scipy_stats.chi2.sf(statistic, dof))
    elapsed = time.perf_counter() - started
    _verdict(
        2,
        "walk-law correctness",
        total_steps >= 100000 and p_value > 0.001 and elapsed < 10.0,
        f"chi2 p={p_value:.4f} over {total_steps} transitions ({dof} dof) in {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# criterion 3: oracle equivalence on randomized fixtures


def _ref_levenshtein(a: str, b: str) -> int:
    rows = len(a) + 1
    cols = len(b) + 1
    table = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        table[i][0] = i
    for j in range(cols):
        table[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            table[i][j] = min(
                table[i - 1][j] + 1,
                table[i][j - 1] + 1,
                table[i - 1][j - 1] + cost,
            )
    return table[-1][-1]


def _ref_metrics(retrieved, relevant, k):
    top = retrieved[:k]
    rel = set(relevant)
    hits = [d for d in top if d in rel]
    p = len(hits) / len(top) if top else 0.0
    r = len(hits) / len(rel) if rel else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0

    running = []
    seen = 0
    for rank_, doc in enumerate(top, start=1):
        if doc in rel:
            seen += 1
            running.append(seen / rank_)
    ap_std = sum(running) / min(len(rel), k) if rel else 0.0
    ap_by_k = sum(running) / k if rel else 0.0
    return p, r, f1, ap_std, ap_by_k


def _ref_tfidf(documents: dict[str, list[str]], smooth: bool):
    n = len(documents)
    df = Counter()
    for tokens in documents.values():
        for token in set(tokens):
            df[token] += 1
    out = {}
    for doc_id, tokens in documents.items():
        tf = Counter(tokens)
        weights = {}
        for token, count in tf.items():
            idf = math.log(1 + n / df[token]) if smooth else math.log(n / df[token])
            if idf != 0.0:
                weights[token] = count * idf
        out[doc_id] = weights
    return out


def test_criterion_3_oracle_equivalence():
    started = time.perf_counter()
    rng = np.random.default_rng(31337)
    checked = 0

    # 40 fixtures: ranked-retrieval metrics on up to 200 docs
    for _ in range(40):
        n_docs = int(rng.integers(5, 201))
        docs = [str(d) for d in range(n_docs)]
        retrieved = list(rng.permutation(docs))[: int(rng.integers(1, n_docs + 1))]
        relevant = list(rng.choice(docs, size=int(rng.integers(1, n_docs // 2 + 2)), replace=False))
        k = int(rng.integers(1, 30))
        p, r, f1 = precision_recall_f1(retrieved, relevant, k)
        ap_std = average_precision(retrieved, relevant, k, "standard")
        ap_by_k = average_precision(retrieved, relevant, k, "by_k")
        want = _ref_metrics(retrieved, relevant, k)
        for got, expected in zip((p, r, f1, ap_std, ap_by_k), want):
            assert abs(got - expected) <= 1e-9
        checked += 1

    # 20 fixtures: TF-IDF weights under both idf variants
    for trial in range(20):
        n_docs = int(rng.integers(2, 40))
        vocab = [f"tok{v}" for v in range(int(rng.integers(3, 25)))]
        raw_docs = {
            str(d): [vocab[int(i)] for i in rng.integers(0, len(vocab), rng.integers(1, 60))]
            for d in range(n_docs)
        }
        corpus = {doc_id: " ".join(tokens) for doc_id, tokens in raw_docs.items()}
        vocabulary = build_vocabulary(corpus)
        for variant, smooth in (("raw", False), ("smooth", True)):
            want = _ref_tfidf(raw_docs, smooth)
            for doc_id, text in corpus.items():
                vec = vectorize(text, vocabulary, idf_variant=variant)
                got = {vocabulary.tokens[i]: w for i, w in zip(vec.ids, vec.weights)}
                assert set(got) == set(want[doc_id])
                for token, weight in want[doc_id].items():
                    assert abs(got[token] - weight) <= 1e-9
        checked += 1

    # 25 fixtures: Levenshtein on strings up to 50 chars
    alphabet = list("abcdefgh")
    for _ in range(25):
        a = "".join(rng.choice(alphabet, size=int(rng.integers(0, 51))))
        b = "".join(rng.choice(alphabet, size=int(rng.integers(0, 51))))
        assert levenshtein(a, b) == _ref_levenshtein(a, b)
        checked += 1

    # 15 fixtures: cosine top-K ordering over up to 1000 vectors
    for _ in range(15):
        n_docs = int(rng.integers(10, 1001))
        dim = int(rng.integers(2, 9))
        query = rng.normal(size=dim)
        docs = {str(d): rng.normal(size=dim) for d in range(n_docs)}
        k = int(rng.integers(1, 50))
        ranked = rank(query, docs, k=k)

        def ref_cos(x, y):
            num = sum(a * b for a, b in zip(x, y))
            den = math.sqrt(sum(a * a for a in x)) * math.sqrt(sum(b * b for b in y))
            return max(-1.0, min(1.0, num / den))

        scored = sorted(
            ((pmid, ref_cos(query, vec)) for pmid, vec in docs.items()),
            key=lambda item: (-item[1], int(item[0])),
        )[:k]
        assert [p for p, _ in ranked.entries] == [p for p, _ in scored]
        for (_, got), (_, expected) in zip(ranked.entries, scored):
            assert abs(got - expected) <= 1e-9
        checked += 1

    elapsed = time.perf_counter() - started
    _verdict(
        3,
        "oracle equivalence",
        checked == 100 and elapsed < 60.0,
        f"{checked} randomized fixtures agreed within 1e-9 in {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# criterion 4: MAP@1 is identically mean P@1


def test_criterion_4_map_at_1_identity():
    rng = np.random.default_rng(404)
    exact = True
    for _ in range(50):
        n_docs = int(rng.integers(5, 60))
        docs = [str(d) for d in range(n_docs)]
        n_queries = int(rng.integers(1, 8))
        qrels = {}
        run = {}
        for qi in range(n_queries):
            qid = f"q{qi}"
            qrels[qid] = list(
                rng.choice(docs, size=int(rng.integers(1, n_docs // 2 + 2)), replace=False)
            )
            order = list(rng.permutation(docs))
            run[qid] = RankedList(
                query_id=qid, entries=[(d, 1.0 - i * 1e-3) for i, d in enumerate(order)]
            )
        report = evaluate({"m": run}, qrels, cutoffs=(1,))
        p1 = report.value("precision", "m", 1)
        exact = exact and report.value("map", "m", 1) == p1
        exact = exact and report.value("map_by_k", "m", 1) == p1
    _verdict(
        4,
        "MAP@1 identity",
        exact,
        "map@1 == map_by_k@1 == mean P@1, exact, on 50 randomized fixtures",
    )


# ---------------------------------------------------------------------------
# criteria 5 and 6: structural analog of the text-vs-graph comparison


ANALOG_SEEDS = (0, 1, 2, 3, 4)


@pytest.fixture(scope="module")
def analog_runs(tmp_path_factory):
    """Per-seed graph and lexical runs on the planted-community corpus."""
    results = []
    for seed in ANALOG_SEEDS:
        root = tmp_path_factory.mktemp(f"analog{seed}")
        tables_dir = root / "tables"
        config = SynthConfig(
            communities=2,
            articles_per_community=50,
            entities_per_community=5,
            entity_leak_fraction=0.1,
            rng_seed=seed,
        )
        started = time.perf_counter()
        synth = generate(config, tables_dir)
        run_pipeline(
            tables_dir,
            root / "work",
            walk_config=WalkConfig(walk_length=20, walks_per_node=10, rng_seed=seed),
            train_config=TrainConfig(
                dim=32, window=5, negatives=5, epochs=5, rng_seed=seed
            ),
        )
        session = SearchSession.open(root / "work")
        queries = read_queries(synth.queries_path)
        graph_run = {}
        for qid, text in queries.items():
            ranked, _ = session.run(text, k=None, query_id=qid)
            graph_run[qid] = ranked

        tables = load_tables(table_paths(tables_dir))
        scope = read_pmids((root / "work") / "scope.txt")
        documents = corpus_documents(tables, scope)
        vocab = build_vocabulary(documents)
        vectors = vectorize_corpus(documents, vocab)
        tfidf_run = {
            qid: rank_tfidf(text, vocab, vectors, k=None, query_id=qid)
            for qid, text in queries.items()
        }
        elapsed = time.perf_counter() - started
        report = evaluate(
            {"medgraph": graph_run, "tfidf": tfidf_run}, synth.qrels, cutoffs=(1, 50)
        )
        results.append(
            {
                "seed": seed,
                "elapsed": elapsed,
                "report": report,
                "graph_run": graph_run,
                "tfidf_run": tfidf_run,
                "qrels": synth.qrels,
            }
        )
    return results


def test_criterion_5_recall_gap(analog_runs):
    wins = 0
    gaps = []
    slowest = max(r["elapsed"] for r in analog_runs)
    for result in analog_runs:
        report = result["report"]
        gap = report.value("recall", "medgraph", 50) - report.value("recall", "tfidf", 50)
        gaps.append(gap)
        if gap >= 0.2:
            wins += 1
    _verdict(
        5,
        "recall@50 gap",
        wins >= 4 and slowest < 120.0,
        f"gap >= 0.2 in {wins}/5 seeds (gaps: "
        + ", ".join(f"{g:.3f}" for g in gaps)
        + f"; slowest seed {slowest:.0f}s)",
    )


def test_criterion_6_precision_at_1(analog_runs):
    wins = 0
    pairs = []
    for result in analog_runs:
        report = result["report"]
        graph_p1 = report.value("precision", "medgraph", 1)
        tfidf_p1 = report.value("precision", "tfidf", 1)
        pairs.append((graph_p1, tfidf_p1))
        if graph_p1 >= tfidf_p1:
            wins += 1
    _verdict(
        6,
        "P@1 analog",
        wins >= 4,
        f"graph P@1 >= lexical P@1 in {wins}/5 seeds "
        + str([f"{g:.2f}/{t:.2f}" for g, t in pairs]),
    )


# ---------------------------------------------------------------------------
# criterion 7: byte-identical artifacts across reruns


def test_criterion_7_determinism(tmp_path):
    config = SynthConfig(
        communities=2,
        articles_per_community=12,
        entities_per_community=3,
        entity_leak_fraction=0.2,
        rng_seed=17,
    )
    tables_dir = tmp_path / "tables"
    synth = generate(config, tables_dir)
    queries = read_queries(synth.queries_path)

    def build(tag: str):
        work = tmp_path / tag
        run_pipeline(
            tables_dir,
            work,
            walk_config=WalkConfig(walk_length=10, walks_per_node=3, rng_seed=2),
            train_config=TrainConfig(dim=16, epochs=2, negatives=3, rng_seed=2),
        )
        session = SearchSession.open(work)
        graph_run = {}
        for qid, text in queries.items():
            ranked, _ = session.run(text, k=None, query_id=qid)
            graph_run[qid] = ranked
        run_path = work / "graph.run"
        write_run(run_path, graph_run)
        report = evaluate({"medgraph": graph_run}, synth.qrels, cutoffs=(1, 5, 10))
        report_path = work / "metrics.csv"
        report.to_csv(report_path)
        return {
            "embeddings": (work / "embeddings.txt").read_bytes(),
            "run": run_path.read_bytes(),
            "report": report_path.read_bytes(),
        }

    first = build("one")
    second = build("two")
    identical = [name for name in first if first[name] == second[name]]
    _verdict(
        7,
        "determinism",
        identical == ["embeddings", "report", "run"] or set(identical) == set(first),
        f"byte-identical artifacts: {sorted(identical)}",
    )


# ---------------------------------------------------------------------------
# criterion 8: worked examples


def test_criterion_8_worked_examples():
    ok = True
    notes = []

    tokens = tokenize("show me articles on depression and type 2 diabetes")
    expected_tokens = ["articles", "depression", "type", "2", "diabetes"]
    if tokens != expected_tokens:
        ok = False
        notes.append(f"tokenize gave {tokens}")

    printed = {
        "articles", "depression", "type", "2", "diabetes",
        "articles depression", "depression type", "type 2", "2 diabetes",
        "articles depression type", "depression type 2", "type 2 diabetes",
        "articles depression type 2", "depression type 2 diabetes",
    }
    expanded = set(expand(expected_tokens))
    if not printed <= expanded:
        ok = False
        notes.append(f"expansion missing {sorted(printed - expanded)}")

    tables = make_tables(
        articles=[
            ("86509", "t", "a", "2001-01-01"),
            ("78456", "t", "a", "2001-01-01"),
            ("652148", "t", "a", "2001-01-01"),
            ("415923", "t", "a", "2001-01-01"),
        ],
        authors=[("86509", "6754", "J. Doe")],
        mentions=[("78456", "aspirin", "1256", "drug")],
        references=[("652148", "415923")],
    )
    triples = set(
        extract_triples(tables, {"86509", "78456", "652148", "415923"})
    )
    literal = {
        ("article/pmid/86509", "writtenBy", "author/aid/6754"),
        ("article/pmid/78456", "mentionsDrug", "drug/eid/1256"),
        ("article/pmid/652148", "cites", "article/pmid/415923"),
    }
    if not literal <= triples:
        ok = False
        notes.append(f"triples missing {sorted(literal - triples)}")

    graph = KnowledgeGraph()
    graph.add_edge("article/pmid/3", "article/pmid/2", "cites")
    graph.add_edge("article/pmid/3", "article/pmid/4", "cites")
    graph.add_edge("article/pmid/3", "article/pmid/6", "cites")
    stage1 = {
        "article/pmid/2": np.array([1.0, 4.0]),
        "article/pmid/3": np.array([50.0, 50.0]),
        "article/pmid/4": np.array([2.0, 5.0]),
        "article/pmid/6": np.array([3.0, 6.0]),
    }
    pooled = pool_stage2(graph, stage1)
    if not np.allclose(pooled["article/pmid/3"], [2.0, 5.0], atol=1e-12):
        ok = False
        notes.append(f"stage-two pooling gave {pooled['article/pmid/3']}")

    _verdict(
        8,
        "worked examples",
        ok,
        "; ".join(notes) if notes else "tokenizer, expansion, triples, and pooling all match",
    )


# ---------------------------------------------------------------------------
# criterion 9: full metric grid shape


def test_criterion_9_report_shape(analog_runs):
    result = analog_runs[0]
    report = evaluate(
        {"medgraph": result["graph_run"], "tfidf": result["tfidf_run"]},
        result["qrels"],
        cutoffs=DEFAULT_CUTOFFS,
    )
    ok = True
    notes = []
    if report.cutoffs != DEFAULT_CUTOFFS or len(report.cutoffs) != 12:
        ok = False
        notes.append(f"cutoffs {report.cutoffs}")
    if set(report.methods) != {"medgraph", "tfidf"}:
        ok = False
        notes.append(f"methods {report.methods}")
    table_metrics = {"precision", "recall", "f1", "map"}
    if not table_metrics <= set(report.metrics):
        ok = False
        notes.append(f"metrics {report.metrics}")
    for metric in table_metrics:
        for method in report.methods:
            row = report.values[(metric, method)]
            if len(row) != 12 or not all(0.0 <= v <= 1.0 for v in row):
                ok = False
                notes.append(f"bad row {metric}/{method}")
    header = report.header()
    expected_header = "metric,method,K1,K2,K5,K10,K25,K50,K75,K100,K150,K250,K500,K1000"
    if header != expected_header:
        ok = False
        notes.append(f"header {header!r}")
    _verdict(
        9,
        "report shape",
        ok,
        "; ".join(notes) if notes else "4 table metrics x 2 methods x 12 cutoffs, header frozen",
    )
