"""Command line interface.

Subcommands cover the whole workflow: generating a synthetic corpus,
running the pipeline stages (together or one at a time), interactive
and batch querying, the TF-IDF baseline, evaluation, and report
rendering.  Exit codes: 0 on success, 1 on input or artifact errors,
2 when a query matches no indexed entity.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import evaluation, figures, synth
from .evaluation import DEFAULT_CUTOFFS, EvalReport, evaluate, prune_relevant, read_qrels
from .pipeline import (
    Manifest,
    PipelineError,
    SearchSession,
    corpus_documents,
    default_work_dir,
    run_pipeline,
    stage_build_kg,
    stage_index,
    stage_ingest,
    stage_pool,
    stage_train,
    stage_walks,
    read_pmids,
)
from .pooling import PoolingConfig
from .query import DEFAULT_THRESHOLD, NoMatchError
from .ranker import RankedList, read_run, write_run
from .sgns import TrainConfig
from .synth import SynthConfig, read_queries
from .tables import load_tables, table_paths
from .tfidf import (
    Vocabulary,
    build_vocabulary,
    load_vectors,
    rank_tfidf,
    save_vectors,
    vectorize_corpus,
)
from .walks import WalkConfig

logger = logging.getLogger(__name__)

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 1; code 2 is reserved for unmatched queries
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _add_work(sp) -> None:
    sp.add_argument(
        "--work",
        type=Path,
        default=None,
        help="work directory (default: $MEDGRAPH_DATA_DIR or ./medgraph_data)",
    )


def _add_config_flag(sp) -> None:
    sp.add_argument(
        "--config",
        type=Path,
        default=None,
        help="key=value file supplying defaults for this subcommand",
    )


def _add_walk_flags(sp, with_seed: bool = True) -> None:
    sp.add_argument("--p", type=float, default=2.0, help="return bias (default 2.0)")
    sp.add_argument("--q", type=float, default=0.5, help="outward bias (default 0.5)")
    sp.add_argument("--walk-length", type=int, default=50)
    sp.add_argument("--walks-per-node", type=int, default=5)
    if with_seed:
        sp.add_argument("--rng-seed", type=int, default=0)


def _add_train_flags(sp, with_seed: bool = True) -> None:
    sp.add_argument("--dim", type=int, default=128)
    sp.add_argument("--window", type=int, default=5)
    sp.add_argument("--negatives", type=int, default=7)
    sp.add_argument("--epochs", type=int, default=5)
    sp.add_argument("--learning-rate", type=float, default=0.025)
    sp.add_argument("--min-learning-rate", type=float, default=1e-4)
    sp.add_argument("--neg-exponent", type=float, default=0.75)
    sp.add_argument("--threads", type=int, default=1)
    if with_seed:
        sp.add_argument("--rng-seed", type=int, default=0)


def _add_pool_flags(sp) -> None:
    sp.add_argument(
        "--include-self-stage1",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="average the article's own vector into stage one",
    )
    sp.add_argument(
        "--include-self-stage2",
        action=argparse.BooleanOptionalAction,
        default=False,
        help="average the article's stage-one vector into stage two",
    )


def build_parser() -> tuple[_Parser, dict[str, _Parser]]:
    parser = _Parser(prog="medgraph", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    subs = parser.add_subparsers(dest="command", metavar="COMMAND")
    m: dict[str, _Parser] = {}

    sp = m["synth"] = subs.add_parser("synth", help="generate a synthetic corpus")
    sp.add_argument("--out", type=Path, required=True, help="output directory")
    sp.add_argument("--communities", type=int, default=2)
    sp.add_argument("--articles-per-community", type=int, default=50)
    sp.add_argument("--entities-per-community", type=int, default=5)
    sp.add_argument("--entity-leak-fraction", type=float, default=0.1)
    sp.add_argument("--mentions-per-article", type=int, default=2)
    sp.add_argument("--authors-per-community", type=int, default=8)
    sp.add_argument("--authors-per-article", type=int, default=2)
    sp.add_argument("--projects-per-community", type=int, default=2)
    sp.add_argument("--mesh-per-community", type=int, default=3)
    sp.add_argument("--mesh-per-article", type=int, default=1)
    sp.add_argument("--substances-per-community", type=int, default=2)
    sp.add_argument("--citations-per-article", type=int, default=3)
    sp.add_argument("--abstract-words", type=int, default=30)
    sp.add_argument("--rng-seed", type=int, default=0)
    sp.set_defaults(func=_cmd_synth)

    sp = m["ingest"] = subs.add_parser("ingest", help="load tables and fix the scope")
    sp.add_argument("--tables", type=Path, required=True)
    sp.add_argument("--seeds", type=Path, default=None, help="file of seed pmids")
    _add_work(sp)
    sp.set_defaults(func=_cmd_ingest)

    sp = m["build-kg"] = subs.add_parser("build-kg", help="extract the typed graph")
    _add_work(sp)
    sp.set_defaults(func=_cmd_build_kg)

    sp = m["walks"] = subs.add_parser("walks", help="generate biased random walks")
    _add_work(sp)
    _add_walk_flags(sp)
    sp.set_defaults(func=_cmd_walks)

    sp = m["train"] = subs.add_parser("train", help="train node embeddings")
    _add_work(sp)
    _add_train_flags(sp)
    sp.set_defaults(func=_cmd_train)

    sp = m["pool"] = subs.add_parser("pool", help="pool article vectors")
    _add_work(sp)
    _add_pool_flags(sp)
    sp.set_defaults(func=_cmd_pool)

    sp = m["index"] = subs.add_parser("index", help="index entity surface forms")
    _add_work(sp)
    sp.set_defaults(func=_cmd_index)

    sp = m["pipeline"] = subs.add_parser("pipeline", help="run every stage in order")
    sp.add_argument("--tables", type=Path, required=True)
    sp.add_argument("--seeds", type=Path, default=None)
    _add_work(sp)
    _add_walk_flags(sp, with_seed=False)
    _add_train_flags(sp, with_seed=False)
    _add_pool_flags(sp)
    sp.add_argument("--rng-seed", type=int, default=0, help="seed for walks and training")
    sp.set_defaults(func=_cmd_pipeline)

    sp = m["query"] = subs.add_parser("query", help="answer one free-text query")
    _add_work(sp)
    sp.add_argument("--text", required=True)
    sp.add_argument("-k", type=int, default=10)
    sp.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    sp.add_argument("--query-id", default="q0")
    sp.add_argument("--run", type=Path, default=None, help="also write a run file")
    sp.set_defaults(func=_cmd_query)

    sp = m["repl"] = subs.add_parser("repl", help="interactive query loop")
    _add_work(sp)
    sp.add_argument("-k", type=int, default=10)
    sp.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    sp.set_defaults(func=_cmd_repl)

    sp = m["rank-all"] = subs.add_parser("rank-all", help="rank every query in a file")
    _add_work(sp)
    sp.add_argument("--queries", type=Path, required=True, help="query_id/text TSV")
    sp.add_argument("--out", type=Path, required=True, help="run file to write")
    sp.add_argument("-k", type=int, default=1000)
    sp.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    sp.set_defaults(func=_cmd_rank_all)

    sp = m["tfidf-build"] = subs.add_parser(
        "tfidf-build", help="build the lexical baseline over the scoped corpus"
    )
    _add_work(sp)
    sp.add_argument("--idf", choices=("raw", "smooth"), default="raw")
    sp.set_defaults(func=_cmd_tfidf_build)

    sp = m["tfidf-rank"] = subs.add_parser(
        "tfidf-rank", help="rank every query with the lexical baseline"
    )
    _add_work(sp)
    sp.add_argument("--queries", type=Path, required=True)
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("-k", type=int, default=1000)
    sp.set_defaults(func=_cmd_tfidf_rank)

    sp = m["eval"] = subs.add_parser("eval", help="score run files against qrels")
    sp.add_argument("--qrels", type=Path, required=True)
    sp.add_argument(
        "--run",
        action="append",
        required=True,
        metavar="METHOD=PATH",
        help="run file to score; repeatable",
    )
    sp.add_argument("--out", type=Path, required=True, help="metric CSV to write")
    sp.add_argument(
        "--cutoffs",
        default=",".join(str(k) for k in DEFAULT_CUTOFFS),
        help="comma-separated K values",
    )
    sp.add_argument(
        "--prune-k",
        type=int,
        default=None,
        help="truncate each query's relevant list to its first K entries",
    )
    sp.set_defaults(func=_cmd_eval)

    sp = m["report"] = subs.add_parser(
        "report", help="render figures and a tidy CSV from a metric file"
    )
    sp.add_argument("--metrics", type=Path, required=True, help="CSV written by eval")
    sp.add_argument("--out-dir", type=Path, required=True)
    sp.add_argument("--stem", default="metrics")
    sp.add_argument("--bar-k", type=int, default=None, help="cutoff for the bar chart")
    sp.set_defaults(func=_cmd_report)

    for sub in m.values():
        _add_config_flag(sub)
    return parser, m


def _work_dir(args) -> Path:
    return args.work if args.work is not None else default_work_dir()


def _cmd_synth(args) -> int:
    config = SynthConfig(
        communities=args.communities,
        articles_per_community=args.articles_per_community,
        entities_per_community=args.entities_per_community,
        entity_leak_fraction=args.entity_leak_fraction,
        mentions_per_article=args.mentions_per_article,
        authors_per_community=args.authors_per_community,
        authors_per_article=args.authors_per_article,
        projects_per_community=args.projects_per_community,
        mesh_per_community=args.mesh_per_community,
        mesh_per_article=args.mesh_per_article,
        substances_per_community=args.substances_per_community,
        citations_per_article=args.citations_per_article,
        abstract_words=args.abstract_words,
        rng_seed=args.rng_seed,
    )
    result = synth.generate(config, args.out)
    print(f"wrote {len(result.pmids)} articles across {config.communities} communities")
    print(f"tables: {result.out_dir}")
    print(f"queries: {result.queries_path}")
    print(f"qrels: {result.qrels_path}")
    print(f"expected stats: {result.stats_path}")
    return 0


def _cmd_ingest(args) -> int:
    seeds = None
    if args.seeds is not None:
        seeds = read_pmids(args.seeds)
    manifest = stage_ingest(_work_dir(args), args.tables, seeds)
    print(f"scope: {manifest.get('meta.scope_size')} articles")
    print(f"targets: {manifest.get('meta.target_size')} articles")
    return 0


def _cmd_build_kg(args) -> int:
    manifest = stage_build_kg(_work_dir(args))
    print(f"graph: {manifest.get('meta.nodes')} nodes, {manifest.get('meta.edges')} edges")
    return 0


def _cmd_walks(args) -> int:
    config = WalkConfig(
        p=args.p,
        q=args.q,
        walk_length=args.walk_length,
        walks_per_node=args.walks_per_node,
        rng_seed=args.rng_seed,
    )
    manifest = stage_walks(_work_dir(args), config)
    print(f"walks written to {manifest.artifact('walks')}")
    return 0


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        dim=args.dim,
        window=args.window,
        negatives=args.negatives,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        min_learning_rate=args.min_learning_rate,
        neg_exponent=args.neg_exponent,
        rng_seed=args.rng_seed,
    )


def _cmd_train(args) -> int:
    manifest = stage_train(_work_dir(args), _train_config(args), threads=args.threads)
    print(f"embeddings written to {manifest.artifact('embeddings')}")
    print(f"final mean objective: {manifest.get('meta.final_objective')}")
    return 0


def _cmd_pool(args) -> int:
    config = PoolingConfig(
        include_self_stage1=args.include_self_stage1,
        include_self_stage2=args.include_self_stage2,
    )
    manifest = stage_pool(_work_dir(args), config)
    print(f"article vectors written to {manifest.artifact('stage2_vectors')}")
    return 0


def _cmd_index(args) -> int:
    manifest = stage_index(_work_dir(args))
    print(f"indexed {manifest.get('meta.surfaces')} surface forms")
    return 0


def _cmd_pipeline(args) -> int:
    seeds = read_pmids(args.seeds) if args.seeds is not None else None
    walk_config = WalkConfig(
        p=args.p,
        q=args.q,
        walk_length=args.walk_length,
        walks_per_node=args.walks_per_node,
        rng_seed=args.rng_seed,
    )
    train_config = TrainConfig(
        dim=args.dim,
        window=args.window,
        negatives=args.negatives,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        min_learning_rate=args.min_learning_rate,
        neg_exponent=args.neg_exponent,
        rng_seed=args.rng_seed,
    )
    pooling_config = PoolingConfig(
        include_self_stage1=args.include_self_stage1,
        include_self_stage2=args.include_self_stage2,
    )
    manifest = run_pipeline(
        args.tables,
        _work_dir(args),
        seeds=seeds,
        walk_config=walk_config,
        train_config=train_config,
        pooling_config=pooling_config,
        threads=args.threads,
    )
    print(f"pipeline complete; manifest at {manifest.path}")
    return 0


def _print_match(match) -> None:
    for result in match.matches:
        nodes = ", ".join(result.nodes)
        print(
            f"matched {result.candidate!r} -> {result.surface!r} "
            f"(distance {result.distance:.3f}): {nodes}"
        )
    for candidate in match.unmatched:
        logger.debug("unmatched candidate %r", candidate)


def _print_ranked(ranked: RankedList) -> None:
    for i, (pmid, score) in enumerate(ranked.entries, start=1):
        print(f"{i:4d}  {pmid}  {score:.6f}")


def _cmd_query(args) -> int:
    session = SearchSession.open(_work_dir(args), threshold=args.threshold)
    ranked, match = session.run(args.text, k=args.k, query_id=args.query_id)
    _print_match(match)
    _print_ranked(ranked)
    if args.run is not None:
        write_run(args.run, [ranked])
        print(f"run written to {args.run}")
    return 0


def _cmd_repl(args) -> int:
    session = SearchSession.open(_work_dir(args), threshold=args.threshold)
    print("enter a query, or 'exit' to quit")
    while True:
        try:
            line = input("query> ").strip()
        except EOFError:
            print()
            return 0
        if not line:
            continue
        if line.lower() in ("exit", "quit"):
            return 0
        try:
            ranked, match = session.run(line, k=args.k)
        except NoMatchError as exc:
            print(f"no match: {exc}")
            continue
        _print_match(match)
        _print_ranked(ranked)


def _cmd_rank_all(args) -> int:
    session = SearchSession.open(_work_dir(args), threshold=args.threshold)
    queries = read_queries(args.queries)
    if not queries:
        raise _UsageError(f"no queries in {args.queries}")
    ranked_lists: dict[str, RankedList] = {}
    failures = 0
    for qid in sorted(queries):
        try:
            ranked, _ = session.run(queries[qid], k=args.k, query_id=qid)
        except NoMatchError as exc:
            logger.warning("query %s: %s", qid, exc)
            failures += 1
            continue
        ranked_lists[qid] = ranked
    if not ranked_lists:
        print("no query matched any indexed entity", file=sys.stderr)
        return 2
    write_run(args.out, ranked_lists)
    print(f"ranked {len(ranked_lists)}/{len(queries)} queries -> {args.out}")
    return 0


def _tfidf_paths(manifest: Manifest) -> tuple[Path, Path]:
    return (
        manifest.directory / "tfidf_vocab.txt",
        manifest.directory / "tfidf_vectors.txt",
    )


def _cmd_tfidf_build(args) -> int:
    work = _work_dir(args)
    manifest = Manifest.load(work)
    tables_dir = manifest.get("meta.tables_dir")
    if tables_dir is None:
        raise PipelineError("manifest lacks meta.tables_dir; run ingest first")
    tables = load_tables(table_paths(tables_dir))
    scope = read_pmids(manifest.artifact("scope"))
    documents = corpus_documents(tables, scope)
    vocab = build_vocabulary(documents)
    vectors = vectorize_corpus(documents, vocab, idf_variant=args.idf)
    vocab_path, vectors_path = _tfidf_paths(manifest)
    vocab.save(vocab_path)
    save_vectors(vectors_path, vectors)
    manifest.set("config.tfidf.idf_variant", args.idf)
    manifest.set("meta.tfidf_vocab", vocab_path.name)
    manifest.set("meta.tfidf_vectors", vectors_path.name)
    manifest.save()
    print(f"vocabulary: {len(vocab)} tokens over {vocab.n_docs} documents")
    return 0


def _cmd_tfidf_rank(args) -> int:
    work = _work_dir(args)
    manifest = Manifest.load(work)
    vocab_path, vectors_path = _tfidf_paths(manifest)
    if not vocab_path.is_file() or not vectors_path.is_file():
        raise PipelineError("lexical baseline not built; run tfidf-build first")
    idf_variant = manifest.get("config.tfidf.idf_variant", "raw")
    vocab = Vocabulary.load(vocab_path)
    vectors = load_vectors(vectors_path)
    targets = set(read_pmids(manifest.artifact("targets")))
    target_vectors = {p: v for p, v in vectors.items() if p in targets}
    if not target_vectors:
        raise PipelineError("no target documents in the baseline vectors")
    queries = read_queries(args.queries)
    ranked_lists: dict[str, RankedList] = {}
    failures = 0
    for qid in sorted(queries):
        try:
            ranked_lists[qid] = rank_tfidf(
                queries[qid],
                vocab,
                target_vectors,
                k=args.k,
                query_id=qid,
                idf_variant=idf_variant,
            )
        except ValueError as exc:
            logger.warning("query %s: %s", qid, exc)
            failures += 1
    if not ranked_lists:
        print("no query had any weight in the vocabulary", file=sys.stderr)
        return 2
    write_run(args.out, ranked_lists, tag="tfidf")
    print(f"ranked {len(ranked_lists)}/{len(queries)} queries -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    qrels = read_qrels(args.qrels)
    if args.prune_k is not None:
        qrels = prune_relevant(qrels, args.prune_k)
    runs = {}
    for item in args.run:
        method, sep, path = item.partition("=")
        if not sep:
            method, path = Path(item).stem, item
        runs[method] = read_run(path)
    cutoffs = tuple(int(k) for k in str(args.cutoffs).split(",") if k)
    report = evaluate(runs, qrels, cutoffs=cutoffs)
    report.to_csv(args.out)
    print(report.header())
    for metric in report.metrics:
        for method in report.methods:
            row = report.values[(metric, method)]
            print(f"{metric},{method}," + ",".join(f"{v:.4f}" for v in row))
    print(f"metrics written to {args.out}")
    return 0


def _cmd_report(args) -> int:
    report = EvalReport.from_csv(args.metrics)
    long_path = figures.write_long_csv(report, args.out_dir / f"{args.stem}_long.csv")
    curve_path = figures.render_metric_curves(report, args.out_dir, stem=args.stem)
    created = [long_path, curve_path]
    bar_k = args.bar_k
    if bar_k is None:
        bar_k = 10 if 10 in report.cutoffs else report.cutoffs[0]
    created.append(figures.render_method_bars(report, bar_k, args.out_dir, stem=args.stem))
    for path in created:
        print(f"wrote {path}")
    return 0


def _load_config_file(path: Path) -> dict[str, str]:
    values: dict[str, str] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise _UsageError(f"{path}:{lineno}: expected key=value")
            values[key.strip()] = value.strip()
    return values


def _coerce(action: argparse.Action, raw: str):
    if isinstance(action, argparse.BooleanOptionalAction) or action.const is True:
        lowered = raw.lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise _UsageError(f"config value {raw!r} is not a boolean")
    if action.type is not None:
        return action.type(raw)
    return raw


def _apply_config(sub: _Parser, values: dict[str, str]) -> None:
    matched = set()
    for action in sub._actions:
        if action.dest in values:
            sub.set_defaults(**{action.dest: _coerce(action, values[action.dest])})
            matched.add(action.dest)
    unknown = set(values) - matched
    if unknown:
        raise _UsageError(f"config keys not recognized: {', '.join(sorted(unknown))}")


def _scan_config(argv: list[str]) -> Path | None:
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            return Path(argv[i + 1])
        if token.startswith("--config="):
            return Path(token.split("=", 1)[1])
    return None


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    try:
        config_path = _scan_config(argv)
        if config_path is not None:
            if not config_path.is_file():
                raise _UsageError(f"config file not found: {config_path}")
            values = _load_config_file(config_path)
            command = next((a for a in argv if not a.startswith("-")), None)
            if command in subparsers:
                _apply_config(subparsers[command], values)
        args = parser.parse_args(argv)
        level = logging.WARNING - 10 * min(args.verbose, 2)
        logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
        if not getattr(args, "func", None):
            parser.print_help()
            return 1
        return args.func(args) or 0
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except NoMatchError as exc:
        print(f"no match: {exc}", file=sys.stderr)
        return 2
    except (PipelineError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entry()
