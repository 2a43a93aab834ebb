"""Command-line interface: index, search, mine, eval, serve.

Exit codes: 0 ok, 2 config/input error, 3 missing or stale index artifacts,
4 provider failure after fallbacks.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import evaluation, mining
from .config import ConfigError, load_config
from .corpus import CorpusError
from .citations import PatternConfigError
from .dense import DenseIndexError
from .pipeline import ArtifactError, Pipeline
from .providers import ProviderError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ARTIFACT = 3
EXIT_PROVIDER = 4


def cmd_index(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if not Path(config.corpus_path).exists():
        print(f"error: corpus file not found: {config.corpus_path}", file=sys.stderr)
        return EXIT_CONFIG
    pipeline = Pipeline(config)
    try:
        pipeline.build()
    except (CorpusError, PatternConfigError) as exc:
        print(f"error: index build failed while loading corpus: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DenseIndexError, ProviderError) as exc:
        print(f"error: index build failed while embedding: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    manifest = pipeline.save_artifacts()
    print(f"indexed {len(pipeline.corpus)} articles -> {config.artifact_dir}")
    for name, entry in sorted(manifest["artifacts"].items()):
        print(f"  {name}: {entry['path']}  sha256={entry['sha256'][:12]}")
    return EXIT_OK


def cmd_search(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    pipeline = Pipeline(config)
    try:
        pipeline.load_artifacts()
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARTIFACT
    try:
        hits = pipeline.search(
            args.query,
            k=args.k,
            expand=not args.no_expand,
            use_rerank=not args.no_rerank,
            use_sparse=not args.dense_only,
            use_dense=not args.sparse_only,
        )
    except ProviderError as exc:
        print(f"error: provider failure: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    if args.json:
        print(json.dumps([h.to_dict() for h in hits], ensure_ascii=False, indent=2))
        return EXIT_OK
    for h in hits:
        parts = [
            f"{h.rank:>3}.",
            f"{h.article_id}",
            f"{h.law_title} #{h.article_number}",
            f"score={h.score:.4f}",
        ]
        detail = ", ".join(
            f"{key}={value:.4f}" if isinstance(value, float) else f"{key}={value}"
            for key, value in h.breakdown.items()
            if key in ("fused", "reranker_score", "prior", "intent_match")
        )
        print("  ".join(parts) + (f"  [{detail}]" if detail else ""))
    return EXIT_OK


def cmd_mine(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    pipeline = Pipeline(config)
    try:
        pipeline.load_artifacts()
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARTIFACT
    try:
        queries = evaluation.load_queries(args.queries)
    except (OSError, ValueError) as exc:
        print(f"error: cannot read query file: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    triplets, summary = pipeline.mine(queries)
    mining.export_triplets(triplets, pipeline.corpus, args.output)
    print(
        f"mined {summary['triplets']} triplets from {summary['queries']} queries "
        f"({summary['skipped']} skipped, {summary['empty_negative_sets']} empty) "
        f"-> {args.output}"
    )
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    pipeline = Pipeline(config)
    try:
        pipeline.load_artifacts()
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARTIFACT
    try:
        queries = evaluation.load_queries(args.queries)
    except (OSError, ValueError) as exc:
        print(f"error: cannot read query file: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    train, dev, test = evaluation.split_dataset(
        queries,
        seed=config.seed,
        group_aware=config.group_aware_split,
    )
    selected = {"train": train, "dev": dev, "test": test, "all": list(queries)}[args.split]
    try:
        report = pipeline.evaluate_queries(
            selected,
            expand=not args.no_expand,
            use_rerank=not args.no_rerank,
            use_sparse=not args.dense_only,
            use_dense=not args.sparse_only,
        )
    except ProviderError as exc:
        print(f"error: provider failure: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table_path = out_dir / f"report_{args.split}.txt"
    rows_path = out_dir / f"report_{args.split}.jsonl"
    report.write(table_path, rows_path)
    print(report.render_table())
    print(f"written: {table_path}, {rows_path}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    config = load_config(args.config)
    pipeline = Pipeline(config)
    try:
        pipeline.load_artifacts()
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARTIFACT
    app = create_app(pipeline)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lexsearch", description="Multi-path legal article retrieval engine"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="build and persist all indexes")
    p_index.add_argument("--config", required=True)
    p_index.set_defaults(func=cmd_index)

    p_search = sub.add_parser("search", help="run a query through the pipeline")
    p_search.add_argument("--config", required=True)
    p_search.add_argument("query")
    p_search.add_argument("-k", type=int, default=None, help="results to return")
    p_search.add_argument("--no-expand", action="store_true", help="skip LLM query expansion")
    p_search.add_argument("--no-rerank", action="store_true", help="rank by fused score only")
    p_search.add_argument("--sparse-only", action="store_true", help="disable the dense path")
    p_search.add_argument("--dense-only", action="store_true", help="disable the sparse path")
    p_search.add_argument("--json", action="store_true", help="machine-readable output")
    p_search.set_defaults(func=cmd_search)

    p_mine = sub.add_parser("mine", help="mine hard-negative training triplets")
    p_mine.add_argument("--config", required=True)
    p_mine.add_argument("--queries", required=True, help="labeled query file (JSONL)")
    p_mine.add_argument("--output", required=True, help="triplet output file (JSONL)")
    p_mine.set_defaults(func=cmd_mine)

    p_eval = sub.add_parser("eval", help="evaluate retrieval quality on a split")
    p_eval.add_argument("--config", required=True)
    p_eval.add_argument("--queries", required=True, help="labeled query file (JSONL)")
    p_eval.add_argument("--split", choices=("train", "dev", "test", "all"), default="test")
    p_eval.add_argument("--output-dir", default="eval_reports")
    p_eval.add_argument("--no-expand", action="store_true")
    p_eval.add_argument("--no-rerank", action="store_true")
    p_eval.add_argument("--sparse-only", action="store_true")
    p_eval.add_argument("--dense-only", action="store_true")
    p_eval.set_defaults(func=cmd_eval)

    p_serve = sub.add_parser("serve", help="run the HTTP search service")
    p_serve.add_argument("--config", required=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if getattr(args, "sparse_only", False) and getattr(args, "dense_only", False):
        print("error: --sparse-only and --dense-only are mutually exclusive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
