"""Model server CLI: bind models to routes and serve the wire protocol."""

from __future__ import annotations

import argparse
import logging
import sys

from .app import create_app
from .backends import ModelBinding, ModelLoadError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="model-server",
        description="Serve chat/embed/rerank models over the provider wire protocol",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=9000)
    parser.add_argument("--chat-model", help="model id/path, or 'echo'")
    parser.add_argument("--embed-model", help="model id/path, or 'hash:<dim>'")
    parser.add_argument("--rerank-model", help="model id/path, or 'overlap'")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--max-batch-size", type=int, default=32)
    return parser


def bindings_from_args(args: argparse.Namespace) -> dict[str, ModelBinding]:
    bindings = {}
    for kind, model_id in (
        ("chat", args.chat_model),
        ("embed", args.embed_model),
        ("rerank", args.rerank_model),
    ):
        if model_id:
            bindings[kind] = ModelBinding(
                kind=kind,
                model_id=model_id,
                device=args.device,
                max_batch_size=args.max_batch_size,
            )
    return bindings


def main(argv: list[str] | None = None) -> int:
    import uvicorn

    logging.basicConfig(level=logging.INFO)
    args = build_parser().parse_args(argv)
    bindings = bindings_from_args(args)
    if not bindings:
        print("error: bind at least one of --chat-model/--embed-model/--rerank-model",
              file=sys.stderr)
        return 2
    try:
        app = create_app(bindings)
    except ModelLoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
