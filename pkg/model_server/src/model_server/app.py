"""FastAPI application serving the provider wire protocol.

Routes (all UTF-8 JSON; non-200 responses carry {"error": ...}):
    POST /v1/chat    {model, prompt}              -> {text}
    POST /v1/embed   {model, texts: [...]}        -> {vectors: [[...]]}
    POST /v1/rerank  {model, query, documents}    -> {scores: [...]}
    GET  /healthz                                 -> bound models + embed dim
"""

from __future__ import annotations

import logging

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .backends import (
    ModelBinding,
    build_chat_backend,
    build_embed_backend,
    build_rerank_backend,
)

logger = logging.getLogger(__name__)


class ChatRequest(BaseModel):
    model: str
    prompt: str


class EmbedRequest(BaseModel):
    model: str
    texts: list[str] = Field(min_length=1)


class RerankRequest(BaseModel):
    model: str
    query: str
    documents: list[str] = Field(min_length=1)


def create_app(bindings: dict[str, ModelBinding]) -> FastAPI:
    """Load every bound model up front; a load failure aborts startup."""
    chat = embed = rerank = None
    if "chat" in bindings:
        chat = build_chat_backend(bindings["chat"])
    if "embed" in bindings:
        embed = build_embed_backend(bindings["embed"])
    if "rerank" in bindings:
        rerank = build_rerank_backend(bindings["rerank"])

    app = FastAPI(title="model-server", version="0.1.0")

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors())})

    @app.exception_handler(HTTPException)
    async def http_error(request: Request, exc: HTTPException):
        return JSONResponse(status_code=exc.status_code, content={"error": exc.detail})

    def require(backend, route: str):
        if backend is None:
            raise HTTPException(status_code=404, detail=f"no model bound for {route}")
        return backend

    @app.get("/healthz")
    def healthz():
        body = {
            "status": "ok",
            "models": {kind: b.model_id for kind, b in bindings.items()},
        }
        if embed is not None:
            body["embed_dim"] = embed.dim
        return body

    @app.post("/v1/chat")
    def chat_route(req: ChatRequest):
        backend = require(chat, "/v1/chat")
        try:
            return {"text": backend.generate(req.prompt)}
        except Exception as exc:
            logger.exception("chat request failed")
            raise HTTPException(status_code=500, detail=str(exc))

    @app.post("/v1/embed")
    def embed_route(req: EmbedRequest):
        backend = require(embed, "/v1/embed")
        try:
            return {"vectors": backend.embed(req.texts)}
        except Exception as exc:
            logger.exception("embed request failed")
            raise HTTPException(status_code=500, detail=str(exc))

    @app.post("/v1/rerank")
    def rerank_route(req: RerankRequest):
        backend = require(rerank, "/v1/rerank")
        try:
            return {"scores": backend.score(req.query, req.documents)}
        except Exception as exc:
            logger.exception("rerank request failed")
            raise HTTPException(status_code=500, detail=str(exc))

    return app
