"""HTTP service over a shared Pipeline: search, article lookup, async jobs."""

from __future__ import annotations

import logging
import queue
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import evaluation, mining
from .providers import ProviderError

logger = logging.getLogger(__name__)


class SearchOptions(BaseModel):
    expand: bool = True
    rerank: bool = True
    sparse: bool = True
    dense: bool = True


class SearchRequest(BaseModel):
    query: str = Field(min_length=1)
    k: int | None = Field(default=None, ge=1)
    options: SearchOptions = Field(default_factory=SearchOptions)


class MineRequest(BaseModel):
    queries_path: str
    output_path: str


class EvalRequest(BaseModel):
    queries_path: str
    split: str = "test"
    output_dir: str = "eval_reports"


class JobRunner:
    """Runs mine/eval jobs one at a time on a background thread."""

    def __init__(self):
        self._queue: queue.Queue = queue.Queue()
        self._jobs: dict[str, dict] = {}
        self._lock = threading.Lock()
        self._worker = threading.Thread(target=self._run, daemon=True)
        self._worker.start()

    def submit(self, kind: str, fn) -> str:
        job_id = uuid.uuid4().hex
        with self._lock:
            self._jobs[job_id] = {"id": job_id, "kind": kind, "status": "queued"}
        self._queue.put((job_id, fn))
        return job_id

    def get(self, job_id: str) -> dict | None:
        with self._lock:
            job = self._jobs.get(job_id)
            return dict(job) if job else None

    def _run(self) -> None:
        while True:
            job_id, fn = self._queue.get()
            with self._lock:
                self._jobs[job_id]["status"] = "running"
            try:
                result = fn()
                with self._lock:
                    self._jobs[job_id].update(status="done", result=result)
            except Exception as exc:  # job errors are reported, not fatal
                logger.exception("job %s failed", job_id)
                with self._lock:
                    self._jobs[job_id].update(status="error", error=str(exc))
            finally:
                self._queue.task_done()


def create_app(pipeline) -> FastAPI:
    app = FastAPI(title="lexsearch", version="0.1.0")
    jobs = JobRunner()

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors())})

    @app.exception_handler(HTTPException)
    async def http_error(request: Request, exc: HTTPException):
        return JSONResponse(status_code=exc.status_code, content={"error": exc.detail})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/articles/{article_id}")
    def get_article(article_id: str):
        pipeline.ensure_loaded()
        article = pipeline.corpus.get(article_id)
        if article is None:
            raise HTTPException(status_code=404, detail=f"unknown article id {article_id!r}")
        return {
            "id": article.id,
            "law_title": article.law_title,
            "norm_title": article.norm_title,
            "article_number": article.article_number,
            "content": article.content,
            "hierarchy_level": int(article.hierarchy_level),
        }

    @app.post("/search")
    def search(req: SearchRequest):
        if not (req.options.sparse or req.options.dense):
            raise HTTPException(
                status_code=400, detail="at least one retrieval path must be enabled"
            )
        try:
            hits = pipeline.search(
                req.query,
                k=req.k,
                expand=req.options.expand,
                use_rerank=req.options.rerank,
                use_sparse=req.options.sparse,
                use_dense=req.options.dense,
            )
        except ProviderError as exc:
            raise HTTPException(status_code=502, detail=f"provider failure: {exc}")
        return {"query": req.query, "results": [h.to_dict() for h in hits]}

    @app.post("/mine")
    def mine_job(req: MineRequest):
        if not Path(req.queries_path).exists():
            raise HTTPException(status_code=400, detail=f"no such query file: {req.queries_path}")

        def run():
            queries = evaluation.load_queries(req.queries_path)
            triplets, summary = pipeline.mine(queries)
            mining.export_triplets(triplets, pipeline.corpus, req.output_path)
            return {"output_path": req.output_path, **summary}

        return {"job_id": jobs.submit("mine", run)}

    @app.post("/eval")
    def eval_job(req: EvalRequest):
        if req.split not in ("train", "dev", "test", "all"):
            raise HTTPException(status_code=400, detail=f"unknown split {req.split!r}")
        if not Path(req.queries_path).exists():
            raise HTTPException(status_code=400, detail=f"no such query file: {req.queries_path}")

        def run():
            queries = evaluation.load_queries(req.queries_path)
            train, dev, test = evaluation.split_dataset(
                queries,
                seed=pipeline.config.seed,
                group_aware=pipeline.config.group_aware_split,
            )
            selected = {"train": train, "dev": dev, "test": test, "all": queries}[req.split]
            report = pipeline.evaluate_queries(selected)
            out_dir = Path(req.output_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            table = out_dir / f"report_{req.split}.txt"
            rows = out_dir / f"report_{req.split}.jsonl"
            report.write(table, rows)
            return {
                "recall": {str(k): v for k, v in report.macro_recall.items()},
                "ndcg": {str(k): v for k, v in report.macro_ndcg.items()},
                "table_path": str(table),
                "rows_path": str(rows),
            }

        return {"job_id": jobs.submit("eval", run)}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job id {job_id!r}")
        return job

    return app
