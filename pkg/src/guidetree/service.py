"""HTTP boundary: ingest, build, query, stats and health endpoints."""

from __future__ import annotations

import hashlib
import threading
import time

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .assistant import Assistant, AssistantConfig, Session
from .corpus import (
    ChunkConfig,
    CorpusError,
    chunk_document,
    documents_from_records,
)
from .embed import HashEmbedder
from .raptor import BuildConfig, build_tree
from .reduce import ReduceConfig
from .tools import (
    ToolRegistry,
    make_checklist_tool,
    make_retrieval_tool,
    make_stub_tool,
    make_summary_tool,
)
from .raptor import extractive_summarize


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


class AppState:
    """Mutable server state: one corpus, one active tree, one build at a time.

    Build holds an exclusive flag and swaps the active tree atomically, so
    concurrent queries keep using the previous tree until the swap.
    """

    def __init__(self, embedder=None):
        self.embedder = embedder or HashEmbedder()
        self.documents = []
        self.chunks = []
        self.tree = None
        self.assistant = None
        self.build_config = None
        self.sessions: dict[str, Session] = {}
        self._build_lock = threading.Lock()

    def corpus_digest(self) -> str:
        h = hashlib.sha256()
        for doc in self.documents:
            h.update(doc.source.doc_id.encode())
            h.update(doc.text.encode())
        return h.hexdigest()

    def ingest(self, records: list[dict], chunk_cfg: ChunkConfig) -> tuple[int, int]:
        docs = documents_from_records(records)
        chunks = []
        for doc in docs:
            chunks.extend(chunk_document(doc, chunk_cfg))
        self.documents = docs
        self.chunks = chunks
        return len(docs), len(chunks)

    def build(self, cfg: BuildConfig) -> dict:
        if not self.chunks:
            raise CorpusError("no corpus ingested")
        started = time.monotonic()
        tree = build_tree(self.chunks, self.embedder, cfg=cfg)
        registry = ToolRegistry()
        registry.register(*make_retrieval_tool(tree, self.embedder))
        registry.register(*make_checklist_tool(tree, self.embedder))
        registry.register(*make_summary_tool(tree, self.embedder, extractive_summarize))
        registry.register(*make_stub_tool("weather", "weather_lookup",
                                          {"forecast": "unavailable offline"}))
        registry.register(*make_stub_tool("maps", "map_render",
                                          {"map_url": None}))
        registry.register(*make_stub_tool("video_search", "video_search",
                                          {"results": []}))
        assistant = Assistant(tree, self.embedder, registry, AssistantConfig())
        # atomic swap: queries in flight keep the old tree
        self.tree, self.assistant, self.build_config = tree, assistant, cfg
        return {
            "levels": [len(level) for level in tree.levels],
            "node_count": len(tree.nodes),
            "build_ms": int((time.monotonic() - started) * 1000),
        }

    def try_build(self, cfg: BuildConfig) -> dict | None:
        if not self._build_lock.acquire(blocking=False):
            return None
        try:
            return self.build(cfg)
        finally:
            self._build_lock.release()


def build_config_from_overrides(overrides: dict) -> BuildConfig:
    overrides = overrides or {}
    chunk_cfg = ChunkConfig(
        max_tokens=int(overrides.get("max_tokens", 100)),
        overlap_tokens=int(overrides.get("overlap_tokens", 20)),
    )
    seed = int(overrides.get("seed", 0))
    k_range = overrides.get("k_range")
    return BuildConfig(
        chunk_cfg=chunk_cfg,
        reduce_cfg=ReduceConfig(seed=seed),
        k_range=tuple(k_range) if k_range else None,
        max_cluster_size=int(overrides.get("max_cluster_size", 12)),
        stop_node_count=int(overrides.get("stop_node_count", 4)),
        summary_target_tokens=int(overrides.get("summary_target_tokens", 100)),
        seed=seed,
    )


def answer_to_response(answer) -> dict:
    report = answer.grounding.to_dict()
    return {
        "answer_text": answer.text,
        "citations": [
            {"title": src.title, "publisher": src.publisher,
             "section_path": list(src.section_path), "page": src.page,
             "node_id": node_id}
            for src, node_id in answer.citations
        ],
        "verdict": report["verdict"],
        "per_sentence": report["per_sentence"],
        "tool_trace": [
            {"tool": tool, "request_id": rid, "status": status}
            for tool, rid, status in answer.tool_trace
        ],
        "timing_ms": answer.timing_ms,
    }


def create_app(state: AppState | None = None) -> FastAPI:
    state = state or AppState()
    app = FastAPI(title="guidetree")
    app.state.guidetree = state

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/ingest")
    async def ingest(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "bad_request", "body must be JSON corpus records")
        records = body.get("records") if isinstance(body, dict) else body
        if not isinstance(records, list):
            return _error(400, "bad_request", "expected a list of corpus records")
        try:
            chunk_cfg = ChunkConfig()
            if isinstance(body, dict) and "chunk_config" in body:
                chunk_cfg = ChunkConfig(**body["chunk_config"])
            doc_count, chunk_count = state.ingest(records, chunk_cfg)
        except CorpusError as exc:
            return _error(400, "malformed_record", str(exc))
        return {"doc_count": doc_count, "chunk_count": chunk_count}

    @app.post("/build")
    async def build(request: Request):
        try:
            overrides = await request.json()
        except Exception:
            overrides = {}
        if not isinstance(overrides, dict):
            return _error(400, "bad_request", "build overrides must be an object")
        try:
            cfg = build_config_from_overrides(overrides)
        except (ValueError, TypeError) as exc:
            return _error(400, "bad_config", str(exc))
        try:
            result = state.try_build(cfg)
        except CorpusError as exc:
            return _error(400, "no_corpus", str(exc))
        if result is None:
            return _error(409, "build_in_progress", "a build is already running")
        return result

    @app.post("/query")
    async def query(request: Request):
        if state.assistant is None:
            return _error(503, "no_tree", "no tree built yet")
        try:
            body = await request.json()
        except Exception:
            return _error(400, "bad_request", "body must be JSON")
        text = (body or {}).get("query")
        if not text:
            return _error(400, "bad_request", "missing 'query'")
        session_id = (body or {}).get("session_id", "default")
        session = state.sessions.setdefault(session_id, Session(session_id=session_id))
        answer = state.assistant.answer_query(text, session)
        return answer_to_response(answer)

    @app.get("/tree/stats")
    def tree_stats():
        if state.tree is None:
            return _error(503, "no_tree", "no tree built yet")
        from .raptor import _config_to_dict

        return {
            "levels": [len(level) for level in state.tree.levels],
            "node_count": len(state.tree.nodes),
            "config": _config_to_dict(state.build_config),
            "corpus_digest": state.corpus_digest(),
        }

    return app
