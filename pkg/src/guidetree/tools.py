"""Tool protocol: framed requests, a registry, intent routing, built-in tools.

Requests carry intent, context and constraints in a length-prefixed JSON frame.
Routing is deterministic: exact intent match first, then a keyword-rule fallback
that resolves free-text queries to checklist, summary or retrieval intents.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .corpus import tokenize
from .grounding import split_sentences
from .raptor import RaptorTree, collapsed_retrieve

SCHEMA_VERSION = 1

INTENT_RETRIEVE = "retrieve_docs"
INTENT_CHECKLIST = "generate_checklist"
INTENT_SUMMARIZE = "summarize"

_CHECKLIST_KEYWORDS = ("checklist", "prepare kit")
_SUMMARY_KEYWORDS = ("summarize", "steps")


class ProtocolError(ValueError):
    """Malformed frame or request."""


class RoutingError(LookupError):
    """No tool can serve the resolved intent."""


@dataclass
class ToolRequest:
    request_id: str
    intent: str
    context: dict = field(default_factory=dict)
    constraints: dict = field(default_factory=dict)
    payload: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)  # unknown fields, preserved on decode


@dataclass
class ToolResponse:
    request_id: str
    status: str  # "ok" or "error"
    payload: dict = field(default_factory=dict)
    error: dict | None = None


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    intents: tuple[str, ...]
    description: str = ""
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if not self.intents:
            raise ProtocolError(f"tool {self.name!r} must serve at least one intent")


_REQUIRED = ("request_id", "intent", "context", "constraints", "payload")


def encode_request(req: ToolRequest) -> bytes:
    """4-byte big-endian length prefix + one UTF-8 JSON object."""
    body = {
        "request_id": req.request_id, "intent": req.intent, "context": req.context,
        "constraints": req.constraints, "payload": req.payload,
    }
    body.update(req.extra)
    raw = json.dumps(body, ensure_ascii=False, sort_keys=True).encode("utf-8")
    return struct.pack(">I", len(raw)) + raw


def decode_request(frame: bytes) -> ToolRequest:
    """Inverse of encode_request; unknown fields are preserved, not rejected."""
    if len(frame) < 4:
        raise ProtocolError("short frame")
    (length,) = struct.unpack(">I", frame[:4])
    if len(frame) - 4 < length:
        raise ProtocolError("short frame")
    try:
        body = json.loads(frame[4:4 + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"malformed frame body: {exc}") from exc
    for name in _REQUIRED:
        if name not in body:
            raise ProtocolError(f"missing required field {name!r}")
    extra = {k: v for k, v in body.items() if k not in _REQUIRED}
    return ToolRequest(
        request_id=body["request_id"], intent=body["intent"], context=body["context"],
        constraints=body["constraints"], payload=body["payload"], extra=extra,
    )


@dataclass(frozen=True)
class AuditRecord:
    ts: float
    request_id: str
    tool: str
    status: str
    duration_ms: int


class ToolRegistry:
    """Name/intent lookup over registered tools, with an append-only audit trail."""

    def __init__(self, audit_path: str | Path | None = None):
        self._tools: dict[str, tuple[ToolDescriptor, object]] = {}
        self.audit: list[AuditRecord] = []
        self._audit_path = Path(audit_path) if audit_path else None

    def register(self, descriptor: ToolDescriptor, handler) -> None:
        if descriptor.name in self._tools:
            raise ProtocolError(f"tool {descriptor.name!r} already registered")
        self._tools[descriptor.name] = (descriptor, handler)

    def descriptors(self) -> list[ToolDescriptor]:
        return [desc for desc, _ in self._tools.values()]

    def lookup(self, name: str) -> ToolDescriptor:
        return self._tools[name][0]

    def _first_serving(self, intent: str) -> str | None:
        for name, (desc, _) in self._tools.items():
            if intent in desc.intents:
                return name
        return None

    def route(self, req: ToolRequest) -> str:
        """Resolve a request to a tool name: exact intent, then keyword rules."""
        if not self._tools:
            raise RoutingError("empty registry")
        if req.intent:
            name = self._first_serving(req.intent)
            if name:
                return name
        text = str(req.payload.get("query", "")).lower()
        if any(k in text for k in _CHECKLIST_KEYWORDS):
            intent = INTENT_CHECKLIST
        elif any(k in text for k in _SUMMARY_KEYWORDS):
            intent = INTENT_SUMMARIZE
        else:
            intent = INTENT_RETRIEVE
        name = self._first_serving(intent) or self._first_serving(INTENT_RETRIEVE)
        if name is None:
            raise RoutingError(f"unroutable request {req.request_id!r}")
        return name

    def invoke(self, req: ToolRequest) -> ToolResponse:
        """Route and execute; handler exceptions become status=error responses.

        Every invocation, including failures, appends one audit record.
        """
        start = time.monotonic()
        tool = "?"
        try:
            tool = self.route(req)
            _, handler = self._tools[tool]
            payload = handler(req)
            response = ToolResponse(request_id=req.request_id, status="ok",
                                    payload=payload)
        except RoutingError:
            self._record(req, tool, "error", start)
            raise
        except Exception as exc:
            response = ToolResponse(
                request_id=req.request_id, status="error", payload={},
                error={"code": "tool_failure", "message": str(exc)},
            )
        self._record(req, tool, response.status, start)
        return response

    def _record(self, req: ToolRequest, tool: str, status: str, start: float) -> None:
        record = AuditRecord(
            ts=time.time(), request_id=req.request_id, tool=tool, status=status,
            duration_ms=int((time.monotonic() - start) * 1000),
        )
        self.audit.append(record)
        if self._audit_path:
            with self._audit_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps({
                    "ts": record.ts, "request_id": record.request_id,
                    "tool": record.tool, "status": record.status,
                    "duration_ms": record.duration_ms,
                }) + "\n")


def _imperative_verbs() -> frozenset[str]:
    data = resources.files("guidetree.data").joinpath("imperative_verbs.txt").read_text()
    return frozenset(w.strip() for w in data.splitlines() if w.strip())


IMPERATIVE_VERBS = _imperative_verbs()


@dataclass(frozen=True)
class ChecklistItem:
    text: str
    sources: tuple


def generate_checklist(topic: str, k_items: int, tree: RaptorTree,
                       embedder) -> list[ChecklistItem]:
    """Build an ordered, cited checklist from retrieved guidance.

    Retrieves 2*k nodes for the topic, keeps sentences whose first token is in
    the imperative lexicon, dedupes, and returns the first k with citations.
    """
    if k_items < 1:
        raise ValueError("k_items must be >= 1")
    hits = collapsed_retrieve(tree, embedder.embed(topic), k=2 * k_items)
    items: list[ChecklistItem] = []
    seen: set[str] = set()
    for node, _score in hits:
        for sentence in split_sentences(node.text):
            toks = tokenize(sentence)
            if not toks or toks[0].lower() not in IMPERATIVE_VERBS:
                continue
            if sentence in seen:
                continue
            seen.add(sentence)
            items.append(ChecklistItem(text=sentence, sources=node.sources))
            if len(items) == k_items:
                return items
    if not items:
        raise ValueError("no actionable content")
    return items


def make_retrieval_tool(tree: RaptorTree, embedder):
    def handler(req: ToolRequest) -> dict:
        query = req.payload["query"]
        k = int(req.constraints.get("max_items", 5))
        hits = collapsed_retrieve(tree, embedder.embed(query), k=k)
        return {
            "hits": [
                {"node_id": node.node_id, "score": score, "level": node.level,
                 "text": node.text, "sources": [s.to_dict() for s in node.sources]}
                for node, score in hits
            ]
        }
    return ToolDescriptor("retrieval", (INTENT_RETRIEVE,),
                          "top-k retrieval over the guidance tree"), handler


def make_checklist_tool(tree: RaptorTree, embedder):
    def handler(req: ToolRequest) -> dict:
        topic = req.payload["query"]
        k = int(req.constraints.get("max_items", 5))
        items = generate_checklist(topic, k, tree, embedder)
        return {
            "items": [
                {"text": item.text, "sources": [s.to_dict() for s in item.sources]}
                for item in items
            ]
        }
    return ToolDescriptor("checklist", (INTENT_CHECKLIST,),
                          "cited preparedness checklist for a topic"), handler


def make_summary_tool(tree: RaptorTree, embedder, summarizer):
    def handler(req: ToolRequest) -> dict:
        query = req.payload["query"]
        k = int(req.constraints.get("max_items", 5))
        hits = collapsed_retrieve(tree, embedder.embed(query), k=k)
        summary = summarizer([node.text for node, _ in hits], 100)
        return {
            "summary": summary,
            "sources": [s.to_dict() for node, _ in hits for s in node.sources],
            "node_ids": [node.node_id for node, _ in hits],
        }
    return ToolDescriptor("summary", (INTENT_SUMMARIZE,),
                          "structured summary of retrieved guidance"), handler


def make_stub_tool(name: str, intent: str, canned: dict):
    """External tools (weather, maps, video) ship as canned stubs."""
    def handler(req: ToolRequest) -> dict:
        return {"stub": True, **canned}
    return ToolDescriptor(name, (intent,), f"stub {name} tool"), handler
