"""End-to-end orchestration: route, retrieve, compose, verify, cite."""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field

from .grounding import GroundingReport, Verdict, split_sentences, verify
from .raptor import RaptorTree, collapsed_retrieve
from .tools import (
    INTENT_CHECKLIST,
    INTENT_SUMMARIZE,
    ToolRegistry,
    ToolRequest,
)
from .vecindex import cosine

ANSWER_TEMPLATE = "Based on the retrieved guidance:"
DEFAULT_RETRIEVE_K = 5


class AssistantError(RuntimeError):
    """Query answering failure."""


@dataclass(frozen=True)
class Answer:
    text: str
    citations: tuple  # of (DocumentSource, node_id)
    grounding: GroundingReport
    tool_trace: tuple  # of (tool name, request_id, status)
    timing_ms: dict


@dataclass
class Session:
    session_id: str
    turns: list = field(default_factory=list)  # append-only (query, Answer)
    context: dict = field(default_factory=dict)


@dataclass(frozen=True)
class AssistantConfig:
    retrieve_k: int = DEFAULT_RETRIEVE_K
    target_tokens: int = 120
    tau_sentence: float = 0.75
    tau_reject: float = 0.55
    refuse_on_reject: bool = False


def compose_answer(query: str, evidence, embedder, target_tokens: int = 120) -> str:
    """Extractive composer: top query-similar evidence sentences, source order.

    Every emitted sentence exists verbatim in the evidence; a fixed template
    line prefixes the body.
    """
    if not evidence:
        raise AssistantError("empty evidence")
    query_vec = embedder.embed(query)
    sentences: list[str] = []
    seen: set[str] = set()
    for node in evidence:
        for sentence in split_sentences(node.text):
            # chunk boundaries can cut sentences mid-way; joining such fragments
            # would fabricate text, so only terminator-ended sentences qualify
            if sentence[-1] not in ".!?":
                continue
            if sentence not in seen:
                seen.add(sentence)
                sentences.append(sentence)
    if not sentences:
        sentences = [s for node in evidence for s in split_sentences(node.text)]
    scores = []
    for i, sentence in enumerate(sentences):
        try:
            scores.append(cosine(query_vec, embedder.embed(sentence)))
        except ValueError:
            scores.append(-1.0)
    ranked = sorted(range(len(sentences)), key=lambda i: (-scores[i], i))
    chosen: list[int] = []
    total = 0
    from .corpus import tokenize

    for i in ranked:
        if total >= target_tokens:
            break
        chosen.append(i)
        total += len(tokenize(sentences[i]))
    chosen.sort()
    body = " ".join(sentences[i] for i in chosen)
    return f"{ANSWER_TEMPLATE} {body}"


def _strip_template(text: str) -> str:
    if text.startswith(ANSWER_TEMPLATE):
        return text[len(ANSWER_TEMPLATE):].strip()
    return text


class Assistant:
    """Shared read-only tree and registry; one in-flight query per session."""

    def __init__(self, tree: RaptorTree, embedder, registry: ToolRegistry,
                 cfg: AssistantConfig = AssistantConfig(), generator=None):
        self.tree = tree
        self.embedder = embedder
        self.registry = registry
        self.cfg = cfg
        self.generator = generator  # optional remote composer: (query, texts) -> str

    def answer_query(self, query: str, session: Session) -> Answer:
        timing: dict[str, int] = {}
        trace: list[tuple[str, str, str]] = []
        req = ToolRequest(
            request_id=f"{session.session_id}-{uuid.uuid4().hex[:8]}",
            intent="", context=dict(session.context), payload={"query": query},
            constraints={"max_items": self.cfg.retrieve_k},
        )

        t0 = time.monotonic()
        tool = self.registry.route(req)
        timing["route"] = int((time.monotonic() - t0) * 1000)

        if self.registry.lookup(tool).intents[0] in (INTENT_CHECKLIST, INTENT_SUMMARIZE):
            answer = self._answer_via_tool(tool, req, query, timing, trace)
        else:
            answer = self._answer_retrieval(req, query, timing, trace)
        session.turns.append((query, answer))
        return answer

    def _retrieve(self, text: str, k: int):
        return collapsed_retrieve(self.tree, self.embedder.embed(text), k=k)

    def _verify_answer(self, text: str, evidence):
        """Double verification: re-retrieve for the answer text, score against
        the union of the original and re-retrieved evidence."""
        re_hits = self._retrieve(text, self.cfg.retrieve_k)
        union = {n.node_id: n for n in evidence}
        union.update({n.node_id: n for n, _ in re_hits})
        report = verify(_strip_template(text), list(union.values()),
                        tau_sentence=self.cfg.tau_sentence,
                        tau_reject=self.cfg.tau_reject, embedder=self.embedder)
        return report, list(union.values())

    def _citations(self, report: GroundingReport, evidence) -> tuple:
        by_id = {n.node_id: n for n in evidence}
        cited: list[tuple] = []
        seen: set[str] = set()
        for support in report.per_sentence:
            node = by_id.get(support.best_evidence_id)
            if node is None or node.node_id in seen:
                continue
            seen.add(node.node_id)
            for src in node.sources:
                cited.append((src, node.node_id))
        return tuple(cited)

    def _answer_retrieval(self, req: ToolRequest, query: str, timing, trace) -> Answer:
        t0 = time.monotonic()
        response = self.registry.invoke(req)
        trace.append(("retrieval", req.request_id, response.status))
        timing["retrieve"] = int((time.monotonic() - t0) * 1000)
        if response.status != "ok":
            raise AssistantError(f"retrieval failed: {response.error}")
        evidence = [self.tree.nodes[h["node_id"]] for h in response.payload["hits"]]

        t0 = time.monotonic()
        if self.generator is not None:
            text = self.generator(query, [n.text for n in evidence])
        else:
            text = compose_answer(query, evidence, self.embedder,
                                  self.cfg.target_tokens)
        timing["compose"] = int((time.monotonic() - t0) * 1000)

        t0 = time.monotonic()
        report, union = self._verify_answer(text, evidence)
        if report.verdict is Verdict.REJECTED and self.generator is not None:
            # one deterministic retry keeps the system answering with lower fluency
            text = compose_answer(query, evidence, self.embedder,
                                  self.cfg.target_tokens)
            report, union = self._verify_answer(text, evidence)
        timing["verify"] = int((time.monotonic() - t0) * 1000)

        citations = self._citations(report, union)
        if report.verdict is Verdict.REJECTED and self.cfg.refuse_on_reject:
            raise AssistantError("answer rejected by grounding verification")
        return Answer(text=text, citations=citations, grounding=report,
                      tool_trace=tuple(trace), timing_ms=timing)

    def _answer_via_tool(self, tool: str, req: ToolRequest, query: str,
                         timing, trace) -> Answer:
        t0 = time.monotonic()
        response = self.registry.invoke(req)
        trace.append((tool, req.request_id, response.status))
        timing["tool"] = int((time.monotonic() - t0) * 1000)
        if response.status != "ok":
            raise AssistantError(f"tool {tool} failed: {response.error}")
        if "items" in response.payload:
            text = " ".join(item["text"] for item in response.payload["items"])
        else:
            text = response.payload.get("summary", "")
        if not text:
            raise AssistantError(f"tool {tool} returned no text")

        t0 = time.monotonic()
        evidence = [n for n, _ in self._retrieve(query, self.cfg.retrieve_k)]
        report, union = self._verify_answer(text, evidence)
        timing["verify"] = int((time.monotonic() - t0) * 1000)
        citations = self._citations(report, union)
        return Answer(text=text, citations=citations, grounding=report,
                      tool_trace=tuple(trace), timing_ms=timing)
