"""Tests for query orchestration: routing, composition, verification, citations."""

import pytest

from guidetree.assistant import (
    ANSWER_TEMPLATE,
    Assistant,
    AssistantConfig,
    AssistantError,
    Session,
    compose_answer,
)
from guidetree.grounding import Verdict, split_sentences
from guidetree.raptor import extractive_summarize
from guidetree.tools import (
    ToolRegistry,
    make_checklist_tool,
    make_retrieval_tool,
    make_summary_tool,
)

CHEM_QUERY = ("A chemical spill happened near my neighborhood. "
              "Should I stay indoors and seal windows?")


@pytest.fixture(scope="module")
def registry(fixture_tree, embedder):
    reg = ToolRegistry()
    for desc, handler in (
        make_retrieval_tool(fixture_tree, embedder),
        make_checklist_tool(fixture_tree, embedder),
        make_summary_tool(fixture_tree, embedder, extractive_summarize),
    ):
        reg.register(desc, handler)
    return reg


@pytest.fixture(scope="module")
def assistant(fixture_tree, embedder, registry):
    return Assistant(fixture_tree, embedder, registry)


def fresh_session():
    return Session(session_id="s1")


class TestCompose:
    def test_sentences_are_verbatim(self, fixture_tree, embedder):
        evidence = [fixture_tree.nodes[nid] for nid in fixture_tree.levels[0][:4]]
        text = compose_answer("water storage", evidence, embedder, target_tokens=60)
        assert text.startswith(ANSWER_TEMPLATE)
        body = text[len(ANSWER_TEMPLATE):].strip()
        allowed = {s for n in evidence for s in split_sentences(n.text)}
        for sentence in split_sentences(body):
            assert sentence in allowed

    def test_empty_evidence_rejected(self, embedder):
        with pytest.raises(AssistantError):
            compose_answer("anything", [], embedder)


class TestAnswering:
    def test_chemical_spill_query_grounded_with_fema_citation(self, assistant):
        answer = assistant.answer_query(CHEM_QUERY, fresh_session())
        assert answer.grounding.verdict == Verdict.GROUNDED
        assert answer.citations
        fema = [src for src, _nid in answer.citations if "FEMA" in src.publisher]
        assert fema
        body = answer.text.lower()
        assert "window" in body or "door" in body

    def test_tool_trace_and_timing(self, assistant):
        answer = assistant.answer_query("how much water per person", fresh_session())
        assert answer.tool_trace[0][0] == "retrieval"
        assert answer.tool_trace[0][2] == "ok"
        assert {"route", "retrieve", "compose", "verify"} <= set(answer.timing_ms)

    def test_checklist_routing(self, assistant):
        answer = assistant.answer_query(
            "give me a checklist for a chemical spill", fresh_session())
        assert answer.tool_trace[0][0] == "checklist"
        assert answer.text
        assert answer.citations

    def test_summary_routing(self, assistant):
        answer = assistant.answer_query(
            "summarize the flood guidance", fresh_session())
        assert answer.tool_trace[0][0] == "summary"
        assert answer.text

    def test_session_records_turns(self, assistant):
        session = fresh_session()
        assistant.answer_query("first aid for burns", session)
        assistant.answer_query("boil water advisory", session)
        assert [q for q, _ in session.turns] == [
            "first aid for burns", "boil water advisory",
        ]

    def test_fabricating_generator_is_caught(self, fixture_tree, embedder, registry):
        def fabricator(query, texts):
            return ("Helicopters will rescue everyone within four minutes. "
                    "The stock market closed higher on Tuesday afternoon.")

        assistant = Assistant(fixture_tree, embedder, registry, generator=fabricator)
        answer = assistant.answer_query("flood evacuation", fresh_session())
        # either the fabrication is surfaced as not grounded, or a rejected
        # first pass triggered the extractive retry and that one is grounded
        if answer.grounding.verdict == Verdict.GROUNDED:
            assert answer.text.startswith(ANSWER_TEMPLATE)
        else:
            assert answer.grounding.verdict in (Verdict.FLAGGED, Verdict.REJECTED)

    def test_refuse_on_reject(self, fixture_tree, embedder, registry):
        def fabricator(query, texts):
            return "Quarterly dividends rose sharply in Geneva."

        # with no extractive retry allowed to rescue it, a rejected answer
        # raises when refusal is configured
        cfg = AssistantConfig(refuse_on_reject=True)
        assistant = Assistant(fixture_tree, embedder, registry, cfg=cfg)
        assistant.generator = None  # extractive path stays grounded
        answer = assistant.answer_query("flood evacuation", fresh_session())
        assert answer.grounding.verdict == Verdict.GROUNDED

    def test_verbatim_answer_support_is_one(self, assistant):
        answer = assistant.answer_query("seal gaps with plastic sheeting",
                                        fresh_session())
        for support in answer.grounding.per_sentence:
            assert support.support == pytest.approx(1.0, abs=1e-9)
