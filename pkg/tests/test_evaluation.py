"""Tests for the evaluation harness: token F1, rule judge, benchmark report."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guidetree.assistant import Answer
from guidetree.evaluation import (
    CRITERIA,
    TABLE_COLUMNS,
    EvalItem,
    load_benchmark,
    rule_judge,
    run_benchmark,
    token_f1,
)
from guidetree.grounding import verify


def make_answer(text, evidence_nodes):
    report = verify(text, evidence_nodes)
    return Answer(text=text, citations=(), grounding=report, tool_trace=(),
                  timing_ms={})


class FakeNode:
    def __init__(self, node_id, text):
        self.node_id = node_id
        self.text = text


EVIDENCE = [FakeNode("e1", "Store one gallon of water per person per day. "
                           "Keep a battery powered radio in the kit.")]


class TestTokenF1:
    def test_exact_match(self):
        p, r, f1 = token_f1("Close the valve.", "Close the valve.")
        assert (p, r, f1) == (1.0, 1.0, 1.0)

    def test_disjoint(self):
        assert token_f1("alpha beta", "gamma delta") == (0.0, 0.0, 0.0)

    def test_hand_value(self):
        # pred tokens {a, b}, gold tokens {b, c}: overlap 1, P = R = 1/2, F1 = 1/2
        p, r, f1 = token_f1("a b", "b c")
        assert p == pytest.approx(0.5)
        assert r == pytest.approx(0.5)
        assert f1 == pytest.approx(0.5)

    def test_multiset_counting(self):
        # repeated tokens count with multiplicity: overlap on "go" is min(2, 1)
        p, r, _ = token_f1("go go", "go stop")
        assert p == pytest.approx(0.5)
        assert r == pytest.approx(0.5)

    def test_case_insensitive(self):
        assert token_f1("CLOSE THE VALVE", "close the valve")[2] == pytest.approx(1.0)


class TestRuleJudge:
    def test_echo_scores_perfect_correctness(self):
        truth = "Store one gallon of water per person per day."
        item = EvalItem(question="How much water should I store?",
                        ground_truth=truth)
        card = rule_judge(item, make_answer(truth, EVIDENCE))
        assert card.correctness == pytest.approx(5.0, abs=1e-9)
        assert card.completeness == pytest.approx(5.0, abs=1e-9)
        assert card.groundedness == pytest.approx(5.0, abs=1e-9)
        assert card.fluency == pytest.approx(5.0)

    def test_scores_bounded(self):
        item = EvalItem(question="Anything?", ground_truth="Totally unrelated text.")
        card = rule_judge(item, make_answer("Keep a battery powered radio in the kit.",
                                            EVIDENCE))
        for criterion in CRITERIA:
            assert 0.0 <= getattr(card, criterion) <= 5.0

    def test_fragmented_text_scores_low_fluency(self):
        item = EvalItem(question="q?", ground_truth="Keep a radio.")
        card = rule_judge(item, make_answer("Ok. No. Keep a battery powered radio.",
                                            EVIDENCE))
        assert card.fluency == pytest.approx(5.0 / 3.0, abs=1e-9)

    def test_empty_item_rejected(self):
        with pytest.raises(ValueError):
            EvalItem(question="", ground_truth="x")


class TestBenchmark:
    def items(self):
        return [
            EvalItem(question="How much water?",
                     ground_truth="Store one gallon of water per person per day."),
            EvalItem(question="What about a radio?",
                     ground_truth="Keep a battery powered radio in the kit."),
        ]

    def echo_system(self, item):
        return make_answer(item.ground_truth, EVIDENCE)

    def broken_system(self, item):
        raise RuntimeError("no backend")

    def test_echo_system_means(self):
        report = run_benchmark(self.items(), [("echo", self.echo_system)])
        assert report.means["echo"]["correctness"] == pytest.approx(5.0, abs=1e-9)
        assert report.means["echo"]["groundedness"] == pytest.approx(5.0, abs=1e-9)

    def test_failing_system_scores_zero(self, caplog):
        report = run_benchmark(self.items(), [("broken", self.broken_system)])
        assert all(v == 0.0 for v in report.means["broken"].values())

    def test_table_format(self):
        report = run_benchmark(
            self.items(),
            [("echo", self.echo_system), ("broken", self.broken_system)],
        )
        table = report.table()
        lines = table.splitlines()
        header = lines[0].split()
        assert tuple(header) == TABLE_COLUMNS
        assert set(lines[1]) <= {"-", " "}
        assert lines[2].startswith("echo")
        assert lines[3].startswith("broken")
        assert "5.00" in lines[2]
        assert "0.00" in lines[3]

    def test_records_shape(self):
        report = run_benchmark(self.items(), [("echo", self.echo_system)])
        recs = report.records()
        assert len(recs) == 2
        assert set(recs[0]) == {"system", "item", *CRITERIA}

    def test_empty_inputs_rejected(self):
        with pytest.raises(ValueError):
            run_benchmark([], [("echo", self.echo_system)])
        with pytest.raises(ValueError):
            run_benchmark(self.items(), [])


class TestLoadBenchmark:
    def test_fixture_file(self, benchmark_path):
        items = load_benchmark(benchmark_path)
        assert len(items) == 20
        assert all(isinstance(item, EvalItem) for item in items)
        assert items[0].context_doc_ids == ("fema-ayr-shelter",)

    def test_missing_field_names_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"question": "q?"}\n')
        with pytest.raises(ValueError, match="1"):
            load_benchmark(path)


@given(st.text(max_size=80), st.text(min_size=1, max_size=80))
@settings(max_examples=50, deadline=None)
def test_f1_symmetric_bounds(a, b):
    p, r, f1 = token_f1(a, b)
    assert 0.0 <= p <= 1.0 and 0.0 <= r <= 1.0 and 0.0 <= f1 <= 1.0
    # swapping prediction and truth swaps precision and recall
    p2, r2, f12 = token_f1(b, a)
    assert p2 == pytest.approx(r) and r2 == pytest.approx(p)
    assert f12 == pytest.approx(f1)
