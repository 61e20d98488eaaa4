"""Five-criterion evaluation harness: rule judge, benchmark runner, report table.

Criteria: correctness, groundedness, completeness, relevance, fluency, each on
a 0-5 scale. The rule judge is deterministic so the harness runs offline; an
LLM-backed judge can be plugged in behind the same callable contract.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .assistant import Answer
from .corpus import tokenize
from .embed import HashEmbedder
from .grounding import split_sentences
from .vecindex import cosine

logger = logging.getLogger(__name__)

CRITERIA = ("correctness", "groundedness", "completeness", "relevance", "fluency")
TABLE_COLUMNS = ("Model", "Correct.", "Grounded.", "Complete.", "Relevance", "Fluency")


@dataclass(frozen=True)
class EvalItem:
    question: str
    ground_truth: str
    context_doc_ids: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.question or not self.ground_truth:
            raise ValueError("question and ground_truth must be non-empty")


@dataclass(frozen=True)
class ScoreCard:
    correctness: float
    groundedness: float
    completeness: float
    relevance: float
    fluency: float
    judge_name: str = "rule"

    def as_dict(self) -> dict:
        return {c: getattr(self, c) for c in CRITERIA}


def token_f1(prediction: str, truth: str) -> tuple[float, float, float]:
    """Multiset token overlap (precision, recall, F1), lowercased."""
    pred = Counter(t.lower() for t in tokenize(prediction))
    gold = Counter(t.lower() for t in tokenize(truth))
    overlap = sum((pred & gold).values())
    if overlap == 0:
        return 0.0, 0.0, 0.0
    precision = overlap / sum(pred.values())
    recall = overlap / sum(gold.values())
    return precision, recall, 2 * precision * recall / (precision + recall)


def rule_judge(item: EvalItem, response: Answer, embedder=None) -> ScoreCard:
    """Deterministic judge with hand-checkable per-criterion formulas."""
    embedder = embedder or HashEmbedder()
    _, recall, f1 = token_f1(response.text, item.ground_truth)
    correctness = 5.0 * f1
    completeness = 5.0 * recall
    groundedness = 5.0 * response.grounding.overall

    try:
        raw = cosine(embedder.embed(item.question), embedder.embed(response.text))
        relevance = 5.0 * (raw + 1.0) / 2.0
    except ValueError:
        relevance = 0.0

    sentences = split_sentences(response.text)
    if sentences:
        well_formed = sum(1 for s in sentences if len(tokenize(s)) >= 3)
        fluency = 5.0 * well_formed / len(sentences)
    else:
        fluency = 0.0

    clamp = lambda x: min(5.0, max(0.0, x))
    return ScoreCard(
        correctness=clamp(correctness), groundedness=clamp(groundedness),
        completeness=clamp(completeness), relevance=clamp(relevance),
        fluency=clamp(fluency), judge_name="rule",
    )


@dataclass(frozen=True)
class BenchmarkReport:
    systems: tuple[str, ...]
    means: dict[str, dict[str, float]]  # system -> criterion -> mean
    raw_scores: dict[str, list[ScoreCard]]

    def table(self) -> str:
        """Aligned text table with the five criterion columns."""
        rows = [TABLE_COLUMNS]
        for system in self.systems:
            m = self.means[system]
            rows.append((system,) + tuple(f"{m[c]:.2f}" for c in CRITERIA))
        widths = [max(len(r[i]) for r in rows) for i in range(len(TABLE_COLUMNS))]
        lines = []
        for i, row in enumerate(rows):
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
            if i == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines)

    def records(self) -> list[dict]:
        out = []
        for system in self.systems:
            for i, card in enumerate(self.raw_scores[system]):
                out.append({"system": system, "item": i, **card.as_dict()})
        return out


def run_benchmark(items, systems, judge=rule_judge) -> BenchmarkReport:
    """Score every (system, item) pair and reduce to per-criterion means.

    ``systems`` is a list of (name, answerer) where answerer(item) -> Answer.
    A failing system is scored 0 across criteria for that item and logged.
    """
    if not items:
        raise ValueError("need at least one benchmark item")
    if not systems:
        raise ValueError("need at least one system")
    raw: dict[str, list[ScoreCard]] = {}
    for name, answerer in systems:
        cards = []
        for item in items:
            try:
                cards.append(judge(item, answerer(item)))
            except Exception as exc:
                logger.warning("system %s failed on %r: %s", name, item.question, exc)
                cards.append(ScoreCard(0.0, 0.0, 0.0, 0.0, 0.0, judge_name="rule"))
        raw[name] = cards
    means = {
        name: {c: sum(getattr(card, c) for card in cards) / len(cards) for c in CRITERIA}
        for name, cards in raw.items()
    }
    return BenchmarkReport(systems=tuple(n for n, _ in systems), means=means,
                           raw_scores=raw)


def load_benchmark(path: str | Path) -> list[EvalItem]:
    """Newline-delimited records {question, ground_truth, context_doc_ids}."""
    items = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            try:
                items.append(EvalItem(
                    question=rec["question"], ground_truth=rec["ground_truth"],
                    context_doc_ids=tuple(rec.get("context_doc_ids") or ()),
                ))
            except KeyError as exc:
                raise ValueError(f"{path}:{lineno}: missing field {exc}") from exc
    return items
