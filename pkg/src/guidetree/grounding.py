"""Answer verification: score each answer sentence against retrieved evidence.

Support is embedding similarity mapped to [0, 1]; an answer is grounded only
when every sentence clears the per-sentence threshold, and rejected when its
mean support falls below the reject threshold.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .embed import HashEmbedder
from .vecindex import cosine

DEFAULT_SENTENCE_THRESHOLD = 0.75
DEFAULT_REJECT_THRESHOLD = 0.55

_SENTENCE_BOUNDARY = re.compile(r"(?<=[.!?])\s+")


class GroundingError(ValueError):
    """Invalid verification inputs."""


class Verdict(str, Enum):
    GROUNDED = "grounded"
    FLAGGED = "flagged"
    REJECTED = "rejected"


@dataclass(frozen=True)
class SentenceSupport:
    sentence: str
    best_evidence_id: str
    support: float  # in [0, 1]


@dataclass(frozen=True)
class GroundingReport:
    per_sentence: tuple[SentenceSupport, ...]
    overall: float
    verdict: Verdict
    threshold_used: float

    def to_dict(self) -> dict:
        return {
            "per_sentence": [
                {"sentence": s.sentence, "best_evidence_id": s.best_evidence_id,
                 "support": s.support}
                for s in self.per_sentence
            ],
            "overall": self.overall,
            "verdict": self.verdict.value,
            "threshold_used": self.threshold_used,
        }


def split_sentences(text: str) -> list[str]:
    """Split on '.', '!' or '?' followed by whitespace or end of text."""
    parts = [p.strip() for p in _SENTENCE_BOUNDARY.split(text.strip())]
    return [p for p in parts if p]


def support_score(sentence: str, evidence, embedder=None) -> tuple[str, float]:
    """Best support for one sentence over evidence nodes, mapped to [0, 1].

    Each node is compared both as a whole and sentence by sentence, so a
    sentence copied verbatim from any node scores 1. Ties break by node id.
    """
    if not sentence.strip():
        raise GroundingError("empty sentence")
    if not evidence:
        raise GroundingError("evidence must be non-empty")
    embedder = embedder or HashEmbedder()
    sent_vec = embedder.embed(sentence)
    best_id, best = None, -1.0
    for node in sorted(evidence, key=lambda n: n.node_id):
        raw = -1.0
        for candidate in [node.text, *split_sentences(node.text)]:
            try:
                raw = max(raw, cosine(sent_vec, embedder.embed(candidate)))
            except ValueError:
                continue  # zero-feature text cannot support anything
        if raw > best:
            best_id, best = node.node_id, raw
    return best_id, (best + 1.0) / 2.0


def verify(answer: str, evidence, tau_sentence: float = DEFAULT_SENTENCE_THRESHOLD,
           tau_reject: float = DEFAULT_REJECT_THRESHOLD,
           embedder=None) -> GroundingReport:
    """Score every answer sentence; grounded / flagged / rejected verdict."""
    if not answer.strip():
        raise GroundingError("empty answer")
    if not evidence:
        raise GroundingError("evidence must be non-empty")
    if not 0 < tau_reject <= tau_sentence < 1:
        raise GroundingError("thresholds must satisfy 0 < tau_reject <= tau_sentence < 1")
    sentences = split_sentences(answer)
    per_sentence = []
    for sentence in sentences:
        best_id, score = support_score(sentence, evidence, embedder=embedder)
        per_sentence.append(SentenceSupport(sentence, best_id, score))
    overall = sum(s.support for s in per_sentence) / len(per_sentence)
    if all(s.support >= tau_sentence for s in per_sentence):
        verdict = Verdict.GROUNDED
    elif overall < tau_reject:
        verdict = Verdict.REJECTED
    else:
        verdict = Verdict.FLAGGED
    return GroundingReport(
        per_sentence=tuple(per_sentence), overall=overall, verdict=verdict,
        threshold_used=tau_sentence,
    )
