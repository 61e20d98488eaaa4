"""Document ingestion: provenance-carrying documents and sliding-window chunking."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path


class CorpusError(ValueError):
    """Raised for malformed corpus files or invalid documents."""


_TOKEN_RE = re.compile(r"[^\W_]+|\S", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Split text into maximal alphanumeric runs and single punctuation marks.

    Whitespace is discarded; case is preserved. Deterministic and pure.
    """
    return _TOKEN_RE.findall(text)


@dataclass(frozen=True)
class DocumentSource:
    doc_id: str
    title: str
    publisher: str
    section_path: tuple[str, ...] = ()
    page: int | None = None
    uri: str | None = None

    def __post_init__(self):
        if not self.title:
            raise CorpusError("document title must be non-empty")
        object.__setattr__(self, "section_path", tuple(self.section_path))

    def to_dict(self) -> dict:
        d = {
            "doc_id": self.doc_id,
            "title": self.title,
            "publisher": self.publisher,
            "section_path": list(self.section_path),
        }
        if self.page is not None:
            d["page"] = self.page
        if self.uri is not None:
            d["uri"] = self.uri
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DocumentSource":
        return cls(
            doc_id=d["doc_id"],
            title=d["title"],
            publisher=d["publisher"],
            section_path=tuple(d.get("section_path") or ()),
            page=d.get("page"),
            uri=d.get("uri"),
        )


@dataclass(frozen=True)
class Document:
    source: DocumentSource
    text: str

    def __post_init__(self):
        if not self.text.strip():
            raise CorpusError(f"document {self.source.doc_id!r} has empty text")


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    source: DocumentSource
    text: str
    token_span: tuple[int, int]
    ordinal: int


@dataclass(frozen=True)
class ChunkConfig:
    max_tokens: int = 100
    overlap_tokens: int = 20

    def __post_init__(self):
        if self.max_tokens <= 0:
            raise CorpusError("max_tokens must be positive")
        if not 0 <= self.overlap_tokens < self.max_tokens:
            raise CorpusError("overlap_tokens must satisfy 0 <= overlap < max_tokens")


def chunk_document(doc: Document, cfg: ChunkConfig = ChunkConfig()) -> list[Chunk]:
    """Segment a document into overlapping token windows.

    Consecutive chunks share exactly ``cfg.overlap_tokens`` tokens; the final
    chunk may be shorter but is never dropped. Every token of the document
    appears in at least one chunk.
    """
    tokens = tokenize(doc.text)
    if not tokens:
        raise CorpusError(f"empty document: {doc.source.doc_id!r}")
    stride = cfg.max_tokens - cfg.overlap_tokens
    chunks: list[Chunk] = []
    start = 0
    ordinal = 0
    while True:
        end = min(start + cfg.max_tokens, len(tokens))
        chunks.append(
            Chunk(
                chunk_id=f"{doc.source.doc_id}:{ordinal}",
                source=doc.source,
                text=" ".join(tokens[start:end]),
                token_span=(start, end),
                ordinal=ordinal,
            )
        )
        if end >= len(tokens):
            break
        start += stride
        ordinal += 1
    return chunks


_REQUIRED_FIELDS = ("doc_id", "title", "publisher", "text")


def load_corpus(path: str | Path) -> list[Document]:
    """Load a newline-delimited JSON corpus file.

    Each record requires doc_id, title, publisher and text; section_path,
    page and uri are optional. Errors name the offending line.
    """
    path = Path(path)
    docs: list[Document] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid record: {exc}") from exc
            if not isinstance(record, dict):
                raise CorpusError(f"{path}:{lineno}: record is not an object")
            for fieldname in _REQUIRED_FIELDS:
                if fieldname not in record:
                    raise CorpusError(f"{path}:{lineno}: missing field {fieldname!r}")
            if record["doc_id"] in seen:
                raise CorpusError(f"{path}:{lineno}: duplicate doc_id {record['doc_id']!r}")
            seen.add(record["doc_id"])
            docs.append(
                Document(source=DocumentSource.from_dict(record), text=record["text"])
            )
    return docs


def save_corpus(docs: list[Document], path: str | Path) -> None:
    """Write documents in the newline-delimited corpus format (load_corpus inverse)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for doc in docs:
            record = doc.source.to_dict()
            record["text"] = doc.text
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def documents_from_records(records: list[dict]) -> list[Document]:
    """Build documents from already-parsed corpus records (HTTP ingest path)."""
    docs: list[Document] = []
    seen: set[str] = set()
    for i, record in enumerate(records):
        if not isinstance(record, dict):
            raise CorpusError(f"record {i}: not an object")
        for fieldname in _REQUIRED_FIELDS:
            if fieldname not in record:
                raise CorpusError(f"record {i}: missing field {fieldname!r}")
        if record["doc_id"] in seen:
            raise CorpusError(f"record {i}: duplicate doc_id {record['doc_id']!r}")
        seen.add(record["doc_id"])
        docs.append(Document(source=DocumentSource.from_dict(record), text=record["text"]))
    return docs
