"""Exact top-k cosine search over identified vectors.

The index stores unit-normalized copies of every vector, so each similarity
is a single dot product. Ties are broken by ascending id, which makes search
results independent of insertion order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SNAPSHOT_MAGIC = b"SMVI"
SNAPSHOT_VERSION = 1


class IndexError_(ValueError):
    """Invalid index construction or query."""


@dataclass(frozen=True)
class SearchHit:
    id: str
    score: float


@dataclass(frozen=True)
class IndexedVector:
    id: str
    vector: np.ndarray


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two non-zero vectors, clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise IndexError_(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise IndexError_("cosine undefined for zero vector")
    return float(np.clip(float(a @ b) / (na * nb), -1.0, 1.0))


class VectorIndex:
    """Immutable flat index; build once, search from any number of threads."""

    def __init__(self, ids: list[str], matrix: np.ndarray):
        # rows are unit-normalized and sorted by id (stable tie-break)
        self._ids = ids
        self._matrix = matrix
        self._matrix.setflags(write=False)

    @property
    def dim(self) -> int:
        return self._matrix.shape[1]

    def __len__(self) -> int:
        return len(self._ids)

    @property
    def ids(self) -> list[str]:
        return list(self._ids)

    def vector(self, id_: str) -> np.ndarray:
        return self._matrix[self._ids.index(id_)]

    def search(self, query: np.ndarray, k: int) -> list[SearchHit]:
        """Exact top-k by cosine; scores non-increasing, ties by ascending id."""
        if k < 1:
            raise IndexError_("k must be >= 1")
        query = np.asarray(query, dtype=np.float64)
        if query.shape != (self.dim,):
            raise IndexError_(f"query dim {query.shape} != index dim {self.dim}")
        norm = float(np.linalg.norm(query))
        if norm == 0.0:
            raise IndexError_("zero query vector")
        scores = np.clip(self._matrix @ (query / norm), -1.0, 1.0)
        # rows are pre-sorted by id, so a stable sort on -score keeps id order in ties
        order = np.argsort(-scores, kind="stable")[: min(k, len(self._ids))]
        return [SearchHit(self._ids[i], float(scores[i])) for i in order]

    def save(self, path: str | Path) -> None:
        """Write the binary snapshot (magic, version, dim, count, id+f32 records)."""
        with Path(path).open("wb") as fh:
            fh.write(SNAPSHOT_MAGIC)
            fh.write(struct.pack("<HIQ", SNAPSHOT_VERSION, self.dim, len(self._ids)))
            for id_, row in zip(self._ids, self._matrix):
                raw = id_.encode("utf-8")
                fh.write(struct.pack("<H", len(raw)))
                fh.write(raw)
                fh.write(row.astype("<f4").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "VectorIndex":
        with Path(path).open("rb") as fh:
            magic = fh.read(4)
            if magic != SNAPSHOT_MAGIC:
                raise IndexError_(f"bad snapshot magic {magic!r}")
            version, dim, count = struct.unpack("<HIQ", fh.read(14))
            if version != SNAPSHOT_VERSION:
                raise IndexError_(f"unsupported snapshot version {version}")
            ids = []
            rows = np.empty((count, dim), dtype=np.float64)
            for i in range(count):
                (idlen,) = struct.unpack("<H", fh.read(2))
                ids.append(fh.read(idlen).decode("utf-8"))
                rows[i] = np.frombuffer(fh.read(4 * dim), dtype="<f4").astype(np.float64)
        return cls(ids, rows)


def build_index(items) -> VectorIndex:
    """Build an immutable index from IndexedVector items or (id, vector) pairs.

    Vectors are normalized on ingest; ids must be unique and dimensions uniform.
    """
    items = [
        (item.id, item.vector) if isinstance(item, IndexedVector) else tuple(item)
        for item in items
    ]
    if not items:
        raise IndexError_("cannot build an empty index")
    seen: set[str] = set()
    dim = len(np.asarray(items[0][1]))
    for id_, vec in items:
        if id_ in seen:
            raise IndexError_(f"duplicate id {id_!r}")
        seen.add(id_)
        if len(np.asarray(vec)) != dim:
            raise IndexError_(f"dimension mismatch for id {id_!r}")
    ordered = sorted(items, key=lambda item: item[0])
    matrix = np.empty((len(ordered), dim), dtype=np.float64)
    ids = []
    for i, (id_, vec) in enumerate(ordered):
        vec = np.asarray(vec, dtype=np.float64)
        if not np.all(np.isfinite(vec)):
            raise IndexError_(f"non-finite vector for id {id_!r}")
        norm = float(np.linalg.norm(vec))
        matrix[i] = vec / norm if norm > 0 else vec
        ids.append(id_)
    return VectorIndex(ids, matrix)
