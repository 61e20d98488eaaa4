"""Hierarchical summary tree: recursive embed -> reduce -> cluster -> summarize.

Leaves are document chunks; each level above holds cluster summaries embedded
with the same embedder as the leaves. Retrieval either traverses level by level
with a beam or ranks every node at once (collapsed).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .cluster import EmConfig, select_k, soft_assign
from .corpus import Chunk, ChunkConfig, DocumentSource, tokenize
from .embed import HashEmbedder
from .grounding import split_sentences
from .reduce import ReduceConfig, umap_fit
from .vecindex import VectorIndex, build_index, cosine

TREE_SNAPSHOT_VERSION = 1


class TreeError(RuntimeError):
    """Tree construction or retrieval failure."""


@dataclass(frozen=True)
class TreeNode:
    node_id: str
    level: int
    text: str
    embedding: np.ndarray
    children: tuple[str, ...] = ()
    sources: tuple[DocumentSource, ...] = ()


@dataclass(frozen=True)
class BuildConfig:
    chunk_cfg: ChunkConfig = ChunkConfig()
    reduce_cfg: ReduceConfig = ReduceConfig()
    em_cfg: EmConfig = EmConfig()
    k_range: tuple[int, int] | None = None  # default (1, min(8, level_size))
    max_cluster_size: int = 12
    stop_node_count: int = 4
    summary_target_tokens: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.stop_node_count < 1:
            raise TreeError("stop_node_count must be >= 1")
        if self.max_cluster_size < 2:
            raise TreeError("max_cluster_size must be >= 2")


@dataclass(frozen=True)
class RaptorTree:
    nodes: dict[str, TreeNode]
    levels: list[list[str]]  # levels[i] = node ids at level i
    root_level: int
    build_config: BuildConfig
    index: VectorIndex

    @property
    def root(self) -> TreeNode:
        return self.nodes[self.levels[self.root_level][0]]

    def content_digest(self) -> str:
        """Stable digest over node ids, texts and links (rebuild determinism check)."""
        h = hashlib.sha256()
        for nid in sorted(self.nodes):
            node = self.nodes[nid]
            h.update(nid.encode())
            h.update(str(node.level).encode())
            h.update(node.text.encode())
            h.update(",".join(node.children).encode())
        return h.hexdigest()


def _leaf_id(chunk: Chunk) -> str:
    h = hashlib.sha256(f"leaf\x1f{chunk.chunk_id}\x1f{chunk.text}".encode()).hexdigest()
    return f"n0-{h[:16]}"


def _summary_id(level: int, children: tuple[str, ...], text: str) -> str:
    h = hashlib.sha256(
        ("sum\x1f" + str(level) + "\x1f" + ",".join(children) + "\x1f" + text).encode()
    ).hexdigest()
    return f"n{level}-{h[:16]}"


def extractive_summarize(texts: list[str], target_tokens: int = 100) -> str:
    """Deterministic summarizer: centroid-scored sentence selection.

    Sentences are embedded with the hash embedder, scored by cosine to their
    centroid, and greedily taken (ties by document order) until the token
    budget is reached; output keeps original sentence order.
    """
    if not texts:
        raise TreeError("nothing to summarize")
    sentences: list[str] = []
    seen: set[str] = set()
    for text in texts:
        for sentence in split_sentences(text):
            if sentence not in seen:
                seen.add(sentence)
                sentences.append(sentence)
    if not sentences:
        return " ".join(texts)
    embedder = HashEmbedder()
    vectors = []
    for s in sentences:
        toks = tokenize(s)
        vectors.append(embedder.embed(s) if toks else None)
    valid = [v for v in vectors if v is not None and np.any(v)]
    if not valid:
        return sentences[0]
    centroid = np.mean(valid, axis=0)
    scores = []
    for i, v in enumerate(vectors):
        if v is None or not np.any(v) or not np.any(centroid):
            scores.append(-1.0)
        else:
            scores.append(cosine(v, centroid))
    ranked = sorted(range(len(sentences)), key=lambda i: (-scores[i], i))
    chosen: list[int] = []
    total = 0
    for i in ranked:
        if total >= target_tokens:
            break
        chosen.append(i)
        total += len(tokenize(sentences[i]))
    chosen.sort()
    return " ".join(sentences[i] for i in chosen)


def _merged_sources(children: list[TreeNode]) -> tuple[DocumentSource, ...]:
    out: list[DocumentSource] = []
    seen: set[str] = set()
    for child in children:
        for src in child.sources:
            if src.doc_id not in seen:
                seen.add(src.doc_id)
                out.append(src)
    return tuple(sorted(out, key=lambda s: s.doc_id))


def _partition(level_nodes: list[TreeNode], embeddings: np.ndarray,
               cfg: BuildConfig) -> list[list[int]]:
    """Cluster one level into overlapping groups of bounded size.

    Returns lists of member indices. Guarantees fewer groups than nodes so
    every level strictly contracts.
    """
    m = len(level_nodes)
    reduce_cfg = replace(
        cfg.reduce_cfg,
        n_neighbors=max(2, min(cfg.reduce_cfg.n_neighbors, m - 1)),
        target_dim=min(cfg.reduce_cfg.target_dim, max(2, m - 2)),
        seed=cfg.seed,
    )
    reduced = umap_fit(embeddings, reduce_cfg).y
    k_min, k_max = cfg.k_range if cfg.k_range else (1, 8)
    k_min = max(1, min(k_min, m - 1))
    k_max = max(k_min, min(k_max, m - 1))
    em_cfg = replace(cfg.em_cfg, seed=cfg.seed)
    model = select_k(reduced, k_min, k_max, em_cfg)
    assignment = soft_assign(reduced, model, em_cfg.membership_threshold)

    clusters: list[list[int]] = [[] for _ in range(model.n_components)]
    for i, members in enumerate(assignment.memberships):
        for k in members:
            clusters[k].append(i)
    clusters = [c for c in clusters if c]

    # bound summarizer input: split oversized clusters on their reduced coords
    def split_oversized(cluster: list[int]) -> list[list[int]]:
        if len(cluster) <= cfg.max_cluster_size:
            return [cluster]
        sub = reduced[cluster]
        parts = max(2, -(-len(cluster) // cfg.max_cluster_size))
        parts = min(parts, len(cluster))
        sub_model = select_k(sub, parts, parts, em_cfg)
        hard = np.argmax(soft_assign(sub, sub_model, em_cfg.membership_threshold)
                         .responsibilities, axis=1)
        groups: dict[int, list[int]] = {}
        for local, comp in enumerate(hard):
            groups.setdefault(int(comp), []).append(cluster[local])
        result: list[list[int]] = []
        for comp in sorted(groups):
            group = groups[comp]
            if len(group) == len(cluster):  # clustering failed to split: chop by order
                result.extend(
                    group[i:i + cfg.max_cluster_size]
                    for i in range(0, len(group), cfg.max_cluster_size)
                )
            else:
                result.extend(split_oversized(group))
        return result

    final: list[list[int]] = []
    for cluster in clusters:
        final.extend(split_oversized(cluster))

    if len(final) >= m:  # degenerate selection: force a contracting hard partition
        model = select_k(reduced, max(1, m // 2), max(1, m // 2), em_cfg)
        hard = np.argmax(
            soft_assign(reduced, model, em_cfg.membership_threshold).responsibilities,
            axis=1,
        )
        groups: dict[int, list[int]] = {}
        for i, comp in enumerate(hard):
            groups.setdefault(int(comp), []).append(i)
        final = [groups[k] for k in sorted(groups)]
    return final


def build_tree(chunks: list[Chunk], embedder, summarizer=None,
               cfg: BuildConfig = BuildConfig()) -> RaptorTree:
    """Build the summary hierarchy over chunks.

    Level 0 holds one node per chunk. Each pass reduces the level's embeddings,
    selects the cluster count by BIC, soft-assigns with overlap (shared children
    for multi-topic nodes), summarizes each cluster into a parent, and repeats
    until a level is small enough; one root summary then closes the tree.
    """
    if not chunks:
        raise TreeError("need at least one chunk")
    if summarizer is None:
        summarizer = extractive_summarize

    nodes: dict[str, TreeNode] = {}
    leaves = []
    for chunk in chunks:
        node = TreeNode(
            node_id=_leaf_id(chunk), level=0, text=chunk.text,
            embedding=embedder.embed(chunk.text), sources=(chunk.source,),
        )
        if node.node_id in nodes:
            raise TreeError(f"duplicate leaf {node.node_id} (chunk {chunk.chunk_id})")
        nodes[node.node_id] = node
        leaves.append(node)
    levels: list[list[str]] = [[n.node_id for n in leaves]]

    def make_parent(level: int, members: list[TreeNode]) -> TreeNode:
        texts = [m.text for m in members]
        try:
            summary = summarizer(texts, cfg.summary_target_tokens)
        except Exception as exc:
            ids = ",".join(m.node_id for m in members)
            raise TreeError(f"summarizer failed for cluster [{ids}]: {exc}") from exc
        children = tuple(m.node_id for m in members)
        return TreeNode(
            node_id=_summary_id(level, children, summary), level=level, text=summary,
            embedding=embedder.embed(summary), children=children,
            sources=_merged_sources(members),
        )

    current = leaves
    level = 0
    while len(current) > cfg.stop_node_count:
        embeddings = np.stack([n.embedding for n in current])
        clusters = _partition(current, embeddings, cfg)
        parents = []
        for cluster in clusters:
            parent = make_parent(level + 1, [current[i] for i in cluster])
            if parent.node_id not in nodes:
                nodes[parent.node_id] = parent
                parents.append(parent)
        level += 1
        levels.append([n.node_id for n in parents])
        current = parents

    root = make_parent(level + 1, current)
    nodes[root.node_id] = root
    levels.append([root.node_id])
    root_level = level + 1

    index = build_index([(nid, node.embedding) for nid, node in nodes.items()])
    return RaptorTree(nodes=nodes, levels=levels, root_level=root_level,
                      build_config=cfg, index=index)


def collapsed_retrieve(tree: RaptorTree, query: np.ndarray, k: int = 5):
    """Top-k over every node in the tree, any level. Default k follows the
    retrieval setting of five."""
    hits = tree.index.search(query, k)
    return [(tree.nodes[h.id], h.score) for h in hits]


def traverse_retrieve(tree: RaptorTree, query: np.ndarray, beam: int = 3,
                      k: int = 5):
    """Root-to-leaf beam traversal; returns the top-k nodes visited (any level)."""
    if beam < 1:
        raise TreeError("beam must be >= 1")
    query = np.asarray(query, dtype=np.float64)
    visited: dict[str, float] = {}
    frontier = [tree.nodes[nid] for nid in tree.levels[tree.root_level]]
    while frontier:
        scored = sorted(
            ((cosine(query, n.embedding), n) for n in frontier),
            key=lambda t: (-t[0], t[1].node_id),
        )
        for score, node in scored:
            visited.setdefault(node.node_id, score)
        next_ids: list[str] = []
        seen: set[str] = set()
        for _, node in scored[:beam]:
            for child_id in node.children:
                if child_id not in seen:
                    seen.add(child_id)
                    next_ids.append(child_id)
        frontier = [tree.nodes[nid] for nid in next_ids]
    ranked = sorted(visited.items(), key=lambda t: (-t[1], t[0]))[:k]
    return [(tree.nodes[nid], score) for nid, score in ranked]


def save_tree(tree: RaptorTree, path: str | Path) -> None:
    """Versioned record-stream snapshot: header, node records, level table."""
    with Path(path).open("w", encoding="utf-8") as fh:
        header = {
            "record": "header", "version": TREE_SNAPSHOT_VERSION,
            "root_level": tree.root_level, "node_count": len(tree.nodes),
            "build_config": _config_to_dict(tree.build_config),
        }
        fh.write(json.dumps(header) + "\n")
        for nid in sorted(tree.nodes):
            node = tree.nodes[nid]
            fh.write(json.dumps({
                "record": "node", "node_id": node.node_id, "level": node.level,
                "text": node.text, "embedding": node.embedding.tolist(),
                "children": list(node.children),
                "sources": [s.to_dict() for s in node.sources],
            }, ensure_ascii=False) + "\n")
        fh.write(json.dumps({"record": "levels", "levels": tree.levels}) + "\n")


def load_tree(path: str | Path) -> RaptorTree:
    nodes: dict[str, TreeNode] = {}
    header = None
    levels = None
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            try:
                rec = json.loads(line)
                kind = rec.get("record")
                if kind == "header":
                    header = rec
                elif kind == "node":
                    nodes[rec["node_id"]] = TreeNode(
                        node_id=rec["node_id"], level=rec["level"], text=rec["text"],
                        embedding=np.asarray(rec["embedding"], dtype=np.float64),
                        children=tuple(rec["children"]),
                        sources=tuple(DocumentSource.from_dict(s) for s in rec["sources"]),
                    )
                elif kind == "levels":
                    levels = rec["levels"]
            except (KeyError, TypeError, ValueError) as exc:
                raise TreeError(f"malformed snapshot record on line {lineno}: {exc}") from exc
    if header is None or levels is None:
        raise TreeError("malformed tree snapshot")
    if header["version"] != TREE_SNAPSHOT_VERSION:
        raise TreeError(f"unsupported snapshot version {header['version']}")
    index = build_index([(nid, node.embedding) for nid, node in nodes.items()])
    return RaptorTree(nodes=nodes, levels=levels, root_level=header["root_level"],
                      build_config=_config_from_dict(header["build_config"]),
                      index=index)


def _config_to_dict(cfg: BuildConfig) -> dict:
    return {
        "chunk_cfg": {"max_tokens": cfg.chunk_cfg.max_tokens,
                      "overlap_tokens": cfg.chunk_cfg.overlap_tokens},
        "reduce_cfg": {
            "n_neighbors": cfg.reduce_cfg.n_neighbors,
            "target_dim": cfg.reduce_cfg.target_dim,
            "a": cfg.reduce_cfg.a, "b": cfg.reduce_cfg.b,
            "epochs": cfg.reduce_cfg.epochs,
            "learning_rate": cfg.reduce_cfg.learning_rate,
            "seed": cfg.reduce_cfg.seed, "sigma_target": cfg.reduce_cfg.sigma_target,
        },
        "em_cfg": {
            "max_iters": cfg.em_cfg.max_iters, "tol": cfg.em_cfg.tol,
            "n_init": cfg.em_cfg.n_init, "seed": cfg.em_cfg.seed,
            "membership_threshold": cfg.em_cfg.membership_threshold,
            "variance_floor": cfg.em_cfg.variance_floor,
        },
        "k_range": list(cfg.k_range) if cfg.k_range else None,
        "max_cluster_size": cfg.max_cluster_size,
        "stop_node_count": cfg.stop_node_count,
        "summary_target_tokens": cfg.summary_target_tokens,
        "seed": cfg.seed,
    }


def _config_from_dict(d: dict) -> BuildConfig:
    return BuildConfig(
        chunk_cfg=ChunkConfig(**d["chunk_cfg"]),
        reduce_cfg=ReduceConfig(**d["reduce_cfg"]),
        em_cfg=EmConfig(**d["em_cfg"]),
        k_range=tuple(d["k_range"]) if d.get("k_range") else None,
        max_cluster_size=d["max_cluster_size"],
        stop_node_count=d["stop_node_count"],
        summary_target_tokens=d["summary_target_tokens"],
        seed=d["seed"],
    )
