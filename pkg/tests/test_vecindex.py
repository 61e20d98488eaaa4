import numpy as np
import pytest

from guidetree.vecindex import (
    IndexError_,
    IndexedVector,
    VectorIndex,
    build_index,
    cosine,
)


def brute_force_search(items, query, k):
    """Oracle: all pairwise cosines, sorted by (-score, id)."""
    scored = [(id_, cosine(np.asarray(v), query)) for id_, v in items]
    scored.sort(key=lambda t: (-t[1], t[0]))
    return [id_ for id_, _ in scored[:k]]


class TestCosine:
    def test_identical_direction(self):
        assert cosine(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 1.0

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_hand_value(self):
        got = cosine(np.array([1.0, 1.0]), np.array([1.0, 0.0]))
        assert got == pytest.approx(0.7071068, abs=1e-6)

    def test_zero_vector_error(self):
        with pytest.raises(IndexError_, match="zero vector"):
            cosine(np.zeros(3), np.ones(3))

    def test_dim_mismatch_error(self):
        with pytest.raises(IndexError_, match="mismatch"):
            cosine(np.ones(3), np.ones(4))

    def test_symmetry_and_scale_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            a, b = rng.normal(size=8), rng.normal(size=8)
            assert abs(cosine(a, b) - cosine(b, a)) <= 1e-12
            assert abs(cosine(3.7 * a, b) - cosine(a, b)) <= 1e-9

    def test_clamped(self):
        v = np.array([1e-8, 1.0])
        assert -1.0 <= cosine(v, v) <= 1.0


class TestBuildIndex:
    def test_single_item(self):
        idx = build_index([("a", np.array([1.0, 0.0]))])
        assert len(idx) == 1

    def test_duplicate_id_named(self):
        items = [("c1", np.ones(2)), ("c1", np.ones(2))]
        with pytest.raises(IndexError_, match="c1"):
            build_index(items)

    def test_dim_mismatch(self):
        with pytest.raises(IndexError_):
            build_index([("a", np.ones(2)), ("b", np.ones(3))])

    def test_empty(self):
        with pytest.raises(IndexError_):
            build_index([])

    def test_indexed_vector_items(self):
        idx = build_index([IndexedVector("a", np.array([0.0, 2.0]))])
        assert idx.ids == ["a"]

    def test_large_construction(self):
        rng = np.random.default_rng(2)
        items = [(f"v{i:05d}", rng.normal(size=256)) for i in range(10_000)]
        assert len(build_index(items)) == 10_000


class TestSearch:
    def test_self_match_rank_one(self):
        rng = np.random.default_rng(3)
        items = [(f"v{i}", rng.normal(size=16)) for i in range(20)]
        idx = build_index(items)
        hits = idx.search(np.asarray(items[7][1]), k=1)
        assert hits[0].id == "v7"
        assert hits[0].score == pytest.approx(1.0, abs=1e-6)

    def test_k_exceeds_size(self):
        rng = np.random.default_rng(4)
        items = [(f"v{i}", rng.normal(size=8)) for i in range(5)]
        hits = build_index(items).search(rng.normal(size=8), k=50)
        assert len(hits) == 5
        assert all(a.score >= b.score for a, b in zip(hits, hits[1:]))

    def test_zero_query_error(self):
        idx = build_index([("a", np.ones(3))])
        with pytest.raises(IndexError_, match="zero query"):
            idx.search(np.zeros(3), k=1)

    def test_brute_force_equivalence(self):
        rng = np.random.default_rng(5)
        items = [(f"v{i:03d}", rng.normal(size=32)) for i in range(500)]
        idx = build_index(items)
        for _ in range(50):
            query = rng.normal(size=32)
            got = [h.id for h in idx.search(query, k=10)]
            assert got == brute_force_search(items, query, 10)

    def test_insertion_order_irrelevant(self):
        rng = np.random.default_rng(6)
        items = [(f"v{i}", rng.normal(size=8)) for i in range(30)]
        # exact duplicates force score ties
        items += [(f"dup{i}", items[0][1].copy()) for i in range(5)]
        query = rng.normal(size=8)
        a = [h.id for h in build_index(items).search(query, k=10)]
        b = [h.id for h in build_index(list(reversed(items))).search(query, k=10)]
        assert a == b

    def test_tie_break_ascending_id(self):
        v = np.array([1.0, 0.0])
        idx = build_index([("b", v), ("a", v), ("c", v)])
        assert [h.id for h in idx.search(v, k=3)] == ["a", "b", "c"]


class TestSnapshot:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        items = [(f"v{i}", rng.normal(size=12)) for i in range(25)]
        idx = build_index(items)
        path = tmp_path / "index.smvi"
        idx.save(path)
        loaded = VectorIndex.load(path)
        assert loaded.ids == idx.ids
        assert loaded.dim == idx.dim
        query = rng.normal(size=12)
        got = [h.id for h in loaded.search(query, k=5)]
        want = [h.id for h in idx.search(query, k=5)]
        assert got == want

    def test_magic_bytes(self, tmp_path):
        idx = build_index([("a", np.ones(3))])
        path = tmp_path / "index.smvi"
        idx.save(path)
        assert path.read_bytes()[:4] == b"SMVI"

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.smvi"
        path.write_bytes(b"XXXX" + b"\x00" * 16)
        with pytest.raises(IndexError_, match="magic"):
            VectorIndex.load(path)
