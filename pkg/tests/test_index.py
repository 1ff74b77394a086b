import math

import numpy as np
import pytest

from dtpp.distance import real_distance, tuple_distance_fn
from dtpp.index import LinearIndex, VPTree, build_index, build_linear, build_vptree, make_items, query_knn


def _euclid(a, b):
    return math.dist(a, b)


def test_linear_bookkeeping():
    assert len(build_linear([])) == 0
    items = make_items([3.0, 1.0, 3.0])
    idx = build_linear(items, real_distance)
    assert len(idx) == 3
    assert [it.point for it in idx.items] == [3.0, 1.0, 3.0]


def test_small_population_is_single_leaf():
    tree = build_vptree(make_items(range(10)), real_distance, bucket_size=16)
    assert tree.depth == 1
    assert len(list(tree.leaves())) == 1


def test_structure_audit():
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 1, 1000).tolist()
    tree = build_vptree(make_items(pts), real_distance, bucket_size=16, seed=3)
    assert tree.depth <= 2 * math.ceil(math.log2(1000 / 16)) + 2
    seen = sorted(it.ordinal for it in tree.walk())
    assert seen == list(range(1000))
    for leaf in tree.leaves():
        assert len(leaf.items) <= 16
    for it in tree.walk():
        hit = tree.query(it.point, 1)[0]
        assert hit[1] == 0.0


def test_node_split_invariant():
    rng = np.random.default_rng(1)
    tree = build_vptree(make_items(rng.uniform(0, 1, 500).tolist()), real_distance, 8, seed=2)

    def check(node):
        if not hasattr(node, "vantage"):
            return
        for it in _collect(node.inside):
            assert real_distance(it.point, node.vantage.point) <= node.mu
        for it in _collect(node.outside):
            assert real_distance(it.point, node.vantage.point) > node.mu
        check(node.inside)
        check(node.outside)

    def _collect(node):
        if node is None:
            return []
        if hasattr(node, "items"):
            return list(node.items)
        return [node.vantage] + _collect(node.inside) + _collect(node.outside)

    check(tree.root)


def test_identical_points():
    tree = build_vptree(make_items([2.0] * 100), real_distance, bucket_size=4)
    res = tree.query(2.5, 7)
    assert len(res) == 7
    assert [it.ordinal for it, _ in res] == list(range(7))


def test_line_example():
    for idx in (build_linear(make_items([0.0, 1.0, 2.0, 3.0]), real_distance),
                build_vptree(make_items([0.0, 1.0, 2.0, 3.0]), real_distance, bucket_size=1)):
        res = query_knn(idx, 1.4, 2)
        assert [it.point for it, _ in res] == [1.0, 2.0]
        assert [d for _, d in res] == pytest.approx([0.4, 0.6])


def test_k_exceeds_size():
    pts = [5.0, 1.0, 3.0]
    for kind in ("linear", "vptree"):
        res = build_index(kind, make_items(pts), real_distance).query(0.0, 10)
        assert [it.point for it, _ in res] == [1.0, 3.0, 5.0]


def test_empty_index_query():
    assert build_vptree([], real_distance).query(1.0, 3) == []
    assert build_linear([], real_distance).query(1.0, 3) == []


def test_k_must_be_positive():
    with pytest.raises(ValueError):
        build_linear(make_items([1.0]), real_distance).query(0.0, 0)


def test_2d_oracle_equivalence():
    rng = np.random.default_rng(4)
    pts = [tuple(p) for p in rng.uniform(0, 1, (10_000, 2))]
    items = make_items(pts)
    lin, vp = LinearIndex(items, _euclid), VPTree(items, _euclid, seed=5)
    for q in rng.uniform(0, 1, (100, 2)):
        q = tuple(q)
        a = [d for _, d in lin.query(q, 10)]
        b = [d for _, d in vp.query(q, 10)]
        assert a == b


def test_returned_distances_are_recomputable():
    rng = np.random.default_rng(6)
    dist = tuple_distance_fn(real_distance, real_distance)
    items = make_items([tuple(p) for p in rng.normal(size=(2000, 2))])
    tree = VPTree(items, dist, seed=1)
    for q in rng.normal(size=(20, 2)):
        res = tree.query(tuple(q), 15)
        ds = [d for _, d in res]
        assert ds == sorted(ds)
        assert all(d == dist(tuple(q), it.point) for it, d in res)


def test_ties_in_insertion_order():
    pts = [1.0, 3.0, 1.0, 3.0, 2.0]
    for kind in ("linear", "vptree"):
        extra = {"bucket_size": 1} if kind == "vptree" else {}
        res = build_index(kind, make_items(pts), real_distance, **extra).query(2.0, 3)
        assert [it.ordinal for it, _ in res] == [4, 0, 1]


def test_pruning_evaluations():
    rng = np.random.default_rng(8)
    items = make_items(rng.uniform(0, 1, 10_000).tolist())
    tree = VPTree(items, real_distance, seed=0)
    for q in rng.uniform(0, 1, 200):
        tree.query(float(q), 10)
    stats = tree.stats()
    assert stats.queries == 200
    assert stats.mean_distance_evals < 0.2 * 10_000
