"""Nearest-neighbour indexes over parent values.

Both indexes work with nothing but a distance callable.  Results are sorted by
``(distance, ordinal)``, so equal distances come back in insertion order and
the two indexes agree item for item under a metric distance.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Any, Callable, Iterable, NamedTuple

import numpy as np

from .distance import default_distance


class IndexedItem(NamedTuple):
    point: Any
    payload: Any
    ordinal: int


@dataclass(frozen=True)
class IndexStats:
    kind: str
    size: int
    depth: int
    queries: int
    mean_distance_evals: float


def make_items(points: Iterable, payloads: Iterable | None = None) -> list[IndexedItem]:
    points = list(points)
    payloads = [None] * len(points) if payloads is None else list(payloads)
    return [IndexedItem(p, w, i) for i, (p, w) in enumerate(zip(points, payloads))]


class MetricIndex:
    kind = "abstract"

    def __init__(self, items, distance: Callable = default_distance):
        self.distance = distance
        self.size = len(items)
        self.queries = 0
        self.distance_evals = 0

    def __len__(self):
        return self.size

    def query(self, point, k: int) -> list[tuple[IndexedItem, float]]:
        raise NotImplementedError

    @property
    def depth(self) -> int:
        return 0

    def stats(self) -> IndexStats:
        mean = self.distance_evals / self.queries if self.queries else 0.0
        return IndexStats(self.kind, self.size, self.depth, self.queries, mean)

    def reset_counters(self) -> None:
        self.queries = 0
        self.distance_evals = 0


class LinearIndex(MetricIndex):
    """Scores every stored item against the query."""

    kind = "linear"

    def __init__(self, items, distance=default_distance):
        super().__init__(items, distance)
        self.items = list(items)

    def query(self, point, k):
        if k < 1:
            raise ValueError("k must be >= 1")
        dist = self.distance
        scored = [(dist(point, it.point), it.ordinal, it) for it in self.items]
        self.queries += 1
        self.distance_evals += len(scored)
        return [(it, d) for d, _, it in heapq.nsmallest(k, scored)]


class _Leaf:
    __slots__ = ("items",)

    def __init__(self, items):
        self.items = items


class _Node:
    __slots__ = ("vantage", "mu", "inside", "outside")

    def __init__(self, vantage, mu, inside, outside):
        self.vantage = vantage
        self.mu = mu
        self.inside = inside
        self.outside = outside


class VPTree(MetricIndex):
    """Vantage-point tree with leaf buckets of at most ``bucket_size`` items.

    Each node picks a vantage uniformly at random, puts items with distance
    ``<= mu`` (the lower median) inside and the rest outside.  A population whose
    distances to the vantage are all equal cannot be split and becomes a leaf.
    """

    kind = "vptree"

    def __init__(self, items, distance=default_distance, bucket_size: int = 32, seed: int = 0):
        super().__init__(items, distance)
        if bucket_size < 1:
            raise ValueError("bucket size must be >= 1")
        self.bucket_size = bucket_size
        self._rng = np.random.default_rng(seed)
        self.build_distance_evals = 0
        self.root = self._build(list(items)) if items else None
        self._depth = _depth(self.root)

    @property
    def depth(self):
        return self._depth

    def _build(self, items):
        if len(items) <= self.bucket_size:
            return _Leaf(items)
        vi = int(self._rng.integers(len(items)))
        vantage = items[vi]
        rest = items[:vi] + items[vi + 1:]
        dist = self.distance
        ds = [dist(vantage.point, it.point) for it in rest]
        self.build_distance_evals += len(ds)
        ordered = sorted(ds)
        mu = ordered[(len(ordered) - 1) // 2]
        if mu == ordered[-1]:
            # median ties the maximum: split just below it, or give up if all equal
            below = [d for d in ordered if d < mu]
            if not below:
                return _Leaf(items)
            mu = below[-1]
        inside = [it for it, d in zip(rest, ds) if d <= mu]
        outside = [it for it, d in zip(rest, ds) if d > mu]
        return _Node(vantage, mu, self._build(inside), self._build(outside))

    def query(self, point, k):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.queries += 1
        if self.root is None:
            return []
        heap: list = []
        counter = [0]
        self._search(self.root, point, k, heap, counter)
        self.distance_evals += counter[0]
        best = sorted((-nd, -no, it) for nd, no, it in heap)
        return [(it, d) for d, _, it in best]

    def _search(self, node, q, k, heap, counter):
        dist = self.distance
        if type(node) is _Leaf:
            for it in node.items:
                d = dist(q, it.point)
                _offer(heap, k, d, it)
            counter[0] += len(node.items)
            return
        d = dist(q, node.vantage.point)
        counter[0] += 1
        _offer(heap, k, d, node.vantage)
        mu = node.mu
        slack = 1e-9 * (1.0 + abs(mu) + d)
        if d <= mu:
            if d - _tau(heap, k) <= mu + slack:
                self._search(node.inside, q, k, heap, counter)
            if d + _tau(heap, k) >= mu - slack:
                self._search(node.outside, q, k, heap, counter)
        else:
            if d + _tau(heap, k) >= mu - slack:
                self._search(node.outside, q, k, heap, counter)
            if d - _tau(heap, k) <= mu + slack:
                self._search(node.inside, q, k, heap, counter)

    def leaves(self):
        stack = [self.root] if self.root is not None else []
        while stack:
            node = stack.pop()
            if type(node) is _Leaf:
                yield node
            else:
                stack.extend((node.inside, node.outside))

    def walk(self):
        """Yield every stored item once (vantages and leaf contents)."""
        stack = [self.root] if self.root is not None else []
        while stack:
            node = stack.pop()
            if type(node) is _Leaf:
                yield from node.items
            else:
                yield node.vantage
                stack.extend((node.inside, node.outside))


def _offer(heap, k, d, item):
    entry = (-d, -item.ordinal, item)
    if len(heap) < k:
        heapq.heappush(heap, entry)
    elif entry[:2] > heap[0][:2]:
        heapq.heapreplace(heap, entry)


def _tau(heap, k):
    return -heap[0][0] if len(heap) >= k else math.inf


def _depth(node):
    if node is None:
        return 0
    if type(node) is _Leaf:
        return 1
    return 1 + max(_depth(node.inside), _depth(node.outside))


def build_linear(items, distance=default_distance) -> LinearIndex:
    return LinearIndex(items, distance)


def build_vptree(items, distance=default_distance, bucket_size: int = 32, seed: int = 0) -> VPTree:
    return VPTree(items, distance, bucket_size, seed)


def build_index(kind: str, items, distance=default_distance, **kwargs) -> MetricIndex:
    if kind == "linear":
        return LinearIndex(items, distance)
    if kind == "vptree":
        return VPTree(items, distance, **kwargs)
    raise ValueError(f"unknown index kind {kind!r}")


def query_knn(index: MetricIndex, point, k: int) -> list[tuple[IndexedItem, float]]:
    return index.query(point, k)
