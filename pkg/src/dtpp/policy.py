"""Policy compilation from a sample store.

Two policies are provided.  :class:`ExactPolicy` is a lookup table built by
taking, for each distinct parent value, the decision with the largest weighted
mean utility.  :class:`ApproxPolicy` keeps the store and answers each query with
a k-nearest-neighbour estimate of the expected utility of every decision value.

Every argmax breaks ties in favour of the value listed first in the decision's
range.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .distance import default_distance
from .elements import Decision, Model
from .errors import UnknownParentValueError
from .index import IndexedItem, MetricIndex, build_index
from .sampling import ExploreStrategy, SamplerConfig, exact_enumerate, run_sampler
from .store import SampleStore

log = logging.getLogger(__name__)


def collect_samples(model: Model, decision, utility_ids: Sequence | None = None,
                    config: SamplerConfig | None = None,
                    strategy: ExploreStrategy | None = None,
                    codec: str | None = None) -> SampleStore:
    """Fill a store with one entry per sampled world.

    ``u`` is the sum of the world's utilities and ``w`` its weight.  With
    ``config.method == "exact"`` the model is enumerated instead and the store
    holds one entry per ``(t, v)`` pair: the exact conditional expected utility,
    weighted by the pair's probability.
    """
    config = config or SamplerConfig()
    strategy = strategy or ExploreStrategy()
    d = model.resolve(decision)
    element = model.elements[d]
    if not isinstance(element, Decision):
        raise TypeError(f"element {d} is not a decision")
    if not strategy.is_random(d):
        raise ValueError(f"decision {d} must be explored while collecting its samples")
    utilities = [model.resolve(u) for u in (utility_ids if utility_ids is not None else model.utilities)]
    if not utilities:
        raise ValueError("at least one utility element is required")
    parent = element.parent
    store = SampleStore(element.choices, codec)

    if config.method == "exact":
        totals: dict = {}
        for key, p in exact_enumerate(model, strategy=strategy).items():
            pair = (key[parent], key[d])
            su, sw = totals.get(pair, (0.0, 0.0))
            totals[pair] = (su + p * sum(key[u] for u in utilities), sw + p)
        for (t, v), (su, sw) in totals.items():
            store.add(t, v, su / sw, sw)
        return store.seal()

    for world in run_sampler(model, config, strategy):
        store.add(world[parent], world[d], sum(world[u] for u in utilities), world.weight)
    return store.seal()


class Policy:
    decision_range: tuple

    def get_decision(self, t):
        raise NotImplementedError


_TIE_RTOL = 1e-12


def _argmax(choices, scores: Mapping) -> tuple[object, bool]:
    """Best value in range order; second item is False when nothing was scorable.

    Scores within a relative ``1e-12`` of the running best count as ties, so
    rounding noise (for instance from rescaling weights) cannot reorder them.
    """
    best, best_score = None, -math.inf
    for i, v in enumerate(choices):
        s = scores.get(i)
        if s is None or math.isnan(s):
            continue
        if best is None or s - best_score > _TIE_RTOL * max(abs(s), abs(best_score), 1e-300):
            best, best_score = v, s
    if best is None:
        return choices[0], False
    return best, True


class ExactPolicy(Policy):
    """Lookup table from parent value to decision."""

    def __init__(self, table: dict, decision_range, expected: dict | None = None):
        self.table = table
        self.decision_range = tuple(decision_range)
        self.expected = expected or {}

    def get_decision(self, t):
        try:
            return self.table[t]
        except (KeyError, TypeError):
            raise UnknownParentValueError(t) from None

    def __contains__(self, t):
        return t in self.table


def set_policy_exact(store: SampleStore) -> ExactPolicy:
    if len(store) == 0:
        raise ValueError("cannot compile a policy from an empty store")
    sums: dict = {}
    for s in store:
        row = sums.setdefault(s.t, {})
        slot = store._slot(s.v)
        su, sw = row.get(slot, (0.0, 0.0))
        row[slot] = (su + s.u * s.w, sw + s.w)
    table, expected = {}, {}
    for t, row in sums.items():
        means = {slot: su / sw for slot, (su, sw) in row.items() if sw > 0}
        table[t], _ = _argmax(store.decision_range, means)
        expected[t] = {store.decision_range[slot]: m for slot, m in means.items()}
    return ExactPolicy(table, store.decision_range, expected)


@dataclass
class KnnDiagnostics:
    clamped: int = 0
    degenerate: int = 0


def knn_expected_utility(store: SampleStore, v, t, k: int, index: MetricIndex,
                         diagnostics: KnnDiagnostics | None = None) -> float:
    """Nearest-neighbour estimate of ``E[U | t, v]``.

    ``index`` must hold the samples of ``store`` whose decision is ``v``, with
    payload ``(v, u, w)``.  Each of the ``k`` nearest neighbours gets weight
    ``1/k``; because that weight is constant the estimate is the sample-weighted
    mean utility of the neighbours.  Returns NaN when every neighbour has zero
    weight.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    size = len(index)
    if size == 0:
        raise ValueError(f"no samples for decision value {v!r}")
    if k > size:
        log.debug("k=%d exceeds the %d samples for decision %r; clamping", k, size, v)
        if diagnostics is not None:
            diagnostics.clamped += 1
        k = size
    num = den = 0.0
    for item, _ in index.query(t, k):
        _, u, w = item.payload
        num += u * w
        den += w
    return num / den if den > 0 else math.nan


class ApproxPolicy(Policy):
    """k-nearest-neighbour policy: one metric index per decision value."""

    def __init__(self, store: SampleStore, k: int, distance: Callable = default_distance,
                 index: str = "vptree", bucket_size: int = 32, seed: int = 0):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.store = store
        self.k = k
        self.distance = distance
        self.index_kind = index
        self.decision_range = store.decision_range
        self.diagnostics = KnnDiagnostics()
        self.indexes: dict[int, MetricIndex] = {}
        for slot, v in enumerate(store.decision_range):
            part = store.partition(v)
            if not part:
                continue
            items = [IndexedItem(s.t, (s.v, s.u, s.w), ordinal) for ordinal, s in part]
            kwargs = {"bucket_size": bucket_size, "seed": seed + slot} if index == "vptree" else {}
            self.indexes[slot] = build_index(index, items, distance, **kwargs)

    def expected_utilities(self, t) -> dict:
        return {self.decision_range[slot]: knn_expected_utility(
                    self.store, self.decision_range[slot], t, self.k, idx, self.diagnostics)
                for slot, idx in self.indexes.items()}

    def get_decision(self, t):
        scores = {slot: knn_expected_utility(self.store, self.decision_range[slot], t,
                                             self.k, idx, self.diagnostics)
                  for slot, idx in self.indexes.items()}
        choice, ok = _argmax(self.decision_range, scores)
        if not ok:
            self.diagnostics.degenerate += 1
        return choice

    def reset_counters(self):
        for idx in self.indexes.values():
            idx.reset_counters()

    @property
    def distance_evals(self) -> int:
        return sum(idx.distance_evals for idx in self.indexes.values())


def get_decision(policy: Policy, t):
    return policy.get_decision(t)


def compile_policy(store: SampleStore, kind: str = "exact", k: int = 15,
                   distance: Callable = default_distance, index: str = "vptree",
                   seed: int = 0) -> Policy:
    if kind == "exact":
        return set_policy_exact(store)
    if kind in ("knn", "approx"):
        return ApproxPolicy(store, k, distance, index, seed=seed)
    raise ValueError(f"unknown policy kind {kind!r}")


def backward_induction(model: Model, decisions: Sequence, utility_ids: Sequence | None = None,
                       config: SamplerConfig | None = None, kind: str = "exact", k: int = 15,
                       distance: Callable | Mapping = default_distance,
                       index: str = "vptree") -> dict[int, Policy]:
    """Solve decisions from last to first.

    While the samples for a decision are collected, every later decision follows
    the policy already computed for it and earlier decisions are explored
    uniformly.
    """
    ids = [model.resolve(d) for d in decisions]
    if len(set(ids)) != len(ids):
        raise ValueError("decision listed twice")
    for i, d in enumerate(ids):
        if not isinstance(model.elements[d], Decision):
            raise TypeError(f"element {d} is not a decision")
        for later in ids[i + 1:]:
            if later in model.ancestors(d):
                raise ValueError(f"decision {later} precedes decision {d} in the model "
                                 "but is listed after it")
    policies: dict[int, Policy] = {}
    for d in reversed(ids):
        store = collect_samples(model, d, utility_ids, config, ExploreStrategy(policies))
        dist = distance.get(d, default_distance) if isinstance(distance, Mapping) else distance
        policies[d] = compile_policy(store, kind, k, dist, index,
                                     seed=config.seed if config else 0)
    return {d: policies[d] for d in ids}
