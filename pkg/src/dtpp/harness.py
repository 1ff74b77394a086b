"""Experiment harness: loss against an oracle, static baselines, index timing and CSV output."""

from __future__ import annotations

import csv
import io
import json
import os
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .elements import _same
from .policy import ApproxPolicy, Policy, collect_samples
from .sampling import SamplerConfig, run_sampler
from .store import SampleStore
from .zoo import MODELS, ZooModel, build_model, read_config

CSV_HEADER = ("model", "n", "k", "index", "mean_loss", "static_losses",
              "mean_query_ms", "mean_dist_evals", "seed")
BENCH_HEADER = ("model", "n", "k", "index", "queries", "mean_query_ms", "mean_dist_evals", "seed")

INDEX_KINDS = ("linear", "vptree")
DEFAULT_SAMPLER = {"fig2": "mh", "dosage": "importance", "social": "importance"}


def derive_seed(*parts: int) -> int:
    """Independent 63-bit seed for a labelled sub-stream."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1, np.uint64)[0] >> 1)


class OracleTable:
    """Memoised ``E[U | t, v]`` for a fixed list of test parents."""

    def __init__(self, oracle: Callable, test_parents: Sequence, decision_range: Sequence):
        self.oracle = oracle
        self.test_parents = list(test_parents)
        self.decision_range = tuple(decision_range)
        self._values: np.ndarray | None = None

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = np.array([[float(self.oracle(t, v)) for v in self.decision_range]
                                     for t in self.test_parents])
        return self._values

    def column(self, v) -> int:
        for i, c in enumerate(self.decision_range):
            if _same(c, v):
                return i
        raise ValueError(f"decision {v!r} is not in {self.decision_range!r}")


def _table(oracle, test_parents, decision_range) -> OracleTable:
    if isinstance(oracle, OracleTable):
        return oracle
    return OracleTable(oracle, test_parents, decision_range)


def point_losses(oracle, policy: Policy, test_parents: Sequence,
                 decision_range: Sequence | None = None) -> np.ndarray:
    table = _table(oracle, test_parents, decision_range or policy.decision_range)
    vals = table.values
    chosen = np.array([vals[i, table.column(policy.get_decision(t))]
                       for i, t in enumerate(table.test_parents)])
    return np.abs(vals.max(axis=1) - chosen)


def compute_loss(oracle, policy: Policy, test_parents: Sequence,
                 decision_range: Sequence | None = None) -> float:
    """Mean regret ``|max_v E[U|t,v] - E[U|t,policy(t)]|`` over the test parents.

    ``oracle`` is either a callable ``(t, v) -> E[U|t,v]`` or an :class:`OracleTable`
    built over the same parents.
    """
    table = _table(oracle, test_parents, decision_range or policy.decision_range)
    if not table.test_parents:
        raise ValueError("at least one test parent is required")
    return float(point_losses(table, policy, table.test_parents).mean())


class ConstantPolicy(Policy):
    def __init__(self, value, decision_range):
        self.value = value
        self.decision_range = tuple(decision_range)

    def get_decision(self, t):
        return self.value


def static_baselines(oracle, decision_range: Sequence, test_parents: Sequence) -> dict:
    """Loss of each constant policy, keyed by decision value, in range order."""
    table = _table(oracle, test_parents, decision_range)
    return {v: compute_loss(table, ConstantPolicy(v, table.decision_range), table.test_parents)
            for v in table.decision_range}


@dataclass
class QueryTiming:
    index: str
    queries: int
    mean_query_ms: float
    mean_dist_evals: float


def time_index_queries(store: SampleStore, index: str, queries: Sequence, k: int,
                       distance: Callable, seed: int = 0) -> QueryTiming:
    """Mean wall-clock and distance-evaluation cost of one k-NN decision lookup.

    A lookup queries the index of every decision value, so the linear index
    costs ``sum_v |store_v|`` distance evaluations per query.  Building the
    index is not timed.
    """
    if len(queries) == 0:
        raise ValueError("query count must be >= 1")
    if not store.sealed:
        raise ValueError("store must be sealed before it is indexed")
    policy = ApproxPolicy(store, k, distance, index, seed=seed)
    policy.reset_counters()
    start = time.perf_counter()
    for q in queries:
        policy.expected_utilities(q)
    elapsed = time.perf_counter() - start
    n = len(queries)
    return QueryTiming(index, n, 1000.0 * elapsed / n, policy.distance_evals / n)


def draw_parents(zoo: ZooModel, count: int, seed: int) -> list:
    """``count`` independent draws of the decision's informational parent."""
    if count < 1:
        raise ValueError("test-sample count must be >= 1")
    worlds = run_sampler(zoo.model, SamplerConfig("importance", count, seed=seed))
    return [w[zoo.parent] for w in worlds]


@dataclass
class ExperimentSpec:
    model: str
    n_values: list
    k_values: list
    test_samples: int = 100
    index: str = "vptree"
    seed: int = 0
    sampler: str | None = None
    config: Mapping[str, str] | str | None = None
    out: str | None = None
    timing: bool = False

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {', '.join(MODELS)}")
        self.n_values = [int(n) for n in self.n_values]
        self.k_values = [int(k) for k in self.k_values]
        if not self.n_values or not self.k_values:
            raise ValueError("n and k lists must be nonempty")
        if min(self.n_values) < 1 or min(self.k_values) < 1:
            raise ValueError("every n and k must be >= 1")
        if self.test_samples < 1:
            raise ValueError("test-sample count must be >= 1")
        if self.index not in INDEX_KINDS:
            raise ValueError(f"unknown index {self.index!r}; expected linear or vptree")
        self.sampler = self.sampler or DEFAULT_SAMPLER[self.model]
        SamplerConfig(self.sampler, 1)

    def model_section(self) -> dict:
        if self.config is None:
            return {}
        if isinstance(self.config, Mapping):
            return dict(self.config)
        return read_config(self.config).get(self.model, {})


@dataclass
class LossRow:
    model: str
    n: int
    k: int
    index: str
    mean_loss: float
    static_losses: dict
    mean_query_ms: float | None
    mean_dist_evals: float
    seed: int

    def __post_init__(self):
        if self.mean_loss < 0 or any(x < 0 for x in self.static_losses.values()):
            raise ValueError("losses must be non-negative")


@dataclass
class LossReport:
    rows: list[LossRow] = field(default_factory=list)
    static_losses: dict = field(default_factory=dict)
    model: str = ""
    index: str = ""
    seed: int = 0

    def best_static(self) -> float:
        return min(self.static_losses.values())

    def loss(self, n: int, k: int) -> float:
        for r in self.rows:
            if r.n == n and r.k == k:
                return r.mean_loss
        raise KeyError((n, k))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        statics = _format_statics(self.static_losses)
        for r in self.rows:
            w.writerow([r.model, r.n, r.k, r.index, _num(r.mean_loss), statics,
                        "" if r.mean_query_ms is None else _num(r.mean_query_ms),
                        _num(r.mean_dist_evals), r.seed])
        for v, loss in self.static_losses.items():
            w.writerow([self.model, "", f"static={json.dumps(v)}", self.index, _num(loss),
                        "", "", "", self.seed])
        return buf.getvalue()


def _num(x: float) -> str:
    return repr(float(x))


def _format_statics(losses: Mapping) -> str:
    return ";".join(f"{json.dumps(v)}:{_num(x)}" for v, x in losses.items())


def _check_writable(path) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory) or not os.access(directory, os.W_OK):
        raise OSError(f"cannot write {path}: directory is missing or read-only")


def run_experiment(spec: ExperimentSpec, progress: Callable[[str], None] | None = None) -> LossReport:
    """Collect, compile and score one policy per ``(n, k)`` cell.

    One sample store is collected per ``n`` and shared by every ``k``; test
    parents are drawn once per experiment so all cells face the same queries.
    The query-time column is left blank unless ``spec.timing`` is set, which
    keeps the CSV byte-identical across reruns.
    """
    if spec.out is not None:
        _check_writable(spec.out)
    zoo = build_model(spec.model, spec.model_section())
    parents = draw_parents(zoo, spec.test_samples, derive_seed(spec.seed, 2))
    table = OracleTable(zoo.oracle, parents, zoo.decision_range)
    statics = static_baselines(table, zoo.decision_range, parents)
    report = LossReport(static_losses=statics, model=spec.model, index=spec.index, seed=spec.seed)
    for n in spec.n_values:
        cfg = SamplerConfig(spec.sampler, n, seed=derive_seed(spec.seed, 1, n))
        store = collect_samples(zoo.model, zoo.decision, config=cfg, codec=zoo.codec)
        for k in spec.k_values:
            policy = ApproxPolicy(store, k, zoo.distance, spec.index,
                                  seed=derive_seed(spec.seed, 3, n))
            policy.reset_counters()
            start = time.perf_counter()
            loss = compute_loss(table, policy, parents)
            elapsed = time.perf_counter() - start
            report.rows.append(LossRow(
                spec.model, n, k, spec.index, loss, statics,
                1000.0 * elapsed / len(parents) if spec.timing else None,
                policy.distance_evals / len(parents), spec.seed))
            if progress:
                progress(f"{spec.model} n={n} k={k} loss={loss:.6f}")
    if spec.out is not None:
        with open(spec.out, "w", encoding="utf-8", newline="") as fp:
            fp.write(report.to_csv())
    return report


def bench_index(n_values: Sequence[int], k: int, queries: int, seed: int = 0,
                model: str = "fig2", out: str | None = None,
                kinds: Sequence[str] = INDEX_KINDS) -> list[dict]:
    """Time k-NN decision lookups against stores of growing size."""
    if queries < 1:
        raise ValueError("query count must be >= 1")
    if k < 1:
        raise ValueError("k must be >= 1")
    if out is not None:
        _check_writable(out)
    zoo = build_model(model)
    points = draw_parents(zoo, queries, derive_seed(seed, 2))
    rows = []
    for n in n_values:
        cfg = SamplerConfig(DEFAULT_SAMPLER[model], int(n), seed=derive_seed(seed, 1, n))
        store = collect_samples(zoo.model, zoo.decision, config=cfg, codec=zoo.codec)
        for kind in kinds:
            r = time_index_queries(store, kind, points, k, zoo.distance, derive_seed(seed, 3, n))
            rows.append({"model": model, "n": int(n), "k": k, "index": kind, "queries": queries,
                         "mean_query_ms": r.mean_query_ms, "mean_dist_evals": r.mean_dist_evals,
                         "seed": seed})
    if out is not None:
        with open(out, "w", encoding="utf-8", newline="") as fp:
            w = csv.DictWriter(fp, BENCH_HEADER, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    return rows
