"""Acceptance suite: one test per headline criterion, each printing a PASS/FAIL line.

Thresholds are the stated ones; nothing here is loosened to make a result pass.
"""

import itertools
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from dtpp import (
    Apply,
    ApproxPolicy,
    Chain,
    Decision,
    Flip,
    Model,
    SamplerConfig,
    Select,
    backward_induction,
    collect_samples,
    set_policy_exact,
)
from dtpp.distance import default_distance, real_distance
from dtpp.harness import ExperimentSpec, draw_parents, run_experiment, time_index_queries
from dtpp.index import IndexedItem, LinearIndex, VPTree
from dtpp.sampling import ExploreStrategy, exact_enumerate
from dtpp.store import SampleStore
from dtpp.zoo import (
    DosageConfig,
    SocialGraph,
    build_model,
    dna_from_protein,
    dosage_network,
    fig2_expected_utility,
    graph_distance,
    protein_distance,
    protein_from_base,
    translate,
)
from dtpp.zoo.dosage import AMINO_ACIDS


def report(name: str, ok: bool, detail: str, seconds: float) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail} [{seconds:.1f}s]"
    print(line)
    ACCEPTANCE_LINES.append(line)


def _within(seconds, limit):
    return seconds <= limit


# 1

def test_fig2_loss_ordering():
    start = time.perf_counter()
    ks = (5, 15, 25)
    rep = run_experiment(ExperimentSpec("fig2", [50_000], list(ks), 100, seed=0))
    loss = {k: rep.loss(50_000, k) for k in ks}
    best = rep.best_static()
    elapsed = time.perf_counter() - start
    ok = all(loss[k] < best for k in ks) and loss[25] <= loss[5] and _within(elapsed, 300)
    detail = (" ".join(f"k={k}:{loss[k]:.4f}" for k in ks)
              + f" static={{{', '.join(f'{v}:{x:.4f}' for v, x in rep.static_losses.items())}}}")
    report("fig2 loss ordering", ok, detail, elapsed)
    assert ok


# 2

def test_sample_size_trend():
    start = time.perf_counter()
    ns = (500, 5000, 50_000)
    per_seed = []
    for seed in range(10):
        rep = run_experiment(ExperimentSpec("fig2", list(ns), [15], 50, seed=seed))
        per_seed.append([rep.loss(n, 15) for n in ns])
    means = np.mean(per_seed, axis=0)
    elapsed = time.perf_counter() - start
    inversions = sum(b > a for a, b in zip(means, means[1:]))
    ok = means[-1] < means[0] and inversions <= 1 and _within(elapsed, 900)
    detail = " ".join(f"n={n}:{m:.4f}" for n, m in zip(ns, means)) + f" inversions={inversions}"
    report("sample-size trend (k=15, 10 reps)", ok, detail, elapsed)
    assert ok


# 3

def test_index_equivalence():
    start = time.perf_counter()
    mismatches, checked = 0, 0
    for name in ("fig2", "dosage", "social"):
        zoo = build_model(name)
        cfg = SamplerConfig("mh" if name == "fig2" else "importance", 10_000, seed=11)
        store = collect_samples(zoo.model, zoo.decision, config=cfg, codec=zoo.codec)
        queries = draw_parents(zoo, 100, seed=12)
        for slot, v in enumerate(zoo.decision_range):
            items = [IndexedItem(s.t, (s.v, s.u, s.w), o) for o, s in store.partition(v)]
            lin = LinearIndex(items, zoo.distance)
            vp = VPTree(items, zoo.distance, seed=slot)
            for q in queries:
                a = sorted(d for _, d in lin.query(q, 15))
                b = sorted(d for _, d in vp.query(q, 15))
                mismatches += a != b
                checked += 1
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and _within(elapsed, 120)
    report("index equivalence", ok, f"{checked} query/partition pairs, {mismatches} mismatches", elapsed)
    assert ok


# 4

def test_index_scaling():
    start = time.perf_counter()
    zoo = build_model("fig2")
    store = collect_samples(zoo.model, zoo.decision, config=SamplerConfig("mh", 50_000, seed=21))
    queries = draw_parents(zoo, 5000, seed=22)
    vp = time_index_queries(store, "vptree", queries, 100, zoo.distance, seed=23)
    lin = time_index_queries(store, "linear", queries, 100, zoo.distance)
    elapsed = time.perf_counter() - start
    ratio = vp.mean_dist_evals / lin.mean_dist_evals
    ok = ratio < 0.2 and vp.mean_query_ms < lin.mean_query_ms and _within(elapsed, 300)
    detail = (f"evals vp={vp.mean_dist_evals:.0f} linear={lin.mean_dist_evals:.0f} ({ratio:.2%}); "
              f"ms vp={vp.mean_query_ms:.3f} linear={lin.mean_query_ms:.3f}")
    report("index scaling (n=50000, k=100)", ok, detail, elapsed)
    assert ok


# 5

def _random_table_model(seed):
    rng = np.random.default_rng(seed)
    states = ["a", "b", "c"]
    prior = rng.dirichlet(np.ones(3))
    noise_p = rng.uniform(0.1, 0.9, 3)
    table = rng.normal(size=(3, 3, 2))
    m = Model()
    t = m.add(Select(list(zip(prior.tolist(), states))))
    noise = m.add(Chain(t, lambda s: Flip(float(noise_p[states.index(s)]))))
    d = m.add(Decision(t, (0, 1, 2)))
    u = m.add(Apply([t, d, noise], lambda s, v, c: float(table[states.index(s), v, int(c)])))
    m.designate_utility(u)

    def brute(s, v):
        i = states.index(s)
        return noise_p[i] * table[i, v, 1] + (1 - noise_p[i]) * table[i, v, 0]

    return m, d, states, brute


def _tuple_parent_model():
    m = Model()
    a = m.add(Flip(0.3))
    b = m.add(Select([(0.5, 0), (0.25, 1), (0.25, 2)]))
    t = m.add(Apply([a, b], lambda x, y: (x, y)))
    shock = m.add(Flip(0.6))
    d = m.add(Decision(t, ("left", "right")))
    u = m.add(Apply([t, d, shock], lambda tv, dv, s: (tv[1] - 1.0) * (1 if dv == "right" else -1)
                    + (2.0 if tv[0] and s else 0.0) - (0.5 if dv == "left" and s else 0.0)))
    m.designate_utility(u)
    parents = [(x, y) for x in (False, True) for y in (0, 1, 2)]

    def brute(tv, dv):
        sign = 1 if dv == "right" else -1
        return (tv[1] - 1.0) * sign + 0.6 * (2.0 if tv[0] else 0.0) - (0.3 if dv == "left" else 0.0)

    return m, d, parents, brute


def _dosage_sanity_model():
    cfg = DosageConfig(base="W-", time="constant:2", mutation="identity", side_effect_cost=1.5)
    m = dosage_network(cfg)
    d = m.names["dose"]
    parents = ["W" + a for a in AMINO_ACIDS]
    return m, d, parents, lambda t, v: 1.0 - 0.1 * 1.5 * v


def test_oracle_fidelity():
    start = time.perf_counter()
    rng = np.random.default_rng(2013)
    worst = 0.0
    for t in (0.5, 2.5, 4.0):
        g = rng.gamma(t, 1.0, 1_000_000)
        worst = max(worst, abs(np.cos(g).mean() - fig2_expected_utility(t, 0)),
                    abs(np.sin(g).mean() - fig2_expected_utility(t, 1)))
    cases = [_random_table_model(0), _random_table_model(1), _tuple_parent_model(),
             _dosage_sanity_model()]
    losses = []
    for m, d, parents, brute in cases:
        pol = set_policy_exact(collect_samples(m, d, config=SamplerConfig("exact", 1)))
        choices = m.elements[d].choices
        losses.append(max(max(brute(t, v) for v in choices) - brute(t, pol.get_decision(t))
                          for t in parents))
    elapsed = time.perf_counter() - start
    ok = worst < 0.005 and max(losses) <= 1e-12 and _within(elapsed, 180)
    detail = (f"max |closed form - MC| = {worst:.5f}; exact-policy loss on "
              f"{len(losses)} finite models = {', '.join(f'{x:.1e}' for x in losses)}")
    report("oracle fidelity", ok, detail, elapsed)
    assert ok


# 6

@pytest.mark.parametrize("name", ["dosage", "social"])
def test_complex_parent_models(name):
    start = time.perf_counter()
    rep = run_experiment(ExperimentSpec(name, [20_000], [15], 50, seed=0))
    knn = rep.loss(20_000, 15)
    best = rep.best_static()
    elapsed = time.perf_counter() - start
    ok = knn < best and _within(elapsed, 600)
    statics = ", ".join(f"{v}:{x:.5f}" for v, x in rep.static_losses.items())
    report(f"complex parent ({name})", ok, f"knn={knn:.5f} static={{{statics}}}", elapsed)
    assert ok


# 7

def _two_decision_model():
    """Scout an uncertain site (d1 sees a weather report), then commit (d2 sees d1 and a probe)."""
    m = Model()
    report_ = m.add(Select([(0.6, "fair"), (0.4, "storm")]))
    site = m.add(Chain(report_, lambda r: Flip(0.7 if r == "fair" else 0.25)))
    d1 = m.add(Decision(report_, ("skip", "scout")))
    probe = m.add(Apply([d1, site], lambda a, s: s if a == "scout" else None))
    d2 = m.add(Decision(probe, ("stay", "build")))
    cost = m.add(Apply([d1], lambda a: -0.15 if a == "scout" else 0.0))
    gain = m.add(Apply([d2, site], lambda b, s: (1.0 if s else -1.2) if b == "build" else 0.0))
    m.designate_utility(cost, gain)
    return m, d1, d2


def _brute_force_profiles():
    p_report = {"fair": 0.6, "storm": 0.4}
    p_site = {"fair": 0.7, "storm": 0.25}
    probes = (None, False, True)
    best = -math.inf
    for rule1 in itertools.product(("skip", "scout"), repeat=2):
        pi1 = dict(zip(("fair", "storm"), rule1))
        for rule2 in itertools.product(("stay", "build"), repeat=3):
            pi2 = dict(zip(probes, rule2))
            total = 0.0
            for r, pr in p_report.items():
                for s, ps in ((True, p_site[r]), (False, 1 - p_site[r])):
                    a = pi1[r]
                    b = pi2[s if a == "scout" else None]
                    u = (-0.15 if a == "scout" else 0.0) + ((1.0 if s else -1.2) if b == "build" else 0.0)
                    total += pr * ps * u
            best = max(best, total)
    return best


def test_backward_induction():
    start = time.perf_counter()
    m, d1, d2 = _two_decision_model()
    pols = backward_induction(m, [d1, d2], config=SamplerConfig("exact", 1))
    dist = exact_enumerate(m, strategy=ExploreStrategy(pols))
    achieved = sum(p * sum(key[u] for u in m.utilities) for key, p in dist.items())
    optimum = _brute_force_profiles()
    elapsed = time.perf_counter() - start
    ok = abs(achieved - optimum) <= 1e-12 and _within(elapsed, 60)
    report("backward induction", ok, f"policy value={achieved:.6f} brute-force optimum={optimum:.6f}", elapsed)
    assert ok


# 8

def _graph(rng, n):
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    keep = rng.random(len(pairs)) < rng.uniform(0, 1)
    return SocialGraph(n, frozenset(p for p, k in zip(pairs, keep) if k))


def _violations(distance, triples, tol=1e-9):
    bad = 0
    for a, b, c in triples:
        ab, bc, ac = distance(a, b), distance(b, c), distance(a, c)
        bad += (distance(a, a) != 0 or ab < 0 or ab != distance(b, a)
                or ac > ab + bc + tol * (1 + ab + bc))
    return bad


def test_property_suites():
    start = time.perf_counter()
    rng = np.random.default_rng(99)
    N = 10_000
    scalars = rng.normal(0, 100, (N, 3)).tolist()
    tuples = [tuple((float(rng.normal()), bool(rng.integers(2)), float(rng.normal())) for _ in range(3))
              for _ in range(N)]
    alphabet = np.array(list(AMINO_ACIDS + "*"))
    prots = []
    for _ in range(N):
        L = int(rng.integers(1, 12))
        prots.append(tuple("".join(rng.choice(alphabet, L)) for _ in range(3)))
    graphs = [tuple(_graph(rng, int(rng.integers(1, 10))) for _ in range(3)) for _ in range(N)]
    metric = {
        "scalar": _violations(real_distance, scalars),
        "tuple": _violations(default_distance, tuples),
        "protein": _violations(protein_distance, prots),
        "graph": _violations(graph_distance, graphs),
    }

    scale_bad = 0
    for trial in range(200):
        s1, s2 = SampleStore((0, 1, 2)), SampleStore((0, 1, 2))
        c = float(10 ** rng.uniform(-3, 3))
        for _ in range(int(rng.integers(5, 80))):
            t, v = float(rng.integers(0, 6)), int(rng.integers(3))
            u, w = float(rng.integers(-5, 6)), float(rng.uniform(0.01, 5))
            s1.add(t, v, u, w)
            s2.add(t, v, u, w * c)
        s1.seal(), s2.seal()
        scale_bad += set_policy_exact(s1).table != set_policy_exact(s2).table
        if all(s1.partition(v) for v in (0, 1, 2)):
            a, b = ApproxPolicy(s1, 5, real_distance), ApproxPolicy(s2, 5, real_distance)
            scale_bad += any(a.get_decision(q) != b.get_decision(q) for q in np.linspace(-1, 6, 15))

    base = protein_from_base("-" * 8)
    round_trip_bad = 0
    for _ in range(N):
        p = base.sample(rng)
        round_trip_bad += translate(dna_from_protein(p).sample(rng)) != p

    elapsed = time.perf_counter() - start
    ok = sum(metric.values()) == 0 and scale_bad == 0 and round_trip_bad == 0
    detail = (", ".join(f"{k}={v}" for k, v in metric.items())
              + f" metric violations; scale-invariance violations={scale_bad}; "
              f"round-trip violations={round_trip_bad}")
    report("property suites", ok, detail, elapsed)
    assert ok
