"""Free-product decision over a random social network.

A user's network is an Erdos-Renyi graph whose node 0 is the user.  If the
company hands over the product, it spreads along a random walk with restart
from the user; the company earns ``value`` per distinct person reached (the
user excluded) minus the product ``cost``.  The decision observes only the
graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..elements import Apply, Atomic, Chain, Decision, Model
from ..errors import ParameterError
from ..store import register_codec

_ENUMERATION_LIMIT = 200_000


@dataclass(frozen=True)
class SocialGraph:
    """Undirected simple graph on nodes ``0..n-1``; node ``seed`` is the product recipient."""

    n: int
    edges: frozenset
    seed: int = 0
    neighbors: tuple = field(init=False, repr=False, compare=False)
    degree_profile: tuple = field(init=False, repr=False, compare=False)

    codec = "graph"

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("a graph needs at least one node")
        edges = frozenset((min(a, b), max(a, b)) for a, b in self.edges)
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for a, b in edges:
            if a == b:
                raise ParameterError(f"self-loop at node {a}")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ParameterError(f"edge ({a}, {b}) outside node range")
            nbrs[a].append(b)
            nbrs[b].append(a)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "neighbors", tuple(tuple(sorted(x)) for x in nbrs))
        deg = [len(x) for x in nbrs]
        rest = sorted(deg[:self.seed] + deg[self.seed + 1:], reverse=True)
        object.__setattr__(self, "degree_profile", (deg[self.seed], *rest))

    def degree(self, node: int) -> int:
        return len(self.neighbors[node])

    def distance(self, other: "SocialGraph") -> float:
        return graph_distance(self, other)

    def encode(self) -> str:
        return f"{self.n};" + ",".join(f"{a}-{b}" for a, b in sorted(self.edges))

    @classmethod
    def decode(cls, text: str) -> "SocialGraph":
        n, _, rest = text.partition(";")
        edges = [tuple(int(x) for x in e.split("-")) for e in rest.split(",") if e]
        return cls(int(n), frozenset(edges))


register_codec("graph", SocialGraph.encode, SocialGraph.decode)


def graph_distance(g1: SocialGraph, g2: SocialGraph) -> float:
    """L2 distance between degree profiles (zero-padded) plus ``|n1 - n2|``.

    A profile is the seed's degree followed by the other degrees in descending
    order.  It is an L2 distance on a feature embedding, hence a pseudometric.
    """
    a, b = g1.degree_profile, g2.degree_profile
    if len(a) < len(b):
        a, b = b, a
    sq = sum((x - y) ** 2 for x, y in zip(a, b)) + sum(x * x for x in a[len(b):])
    return math.sqrt(sq) + abs(g1.n - g2.n)


class GraphGen(Atomic):
    """Each unordered pair of nodes is joined independently with probability ``p``."""

    def __init__(self, n: int, p: float):
        if n < 1:
            raise ParameterError("num-nodes must be >= 1")
        if not 0.0 <= p <= 1.0:
            raise ParameterError("edge probability must lie in [0, 1]")
        self.n, self.p = int(n), float(p)
        self._pairs = [(a, b) for a in range(self.n) for b in range(a + 1, self.n)]

    def sample(self, rng):
        keep = rng.random(len(self._pairs)) < self.p
        return SocialGraph(self.n, frozenset(e for e, k in zip(self._pairs, keep) if k))

    def density(self, value):
        if value.n != self.n:
            return 0.0
        m = len(value.edges)
        return self.p ** m * (1.0 - self.p) ** (len(self._pairs) - m)

    def support(self):
        if 2 ** len(self._pairs) > _ENUMERATION_LIMIT:
            return None
        out = []
        for mask in range(2 ** len(self._pairs)):
            edges = frozenset(e for i, e in enumerate(self._pairs) if mask >> i & 1)
            g = SocialGraph(self.n, edges)
            out.append((g, self.density(g)))
        return out


def graph_gen(num_nodes: int, edge_prob: float) -> GraphGen:
    return GraphGen(num_nodes, edge_prob)


class RandomWalk(Atomic):
    """Walk with restart from the graph's seed; the value is the tuple of visited nodes.

    Each step jumps back to the seed with probability ``restart`` and otherwise
    moves to a uniform neighbour, staying put on an isolated node.
    """

    def __init__(self, graph: SocialGraph, steps: int, restart: float):
        if steps < 0:
            raise ParameterError("steps must be >= 0")
        if not 0.0 <= restart <= 1.0:
            raise ParameterError("restart probability must lie in [0, 1]")
        self.graph, self.steps, self.restart = graph, int(steps), float(restart)

    def sample(self, rng):
        nbrs = self.graph.neighbors
        seed = self.graph.seed
        jump = rng.random(self.steps) < self.restart
        pick = rng.random(self.steps)
        pos = seed
        walk = [pos]
        for j, u in zip(jump, pick):
            if j:
                pos = seed
            elif nbrs[pos]:
                pos = nbrs[pos][int(u * len(nbrs[pos]))]
            walk.append(pos)
        return tuple(walk)

    def _step_prob(self, a, b):
        nb = self.graph.neighbors[a]
        move = (1.0 / len(nb) if b in nb else 0.0) if nb else float(a == b)
        return self.restart * (b == self.graph.seed) + (1.0 - self.restart) * move

    def density(self, value):
        if len(value) != self.steps + 1 or value[0] != self.graph.seed:
            return 0.0
        return math.prod(self._step_prob(a, b) for a, b in zip(value, value[1:]))

    def support(self):
        paths = {(self.graph.seed,): 1.0}
        for _ in range(self.steps):
            nxt: dict[tuple, float] = {}
            for path, p in paths.items():
                a = path[-1]
                for b in set(self.graph.neighbors[a]) | {a, self.graph.seed}:
                    q = self._step_prob(a, b)
                    if q > 0:
                        nxt[path + (b,)] = p * q
            if len(nxt) > _ENUMERATION_LIMIT:
                return None
            paths = nxt
        return list(paths.items())


def random_walk_restart(graph: SocialGraph, steps: int, restart: float) -> RandomWalk:
    return RandomWalk(graph, steps, restart)


def distinct_count(walk) -> int:
    return len(set(walk))


@dataclass(frozen=True)
class SocialConfig:
    num: int = 20
    prob: float = 0.15
    steps: int = 20
    restart: float = 0.15
    value: float = 1.0
    cost: float = 7.0
    oracle_walks: int = 1_000_000
    oracle_seed: int = 20130101

    def __post_init__(self):
        GraphGen(self.num, self.prob)
        if self.steps < 0:
            raise ParameterError("steps must be >= 0")
        if not 0.0 <= self.restart <= 1.0:
            raise ParameterError("restart probability must lie in [0, 1]")

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> "SocialConfig":
        kw: dict = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key in ("num", "steps", "oracle_walks", "oracle_seed"):
                kw[key] = int(raw)
            elif key in ("prob", "restart", "value", "cost"):
                kw[key] = float(raw)
            else:
                raise ValueError(f"unknown social config key {key!r}")
        return cls(**kw)

    def utility(self, free: bool, reach: int) -> float:
        return self.value * (reach - 1) - self.cost if free else 0.0


def social_network_model(config: SocialConfig | None = None) -> Model:
    config = config or SocialConfig()
    m = Model()
    graph = m.add(GraphGen(config.num, config.prob), "graphGen")
    walk = m.add(Chain(graph, lambda g: RandomWalk(g, config.steps, config.restart)), "rWalk")
    length = m.add(Apply([walk], distinct_count), "rWalkLength")
    free = m.add(Decision(graph, (True, False)), "freeProd")
    util = m.add(Apply([free, length], config.utility), "prodUtil")
    m.designate_utility(util)
    m.register_oracle(free, SocialOracle(config))
    return m


def expected_reach(graph: SocialGraph, steps: int, restart: float, walks: int,
                   rng: np.random.Generator) -> float:
    """Monte Carlo mean number of distinct nodes visited, vectorised over walks."""
    n = graph.n
    deg = np.array([len(x) for x in graph.neighbors])
    table = np.zeros((n, max(1, int(deg.max(initial=0)))), dtype=np.int64)
    for i, x in enumerate(graph.neighbors):
        table[i, :len(x)] = x
    total = 0.0
    chunk = 250_000
    for start in range(0, walks, chunk):
        w = min(chunk, walks - start)
        pos = np.full(w, graph.seed, dtype=np.int64)
        if n <= 62:
            seen = np.full(w, 1 << graph.seed, dtype=np.int64)
        else:
            seen = np.zeros((w, n), dtype=bool)
            seen[:, graph.seed] = True
        for _ in range(steps):
            jump = rng.random(w) < restart
            d = deg[pos]
            j = (rng.random(w) * np.maximum(d, 1)).astype(np.int64)
            moved = np.where(d > 0, table[pos, np.minimum(j, np.maximum(d - 1, 0))], pos)
            pos = np.where(jump, graph.seed, moved)
            if n <= 62:
                seen |= np.left_shift(1, pos)
            else:
                seen[np.arange(w), pos] = True
        counts = np.bitwise_count(seen) if n <= 62 else seen.sum(axis=1)
        total += float(counts.sum())
    return total / walks


class SocialOracle:
    """``E[U | graph, free]`` from long Monte Carlo runs of the walk, cached per graph.

    Each graph gets its own random stream derived from ``oracle_seed`` and the
    graph encoding, so values do not depend on query order.
    """

    def __init__(self, config: SocialConfig):
        self.config = config
        self._reach: dict[SocialGraph, float] = {}

    def reach(self, graph: SocialGraph) -> float:
        hit = self._reach.get(graph)
        if hit is None:
            key = np.frombuffer(graph.encode().encode(), dtype=np.uint8)
            rng = np.random.default_rng([self.config.oracle_seed, *key.tolist()])
            cfg = self.config
            hit = expected_reach(graph, cfg.steps, cfg.restart, cfg.oracle_walks, rng)
            self._reach[graph] = hit
        return hit

    def __call__(self, graph: SocialGraph, free) -> float:
        if not free:
            return 0.0
        cfg = self.config
        return cfg.value * (self.reach(graph) - 1.0) - cfg.cost
