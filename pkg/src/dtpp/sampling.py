"""Weighted world generation and the exact enumeration oracle."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .elements import (
    Atomic,
    Chain,
    Chooser,
    Decision,
    Model,
    RandomChooser,
    World,
    _Pass,
    _same,
)
from .errors import (
    DegenerateEvidenceError,
    EvidenceError,
    NotEnumerableError,
    OracleUnavailableError,
)

log = logging.getLogger(__name__)

METHODS = ("forward", "importance", "metropolis-hastings")
_ALIASES = {"mh": "metropolis-hastings", "is": "importance", "lw": "importance"}


@dataclass(frozen=True)
class SamplerConfig:
    """``burn_in=None`` means 10% of ``n`` (Metropolis-Hastings only)."""

    method: str = "importance"
    n: int = 1000
    burn_in: int | None = None
    seed: int = 0

    def __post_init__(self):
        method = _ALIASES.get(self.method, self.method)
        if method not in METHODS + ("exact",):
            raise ValueError(f"unknown sampling method {self.method!r}")
        object.__setattr__(self, "method", method)
        if self.n < 1:
            raise ValueError("sample count n must be >= 1")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn-in must be >= 0")

    @property
    def effective_burn_in(self) -> int:
        return self.n // 10 if self.burn_in is None else self.burn_in


class ExploreStrategy:
    """Decision strategy used while sampling.

    Decisions listed in ``fixed`` take a constant value, those in ``policies``
    follow their policy given the sampled parent, and every other decision is
    explored uniformly over its range.
    """

    def __init__(self, policies: Mapping | None = None, fixed: Mapping | None = None):
        self.policies = dict(policies or {})
        self.fixed = dict(fixed or {})

    def is_random(self, decision_id: int) -> bool:
        return decision_id not in self.policies and decision_id not in self.fixed

    def __call__(self, decision_id, element, parent_value, rng):
        if decision_id in self.fixed:
            return self.fixed[decision_id]
        if decision_id in self.policies:
            return self.policies[decision_id].get_decision(parent_value)
        return element.choices[int(rng.integers(len(element.choices)))]


def _check_evidence_discrete(model):
    for i, v in model.evidence.items():
        if isinstance(v, float) and not v.is_integer():
            raise EvidenceError(
                f"rejection sampling cannot condition element {i} on the real value {v!r}")


def run_sampler(model: Model, config: SamplerConfig,
                strategy: ExploreStrategy | None = None) -> list[World]:
    """Draw ``config.n`` worlds.

    ``forward`` is rejection sampling (unit weights, discrete evidence only),
    ``importance`` is likelihood weighting, and ``metropolis-hastings`` runs a
    single-site chain whose proposals redraw one stochastic element (or
    regenerate one Chain sub-model) from its prior.
    """
    strategy = strategy or ExploreStrategy()
    rng = np.random.default_rng(config.seed)
    if config.method == "forward":
        return _forward(model, config.n, strategy, rng)
    if config.method == "importance":
        return _importance(model, config.n, strategy, rng)
    if config.method == "metropolis-hastings":
        return _metropolis(model, config.n, config.effective_burn_in, strategy, rng)
    raise ValueError("exact enumeration does not produce a sample stream; use exact_enumerate")


def _forward(model, n, strategy, rng):
    _check_evidence_discrete(model)
    chooser = RandomChooser(rng, strategy)
    out, attempts = [], 0
    while len(out) < n:
        attempts += 1
        world = _Pass(model, chooser, use_evidence=False).run()
        if all(_same(world.values[i], v) for i, v in model.evidence.items()):
            out.append(world)
        elif not out and attempts >= n or attempts >= 1000 * n:
            raise DegenerateEvidenceError(
                f"{len(out)} of {attempts} forward samples were consistent with the evidence")
    return out


def _importance(model, n, strategy, rng):
    chooser = RandomChooser(rng, strategy)
    out = [_Pass(model, chooser).run() for _ in range(n)]
    if not any(w.weight > 0 for w in out):
        raise DegenerateEvidenceError(f"all {n} importance samples have zero weight")
    return out


def mh_sites(model: Model, strategy: ExploreStrategy) -> list[int]:
    """Model elements a Metropolis-Hastings proposal may redraw."""
    sites = []
    for i, e in enumerate(model.elements):
        if i in model.evidence:
            continue
        if isinstance(e, (Atomic, Chain)) or (isinstance(e, Decision) and strategy.is_random(i)):
            sites.append(i)
    return sites


def _metropolis(model, n, burn_in, strategy, rng):
    chooser = RandomChooser(rng, strategy)
    current = None
    for _ in range(n):
        world = _Pass(model, chooser).run()
        if world.weight > 0:
            current = world
            break
    if current is None:
        raise DegenerateEvidenceError(f"no initial state with positive weight after {n} draws")

    sites = mh_sites(model, strategy)
    accepted = 0
    out = []
    for step in range(burn_in + n):
        if sites:
            site = sites[int(rng.integers(len(sites)))]
            proposal = _Pass(model, chooser, prev=current, fresh=site,
                             reuse_decision=strategy.is_random).run()
            ratio = proposal.weight / current.weight
            if ratio >= 1.0 or rng.random() < ratio:
                current = proposal
                accepted += 1
        if step >= burn_in:
            out.append(World(current.values, 1.0, current.detached, current.roots))
    log.debug("metropolis-hastings acceptance rate %.3f", accepted / max(1, burn_in + n))
    return out


class _Enumerator(Chooser):
    """Replays a prefix of choice indices and schedules the untried alternatives."""

    def __init__(self, prefix, stack, strategy):
        self.prefix = prefix
        self.stack = stack
        self.strategy = strategy
        self.path: list[int] = []
        self.prob = 1.0
        self.pass_ = None

    def _choose(self, options):
        pos = len(self.path)
        if pos < len(self.prefix):
            j = self.prefix[pos]
        else:
            j = 0
            for alt in range(len(options) - 1, 0, -1):
                self.stack.append(tuple(self.path) + (alt,))
        self.path.append(j)
        value, p = options[j]
        self.prob *= p
        return value

    def atomic(self, element):
        support = element.support()
        if support is None:
            raise NotEnumerableError(element, self.pass_._current)
        options = [(v, p) for v, p in support if p > 0]
        return self._choose(options)

    def decision(self, element_id, element, parent_value):
        if not self.strategy.is_random(element_id):
            return self.strategy(element_id, element, parent_value, None)
        p = 1.0 / len(element.choices)
        return self._choose([(c, p) for c in element.choices])


def exact_enumerate(model: Model, fixed_decisions: Mapping | None = None,
                    strategy: ExploreStrategy | None = None) -> dict[tuple, float]:
    """Exact joint distribution over model assignments.

    Keys are tuples of element values in id order; Chain internals are
    marginalised.  Decisions without a fixed value or policy are enumerated
    uniformly over their range.  Raises :class:`NotEnumerableError` on any
    element without finite support.
    """
    if strategy is None:
        strategy = ExploreStrategy()
    if fixed_decisions:
        fixed = {**strategy.fixed, **{model.resolve(k): v for k, v in fixed_decisions.items()}}
        strategy = ExploreStrategy(strategy.policies, fixed)
    for i, v in strategy.fixed.items():
        model.elements[i].index(v)

    dist: dict[tuple, float] = {}
    stack: list[tuple] = [()]
    while stack:
        chooser = _Enumerator(stack.pop(), stack, strategy)
        p = _Pass(model, chooser)
        chooser.pass_ = p
        world = p.run()
        mass = chooser.prob * world.weight
        if mass <= 0:
            continue
        key = tuple(world.values[i] for i in range(len(model)))
        dist[key] = dist.get(key, 0.0) + mass
    total = sum(dist.values())
    if total <= 0:
        raise DegenerateEvidenceError("evidence has probability zero")
    return {k: v / total for k, v in dist.items()}


def marginal(dist: Mapping[tuple, float], element_id: int) -> dict:
    out: dict = {}
    for key, p in dist.items():
        out[key[element_id]] = out.get(key[element_id], 0.0) + p
    return out


def expected_utility_oracle(model: Model, decision, t, v, utility_ids=None,
                            strategy: ExploreStrategy | None = None) -> float:
    """Exact ``E[sum of utilities | parent = t, decision = v]``.

    Uses a closed form registered with :meth:`Model.register_oracle` when one
    exists, otherwise enumerates the model with the parent clamped to ``t``.
    """
    d = model.resolve(decision)
    if d in model.oracles:
        return float(model.oracles[d](t, v))
    utilities = list(utility_ids) if utility_ids is not None else model.utilities
    if not utilities:
        raise ValueError("no utility elements designated")
    parent = model.elements[d].parent
    try:
        dist = exact_enumerate(model.conditioned({parent: t}), {d: v}, strategy)
    except NotEnumerableError as exc:
        raise OracleUnavailableError(f"decision {d}: {exc}") from exc
    return float(sum(p * sum(key[u] for u in utilities) for key, p in dist.items()))
