"""Generative model graph and single-world evaluation.

A :class:`Model` is an append-only list of elements.  Elements refer to their
parents either by model id (an ``int``) or, inside the sub-models returned by a
:class:`Chain` function, directly by element object.  Because a parent id must
already exist when an element is added, id order is a topological order and the
graph is acyclic by construction.

Conventions worth knowing before building models:

* ``Normal(mean, variance)`` takes the *variance*, not the standard deviation.
* ``Gamma(shape)`` has rate 1.
* ``Geometric(p)`` treats ``p`` as the continuation probability.  Its support
  starts at 1 and ``P(X = k) = p**(k - 1) * (1 - p)``, so the mean is
  ``1 / (1 - p)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .errors import (
    DecisionValueError,
    EvaluationError,
    EvidenceError,
    ModelError,
    ParameterError,
    UnknownElementError,
)

Value = Any
Ref = Any  # int model id or a detached Element

_SELECT_TOL = 1e-9


class Element:
    """Base class for every node of a model."""

    def parents(self) -> tuple:
        return ()


class Atomic(Element):
    """An element whose value is drawn from a fixed distribution.

    Subclasses implement :meth:`sample` and :meth:`density`.  Finite
    distributions also implement :meth:`support`, which exact enumeration needs.
    """

    def sample(self, rng: np.random.Generator) -> Value:
        raise NotImplementedError

    def density(self, value: Value) -> float:
        raise NotImplementedError

    def support(self) -> list[tuple[Value, float]] | None:
        return None


class Constant(Element):
    def __init__(self, value: Value):
        self.value = value

    def __repr__(self):
        return f"Constant({self.value!r})"


def _check_probability(p, name="p"):
    if not (0.0 <= p <= 1.0):
        raise ParameterError(f"{name}={p!r} is not a probability in [0, 1]")


class Flip(Atomic):
    def __init__(self, p: float):
        _check_probability(p)
        self.p = float(p)

    def sample(self, rng):
        return bool(rng.random() < self.p)

    def density(self, value):
        return self.p if value else 1.0 - self.p

    def support(self):
        return [(True, self.p), (False, 1.0 - self.p)]

    def __repr__(self):
        return f"Flip({self.p})"


class Uniform(Atomic):
    def __init__(self, lo: float, hi: float):
        if not lo < hi:
            raise ParameterError(f"Uniform needs lo < hi, got ({lo}, {hi})")
        self.lo, self.hi = float(lo), float(hi)

    def sample(self, rng):
        return float(rng.uniform(self.lo, self.hi))

    def density(self, value):
        return 1.0 / (self.hi - self.lo) if self.lo <= value <= self.hi else 0.0

    def __repr__(self):
        return f"Uniform({self.lo}, {self.hi})"


class Normal(Atomic):
    """Normal distribution parameterised by mean and **variance**."""

    def __init__(self, mean: float, variance: float):
        if not variance > 0:
            raise ParameterError(f"Normal variance must be positive, got {variance}")
        self.mean, self.variance = float(mean), float(variance)

    def sample(self, rng):
        return float(rng.normal(self.mean, math.sqrt(self.variance)))

    def density(self, value):
        z = (value - self.mean) ** 2 / self.variance
        return math.exp(-0.5 * z) / math.sqrt(2.0 * math.pi * self.variance)

    def __repr__(self):
        return f"Normal({self.mean}, {self.variance})"


class Gamma(Atomic):
    """Gamma distribution with the given shape and rate 1."""

    def __init__(self, shape: float):
        if not shape > 0:
            raise ParameterError(f"Gamma shape must be positive, got {shape}")
        self.shape = float(shape)

    def sample(self, rng):
        return float(rng.gamma(self.shape, 1.0))

    def density(self, value):
        if value <= 0:
            return 0.0
        a = self.shape
        return math.exp((a - 1.0) * math.log(value) - value - math.lgamma(a))

    def __repr__(self):
        return f"Gamma({self.shape})"


class Geometric(Atomic):
    """Number of trials until the process stops; ``p`` is the continuation probability."""

    def __init__(self, p: float):
        _check_probability(p)
        if p >= 1.0:
            raise ParameterError("Geometric continuation probability must be < 1")
        self.p = float(p)

    def sample(self, rng):
        return int(rng.geometric(1.0 - self.p))

    def density(self, value):
        if value != int(value) or value < 1:
            return 0.0
        return self.p ** (int(value) - 1) * (1.0 - self.p)


class Select(Atomic):
    """Categorical distribution over ``(probability, value)`` pairs."""

    def __init__(self, pairs: Sequence[tuple[float, Value]]):
        pairs = [(float(p), v) for p, v in pairs]
        if not pairs:
            raise ParameterError("Select needs at least one outcome")
        if any(p < 0 for p, _ in pairs):
            raise ParameterError("Select probabilities must be nonnegative")
        total = sum(p for p, _ in pairs)
        if abs(total - 1.0) > _SELECT_TOL:
            raise ParameterError(f"Select probabilities sum to {total}, not 1")
        self.pairs = pairs
        self._cum = np.cumsum([p for p, _ in pairs])

    def sample(self, rng):
        i = int(np.searchsorted(self._cum, rng.random() * self._cum[-1], side="right"))
        return self.pairs[min(i, len(self.pairs) - 1)][1]

    def density(self, value):
        return sum(p for p, v in self.pairs if _same(v, value))

    def support(self):
        return [(v, p) for p, v in self.pairs]


class Apply(Element):
    """Deterministic function of one or more parents."""

    def __init__(self, parents: Sequence[Ref], fn: Callable[..., Value]):
        if isinstance(parents, (int, Element)):
            parents = [parents]
        self._parents = tuple(parents)
        self.fn = fn

    def parents(self):
        return self._parents


class Chain(Element):
    """Conditional sub-model: ``fn(parent_value)`` returns the element whose value this takes.

    ``fn`` may return a model id or an element object; element objects it
    creates are evaluated as part of the same world.
    """

    def __init__(self, parent: Ref, fn: Callable[[Value], Ref]):
        self.parent = parent
        self.fn = fn

    def parents(self):
        return (self.parent,)


def If(condition: Ref, then: Ref, otherwise: Ref) -> Chain:
    return Chain(condition, lambda c: then if c else otherwise)


class Decision(Element):
    """Decision node with a single informational parent and a finite range."""

    def __init__(self, parent: int, choices: Sequence[Value]):
        choices = tuple(choices)
        if not choices:
            raise ParameterError("decision range must be nonempty")
        for i, a in enumerate(choices):
            if any(_same(a, b) for b in choices[i + 1:]):
                raise ParameterError(f"decision range has duplicate value {a!r}")
        self.parent = parent
        self.choices = choices

    def parents(self):
        return (self.parent,)

    def index(self, value) -> int:
        for i, c in enumerate(self.choices):
            if _same(c, value):
                return i
        raise DecisionValueError(f"{value!r} is not in decision range {self.choices!r}")


def _same(a, b) -> bool:
    if a is b:
        return True
    try:
        r = a == b
    except Exception:
        return False
    return r is True or (isinstance(r, (bool, np.bool_)) and bool(r))


class Model:
    """Append-only collection of elements plus utility and evidence designations."""

    def __init__(self):
        self.elements: list[Element] = []
        self.names: dict[str, int] = {}
        self.utilities: list[int] = []
        self.evidence: dict[int, Value] = {}
        self.oracles: dict[int, Callable[[Value, Value], float]] = {}
        self._registered: set[int] = set()

    def __len__(self):
        return len(self.elements)

    def __getitem__(self, ref):
        return self.elements[self.resolve(ref)]

    def resolve(self, ref) -> int:
        """Turn a name or id into an id."""
        if isinstance(ref, str):
            try:
                return self.names[ref]
            except KeyError:
                raise UnknownElementError(f"no element named {ref!r}") from None
        if isinstance(ref, (int, np.integer)) and not isinstance(ref, bool):
            if 0 <= ref < len(self.elements):
                return int(ref)
        raise UnknownElementError(f"no element with id {ref!r}")

    def add(self, element: Element, name: str | None = None) -> int:
        if not isinstance(element, Element):
            raise TypeError(f"expected an Element, got {type(element).__name__}")
        if id(element) in self._registered:
            raise ModelError("element is already part of this model")
        self._check_refs(element, depth=0)
        if isinstance(element, Decision) and not _is_id(element.parent):
            raise ModelError("a decision's parent must be a model element id")
        if name is not None:
            if name in self.names:
                raise ModelError(f"duplicate element name {name!r}")
            self.names[name] = len(self.elements)
        self.elements.append(element)
        self._registered.add(id(element))
        return len(self.elements) - 1

    def _check_refs(self, element, depth):
        if depth > 200:
            raise ModelError("detached parent nesting too deep")
        for p in element.parents():
            if _is_id(p):
                if not 0 <= p < len(self.elements):
                    raise UnknownElementError(f"parent id {p} does not exist")
            elif isinstance(p, Element):
                self._check_refs(p, depth + 1)
            else:
                raise ModelError(f"invalid parent reference {p!r}")

    def designate_utility(self, *refs) -> None:
        for r in refs:
            i = self.resolve(r)
            if i not in self.utilities:
                self.utilities.append(i)

    def observe(self, ref, value) -> None:
        i = self.resolve(ref)
        if isinstance(self.elements[i], Decision):
            raise EvidenceError("decisions cannot be observed")
        self.evidence[i] = value

    def register_oracle(self, decision_ref, fn: Callable[[Value, Value], float]) -> None:
        """Attach a closed-form ``E[U | parent=t, decision=v]`` for a decision."""
        self.oracles[self.resolve(decision_ref)] = fn

    def conditioned(self, evidence: Mapping) -> "Model":
        """Shallow copy sharing elements, with extra evidence."""
        m = Model()
        m.elements = self.elements
        m.names = self.names
        m.utilities = list(self.utilities)
        m.evidence = dict(self.evidence)
        m.oracles = dict(self.oracles)
        m._registered = self._registered
        for ref, value in evidence.items():
            m.observe(ref, value)
        return m

    @property
    def decisions(self) -> list[int]:
        return [i for i, e in enumerate(self.elements) if isinstance(e, Decision)]

    def ancestors(self, ref) -> set[int]:
        """Model ids statically reachable backwards from ``ref`` (dynamic Chain edges excluded)."""
        out: set[int] = set()
        stack = [self.resolve(ref)]
        while stack:
            for p in _model_parents(self.elements[stack.pop()]):
                if p not in out:
                    out.add(p)
                    stack.append(p)
        return out


def _is_id(ref) -> bool:
    return isinstance(ref, (int, np.integer)) and not isinstance(ref, bool)


def _model_parents(element) -> set[int]:
    out = set()
    for p in element.parents():
        if _is_id(p):
            out.add(int(p))
        elif isinstance(p, Element):
            out |= _model_parents(p)
    return out


@dataclass
class World:
    """One complete assignment of values plus its likelihood weight.

    ``values`` holds every model element; ``detached`` holds the values of the
    elements generated inside Chain sub-models, keyed by ``id(element)``.
    """

    values: dict[int, Value]
    weight: float = 1.0
    detached: dict[int, tuple[Element, Value]] = field(default_factory=dict, repr=False)
    roots: dict[int, tuple[Value, Ref]] = field(default_factory=dict, repr=False)

    def __getitem__(self, i):
        return self.values[i]

    @property
    def assignment(self) -> dict[int, Value]:
        return self.values


class Chooser:
    """Supplies random choices to an evaluation pass."""

    def atomic(self, element: Atomic) -> Value:
        raise NotImplementedError

    def decision(self, element_id: int, element: Decision, parent_value: Value) -> Value:
        raise NotImplementedError


class RandomChooser(Chooser):
    def __init__(self, rng, decide):
        self.rng = rng
        self.decide = decide

    def atomic(self, element):
        return element.sample(self.rng)

    def decision(self, element_id, element, parent_value):
        return self.decide(element_id, element, parent_value, self.rng)


class _Pass:
    """One topological evaluation of a model.

    With ``prev`` set, stochastic values from ``prev`` are reused except at the
    ``fresh`` site, which is redrawn; Chain sub-models are regenerated only when
    their parent value changed (or when the chain itself is the fresh site).
    ``reuse_decision(i)`` tells whether decision ``i`` may keep its previous
    value.  With ``use_evidence=False`` evidence is ignored entirely.
    """

    def __init__(self, model, chooser, prev=None, fresh=None,
                 reuse_decision=None, use_evidence=True):
        self.model = model
        self.chooser = chooser
        self.prev = prev
        self.fresh = fresh
        self.reuse_decision = reuse_decision or (lambda i: False)
        self.evidence = model.evidence if use_evidence else {}
        self.values: dict[int, Value] = {}
        self.weight = 1.0
        self.detached: dict[int, tuple[Element, Value]] = {}
        self.roots: dict[int, tuple[Value, Ref]] = {}
        self._memo: dict[int, Value] = {}
        self._current = 0
        self._reusing = prev is not None

    def run(self) -> World:
        for i, element in enumerate(self.model.elements):
            self._current = i
            try:
                self.values[i] = self._model_element(i, element)
            except ModelError:
                raise
            except Exception as exc:
                raise EvaluationError(i, exc) from exc
        return World(self.values, self.weight, self.detached, self.roots)

    def _model_element(self, i, element):
        observed = i in self.evidence
        prev = self.prev
        if isinstance(element, Constant):
            value = element.value
        elif isinstance(element, Atomic):
            if observed:
                value = self.evidence[i]
                self.weight *= element.density(value)
                return value
            if prev is not None and i != self.fresh:
                return prev.values[i]
            return self.chooser.atomic(element)
        elif isinstance(element, Apply):
            value = element.fn(*[self._ref(p) for p in element.parents()])
        elif isinstance(element, Decision):
            t = self._ref(element.parent)
            if prev is not None and i != self.fresh and self.reuse_decision(i):
                return prev.values[i]
            return self.chooser.decision(i, element, t)
        elif isinstance(element, Chain):
            return self._chain(i, element, self._ref(element.parent),
                               fresh=(i == self.fresh), observed=observed)
        else:
            raise ModelError(f"unsupported element type {type(element).__name__}")
        if observed:
            self._indicator(self.evidence[i], value)
        return value

    def _indicator(self, observed, value):
        if isinstance(observed, float) and not float(observed).is_integer():
            raise EvidenceError("hard equality evidence on a real-valued deterministic element")
        if not _same(observed, value):
            self.weight = 0.0

    def _chain(self, key, chain, parent_value, fresh, observed):
        prior = None if (fresh or self.prev is None) else self.prev.roots.get(key)
        if prior is not None and _same(prior[0], parent_value):
            root = prior[1]
        else:
            root = chain.fn(parent_value)
        self.roots[key] = (parent_value, root)
        saved = self._reusing
        if fresh:
            self._reusing = False
        try:
            if observed and isinstance(root, Atomic):
                value = self.model.evidence[key]
                self.weight *= root.density(value)
                self.detached[id(root)] = (root, value)
                self._memo[id(root)] = value
                return value
            value = self._ref(root)
        finally:
            self._reusing = saved
        if observed:
            self._indicator(self.model.evidence[key], value)
        return value

    def _ref(self, ref):
        if _is_id(ref):
            if not 0 <= ref < self._current or ref not in self.values:
                raise EvaluationError(self._current, UnknownElementError(
                    f"reference to element {ref} which is not evaluated before it"))
            return self.values[ref]
        if isinstance(ref, Element):
            return self._detached(ref)
        raise ModelError(f"invalid reference {ref!r}")

    def _detached(self, element):
        key = id(element)
        if key in self._memo:
            return self._memo[key]
        if isinstance(element, Constant):
            value = element.value
        elif isinstance(element, Atomic):
            old = self.prev.detached.get(key) if (self._reusing and self.prev) else None
            value = old[1] if old is not None and old[0] is element else self.chooser.atomic(element)
            self.detached[key] = (element, value)
        elif isinstance(element, Apply):
            value = element.fn(*[self._ref(p) for p in element.parents()])
        elif isinstance(element, Chain):
            pv = self._ref(element.parent)
            value = self._chain(key, element, pv, fresh=not self._reusing, observed=False)
        elif isinstance(element, Decision):
            raise ModelError("decisions must be model elements, not Chain results")
        else:
            raise ModelError(f"unsupported element type {type(element).__name__}")
        self._memo[key] = value
        return value


def evaluate(model: Model, rng: np.random.Generator | int | None = None,
             fixed_decisions: Mapping | None = None) -> World:
    """Draw one world with every decision fixed.

    Evidence elements take their observed values and multiply the world weight
    by the probability (or density) of the observation.
    """
    fixed = {model.resolve(k): v for k, v in (fixed_decisions or {}).items()}
    for i in model.decisions:
        if i not in fixed:
            raise DecisionValueError(f"no fixed value for decision {i}")
        model.elements[i].index(fixed[i])
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    chooser = RandomChooser(rng, lambda i, e, t, r: fixed[i])
    return _Pass(model, chooser).run()
