"""Drug dosage network over protein and DNA sequences.

A protein is drawn from a base pattern (``-`` is any of the twenty amino
acids), reverse-translated to one of its synonymous DNA sequences, mutated by a
per-nucleotide Markov chain for a random number of steps and translated back.
The dose decision observes only the original protein.  The drug works when the
dose reaches the level required by the mutation distance between the original
and mutated proteins; larger doses cost more whenever a side effect occurs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np

from ..elements import Apply, Atomic, Chain, Constant, Decision, Flip, Geometric, Model
from ..errors import ParameterError
from ..store import register_codec

AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"
TRUNCATED = "*"
NUCLEOTIDES = "ACGT"

_TCAG = "TCAG"
_STANDARD_CODE = "FFLLSSSSYY**CC*WLLLLPPPPHHQQRRRRIIIMTTTTNNKKSSRRVVVVAAAADDEEGGGG"
CODON_TABLE: dict[str, str] = {
    a + b + c: aa
    for (a, b, c), aa in zip(itertools.product(_TCAG, repeat=3), _STANDARD_CODE)
}
SYNONYMOUS: dict[str, tuple[str, ...]] = {
    aa: tuple(sorted(c for c, x in CODON_TABLE.items() if x == aa)) for aa in AMINO_ACIDS
}
_CODONS = ["".join(c) for c in itertools.product(NUCLEOTIDES, repeat=3)]  # kron order
_NUC_INDEX = {n: i for i, n in enumerate(NUCLEOTIDES)}

_ENUMERATION_LIMIT = 200_000


def translate(dna: str) -> str:
    """Codon-by-codon translation; stop codons become ``*``."""
    if len(dna) % 3:
        raise ValueError(f"DNA length {len(dna)} is not a multiple of 3")
    return "".join(CODON_TABLE[dna[i:i + 3]] for i in range(0, len(dna), 3))


class ProteinFromBase(Atomic):
    """Uniform over the proteins matching a base pattern."""

    def __init__(self, base: str):
        bad = set(base) - set(AMINO_ACIDS) - {"-"}
        if bad:
            raise ParameterError(f"illegal characters in base sequence: {''.join(sorted(bad))}")
        self.base = base
        self.wildcards = [i for i, c in enumerate(base) if c == "-"]

    def sample(self, rng):
        if not self.wildcards:
            return self.base
        chars = list(self.base)
        for pos, j in zip(self.wildcards, rng.integers(20, size=len(self.wildcards))):
            chars[pos] = AMINO_ACIDS[j]
        return "".join(chars)

    def matches(self, protein) -> bool:
        return (isinstance(protein, str) and len(protein) == len(self.base)
                and all(b == "-" and c in AMINO_ACIDS or b == c for b, c in zip(self.base, protein)))

    def density(self, value):
        return 20.0 ** -len(self.wildcards) if self.matches(value) else 0.0

    def support(self):
        if 20 ** len(self.wildcards) > _ENUMERATION_LIMIT:
            return None
        p = 20.0 ** -len(self.wildcards)
        out = []
        for combo in itertools.product(AMINO_ACIDS, repeat=len(self.wildcards)):
            chars = list(self.base)
            for pos, c in zip(self.wildcards, combo):
                chars[pos] = c
            out.append(("".join(chars), p))
        return out


def protein_from_base(base: str) -> ProteinFromBase:
    return ProteinFromBase(base)


class DNAFromProtein(Atomic):
    """Each residue becomes one of its synonymous codons, uniformly."""

    def __init__(self, protein: str):
        for aa in protein:
            if aa not in SYNONYMOUS:
                raise ParameterError(f"residue {aa!r} has no codon")
        self.protein = protein
        self.options = [SYNONYMOUS[aa] for aa in protein]

    def sample(self, rng):
        return "".join(opts[int(rng.integers(len(opts)))] for opts in self.options)

    def density(self, value):
        if len(value) != 3 * len(self.protein) or translate(value) != self.protein:
            return 0.0
        return math.prod(1.0 / len(o) for o in self.options)

    def support(self):
        if math.prod(len(o) for o in self.options) > _ENUMERATION_LIMIT:
            return None
        p = math.prod(1.0 / len(o) for o in self.options)
        return [("".join(c), p) for c in itertools.product(*self.options)]


def dna_from_protein(protein: str) -> DNAFromProtein:
    return DNAFromProtein(protein)


class TransitionMatrix:
    """Row-stochastic 4x4 per-step nucleotide mutation matrix (rows/cols in ACGT order)."""

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=float)
        if m.shape != (4, 4):
            raise ParameterError("transition matrix must be 4x4")
        if (m < 0).any() or not np.allclose(m.sum(axis=1), 1.0, atol=1e-9, rtol=0):
            raise ParameterError("transition matrix must be nonnegative with rows summing to 1")
        self.matrix = m
        self._powers: dict[int, np.ndarray] = {}

    @classmethod
    def jukes_cantor(cls, alpha: float = 0.05) -> "TransitionMatrix":
        if not 0 <= alpha <= 1.0 / 3.0:
            raise ParameterError("Jukes-Cantor rate must lie in [0, 1/3]")
        return cls(np.full((4, 4), alpha) + np.eye(4) * (1.0 - 4.0 * alpha))

    @classmethod
    def identity(cls) -> "TransitionMatrix":
        return cls(np.eye(4))

    def power(self, steps: int) -> np.ndarray:
        if steps < 0:
            raise ParameterError("time steps must be >= 0")
        p = self._powers.get(steps)
        if p is None:
            p = np.linalg.matrix_power(self.matrix, steps)
            if len(self._powers) < 4096:
                self._powers[steps] = p
        return p


class MarkovWalk(Atomic):
    """DNA after ``steps`` independent per-site Markov steps.

    Sampling draws each site from the corresponding row of the ``steps``-th
    matrix power, which has the same law as stepping one step at a time.
    """

    def __init__(self, dna: str, steps: int, matrix: TransitionMatrix):
        if steps < 0:
            raise ParameterError("time steps must be >= 0")
        self.dna = dna
        self.steps = int(steps)
        self.matrix = matrix
        self._idx = np.fromiter((_NUC_INDEX[c] for c in dna), dtype=np.intp, count=len(dna))

    def _rows(self):
        return self.matrix.power(self.steps)[self._idx]

    def sample(self, rng):
        if self.steps == 0 or not len(self.dna):
            return self.dna
        cum = np.cumsum(self._rows(), axis=1)
        u = rng.random(len(self.dna))
        new = np.minimum((u[:, None] >= cum).sum(axis=1), 3)
        return "".join(NUCLEOTIDES[j] for j in new)

    def density(self, value):
        if len(value) != len(self.dna):
            return 0.0
        rows = self._rows()
        return float(np.prod([rows[i, _NUC_INDEX[c]] for i, c in enumerate(value)]))

    def support(self):
        rows = self._rows()
        per_site = [[(NUCLEOTIDES[j], r[j]) for j in range(4) if r[j] > 0] for r in rows]
        if math.prod(len(s) for s in per_site) > _ENUMERATION_LIMIT:
            return None
        out = []
        for combo in itertools.product(*per_site):
            out.append(("".join(c for c, _ in combo), math.prod(p for _, p in combo)))
        return out


def mutate(dna: str, steps: int, matrix: TransitionMatrix | None = None) -> MarkovWalk:
    return MarkovWalk(dna, steps, matrix or TransitionMatrix.jukes_cantor())


class CostMatrix:
    """Substitution costs over the 20 amino acids plus the truncation symbol.

    The diagonal is zero; the truncation symbol costs the maximum substitution
    cost against every amino acid.  ``None`` gives unit (Hamming) costs.
    """

    def __init__(self, costs: Mapping[str, Mapping[str, float]] | None = None):
        self.hamming = costs is None
        alphabet = AMINO_ACIDS + TRUNCATED
        if costs is None:
            self.table = {a: {b: 0.0 if a == b else 1.0 for b in alphabet} for a in alphabet}
            self.max_cost = 1.0
            return
        top = max(float(costs[a][b]) for a in AMINO_ACIDS for b in AMINO_ACIDS)
        table = {}
        for a in AMINO_ACIDS:
            table[a] = {b: 0.0 if a == b else float(costs[a][b]) for b in AMINO_ACIDS}
            table[a][TRUNCATED] = top
        table[TRUNCATED] = {b: top for b in AMINO_ACIDS}
        table[TRUNCATED][TRUNCATED] = 0.0
        if any(v < 0 for row in table.values() for v in row.values()):
            raise ParameterError("substitution costs must be nonnegative")
        self.table = table
        self.max_cost = top

    def __call__(self, a: str, b: str) -> float:
        return self.table[a][b]


HAMMING = CostMatrix()


def protein_distance(p1: str, p2: str, cost: CostMatrix | None = None) -> float:
    """Sum of per-position substitution costs between equal-length proteins."""
    if len(p1) != len(p2):
        raise ValueError(f"protein lengths differ ({len(p1)} vs {len(p2)})")
    if cost is None or cost.hamming:
        return float(sum(a != b for a, b in zip(p1, p2)))
    table = cost.table
    return float(sum(table[a][b] for a, b in zip(p1, p2)))


def protein_distance_fn(cost: CostMatrix | None = None):
    if cost is None or cost.hamming:
        return lambda a, b: float(sum(x != y for x, y in zip(a, b))) if len(a) == len(b) \
            else protein_distance(a, b)
    return lambda a, b: protein_distance(a, b, cost)


register_codec("protein", str, str)


def _parse_floats(text):
    if isinstance(text, str):
        return tuple(float(x) for x in text.replace(",", " ").split())
    return tuple(float(x) for x in text)


@dataclass(frozen=True)
class DosageConfig:
    """Parameters of the dosage network.

    ``time`` is ``"geometric:<continuation p>"`` or ``"constant:<steps>"``;
    ``mutation`` is ``"jc:<off-diagonal rate>"`` or ``"identity"``.  The dose
    required for a mutation distance ``d`` is the number of ``cutoffs`` that
    ``d`` exceeds.
    """

    base: str = "P--Y-"
    time: str = "geometric:0.9"
    mutation: str = "jc:0.05"
    side_effect_prob: float = 0.1
    side_effect_cost: float = 4.9
    drug_gain: float = 1.0
    cutoffs: tuple = (0.0, 2.0)
    doses: tuple = (0, 1, 2)
    costs: CostMatrix = field(default=HAMMING, compare=False)

    def __post_init__(self):
        ProteinFromBase(self.base)
        _time_distribution(self.time)
        self.matrix()
        if not 0 <= self.side_effect_prob <= 1:
            raise ParameterError("side_effect_prob must be a probability")
        if list(self.cutoffs) != sorted(self.cutoffs):
            raise ParameterError("cutoffs must be nondecreasing")

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> "DosageConfig":
        kw: dict = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key in ("base", "time", "mutation"):
                kw[key] = str(raw)
            elif key in ("side_effect_prob", "side_effect_cost", "drug_gain"):
                kw[key] = float(raw)
            elif key == "cutoffs":
                kw[key] = _parse_floats(raw)
            elif key == "doses":
                kw[key] = tuple(int(x) for x in _parse_floats(raw))
            else:
                raise ValueError(f"unknown dosage config key {key!r}")
        return cls(**kw)

    def matrix(self) -> TransitionMatrix:
        return _matrix(self.mutation)

    def required_dose(self, distance: float) -> int:
        return sum(distance > c for c in self.cutoffs)

    def drug_utility(self, original: str, mutated: str, dose) -> float:
        d = protein_distance(original, mutated, self.costs)
        return self.drug_gain if dose >= self.required_dose(d) else 0.0

    def side_effect_utility(self, side_effect: bool, dose) -> float:
        return -(self.side_effect_cost * dose) if side_effect else 0.0


@lru_cache(maxsize=32)
def _matrix(spec: str) -> TransitionMatrix:
    if spec == "identity":
        return TransitionMatrix.identity()
    kind, _, arg = spec.partition(":")
    if kind == "jc":
        return TransitionMatrix.jukes_cantor(float(arg) if arg else 0.05)
    raise ParameterError(f"unknown mutation spec {spec!r}")


def _time_distribution(spec: str, tail: float = 1e-15) -> list[tuple[int, float]]:
    kind, _, arg = spec.partition(":")
    if kind == "constant":
        steps = int(arg)
        if steps < 0:
            raise ParameterError("time steps must be >= 0")
        return [(steps, 1.0)]
    if kind == "geometric":
        p = float(arg)
        Geometric(p)
        out, mass, s = [], 0.0, 1
        while mass < 1.0 - tail and s < 100_000:
            prob = p ** (s - 1) * (1.0 - p)
            out.append((s, prob))
            mass += prob
            s += 1
        return out
    raise ParameterError(f"unknown time spec {spec!r}")


def _time_element(spec: str):
    kind, _, arg = spec.partition(":")
    return Constant(int(arg)) if kind == "constant" else Geometric(float(arg))


def dosage_network(config: DosageConfig | None = None) -> Model:
    config = config or DosageConfig()
    matrix = config.matrix()
    m = Model()
    protein = m.add(ProteinFromBase(config.base), "protein")
    dna = m.add(Chain(protein, DNAFromProtein), "dna")
    time = m.add(_time_element(config.time), "time")
    pair = m.add(Apply([dna, time], lambda d, t: (d, t)), "dna_time")
    mutated = m.add(Chain(pair, lambda dt: MarkovWalk(dt[0], dt[1], matrix)), "mutated")
    back = m.add(Apply([mutated], translate), "dnaToProt")
    dose = m.add(Decision(protein, config.doses), "dose")
    side = m.add(Flip(config.side_effect_prob), "sideEffect")
    se_util = m.add(Apply([side, dose], config.side_effect_utility), "sideEffectUtil")
    drug_util = m.add(Apply([protein, back, dose], config.drug_utility), "drugUtil")
    m.designate_utility(se_util, drug_util)
    m.register_oracle(dose, DosageOracle(config))
    return m


class DosageOracle:
    """Exact ``E[U | protein, dose]`` for a dosage configuration.

    Given the number of mutation steps, residues mutate independently: each
    residue's codon is uniform over its synonyms and each nucleotide follows
    the matrix power, which gives a per-residue distribution over substitution
    costs.  These are convolved into the distribution of the total distance and
    mixed over the time distribution (geometric tails truncated below 1e-15).
    """

    def __init__(self, config: DosageConfig):
        self.config = config
        self.matrix = config.matrix()
        self.times = _time_distribution(config.time)
        self._cache: dict[str, dict[int, float]] = {}
        self._codon = None

    def _codon_matrices(self):
        if self._codon is None:
            powers = np.stack([self.matrix.power(s) for s, _ in self.times])
            self._codon = np.einsum("sac,sbd,sef->sabecdf", powers, powers, powers).reshape(
                len(self.times), 64, 64)
            self._p_time = np.array([p for _, p in self.times])
        return self._codon

    def dose_success(self, protein: str) -> dict[int, float]:
        """``P(required dose <= v)`` for every configured dose."""
        hit = self._cache.get(protein)
        if hit is not None:
            return hit
        cfg = self.config
        codon = self._codon_matrices()
        targets = [translate(c) for c in _CODONS]
        total = {0.0: np.ones(len(self.times))}
        for aa in protein:
            row = codon[:, [_CODONS.index(c) for c in SYNONYMOUS[aa]]].mean(axis=1)
            costs = np.array([round(cfg.costs(aa, b), 12) for b in targets])
            per = {float(c): row[:, costs == c].sum(axis=1) for c in np.unique(costs)}
            total = _convolve(total, per)
        success = {}
        for v in cfg.doses:
            ok = sum(pr for d, pr in total.items() if cfg.required_dose(d) <= v)
            success[v] = float(np.dot(self._p_time, ok))
        self._cache[protein] = success
        return success

    def __call__(self, protein: str, dose) -> float:
        cfg = self.config
        return (cfg.drug_gain * self.dose_success(protein)[dose]
                - cfg.side_effect_prob * cfg.side_effect_cost * dose)


def _convolve(a: dict, b: dict) -> dict:
    out: dict = {}
    for x, px in a.items():
        for y, py in b.items():
            key = round(x + y, 12)
            out[key] = out[key] + px * py if key in out else px * py
    return out
