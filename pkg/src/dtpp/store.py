"""The sample store: every (parent, decision, utility, weight) observation.

Stores are append-only while a sampler fills them and immutable once sealed.
They serialise to a line-oriented text format::

    #dtpp-store<TAB>codec=<parent codec><TAB>range=<JSON list of decision values>
    <t><TAB><v><TAB><u><TAB><w>
    ...

Parent values go through a named codec; decision values are JSON; ``u`` and
``w`` use ``repr`` so floats round-trip exactly.
"""

from __future__ import annotations

import io
import json
import os
from typing import Any, Callable, Iterator, NamedTuple

from .elements import _same

_HEADER = "#dtpp-store"

CODECS: dict[str, tuple[Callable[[Any], str], Callable[[str], Any]]] = {
    "real": (repr, float),
    "int": (str, int),
    "bool": (lambda b: "true" if b else "false", lambda s: s == "true"),
    "text": (json.dumps, json.loads),
}


def register_codec(name: str, encode: Callable[[Any], str], decode: Callable[[str], Any]) -> None:
    CODECS[name] = (encode, decode)


def guess_codec(value) -> str:
    name = getattr(type(value), "codec", None)
    if isinstance(name, str):
        return name
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "real"
    if isinstance(value, str):
        return "text"
    raise TypeError(f"no codec for parent values of type {type(value).__name__}")


class Sample(NamedTuple):
    t: Any
    v: Any
    u: float
    w: float


class SampleStore:
    """Append-only list of samples for one decision."""

    def __init__(self, decision_range, codec: str | None = None):
        self.decision_range = tuple(decision_range)
        self.codec = codec
        self._samples: list[Sample] = []
        self._partitions: dict[int, list[tuple[int, Sample]]] | None = None
        self.sealed = False

    def __len__(self):
        return len(self._samples)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self._samples)

    def __getitem__(self, i) -> Sample:
        return self._samples[i]

    def _slot(self, v) -> int:
        for i, c in enumerate(self.decision_range):
            if _same(c, v):
                return i
        raise ValueError(f"decision value {v!r} is not in the range {self.decision_range!r}")

    def add(self, t, v, u: float, w: float) -> None:
        if self.sealed:
            raise RuntimeError("store is sealed")
        self._slot(v)
        if not w >= 0:
            raise ValueError(f"sample weight {w} is negative")
        self._samples.append(Sample(t, v, float(u), float(w)))

    def seal(self) -> "SampleStore":
        if not self.total_weight() > 0:
            raise ValueError("sample store has no positive weight")
        self.sealed = True
        return self

    def total_weight(self) -> float:
        return sum(s.w for s in self._samples)

    def partition(self, v) -> list[tuple[int, Sample]]:
        """``(ordinal, sample)`` pairs whose decision equals ``v``, in insertion order."""
        slot = self._slot(v)
        if self._partitions is None or not self.sealed:
            parts: dict[int, list] = {i: [] for i in range(len(self.decision_range))}
            for ordinal, s in enumerate(self._samples):
                parts[self._slot(s.v)].append((ordinal, s))
            if not self.sealed:
                return parts[slot]
            self._partitions = parts
        return self._partitions[slot]

    def scaled(self, factor: float) -> "SampleStore":
        out = SampleStore(self.decision_range, self.codec)
        for s in self._samples:
            out.add(s.t, s.v, s.u, s.w * factor)
        return out.seal() if self.sealed else out

    def __eq__(self, other):
        if not isinstance(other, SampleStore):
            return NotImplemented
        return (self.decision_range == other.decision_range
                and self._samples == other._samples)

    def dump(self, fp) -> None:
        codec = self.codec or (guess_codec(self._samples[0].t) if self._samples else "real")
        encode = CODECS[codec][0]
        fp.write(f"{_HEADER}\tcodec={codec}\trange={json.dumps(list(self.decision_range))}\n")
        for s in self._samples:
            fp.write(f"{encode(s.t)}\t{json.dumps(s.v)}\t{s.u!r}\t{s.w!r}\n")

    def dumps(self) -> str:
        buf = io.StringIO()
        self.dump(buf)
        return buf.getvalue()


def _open(target, mode):
    if isinstance(target, (str, os.PathLike)):
        return open(target, mode, encoding="utf-8", newline="\n"), True
    return target, False


def dump_store(store: SampleStore, target) -> None:
    fp, close = _open(target, "w")
    try:
        store.dump(fp)
    finally:
        if close:
            fp.close()


def load_store(source) -> SampleStore:
    if isinstance(source, str) and source.startswith(_HEADER):
        fp, close = io.StringIO(source), False
    else:
        fp, close = _open(source, "r")
    try:
        header = fp.readline().rstrip("\n").split("\t")
        if header[0] != _HEADER:
            raise ValueError("not a sample store file")
        fields = dict(h.split("=", 1) for h in header[1:])
        codec = fields["codec"]
        decision_range = tuple(json.loads(fields["range"]))
        decode = CODECS[codec][1]
        store = SampleStore(decision_range, codec)
        for lineno, line in enumerate(fp, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(f"line {lineno}: expected 4 tab-separated fields")
            t, v, u, w = parts
            store.add(decode(t), json.loads(v), float(u), float(w))
    finally:
        if close:
            fp.close()
    return store.seal() if len(store) else store
