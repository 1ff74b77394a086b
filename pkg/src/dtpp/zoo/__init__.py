"""Ready-made decision models and the configuration file reader."""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from typing import Callable, Mapping

from ..distance import real_distance
from ..elements import Model
from .dosage import (
    DosageConfig,
    DosageOracle,
    dosage_network,
    dna_from_protein,
    mutate,
    protein_distance,
    protein_distance_fn,
    protein_from_base,
    translate,
)
from .fig2 import fig2_expected_utility, fig2_network
from .social import (
    SocialConfig,
    SocialGraph,
    distinct_count,
    graph_distance,
    graph_gen,
    random_walk_restart,
    social_network_model,
)

MODELS = ("fig2", "dosage", "social")


@dataclass
class ZooModel:
    """A model together with what the harness needs to reason about it."""

    name: str
    model: Model
    decision: int
    distance: Callable
    codec: str

    @property
    def parent(self) -> int:
        return self.model.elements[self.decision].parent

    @property
    def decision_range(self) -> tuple:
        return self.model.elements[self.decision].choices

    def oracle(self, t, v) -> float:
        return self.model.oracles[self.decision](t, v)


def read_config(path) -> dict[str, dict[str, str]]:
    """Flat ``key = value`` pairs grouped in ``[model]`` sections."""
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fp:
        parser.read_file(fp)
    return {s: dict(parser[s]) for s in parser.sections()}


def build_model(name: str, section: Mapping[str, str] | None = None) -> ZooModel:
    section = dict(section or {})
    if name == "fig2":
        lo = float(section.pop("uniform_lo", section.pop("uniform-lo", 0.0)))
        hi = float(section.pop("uniform_hi", section.pop("uniform-hi", 5.0)))
        if section:
            raise ValueError(f"unknown fig2 config keys {sorted(section)}")
        m = fig2_network(lo, hi)
        return ZooModel(name, m, m.names["dec"], real_distance, "real")
    if name == "dosage":
        cfg = DosageConfig.from_mapping(section)
        m = dosage_network(cfg)
        return ZooModel(name, m, m.names["dose"], protein_distance_fn(cfg.costs), "protein")
    if name == "social":
        cfg = SocialConfig.from_mapping(section)
        m = social_network_model(cfg)
        return ZooModel(name, m, m.names["freeProd"], graph_distance, "graph")
    raise ValueError(f"unknown model {name!r}; expected one of {', '.join(MODELS)}")
