"""Continuous-parent network: a uniform parent feeding a gamma process.

    pa   ~ Uniform(lo, hi)
    proc ~ Gamma(shape=pa, rate=1)
    dec  : Decision(pa, (0, 1))
    util = sin(proc) if dec == 1 else cos(proc)

The expected utilities have a closed form through the gamma characteristic
function ``E[exp(i G)] = (1 - i)**(-a)`` for ``G ~ Gamma(a, 1)``:
``E[cos G] = 2**(-a/2) cos(a pi/4)`` and ``E[sin G] = 2**(-a/2) sin(a pi/4)``.
"""

from __future__ import annotations

import math

from ..elements import Apply, Chain, Decision, Gamma, Model, Uniform
from ..errors import ParameterError


def fig2_expected_utility(t: float, v) -> float:
    scale = 2.0 ** (-t / 2.0)
    angle = t * math.pi / 4.0
    return scale * (math.sin(angle) if v == 1 else math.cos(angle))


def _utility(d, p):
    return math.sin(p) if d == 1 else math.cos(p)


def fig2_network(lo: float = 0.0, hi: float = 5.0) -> Model:
    if not 0.0 <= lo < hi:
        raise ParameterError(f"need 0 <= lo < hi, got ({lo}, {hi})")
    m = Model()
    pa = m.add(Uniform(lo, hi), "pa")
    proc = m.add(Chain(pa, Gamma), "proc")
    dec = m.add(Decision(pa, (0, 1)), "dec")
    util = m.add(Apply([dec, proc], _utility), "util")
    m.designate_utility(util)
    m.register_oracle(dec, fig2_expected_utility)
    return m
