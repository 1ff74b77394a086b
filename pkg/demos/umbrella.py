"""Build a tiny decision model by hand and compile both policy kinds.

A forecast is observed before deciding whether to carry an umbrella.  The
parent takes two values, so the exact lookup table is well defined and the
k-NN policy with a large k should agree with it.
"""

from dtpp import Apply, Decision, Flip, If, Model, SamplerConfig, collect_samples
from dtpp.policy import ApproxPolicy, set_policy_exact
from dtpp.distance import bool_distance

m = Model()
rain = m.add(Flip(0.3), "rain")
forecast = m.add(If(rain, Flip(0.85), Flip(0.2)), "forecast")
carry = m.add(Decision(forecast, (False, True)), "carry")


def utility(r, c):
    if c:
        return 0.6          # dry, but you had to carry it
    return 0.0 if r else 1.0


util = m.add(Apply([rain, carry], utility), "util")
m.designate_utility(util)

store = collect_samples(m, carry, config=SamplerConfig("importance", 20_000, seed=1))
print(f"collected {len(store)} samples")

exact = set_policy_exact(store)
for t in (False, True):
    means = ", ".join(f"carry={v}: {u:.3f}" for v, u in sorted(exact.expected[t].items()))
    print(f"forecast={t!s:5}  {means}  ->  carry={exact.get_decision(t)}")

knn = ApproxPolicy(store, k=500, distance=bool_distance, index="linear")
agree = all(knn.get_decision(t) == exact.get_decision(t) for t in (False, True))
print("k-NN (k=500) agrees with the table:", agree)
