"""Dose selection for a mutating pathogen protein.

A base protein pattern is sampled, reverse translated to DNA, and mutated by a
Markov walk for a random number of steps.  The observed parent is the
protein, and the dose is chosen from it.  The exact oracle gives the true
expected utility of each dose for any protein, which makes the policy loss
exactly computable.
"""

from dtpp import SamplerConfig, collect_samples
from dtpp.harness import compute_loss, draw_parents, static_baselines
from dtpp.policy import ApproxPolicy
from dtpp.zoo import build_model

zoo = build_model("dosage")
tests = draw_parents(zoo, 60, seed=3)
print("a few test proteins:", ", ".join(tests[:5]))

p = tests[0]
print(f"expected utility for {p}:",
      {v: round(zoo.oracle(p, v), 4) for v in zoo.decision_range})

statics = static_baselines(zoo.oracle, zoo.decision_range, tests)
print("static losses:", {v: round(x, 5) for v, x in statics.items()})

store = collect_samples(zoo.model, zoo.decision, config=SamplerConfig("importance", 5_000, seed=11))
for k in (15, 100):
    policy = ApproxPolicy(store, k, zoo.distance)
    print(f"k={k:<4} k-NN loss={compute_loss(zoo.oracle, policy, tests):.5f}")

# With these defaults the protein carries little information about the best
# dose, so the best constant dose is hard to beat.
