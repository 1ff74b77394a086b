"""Whether to give away a free product, given the social graph.

A random graph is drawn, and a free sample starts a random walk with restart
from the seed node.  The number of distinct people reached sets the payoff,
minus the cost of the giveaway.  Well-connected seeds make the giveaway pay.
"""

from dtpp import SamplerConfig, collect_samples
from dtpp.harness import compute_loss, draw_parents, static_baselines
from dtpp.policy import ApproxPolicy
from dtpp.zoo import build_model

zoo = build_model("social")
tests = draw_parents(zoo, 60, seed=5)

g = tests[0]
print(f"graph with {g.n} nodes, {len(g.edges)} edges, degree profile {g.degree_profile}")
print("value of giving it away:", round(zoo.oracle(g, True), 3))

statics = static_baselines(zoo.oracle, zoo.decision_range, tests)
print("static losses:", {str(v): round(x, 3) for v, x in statics.items()})

store = collect_samples(zoo.model, zoo.decision, config=SamplerConfig("importance", 3_000, seed=2))
policy = ApproxPolicy(store, 25, zoo.distance)
print(f"k-NN loss: {compute_loss(zoo.oracle, policy, tests):.3f}")
