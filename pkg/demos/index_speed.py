"""Compare linear scan with the VP-tree on nearest-neighbour lookups."""

from dtpp.harness import bench_index

rows = bench_index([2_000, 20_000], k=25, queries=200, seed=0)
print(f"{'n':>7} {'index':>7} {'ms/query':>9} {'dist evals':>11}")
for r in rows:
    print(f"{r['n']:>7} {r['index']:>7} {r['mean_query_ms']:>9.3f} {r['mean_dist_evals']:>11.1f}")
