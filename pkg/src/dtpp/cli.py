"""Command-line front end.

    dtpp run --model fig2 --n 500,5000 --k 5 15 --test-samples 100 --out loss.csv
    dtpp bench-index --n 1000,10000 --k 100 --queries 500 --out bench.csv
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ModelError
from .harness import INDEX_KINDS, ExperimentSpec, bench_index, run_experiment
from .zoo import MODELS


def _int_list(values: list[str]) -> list[int]:
    out = []
    for chunk in values:
        for part in chunk.split(","):
            part = part.strip()
            if part:
                out.append(int(part))
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dtpp", description="Decision-making experiments on probabilistic programs.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="score k-NN policies against an oracle and write CSV")
    run.add_argument("--model", required=True, choices=MODELS)
    run.add_argument("--sampler", choices=("forward", "importance", "mh"),
                     help="default: mh for fig2, importance otherwise")
    run.add_argument("--n", nargs="+", required=True, help="sample-store sizes (comma or space separated)")
    run.add_argument("--k", nargs="+", required=True, help="neighbour counts (comma or space separated)")
    run.add_argument("--test-samples", type=int, default=100)
    run.add_argument("--index", choices=INDEX_KINDS, default="vptree")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--config", help="INI file with a section named after the model")
    run.add_argument("--out", help="CSV path (default: stdout)")
    run.add_argument("--timing", action="store_true",
                     help="fill mean_query_ms with wall-clock time (breaks byte-identical reruns)")

    bench = sub.add_parser("bench-index", help="time linear and VP-tree lookups as the store grows")
    bench.add_argument("--n", nargs="+", required=True)
    bench.add_argument("--k", type=int, default=100)
    bench.add_argument("--queries", type=int, default=5000)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--model", choices=MODELS, default="fig2")
    bench.add_argument("--out")
    return p


def _run(args) -> None:
    spec = ExperimentSpec(model=args.model, n_values=_int_list(args.n), k_values=_int_list(args.k),
                          test_samples=args.test_samples, index=args.index, seed=args.seed,
                          sampler=args.sampler, config=args.config, out=args.out,
                          timing=args.timing)
    report = run_experiment(spec, progress=logging.getLogger("dtpp").info)
    if args.out is None:
        sys.stdout.write(report.to_csv())


def _bench(args) -> None:
    rows = bench_index(_int_list(args.n), args.k, args.queries, args.seed, args.model, args.out)
    if args.out is None:
        for r in rows:
            print(f"n={r['n']:>7} {r['index']:<7} {r['mean_query_ms']:9.3f} ms "
                  f"{r['mean_dist_evals']:11.1f} evals/query")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        if args.command == "run":
            _run(args)
        else:
            _bench(args)
    except (ValueError, ModelError, OSError, KeyError) as exc:
        print(f"dtpp: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
