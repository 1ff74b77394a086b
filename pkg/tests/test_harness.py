import csv
import io
import subprocess
import sys

import numpy as np
import pytest

from dtpp import SamplerConfig, collect_samples
from dtpp.cli import main
from dtpp.harness import (
    CSV_HEADER,
    ExperimentSpec,
    OracleTable,
    compute_loss,
    run_experiment,
    static_baselines,
    time_index_queries,
)
from dtpp.policy import ExactPolicy, Policy
from dtpp.zoo import build_model, fig2_expected_utility

# scipy.integrate.quad of E_t[max_v E[U|t,v] - E[U|t,v0]] for t ~ Uniform(0, 5)
FIG2_STATIC_LOSS = {0: 0.26643047212433474, 1: 0.09405447538577102}


class _Oracular(Policy):
    def __init__(self, oracle, decision_range):
        self.oracle, self.decision_range = oracle, decision_range

    def get_decision(self, t):
        return max(self.decision_range, key=lambda v: self.oracle(t, v))


def test_optimal_policy_has_zero_loss():
    ts = np.linspace(0, 5, 101)
    assert compute_loss(fig2_expected_utility, _Oracular(fig2_expected_utility, (0, 1)), ts) == 0.0


def test_loss_arithmetic():
    oracle = lambda t, v: (0.5, 0.3)[v]
    assert compute_loss(oracle, ExactPolicy({"x": 1}, (0, 1)), ["x"]) == pytest.approx(0.2)


def test_static_loss_matches_quadrature():
    m = 200_000
    grid = (np.arange(m) + 0.5) * 5.0 / m
    losses = static_baselines(fig2_expected_utility, (0, 1), grid.tolist())
    for v, expected in FIG2_STATIC_LOSS.items():
        assert losses[v] == pytest.approx(expected, abs=1e-7)


def test_static_baselines_shape_and_symmetry():
    ts = [0.1, 0.7, 2.0]
    assert len(static_baselines(fig2_expected_utility, (0, 1), ts)) == 2
    sym = static_baselines(lambda t, v: t * t, ("a", "b"), ts)
    assert sym["a"] == sym["b"]


def test_best_static_bounds_randomized_constants():
    ts = np.random.default_rng(0).uniform(0, 5, 300).tolist()
    table = OracleTable(fig2_expected_utility, ts, (0, 1))
    losses = static_baselines(table, (0, 1), ts)
    for q in np.linspace(0, 1, 11):
        mixed = q * losses[0] + (1 - q) * losses[1]
        assert min(losses.values()) <= mixed + 1e-15


def test_oracle_errors_propagate():
    def broken(t, v):
        raise KeyError("no oracle")

    with pytest.raises(KeyError):
        compute_loss(broken, ExactPolicy({"x": 0}, (0,)), ["x"])


def _fig2_store(n, seed=0):
    zoo = build_model("fig2")
    return zoo, collect_samples(zoo.model, zoo.decision, config=SamplerConfig("mh", n, seed=seed))


def test_time_index_queries():
    zoo, store = _fig2_store(2000)
    with pytest.raises(ValueError):
        time_index_queries(store, "linear", [], 5, zoo.distance)
    lin = time_index_queries(store, "linear", [0.3, 2.2, 4.1], 5, zoo.distance)
    assert lin.mean_dist_evals == len(store)
    assert lin.mean_query_ms > 0


def test_vptree_evaluations_under_a_fifth():
    zoo, store = _fig2_store(50_000, 1)
    qs = np.random.default_rng(2).uniform(0, 5, 50).tolist()
    vp = time_index_queries(store, "vptree", qs, 100, zoo.distance)
    assert vp.mean_dist_evals < 0.2 * len(store)


def test_experiment_settings_validation():
    with pytest.raises(ValueError):
        ExperimentSpec("fig2", [], [5])
    with pytest.raises(ValueError):
        ExperimentSpec("fig2", [100], [5], test_samples=0)
    with pytest.raises(ValueError):
        ExperimentSpec("nope", [100], [5])
    with pytest.raises(ValueError):
        ExperimentSpec("fig2", [100], [5], index="kd")
    assert ExperimentSpec("fig2", [100], [5]).sampler == "mh"
    assert ExperimentSpec("social", [100], [5]).sampler == "importance"


def test_single_cell_cardinality_and_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    spec = dict(model="fig2", n_values=[500], k_values=[5], test_samples=40, seed=3)
    run_experiment(ExperimentSpec(**spec, out=str(a)))
    run_experiment(ExperimentSpec(**spec, out=str(b)))
    assert a.read_bytes() == b.read_bytes()
    rows = list(csv.reader(io.StringIO(a.read_text())))
    assert tuple(rows[0]) == CSV_HEADER
    data = [r for r in rows[1:] if r[1]]
    baselines = [r for r in rows[1:] if not r[1]]
    assert len(data) == 1 and len(baselines) == 2


def test_unwritable_output():
    with pytest.raises(OSError):
        run_experiment(ExperimentSpec("fig2", [100], [5], 5, out="/nonexistent/dir/x.csv"))


def test_rows_bounded_by_worst_static():
    report = run_experiment(ExperimentSpec("fig2", [300, 3000], [1, 5, 25], 60, seed=4))
    worst = max(report.static_losses.values())
    for row in report.rows:
        assert 0 <= row.mean_loss <= worst + 1e-12


def test_fig2_knn_beats_static():
    report = run_experiment(ExperimentSpec("fig2", [50_000], [25], 100, seed=0))
    assert report.loss(50_000, 25) < report.best_static()


def test_cli_run_to_stdout(capsys):
    assert main(["run", "--model", "fig2", "--n", "300", "--k", "3,5", "--test-samples", "10"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == ",".join(CSV_HEADER)
    assert len(out) == 1 + 2 + 2


def test_cli_validation_failure(capsys):
    assert main(["run", "--model", "fig2", "--n", "300", "--k", "0"]) == 2
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit) as info:
        main(["run", "--model", "bogus", "--n", "1", "--k", "1"])
    assert info.value.code != 0


def test_cli_config_file(tmp_path):
    ini = tmp_path / "m.ini"
    ini.write_text("[fig2]\nuniform-lo = 1\nuniform-hi = 2\n")
    out = tmp_path / "o.csv"
    assert main(["run", "--model", "fig2", "--n", "200", "--k", "5", "--test-samples", "5",
                 "--config", str(ini), "--out", str(out)]) == 0
    assert out.read_text().startswith("model,")


def test_cli_bench_index(tmp_path):
    out = tmp_path / "bench.csv"
    assert main(["bench-index", "--n", "1000", "--k", "10", "--queries", "20", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert {r["index"] for r in rows} == {"linear", "vptree"}
    assert main(["bench-index", "--n", "1000", "--k", "10", "--queries", "0"]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "dtpp", "run", "--model", "fig2", "--n", "100",
                           "--k", "3", "--test-samples", "3"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("model,n,k,index")
