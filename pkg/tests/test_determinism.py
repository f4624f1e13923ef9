"""Results must not depend on the number of workers."""

import numpy as np

from multitrend.cli import main
from multitrend.inference import FixedLrv, run_test
from multitrend.gauss_quantile import QuantileConfig
from multitrend.simulate import parse_spec, run_experiment

SPEC = """
[experiment]
kind = size_power
T = 80
S = 120
seed = 17
alpha = 0.05
n_sims = 150
lrv = ar

[noise:a]
a = 0.25

[trend:null]
kind = constant
"""


def test_experiment_csv_identical_across_workers():
    spec = parse_spec(SPEC)
    one = run_experiment(spec, workers=1).to_csv()
    eight = run_experiment(spec, workers=8).to_csv()
    assert one == eight


def test_cli_simulate_identical_across_workers(tmp_path):
    spec = tmp_path / "d.spec"
    spec.write_text(SPEC)
    for w in ("1", "8"):
        assert main(["simulate", str(spec), "--workers", w, "--out", str(tmp_path / w)]) == 0
    assert (tmp_path / "1" / "d.csv").read_text() == (tmp_path / "8" / "d.csv").read_text()


def test_run_test_identical_across_workers(rng):
    Y = rng.standard_normal(100)
    q = QuantileConfig(n_sims=300, seed=8, alpha_list=(0.05,))
    a = run_test(Y, 0.05, None, FixedLrv(1.0), q, workers=1)
    b = run_test(Y, 0.05, None, FixedLrv(1.0), q, workers=8)
    assert a.critical_value == b.critical_value
    np.testing.assert_array_equal(a.points.psi, b.points.psi)
