import numpy as np
import pytest

from multitrend.errors import ConfigError, NonStationarySpec
from multitrend.simulate import (
    NoiseSpec,
    TrendSpec,
    gen_errors,
    gen_series,
    load_spec,
    parse_spec,
    region_scores,
    run_experiment,
)


def test_zero_innovation_variance_gives_constant_series():
    Y = gen_series(100, TrendSpec("constant", c=2.5), NoiseSpec((0.5,), 0.0), seed=1)
    np.testing.assert_array_equal(Y, np.full(100, 2.5))


def test_ar1_stationary_variance():
    e = gen_errors(100_000, NoiseSpec((0.5,), 1.0), seed=7)
    assert e.var() == pytest.approx(4 / 3, rel=0.02)
    assert np.corrcoef(e[1:], e[:-1])[0, 1] == pytest.approx(0.5, abs=0.02)


def test_ar1_first_value_is_stationary():
    # exact initialization: the first observation already has the stationary variance
    first = np.array([gen_errors(3, NoiseSpec((0.9,), 1.0), seed=3, replicate=i)[0] for i in range(4000)])
    assert first.var() == pytest.approx(1 / (1 - 0.81), rel=0.08)


def test_ar2_autocovariance_matches_simulation():
    noise = NoiseSpec((0.167, 0.178), 0.322)
    e = gen_errors(200_000, noise, seed=5)
    gamma = noise.autocovariance(4)
    emp = [np.mean(e[k:] * e[:e.size - k]) for k in range(4)]
    np.testing.assert_allclose(emp, gamma, rtol=0.05)
    # Yule-Walker identities
    assert gamma[2] == pytest.approx(0.167 * gamma[1] + 0.178 * gamma[0])
    assert gamma[0] == pytest.approx(0.167 * gamma[1] + 0.178 * gamma[2] + 0.322)


def test_noise_spec_validation():
    with pytest.raises(NonStationarySpec):
        NoiseSpec((1.0,), 1.0)
    with pytest.raises(NonStationarySpec):
        NoiseSpec((0.6, 0.5), 1.0)
    with pytest.raises(ConfigError):
        NoiseSpec((0.1, 0.1, 0.1), 1.0)
    with pytest.raises(ConfigError):
        NoiseSpec((0.1,), -1.0)
    assert NoiseSpec((0.5,), 1.0).lrv == pytest.approx(4.0)


def test_trend_shapes():
    bump = TrendSpec("bump")
    np.testing.assert_allclose(bump(np.array([0.3, 0.4, 0.45, 0.5, 0.6, 0.7])), [0, 0, 1.125, 2.0, 0, 0], atol=1e-15)
    assert TrendSpec("linear", 2.0)(np.array([0.5]))[0] == 1.0
    assert TrendSpec("centered_linear", 2.0)(np.array([0.5]))[0] == 0.0
    np.testing.assert_allclose(TrendSpec("broken_line", 2.0)(np.array([0.25, 0.75])), [0.0, 0.5])
    with pytest.raises(ConfigError):
        TrendSpec("sine")


def test_replicates_reproducible_and_distinct():
    noise = NoiseSpec((0.25,), 1.0)
    a = gen_errors(50, noise, seed=1, replicate=3)
    np.testing.assert_array_equal(a, gen_errors(50, noise, seed=1, replicate=3))
    assert not np.array_equal(a, gen_errors(50, noise, seed=1, replicate=4))


SPEC_OK = """
[experiment]
kind = size_power
T = 100
S = 60
seed = 3
alpha = 0.05, 0.1
n_sims = 200
lrv = known

[noise:white]
a = 0.0
nu2 = 1

[trend:null]
kind = constant

[trend:slope]
kind = linear
beta = 4
"""


def test_parse_reports_every_problem():
    bad = """
[experiment]
kind = teleport
T = 10
S = 0
alpha = 1.5
colour = blue

[noise:x]
a = 1.2

[other]
"""
    with pytest.raises(ConfigError) as exc:
        parse_spec(bad)
    msg = str(exc.value)
    for part in ("experiment.kind", "experiment.T", "experiment.S", "experiment.alpha",
                 "experiment.colour", "[noise:x]", "[other]"):
        assert part in msg


def test_parse_requires_experiment_section():
    with pytest.raises(ConfigError):
        parse_spec("[noise:a]\na = 0.1\n")


def test_shipped_specs_load():
    t1 = load_spec("table1")
    assert t1.kind == "size_power" and t1.T == (250, 350, 500)
    assert set(t1.noises) == {"a1=-0.5", "a1=-0.25", "a1=0.25", "a1=0.5", "ar2"}
    assert load_spec("fig2").kind == "region_recovery"


def test_size_power_small_run():
    rep = run_experiment(parse_spec(SPEC_OK))
    assert len(rep.rows) == 4
    rows = {(r["trend"], r["alpha"]): r for r in rep.rows}
    assert rows[("null", 0.05)]["frequency"] <= 0.2
    assert rows[("slope", 0.05)]["frequency"] >= 0.9
    assert rows[("null", 0.1)]["rejections"] >= rows[("null", 0.05)]["rejections"]
    assert rep.to_csv().splitlines()[0].startswith("T,noise,trend,alpha")


def test_lrv_mse_refuses_degenerate_noise():
    spec = parse_spec("""
[experiment]
kind = lrv_mse
T = 100
S = 5

[noise:flat]
a = 0.5
nu2 = 0
""")
    with pytest.raises(NonStationarySpec):
        run_experiment(spec)


def test_region_scores():
    inside, outside = region_scores([(0.45, 0.55), (0.7, 0.8)])
    assert inside == pytest.approx(0.1)
    assert outside == pytest.approx(0.1)


def test_report_write(tmp_path):
    rep = run_experiment(parse_spec(SPEC_OK.replace("S = 60", "S = 5")))
    paths = rep.write(tmp_path)
    assert [p.name for p in paths] == ["size_power.csv", "size_power.json"]
    assert paths[0].read_text() == rep.to_csv()


def test_averaging_reduces_pilot_bias_under_strong_trend():
    # a1 = 0.25, m(u) = 10 sd(e) u, T = 500: averaged estimate within 0.08, pilot bias larger
    spec = parse_spec("""
[experiment]
kind = lrv_mse
T = 500
S = 200
seed = 2019
s_beta = 10

[noise:p25]
a = 0.25
""")
    rep = run_experiment(spec)
    draws = next(iter(rep.extras["draws"].values()))
    bias_avg = abs(np.mean(draws["a_hat"]) - 0.25)
    bias_pilot = abs(np.mean(draws["pilot"]) - 0.25)
    assert bias_avg <= 0.08
    assert bias_pilot > bias_avg


def test_negative_boundary_stays_inside():
    spec = parse_spec("""
[experiment]
kind = lrv_mse
T = 500
S = 200
seed = 2019
s_beta = 1

[noise:m95]
a = -0.95
""")
    draws = next(iter(run_experiment(spec).extras["draws"].values()))
    a_hat = np.array(draws["a_hat"])
    assert np.all((a_hat > -1) & (a_hat < 0))
