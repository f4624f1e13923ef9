from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multitrend.errors import ConfigError
from multitrend.gauss_quantile import CriticalValues, QuantileConfig, simulate_critical_values
from multitrend.inference import (
    ArLrv,
    FixedLrv,
    HacLrv,
    Interval,
    TestOutcome,
    estimate_lrv,
    interval_union,
    map_intervals_to_calendar,
    minimal_intervals,
    run_test,
)
from multitrend.kernels import build_weight_table
from multitrend.lrv import HacConfig
from multitrend.multiscale import LocationScaleGrid, default_grid, multiscale_statistic
from tests.oracles import brute_minimal, brute_sets, brute_statistics, frac_interval


def fixed_critical(q, alpha=0.05):
    return CriticalValues(np.array([q]), {alpha: q})


def bump_series(T, rng, height=3.0, noise=1.0):
    t = np.arange(1, T + 1) / T
    return height * np.maximum(0, 1 - ((t - 0.5) / 0.1) ** 2) + noise * rng.standard_normal(T)


@pytest.mark.parametrize("q", [-0.5, 0.0, 0.4, 1.0])
def test_rejection_sets_match_brute_force(q, rng):
    T = 80
    grid = default_grid(T)
    Y = bump_series(T, rng)
    sigma2 = 1.3
    out = run_test(Y, 0.05, grid, FixedLrv(sigma2), critical=fixed_critical(q))
    pts = list(zip(grid.u, grid.h))
    rows, Psi = brute_statistics(Y, pts, np.sqrt(sigma2))
    assert out.Psi == pytest.approx(Psi, abs=1e-12)
    both, inc, dec = brute_sets(rows, q, np.sqrt(sigma2))
    for kind, ref in (("both", both), ("increase", inc), ("decrease", dec)):
        got = {(iv.lo, iv.hi) for iv in out.sets[kind]}
        assert got == {frac_interval(u, h, T) for u, h in ref}
        assert len(out.sets[kind]) == len(ref)


def test_signed_sets_restricted_to_unit_interval(rng):
    T = 100
    Y = 5 * np.arange(T) / T + 0.1 * rng.standard_normal(T)
    out = run_test(Y, 0.05, default_grid(T), FixedLrv(0.01), critical=fixed_critical(0.0))
    assert all(iv.inside_unit for iv in out.sets["increase"])
    assert any(not iv.inside_unit for iv in out.sets["both"])
    assert len(out.sets["decrease"]) == 0


def _interval(a, b):
    return Interval(0.0, 0.0, Fraction(a), Fraction(b), 0.0)


spans = st.lists(
    st.tuples(st.integers(-5, 30), st.integers(0, 12)).map(lambda p: (p[0], p[0] + p[1])),
    max_size=40,
)


@settings(max_examples=300, deadline=None)
@given(spans)
def test_minimal_intervals_match_quadratic_oracle(pairs):
    items = [_interval(Fraction(a, 20), Fraction(b, 20)) for a, b in pairs]
    got = [(iv.lo, iv.hi) for iv in minimal_intervals(items)]
    ref = brute_minimal([(iv.lo, iv.hi) for iv in items])
    assert got == ref


def test_minimal_intervals_small_example():
    items = [_interval("1/10", "5/10"), _interval("2/10", "4/10"), _interval("3/10", "9/10"),
             _interval("6/10", "7/10"), _interval("6/10", "7/10")]
    got = [(iv.lo, iv.hi) for iv in minimal_intervals(items)]
    assert got == [(Fraction(1, 5), Fraction(2, 5)), (Fraction(3, 5), Fraction(7, 10)),
                   (Fraction(3, 5), Fraction(7, 10))]


def test_minimal_of_empty_set():
    assert minimal_intervals([]) == []


def test_interval_union():
    items = [_interval("0", "1/4"), _interval("1/5", "1/2"), _interval("3/4", "1")]
    assert interval_union(items) == [(Fraction(0), Fraction(1, 2)), (Fraction(3, 4), Fraction(1))]


def test_calendar_mapping():
    ivs = [_interval("1/10", "3/10"), _interval("-1/20", "1/20"), _interval("1001/2000", "1009/2000"),
           _interval("19/20", "11/10")]
    got = map_intervals_to_calendar(ivs, 1900, 100)
    assert got == [(1910, 1930), (1900, 1905), None, (1995, 1999)]


def test_exact_endpoints_avoid_rounding():
    iv = Interval.from_point(0.3, 0.1, 1.0, 10)
    assert (iv.lo, iv.hi) == (Fraction(1, 5), Fraction(2, 5))
    assert iv.contains(Interval.from_point(0.3, 0.1, 1.0, 10))


def test_outcome_json_round_trip(rng):
    Y = bump_series(100, rng)
    out = run_test(Y, 0.05, default_grid(100), ArLrv(p=1), QuantileConfig(n_sims=200, seed=1, alpha_list=(0.05,)))
    back = TestOutcome.from_json(out.to_json())
    assert back.to_dict() == out.to_dict()
    assert back.summary(1850) == out.summary(1850)
    assert back.point_rows() == out.point_rows()


def test_outcome_rejects_unknown_schema(rng):
    out = run_test(bump_series(60, rng), 0.05, None, FixedLrv(1.0), critical=fixed_critical(1.0))
    d = out.to_dict()
    d["schema_version"] = 99
    with pytest.raises(ConfigError):
        TestOutcome.from_dict(d)


def test_result_invariant_to_constant_shift(rng):
    T = 120
    Y = bump_series(T, rng)
    table = build_weight_table(T, default_grid(T))
    crit = fixed_critical(0.8)
    a = run_test(Y, 0.05, lrv_method=ArLrv(p=1), table=table, critical=crit)
    b = run_test(Y + 1e3, 0.05, lrv_method=ArLrv(p=1), table=table, critical=crit)
    assert a.sigma_hat2 == pytest.approx(b.sigma_hat2, rel=1e-8)
    assert a.Psi == pytest.approx(b.Psi, abs=1e-7)
    assert [(iv.lo, iv.hi) for iv in a.minimal["both"]] == [(iv.lo, iv.hi) for iv in b.minimal["both"]]


def test_sign_overlap_flag(rng, caplog):
    Y = rng.standard_normal(60)
    low = run_test(Y, 0.05, None, FixedLrv(1.0), critical=fixed_critical(-3.0))
    assert low.params["sign_overlap_possible"] is True
    assert "may overlap" in caplog.text
    high = run_test(Y, 0.05, None, FixedLrv(1.0), critical=fixed_critical(1.0))
    assert high.params["sign_overlap_possible"] is False
    # with q + lambda > 0 a point cannot be in both signed sets
    inc = {(iv.lo, iv.hi) for iv in high.sets["increase"]}
    assert not inc & {(iv.lo, iv.hi) for iv in high.sets["decrease"]}


def test_estimate_lrv_dispatch(rng):
    Y = rng.standard_normal(300)
    assert estimate_lrv(Y, FixedLrv(2.5))[0] == 2.5
    s, fit, sel = estimate_lrv(Y, ArLrv(p="auto", p_max=3))
    assert fit is not None and set(sel["scores"]) <= {1, 2, 3}
    s, fit, _ = estimate_lrv(Y, HacLrv(HacConfig(q=20, b=5)))
    assert fit is None and s > 0
    with pytest.raises(ConfigError):
        estimate_lrv(Y, "ar")


def test_run_test_rejects_bad_alpha(rng):
    with pytest.raises(ConfigError):
        run_test(rng.standard_normal(50), alpha=1.5)


def test_null_series_rarely_rejects(rng):
    T = 200
    table = build_weight_table(T, default_grid(T))
    out = run_test(rng.standard_normal(T), 0.05, lrv_method=FixedLrv(1.0), table=table,
                   qcfg=QuantileConfig(n_sims=300, seed=2, alpha_list=(0.05,)))
    assert out.critical_value > 0
    grid = LocationScaleGrid.from_points(T, [(0.5, 0.25)])
    assert len(build_weight_table(T, grid)) == 1


def test_null_size_with_known_variance():
    # pure N(0, 1) noise, sigma^2 = 1 known: rate over 200 seeds in the 3-SE band around 0.05
    from multitrend.simulate import NoiseSpec, TrendSpec, gen_series

    T, S = 500, 200
    table = build_weight_table(T, default_grid(T))
    crit = simulate_critical_values(table, QuantileConfig(n_sims=1000, seed=31, alpha_list=(0.05,)))
    q = crit.quantile(0.05)
    noise, flat = NoiseSpec((0.0,), 1.0), TrendSpec("constant")
    hits = sum(multiscale_statistic(gen_series(T, flat, noise, 77, i), table, 1.0)[1] > q for i in range(S))
    se = (0.05 * 0.95 / S) ** 0.5
    assert abs(hits / S - 0.05) <= 3 * se
