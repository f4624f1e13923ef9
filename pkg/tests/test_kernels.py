import types

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multitrend.errors import DegenerateWindow, EmptyTable
from multitrend.kernels import (
    EPANECHNIKOV,
    KERNELS,
    build_weight_table,
    epanechnikov,
    get_kernel,
    local_linear_weights,
    moment_sum,
)
from multitrend.multiscale import LocationScaleGrid, default_grid
from tests.oracles import dense_weights


def test_epanechnikov_values():
    assert epanechnikov(0.0) == 0.75
    assert epanechnikov(1.0) == 0.0
    assert epanechnikov(-1.5) == 0.0
    assert epanechnikov(0.5) == pytest.approx(0.5625)
    assert np.isnan(epanechnikov(np.nan))


@pytest.mark.parametrize("kernel", list(KERNELS.values()), ids=list(KERNELS))
def test_registered_kernels_satisfy_shape_conditions(kernel):
    v = np.linspace(-1, 1, 20001)
    k = kernel(v)
    assert np.all(k >= 0)
    np.testing.assert_allclose(k, kernel(-v))
    assert np.trapezoid(k, v) == pytest.approx(1.0, abs=1e-6)
    # Lipschitz on a fine grid, including the support edges
    x = np.linspace(-1.2, 1.2, 24001)
    slopes = np.abs(np.diff(kernel(x))) / np.diff(x)
    assert slopes.max() < 10
    assert kernel(1.0 + 1e-9) == 0.0


def test_get_kernel():
    assert get_kernel("epanechnikov") is EPANECHNIKOV
    with pytest.raises(ValueError):
        get_kernel("gaussian")


def test_weights_small_example_against_direct_evaluation():
    # T=10, u=0.5, h=0.3: oracle evaluates Lambda and the normalization directly
    w = local_linear_weights(10, 0.5, 0.3).weights
    np.testing.assert_allclose(w, dense_weights(10, 0.5, 0.3), atol=1e-12)
    assert w.shape == (10,)


def test_moment_sums_match_definition():
    T, u, h = 50, 0.4, 0.1
    v = (np.arange(1, T + 1) / T - u) / h
    k = np.array([max(0.0, 0.75 * (1 - x * x)) for x in v])
    for ell in (0, 1, 2):
        assert moment_sum(T, u, h, ell) == pytest.approx(np.sum(k * v**ell) / (T * h), abs=1e-14)


@settings(max_examples=300, deadline=None)
@given(T=st.integers(20, 400), k=st.floats(0.0, 1.0), h=st.floats(0.01, 0.49))
def test_weights_sum_zero_and_unit_norm(T, k, h):
    t0 = max(1, int(round(k * T)))
    u = t0 / T
    try:
        w = local_linear_weights(T, u, h).weights
    except DegenerateWindow:
        return
    assert abs(w.sum()) < 1e-10
    assert abs((w * w).sum() - 1.0) < 1e-12


@settings(max_examples=100, deadline=None)
@given(T=st.integers(20, 200), k=st.integers(1, 200), h=st.floats(0.02, 0.49))
def test_weights_agree_with_dense_oracle(T, k, h):
    u = min(k, T) / T
    try:
        w = local_linear_weights(T, u, h).weights
    except DegenerateWindow:
        return
    np.testing.assert_allclose(w, dense_weights(T, u, h), atol=1e-12)


@pytest.mark.parametrize("T,t0,hT", [(100, 50, 13), (200, 100, 38), (500, 250, 8), (60, 30, 29)])
def test_interior_sign_property(T, t0, hT):
    u, h = t0 / T, hT / T
    assert u - h >= 0 and u + h <= 1
    w = local_linear_weights(T, u, h).weights
    v = (np.arange(1, T + 1) / T - u) / h
    assert np.all(w * v >= -1e-15)


def test_shift_invariance_and_unit_variance(rng):
    w = local_linear_weights(200, 0.3, 0.1).weights
    y = rng.standard_normal(200)
    assert w @ (y + 7.5) == pytest.approx(w @ y, abs=1e-12)
    # Var(sum w eps) = sigma^2 sum w^2 = sigma^2
    assert (w * w).sum() * 2.5 == pytest.approx(2.5)


def test_degenerate_windows_raise():
    with pytest.raises(DegenerateWindow):
        local_linear_weights(100, 0.5, 0.005)  # window holds only t = 50
    with pytest.raises(DegenerateWindow):
        local_linear_weights(100, 0.5, 0.5)
    with pytest.raises(DegenerateWindow):
        local_linear_weights(100, 0.5, 0.0)


def test_table_for_default_grid_has_one_entry_per_point():
    grid = default_grid(500)
    table = build_weight_table(500, grid)
    assert len(table) + len(table.dropped) == len(grid) == 2600
    assert len(table.dropped) == 0
    # point 17 reproduces the standalone weights
    i = 17
    np.testing.assert_allclose(
        table.vector(i).weights, local_linear_weights(500, grid.u[i], grid.h[i]).weights, atol=0
    )


def test_single_point_table():
    grid = LocationScaleGrid.from_points(100, [(0.5, 0.25)])
    assert len(build_weight_table(100, grid)) == 1


def test_off_support_point_gives_empty_table():
    grid = types.SimpleNamespace(u=np.array([5.0]), h=np.array([0.25]))
    with pytest.raises(EmptyTable):
        build_weight_table(100, grid)


def test_degenerate_point_is_dropped_and_reported():
    grid = types.SimpleNamespace(u=np.array([0.5, 0.5]), h=np.array([0.005, 0.2]))
    table = build_weight_table(100, grid)
    assert len(table) == 1
    assert table.point_index.tolist() == [1]
    assert table.dropped[0][:2] == (0.5, 0.005)


def test_table_arrays_are_read_only():
    table = build_weight_table(100, default_grid(100))
    with pytest.raises(ValueError):
        table.values[0] = 1.0


def test_subset_keeps_selected_points():
    table = build_weight_table(100, default_grid(100))
    mask = table.h > 0.2
    sub = table.subset(mask)
    assert len(sub) == int(mask.sum())
    y = np.arange(100.0) ** 1.5
    np.testing.assert_allclose(sub.apply(y), table.apply(y)[mask])
