import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gamma

from steepwell.radial import (
    GridMismatchError,
    RadialField,
    apply_laplacian,
    assemble_bilaplacian_form,
    ball_volume,
    build_grid,
    inner_l2,
    laplacian_values,
    lp_norm,
    lp_power,
    sphere_area,
)

seeds = st.integers(0, 2**32 - 1)


def test_sphere_area_closed_forms():
    assert sphere_area(3) == pytest.approx(4 * math.pi, rel=1e-14)
    assert sphere_area(5) == pytest.approx(8 * math.pi**2 / 3, rel=1e-14)
    for n in (6, 8, 9):
        assert sphere_area(n) == pytest.approx(2 * math.pi ** (n / 2) / gamma(n / 2), rel=1e-13)


def test_grid_layout():
    g = build_grid(5, 2.0, 99)
    assert g.h == pytest.approx(0.02)
    assert g.nodes[0] == pytest.approx(g.h) and g.nodes[-1] == pytest.approx(2.0 - g.h)
    assert np.allclose(g.weights, sphere_area(5) * g.nodes**4 * g.h)


@pytest.mark.parametrize("args", [(4, 1.0, 32), (5, 0.0, 32), (5, 1.0, 4), (5.5, 1.0, 32)])
def test_build_grid_rejects(args):
    with pytest.raises(ValueError):
        build_grid(*args)


def test_weights_sum_to_ball_volume_first_order():
    # the right-endpoint sum misses half a cell at r_max: error O(h)
    errs = []
    for m in (127, 255, 511):
        g = build_grid(5, 1.0, m)
        errs.append(abs(g.weights.sum() - ball_volume(5)))
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(2.0, rel=0.05)


def test_field_validation():
    g = build_grid(5, 1.0, 16)
    with pytest.raises(ValueError):
        RadialField(g, np.zeros(15))
    with pytest.raises(ValueError):
        RadialField(g, np.full(16, np.nan))
    other = build_grid(5, 1.0, 17)
    with pytest.raises(GridMismatchError):
        apply_laplacian(g, RadialField(other, np.zeros(17)))


def test_field_arithmetic():
    g = build_grid(6, 1.0, 16)
    u = g.sample(lambda r: 1 - r)
    v = g.sample(lambda r: r * r)
    assert np.allclose((u + v).values, 1 - g.nodes + g.nodes**2)
    assert np.allclose((2.0 * u - v).values, 2 - 2 * g.nodes - g.nodes**2)
    assert np.allclose((-u).values, g.nodes - 1)


def test_laplacian_exact_on_quadratic_interior():
    # Delta r^2 = 2N; exact except at the last node, which sees u(r_max) = 0
    for n in (5, 8):
        g = build_grid(n, 1.0, 64)
        lap = laplacian_values(g, g.nodes**2)
        assert np.allclose(lap[:-1], 2 * n, rtol=1e-11)


def test_laplacian_second_order_on_smooth_profile():
    # u = (1 - r^2)^2, Delta u = -4N + 4(N + 2) r^2
    n = 5
    errs = []
    for m in (63, 127, 255):
        g = build_grid(n, 1.0, m)
        exact = -4 * n + 4 * (n + 2) * g.nodes**2
        lap = laplacian_values(g, (1 - g.nodes**2) ** 2)
        errs.append(math.sqrt(np.sum(g.weights * (lap - exact) ** 2)))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(1.7 < o < 2.3 for o in orders), orders


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_laplacian_self_adjoint(seed):
    g = build_grid(7, 2.0, 40)
    rng = np.random.default_rng(seed)
    u, v = rng.standard_normal((2, g.m))
    lhs = inner_l2(g, laplacian_values(g, u), v)
    rhs = inner_l2(g, u, laplacian_values(g, v))
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10 * (abs(lhs) + 1))


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(-50, 50))
def test_band_matches_laplacian_form(seed, c):
    g = build_grid(5, 3.0, 30)
    rng = np.random.default_rng(seed)
    u, v = rng.standard_normal((2, g.m))
    form = assemble_bilaplacian_form(g, c)
    lu, lv = laplacian_values(g, u), laplacian_values(g, v)
    direct = float(np.sum(g.weights * (lu * lv + c * u * v)))
    banded = float(u @ form.matvec(v))
    scale = np.abs(form.dense()).max() * np.linalg.norm(u) * np.linalg.norm(v)
    assert abs(direct - banded) <= 1e-11 * scale
    assert abs(form(u, v) - direct) <= 1e-11 * scale
    assert np.allclose(form.dense(), form.dense().T)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_scaled_form_is_congruent(seed):
    g = build_grid(5, 1.0, 24)
    rng = np.random.default_rng(seed)
    c = rng.uniform(-10, 10, g.m)
    form = assemble_bilaplacian_form(g, c)
    sf = form.scaled()
    s = g.sqrt_weights
    dense_s = np.diag(1 / s) @ form.dense() @ np.diag(1 / s)
    y = rng.standard_normal(g.m)
    assert np.allclose(sf.apply(y), dense_s @ y, rtol=1e-9, atol=1e-9 * np.abs(dense_s).max())
    band = sf.band(2.5)
    assert np.allclose(band[2], np.diag(dense_s) + 2.5, rtol=1e-9)


def test_lp_norm():
    g = build_grid(5, 1.0, 32)
    u = np.ones(g.m)
    assert lp_norm(g, u, 2) == pytest.approx(math.sqrt(g.weights.sum()))
    assert lp_power(g, 2 * u, 3) == pytest.approx(8 * g.weights.sum())
    with pytest.raises(ValueError):
        lp_norm(g, u, 0.5)
