import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shiftlab import oracles
from shiftlab.grid import (
    DomainError,
    FilterKind,
    GridFunction,
    band_support_check,
    convolve,
    make_filter,
    make_grid,
    translate,
)
from shiftlab.operators import (
    DyadicCube,
    LevelFamily,
    ShiftedOpParams,
    decay_kernel,
    dyadic_average,
    hl_maximal,
    kernel_mass,
    lambda_convolve,
    lambda_kernel,
    level_range,
    lp_conv_shifted,
    peetre_shifted,
    shifted_dyadic_maximal,
)
from shiftlab.verify import random_band_limited

seeds = st.integers(0, 2**31 - 1)


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


# --- cubes and params ------------------------------------------------------------


def test_dyadic_cube_geometry():
    g = make_grid(4, 64)
    c = DyadicCube(1, 3)
    c.validate(g)
    assert c.side == 0.5 and c.measure == 0.5
    assert c.sample_range(g) == (24, 32)
    with pytest.raises(DomainError):
        DyadicCube(1, 8).validate(g)
    with pytest.raises(DomainError):
        DyadicCube(-3, 0).validate(g)


def test_cubes_tile_the_torus():
    g = make_grid(4, 64)
    for s in range(-g.a, g.m - g.a + 1):
        count = int(g.L * 2**s)
        spans = [DyadicCube(s, j).sample_range(g) for j in range(count)]
        assert spans[0][0] == 0 and spans[-1][1] == g.N
        assert all(a[1] == b[0] for a, b in zip(spans, spans[1:]))


@pytest.mark.parametrize("sigma,t", [(1.0, 1.0), (0.5, 2.0), (-1, math.inf), (2, 0)])
def test_params_reject(sigma, t):
    with pytest.raises(DomainError):
        ShiftedOpParams(sigma, t, 0, 0.0)


def test_params_accept_sup_with_small_sigma():
    ShiftedOpParams(0.5, math.inf, 0, 1.0)


def test_level_family_indexing(small_grid):
    fs = tuple(GridFunction(small_grid, np.full(small_grid.N, k)) for k in range(3))
    F = LevelFamily(small_grid, -1, fs)
    assert F.k_max == 1 and list(F.levels) == [-1, 0, 1]
    assert F[1].values[0] == 2


# --- dyadic averages --------------------------------------------------------------


@given(st.integers(-2, 6), st.floats(-50, 50))
def test_average_of_constant(k, y):
    g = make_grid(4, 256)
    out = dyadic_average(GridFunction(g, np.full(256, 2.5)), k, y).values
    np.testing.assert_allclose(out, 2.5, rtol=1e-15)


def test_average_of_cube_indicator():
    g = make_grid(4, 256)
    v = np.zeros(256)
    v[64:80] = 1  # cube of side 1/4 at level k = 2
    out = dyadic_average(GridFunction(g, v), 2, 0.0).values.real
    assert np.array_equal(out, v)


def test_average_level_out_of_range():
    g = make_grid(4, 256)
    f = GridFunction(g, np.ones(256))
    with pytest.raises(DomainError):
        dyadic_average(f, 7, 0.0)
    with pytest.raises(DomainError):
        dyadic_average(f, -3, 0.0)


@given(seeds, st.integers(-2, 6), st.floats(-20, 20))
def test_average_matches_direct(seed, k, y):
    rng = np.random.default_rng(seed)
    g = make_grid(4, 256)
    f = GridFunction(g, rng.normal(size=256))
    fast = dyadic_average(f, k, y).values
    slow = oracles.direct_dyadic_average(f.values, g.h, k, y)
    assert np.max(np.abs(fast - slow)) <= 1e-12 * np.max(np.abs(slow))


# --- shifted dyadic maximal ---------------------------------------------------------


def test_maximal_of_constant():
    g = make_grid(2, 128)
    for y in (0.0, 3.7, -11.0):
        for t in (0.5, 1.0, 3.0):
            out = shifted_dyadic_maximal(GridFunction(g, np.ones(128)), y, t).values.real
            np.testing.assert_allclose(out, 1.0, rtol=1e-14)


def test_maximal_of_cube_indicator():
    g = make_grid(2, 128)
    v = np.zeros(128)
    v[32:48] = 1
    out = shifted_dyadic_maximal(GridFunction(g, v), 0.0, 1.0).values.real
    assert np.all(out[32:48] == 1)
    assert np.all(out >= v)


@given(seeds, st.floats(-20, 20))
def test_maximal_matches_direct(seed, y):
    rng = np.random.default_rng(seed)
    g = make_grid(2, 128)
    f = GridFunction(g, rng.normal(size=128))
    fast = shifted_dyadic_maximal(f, y, 1.0).values.real
    slow = oracles.direct_shifted_maximal(f.values, g.h, g.L, y, 1.0)
    assert _rel(fast, slow) <= 1e-12


@given(seeds)
def test_unshifted_maximal_matches_tree(seed):
    rng = np.random.default_rng(seed)
    g = make_grid(2, 256)
    f = GridFunction(g, rng.normal(size=256))
    fast = shifted_dyadic_maximal(f, 0.0, 1.0).values.real
    assert _rel(fast, oracles.tree_dyadic_maximal(f.values)) <= 1e-14


@given(seeds, st.sampled_from([0.25, 0.5, 2.0, 3.0]), st.floats(-20, 20))
def test_dilation_identity(seed, t, y):
    rng = np.random.default_rng(seed)
    g = make_grid(4, 256)
    f = GridFunction(g, rng.normal(size=256) + 1j * rng.normal(size=256))
    a = shifted_dyadic_maximal(f, y, t).values.real
    b = shifted_dyadic_maximal(GridFunction(g, np.abs(f.values) ** t), y, 1.0).values.real ** (1 / t)
    assert _rel(a, b) <= 1e-10


@given(seeds, st.floats(-20, 20))
def test_maximal_sublinear_and_homogeneous(seed, y):
    rng = np.random.default_rng(seed)
    g = make_grid(2, 128)
    f = GridFunction(g, rng.normal(size=128))
    h = GridFunction(g, rng.normal(size=128))
    M = lambda u: shifted_dyadic_maximal(u, y, 1.0).values.real  # noqa: E731
    sum_fh = GridFunction(g, f.values + h.values)
    assert np.all(M(sum_fh) <= (M(f) + M(h)) * (1 + 1e-12))
    scaled = GridFunction(g, -3.0 * f.values)
    np.testing.assert_allclose(M(scaled), 3.0 * M(f), rtol=1e-13)


def test_maximal_rejects_infinite_t(small_grid):
    with pytest.raises(DomainError):
        shifted_dyadic_maximal(GridFunction(small_grid, np.ones(small_grid.N)), 0.0, math.inf)


def test_maximal_records_levels():
    g = make_grid(4, 64)
    out = shifted_dyadic_maximal(GridFunction(g, np.ones(64)), 0.0)
    assert out.meta["levels"] == (level_range(g).start, level_range(g).stop - 1) == (-2, 4)


# --- Hardy-Littlewood baseline ------------------------------------------------------


def test_hl_constant_and_average(rng):
    g = make_grid(2, 128)
    np.testing.assert_allclose(hl_maximal(GridFunction(g, np.full(128, 0.7))).values.real, 0.7, rtol=1e-14)
    f = GridFunction(g, rng.normal(size=128))
    out = hl_maximal(f).values.real
    assert np.all(out >= np.abs(f.values) - 1e-15)
    assert np.all(out >= np.mean(np.abs(f.values)) - 1e-15)


@pytest.mark.parametrize("t", [1.0, 2.0])
def test_hl_within_factor_of_brute_force(rng, t):
    g = make_grid(1, 256)
    f = GridFunction(g, rng.normal(size=256))
    ours = hl_maximal(f, t).values.real
    brute = oracles.brute_hl_maximal(f.values, t)
    assert np.all(ours <= brute * (1 + 1e-12))
    assert np.all(brute <= 2 ** (1 / t) * ours * (1 + 1e-12))


def test_hl_dominates_dyadic(rng):
    g = make_grid(2, 256)
    f = GridFunction(g, rng.normal(size=256))
    assert np.all(hl_maximal(f).values.real >= shifted_dyadic_maximal(f, 0.0).values.real * (1 - 1e-14))


# --- kernels -------------------------------------------------------------------------


@pytest.mark.parametrize("sigma", [1.5, 2.0, 4.0])
def test_lambda_kernel_mass(sigma):
    g = make_grid(64, 8192)
    K = lambda_kernel(g, 0, sigma, 0.0)
    mass = g.h * K.values.real.sum()
    assert abs(mass - 2 / (sigma - 1)) < 1e-10 * (2 / (sigma - 1))


@given(st.integers(-2, 6), st.floats(-200, 200))
def test_lambda_kernel_mass_invariant(j, y):
    g = make_grid(16, 4096)
    mass = g.h * lambda_kernel(g, j, 2.0, y).values.real.sum()
    assert abs(mass - kernel_mass(2.0)) < 1e-9


@pytest.mark.parametrize("j,y", [(0, 3.0), (2, 10.0), (3, -20.0)])
def test_lambda_kernel_peak(j, y):
    g = make_grid(16, 4096)
    K = lambda_kernel(g, j, 3.0, y).values.real
    x = g.points()[np.argmax(K)]
    target = (2.0**-j * y) % g.L
    assert abs(x - target) <= g.h


def test_lambda_kernel_rejects_small_sigma():
    with pytest.raises(DomainError):
        lambda_kernel(make_grid(4, 256), 0, 1.0, 0.0)


def test_decay_kernel_matches_direct_cells():
    g = make_grid(2, 64)
    # steep decay so the oracle's 400-wrap truncation is below tolerance
    fast = decay_kernel(g, 2.0, 0.0, 6.0)
    slow = [oracles.cell_kernel_direct(x, g.h, g.L, 2.0, 6.0, 400) for x in g.centered_points()]
    np.testing.assert_allclose(fast, slow, rtol=1e-10)


def test_lambda_convolve_constant(small_grid):
    out = lambda_convolve(GridFunction(small_grid, np.ones(small_grid.N)), 1, 2.0, 5.0).values
    np.testing.assert_allclose(out.real, kernel_mass(2.0), rtol=1e-9)


def test_lambda_convolve_triangle(rng, small_grid):
    f = GridFunction(small_grid, rng.normal(size=small_grid.N) + 1j * rng.normal(size=small_grid.N))
    a = np.abs(lambda_convolve(f, 2, 2.0, 3.0).values)
    b = lambda_convolve(GridFunction(small_grid, np.abs(f.values)), 2, 2.0, 3.0).values.real
    assert np.all(a <= b * (1 + 1e-12) + 1e-14)


@given(seeds, st.integers(0, 3), st.integers(-60, 60))
def test_lambda_convolve_equals_peetre_t1(seed, j, steps):
    rng = np.random.default_rng(seed)
    g = make_grid(4, 512)
    f = GridFunction(g, rng.normal(size=512))
    y = steps * g.h * 2.0**j  # grid-aligned centre
    a = lambda_convolve(GridFunction(g, np.abs(f.values)), j, 3.0, y).values.real
    b = peetre_shifted(f, ShiftedOpParams(3.0, 1.0, j, y)).values.real
    assert _rel(a, b) <= 1e-10


# --- Peetre ----------------------------------------------------------------------------


@given(seeds, st.integers(0, 3), st.floats(-40, 40), st.sampled_from([0.5, 1.0, 2.0]))
def test_peetre_shift_covariance(seed, k, y, t):
    rng = np.random.default_rng(seed)
    f = random_band_limited(make_grid(8, 1024), rng, (-8, 8))
    a = peetre_shifted(f, ShiftedOpParams(4.0, t, k, y)).values
    b = translate(peetre_shifted(f, ShiftedOpParams(4.0, t, k, 0.0)), 2.0**-k * y).values
    assert _rel(a, b) <= 1e-10


@given(seeds, st.integers(0, 3), st.floats(-40, 40))
def test_peetre_sup_lower_bound(seed, k, y):
    rng = np.random.default_rng(seed)
    g = make_grid(4, 512)
    f = random_band_limited(g, rng, (-8, 8))
    out = peetre_shifted(f, ShiftedOpParams(2.0, math.inf, k, y)).values.real
    s = math.floor(2.0**-k * y / g.h + 0.5)
    assert np.all(out >= np.abs(np.roll(f.values, s)) * (1 - 1e-14))


def test_peetre_t1_matches_direct(rng):
    g = make_grid(2, 256)
    f = GridFunction(g, rng.normal(size=256))
    k, sigma, steps = 1, 6.0, 37
    y = steps * g.h * 2.0**k
    a = peetre_shifted(f, ShiftedOpParams(sigma, 1.0, k, y)).values.real
    b = oracles.direct_peetre_t1(f.values, g.h, g.L, sigma, k, steps, 200)
    assert _rel(a, b) <= 1e-10


@given(seeds, st.sampled_from([0.5, 1.0, 2.0, math.inf]))
def test_peetre_sigma_monotone(seed, t):
    rng = np.random.default_rng(seed)
    f = random_band_limited(make_grid(8, 512), rng, (-4, 4))
    lo = peetre_shifted(f, ShiftedOpParams(3.0, t, 1, 5.0)).values.real
    hi = peetre_shifted(f, ShiftedOpParams(4.0, t, 1, 5.0)).values.real
    assert np.all(hi <= lo * (1 + 1e-12))


@given(seeds, st.floats(-5, 5).filter(lambda v: abs(v) > 1e-3))
def test_peetre_homogeneous(seed, lam):
    rng = np.random.default_rng(seed)
    f = random_band_limited(make_grid(4, 256), rng, (-4, 4))
    for t in (1.0, math.inf):
        p = ShiftedOpParams(2.0, t, 1, 3.0)
        a = peetre_shifted(GridFunction(f.grid, lam * f.values), p).values.real
        b = abs(lam) * peetre_shifted(f, p).values.real
        assert _rel(a, b) <= 1e-12


def test_peetre_sup_upsample_dominates(rng):
    f = random_band_limited(make_grid(4, 256), rng, (-8, 8))
    p = ShiftedOpParams(2.0, math.inf, 1, 0.0)
    assert np.all(peetre_shifted(f, p, upsample=4).values.real >= peetre_shifted(f, p).values.real * (1 - 1e-9))


def test_peetre_ratio_is_y_invariant(rng):
    # sup_x M^t / M^s is unchanged by the shift; off-grid shifts only resample
    f = random_band_limited(make_grid(8, 1024), rng, (-4, 4))
    ratios = []
    for y in (0.0, 3.0, 11.0, 17.5):
        a = peetre_shifted(f, ShiftedOpParams(4.0, 2.0, 2, y)).values.real
        b = peetre_shifted(f, ShiftedOpParams(4.0, 0.5, 2, y)).values.real
        ratios.append(np.max(a / b))
    assert max(ratios) - min(ratios) <= 1e-6 * max(ratios)


# --- shifted LP convolutions ------------------------------------------------------------


@given(seeds, st.sampled_from(list(FilterKind)), st.integers(0, 3), st.floats(-40, 40))
def test_lp_shift_identity(seed, kind, k, y):
    rng = np.random.default_rng(seed)
    f = random_band_limited(make_grid(8, 1024), rng, (-16, 16))
    a = lp_conv_shifted(f, kind, k, y).values
    b = translate(convolve(f, make_filter(f.grid, kind, k)), 2.0**-k * y).values
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(f.values)) * 10


def test_phi_reproduces_low_band(rng):
    g = make_grid(8, 1024)
    psi = make_filter(g, FilterKind.Psi, 1)
    out = lp_conv_shifted(psi, FilterKind.Phi, 3, 0.0).values
    assert np.max(np.abs(out - psi.values)) <= 1e-12 * np.max(np.abs(psi.values))


def test_lp_shift_band_preserved(rng):
    g = make_grid(8, 1024)
    f = random_band_limited(g, rng, (-16, 16))
    out = lp_conv_shifted(f, FilterKind.Psi, 2, 7.3)
    assert out.band == (-8.0, 8.0)
    assert band_support_check(out, out.band).passed


@given(seeds, st.integers(0, 3), st.integers(-200, 200))
def test_lp_dominated_by_peetre_sup(seed, k, steps):
    rng = np.random.default_rng(seed)
    g = make_grid(8, 1024)
    f = random_band_limited(g, rng, (-16, 16))
    y = steps * g.h * 2.0**k  # grid-aligned so the sup's snap is exact
    lhs = np.abs(lp_conv_shifted(f, FilterKind.Psi, k, y).values)
    piece = lp_conv_shifted(f, FilterKind.Psi, k, 0.0)
    rhs = peetre_shifted(piece, ShiftedOpParams(2.0, math.inf, k, y)).values.real
    assert np.all(lhs <= rhs * (1 + 1e-12) + 1e-13)
