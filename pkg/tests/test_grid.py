import math
import struct

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
    decode_shl1,
    encode_shl1,
    filter_multiplier,
    from_spectrum,
    load_shl1,
    make_eta,
    make_filter,
    make_grid,
    modulate,
    phi_hat,
    save_shl1,
    to_spectrum,
    translate,
)
from shiftlab.verify import random_band_limited


# --- make_grid ------------------------------------------------------------------


def test_make_grid_spacing():
    assert make_grid(1, 8).h == 0.125
    assert make_grid(4, 4096).h == 2.0**-10


@pytest.mark.parametrize("L,N", [(3, 8), (4, 12), (0.5, 8), (8, 4), (1, 1)])
def test_make_grid_rejects(L, N):
    with pytest.raises(DomainError):
        make_grid(L, N)


@given(st.integers(0, 6), st.integers(1, 14))
def test_grid_points_exact(a, extra):
    g = make_grid(2.0**a, 2 ** (a + extra))
    assert g.h * g.N == g.L
    assert g.points()[-1] == (g.N - 1) * g.h


def test_grid_function_shape_checked():
    with pytest.raises(DomainError):
        GridFunction(make_grid(1, 8), np.zeros(7))


def test_grid_function_is_read_only():
    f = GridFunction(make_grid(1, 8), np.ones(8))
    with pytest.raises(ValueError):
        f.values[0] = 2


# --- spectrum ---------------------------------------------------------------------


def test_constant_spectrum():
    g = make_grid(1, 8)
    c = to_spectrum(GridFunction(g, np.ones(8))).coefficients
    expect = np.zeros(8)
    expect[4] = 1.0  # xi = 0 sits at index N/2
    np.testing.assert_allclose(c, expect, atol=1e-15)


def test_tone_lands_at_negative_index():
    # with the exp(+2 pi i x xi) analysis sign a tone at 3 appears at xi = -3
    g = make_grid(1, 16)
    s = to_spectrum(GridFunction(g, np.exp(2j * np.pi * 3 * g.points())))
    j = s.frequencies()[np.argmax(np.abs(s.coefficients))]
    assert j == -3
    assert abs(np.abs(s.coefficients).max() - 1) < 1e-14


def test_spectrum_matches_direct_dft(rng):
    g = make_grid(4, 256)
    f = GridFunction(g, rng.normal(size=256) + 1j * rng.normal(size=256))
    np.testing.assert_allclose(
        to_spectrum(f).coefficients, oracles.direct_dft(f.values, g.L), rtol=0, atol=1e-12 * 4
    )


@given(st.integers(0, 2**31 - 1))
def test_spectrum_round_trip(seed):
    rng = np.random.default_rng(seed)
    g = make_grid(2, 128)
    f = GridFunction(g, rng.normal(size=128) + 1j * rng.normal(size=128))
    back = from_spectrum(to_spectrum(f)).values
    assert np.max(np.abs(back - f.values)) <= 1e-12 * np.max(np.abs(f.values))


def test_parseval_for_random_function(rng):
    g = make_grid(4, 512)
    f = random_band_limited(g, rng)
    lhs = g.h * np.sum(np.abs(f.values) ** 2)
    rhs = np.sum(np.abs(to_spectrum(f).coefficients) ** 2) / g.L
    assert abs(lhs - rhs) / rhs < 1e-10


# --- eta --------------------------------------------------------------------------


def test_eta_properties():
    g = make_grid(64, 4096)
    eta = make_eta(g, 0.5, 0.25)
    assert eta.values.real.min() >= -1e-12
    assert np.max(np.abs(eta.values.imag)) == 0
    assert abs(eta.values[0].real - 1) < 1e-12
    assert band_support_check(eta, (-0.5, 0.5)).passed
    assert eta.meta["floor"] > 0


def test_eta_parseval():
    g = make_grid(64, 4096)
    eta = make_eta(g, 0.5, 0.25)
    lhs = g.h * np.sum(eta.values.real)
    # |g|^2 integrates to L times the sum of squared tone coefficients
    rhs = g.L * np.sum(np.abs(eta.meta["g_tones"]) ** 2)
    assert abs(lhs - rhs) / rhs < 1e-10


def test_eta_narrow_band_fails_check():
    g = make_grid(64, 4096)
    eta = make_eta(g, 0.5, 0.25)
    check = band_support_check(eta, (-0.125, 0.125))
    assert not check.passed
    assert check.leakage > 1e-3


def test_eta_rejects_unattainable_floor():
    g = make_grid(64, 1024)
    with pytest.raises(DomainError, match="attainable radius"):
        make_eta(g, 2.0, 20.0)


def test_eta_rejects_too_narrow_band():
    with pytest.raises(DomainError):
        make_eta(make_grid(4, 256), 0.25, 0.25)


# --- filters --------------------------------------------------------------------


def test_phi_hat_profile():
    xi = np.linspace(-3, 3, 601)
    m = phi_hat(xi)
    assert np.all(m[np.abs(xi) <= 1] == 1)
    assert np.all(m[np.abs(xi) >= 2] == 0)
    assert np.all((m >= 0) & (m <= 1))


def test_partition_of_unity():
    g = make_grid(8, 4096)
    nu = np.abs(g.tone_frequencies())
    lo, hi = -2, 7
    total = sum(filter_multiplier(FilterKind.Psi, k, nu) for k in range(lo, hi + 1))
    band = (nu >= 2.0**lo) & (nu <= 2.0 ** (hi - 1))
    assert np.max(np.abs(total[band] - 1)) <= 1e-12


@pytest.mark.parametrize("k", range(-3, 8))
def test_psitilde_is_one_on_annulus(k):
    xi = np.linspace(2.0 ** (k - 1), 2.0 ** (k + 1), 2001)
    m = filter_multiplier(FilterKind.PsiTilde, k, np.concatenate([xi, -xi]))
    assert np.max(np.abs(m - 1)) <= 1e-12


@pytest.mark.parametrize("k", range(-3, 6))
def test_psitilde_is_three_term_sum(k):
    xi = np.linspace(-2.0 ** (k + 3), 2.0 ** (k + 3), 4001)
    three = sum(filter_multiplier(FilterKind.Psi, k + d, xi) for d in (-1, 0, 1))
    np.testing.assert_allclose(filter_multiplier(FilterKind.PsiTilde, k, xi), three, atol=1e-15)


@pytest.mark.parametrize("k", range(-4, 8))
def test_psi_vanishes_at_zero(k):
    assert filter_multiplier(FilterKind.Psi, k, 0.0) == 0.0


def test_make_filter_nyquist():
    g = make_grid(4, 256)  # Nyquist 32
    make_filter(g, FilterKind.Phi, 2)
    with pytest.raises(DomainError, match="2\\^\\(k\\+2\\)"):
        make_filter(g, FilterKind.Phi, 3)


def test_make_filter_band_check():
    g = make_grid(4, 1024)
    for kind in FilterKind:
        f = make_filter(g, kind, 2)
        assert band_support_check(f, f.band).passed


def test_phi_filter_has_unit_mass():
    g = make_grid(4, 1024)
    f = make_filter(g, FilterKind.Phi, 1)
    assert abs(g.h * f.values.sum() - 1) < 1e-12


# --- modulation and translation ------------------------------------------------


def test_modulate_moves_band():
    g = make_grid(64, 4096)
    eta = make_eta(g, 0.5, 0.25)
    m = modulate(eta, 8.0)
    assert m.band == (7.5, 8.5)
    assert band_support_check(m, (7.5, 8.5)).passed
    np.testing.assert_allclose(np.abs(m.values), np.abs(eta.values), rtol=1e-15)


def test_modulate_inverse(band_limited):
    a = 13 / band_limited.grid.L
    back = modulate(modulate(band_limited, a), -a)
    assert np.max(np.abs(back.values - band_limited.values)) <= 1e-14 * np.max(np.abs(band_limited.values)) * 10


def test_modulate_rejects_off_lattice(band_limited):
    with pytest.raises(DomainError):
        modulate(band_limited, 0.3 / band_limited.grid.L)


def test_translate_identities(band_limited):
    f = band_limited
    assert np.array_equal(translate(f, 0).values, f.values)
    assert np.array_equal(translate(f, f.grid.h).values, np.roll(f.values, 1))
    a = 0.3711
    back = translate(translate(f, a), -a).values
    assert np.max(np.abs(back - f.values)) <= 1e-12 * np.max(np.abs(f.values))


def test_translate_is_exact_for_tones():
    g = make_grid(4, 256)
    x = g.points()
    f = GridFunction(g, np.exp(2j * np.pi * 5 * x))
    a = 0.123
    np.testing.assert_allclose(translate(f, a).values, np.exp(2j * np.pi * 5 * (x - a)), atol=1e-12)


def test_translate_keeps_real_functions_real():
    g = make_grid(4, 256)
    f = GridFunction(g, np.cos(2 * np.pi * 3 * g.points()))
    assert not np.any(translate(f, 0.37).values.imag)


@given(st.floats(-3, 3), st.integers(-20, 20), st.integers(0, 2**31 - 1))
def test_modulation_translation_commute(a, n, seed):
    rng = np.random.default_rng(seed)
    f = random_band_limited(make_grid(8, 512), rng, (-4, 4))
    xi0 = n / f.grid.L
    lhs = modulate(translate(f, a), xi0).values
    rhs = np.exp(2j * np.pi * xi0 * a) * translate(modulate(f, xi0), a).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs)) * 10


# --- convolution --------------------------------------------------------------------


def test_convolution_identity_and_symmetry(rng):
    g = make_grid(2, 256)
    f = GridFunction(g, rng.normal(size=256) + 1j * rng.normal(size=256))
    k = GridFunction(g, rng.normal(size=256))
    delta = np.zeros(256)
    delta[0] = 1 / g.h
    np.testing.assert_allclose(convolve(f, GridFunction(g, delta)).values, f.values, atol=1e-12)
    np.testing.assert_allclose(convolve(f, k).values, convolve(k, f).values, atol=1e-12)


def test_convolution_matches_direct_sum(rng):
    g = make_grid(2, 512)
    f = GridFunction(g, rng.normal(size=512) + 1j * rng.normal(size=512))
    k = GridFunction(g, rng.normal(size=512))
    direct = oracles.direct_convolution(f.values, k.values, g.h)
    fast = convolve(f, k).values
    assert np.max(np.abs(fast - direct)) / np.max(np.abs(direct)) < 1e-9


def test_convolution_grid_mismatch():
    with pytest.raises(DomainError):
        convolve(GridFunction(make_grid(1, 8), np.ones(8)), GridFunction(make_grid(2, 8), np.ones(8)))


# --- band check -------------------------------------------------------------------


def test_pure_tone_band_check():
    g = make_grid(1, 64)
    f = GridFunction(g, np.exp(2j * np.pi * 4 * g.points()))
    check = band_support_check(f, (3, 5))
    # only FFT roundoff leaks
    assert check.passed and check.leakage < 1e-28


def test_zero_function_passes():
    g = make_grid(1, 64)
    check = band_support_check(GridFunction(g, np.zeros(64)), (0, 0))
    assert check.passed and check.leakage == 0


# --- SHL1 ---------------------------------------------------------------------------


def test_shl1_layout(band_limited):
    buf = encode_shl1(band_limited)
    magic, L, N, lo, hi = struct.unpack_from("<4sdQdd", buf)
    assert (magic, L, N, (lo, hi)) == (b"SHL1", 8.0, 1024, band_limited.band)
    assert len(buf) == 36 + 16 * 1024
    re, im = struct.unpack_from("<dd", buf, 36)
    assert complex(re, im) == band_limited.values[0]


def test_shl1_round_trip(tmp_path, band_limited):
    plain = GridFunction(band_limited.grid, band_limited.values)
    path = tmp_path / "f.shl1"
    save_shl1(path, [band_limited, plain])
    a, b = load_shl1(path)
    assert np.array_equal(a.values, band_limited.values) and a.band == band_limited.band
    assert b.band is None
    _, L, N, lo, hi = struct.unpack_from("<4sdQdd", path.read_bytes(), 36 + 16 * 1024)
    assert math.isnan(lo) and math.isnan(hi)


def test_shl1_bad_magic():
    with pytest.raises(DomainError, match="magic"):
        decode_shl1(b"XXXX" + bytes(32) + bytes(16 * 8))
