"""Named checks for the ``verify`` suite; each returns ``(residual, tolerance)``."""

from __future__ import annotations

import math

import numpy as np

from . import oracles
from .cz import DoubleFamily, cz_decompose, cz_invariants, estimate_Ay
from .grid import (
    FilterKind,
    GridFunction,
    convolve,
    filter_multiplier,
    from_spectrum,
    make_eta,
    make_filter,
    make_grid,
    modulate,
    to_spectrum,
    translate,
)
from .norms import carleson_norm, mixed_norm, sharp_q2, weak_l1_norm
from .operators import (
    LevelFamily,
    ShiftedOpParams,
    dyadic_average,
    lp_conv_shifted,
    peetre_shifted,
    shifted_dyadic_maximal,
)


def random_band_limited(grid, rng, band=None, count=None) -> GridFunction:
    """Random trigonometric polynomial with tones inside ``band``."""
    nu = grid.tone_frequencies()
    if band is None:
        top = grid.N / (8 * grid.L)
        band = (-top, top)
    inside = (nu >= band[0]) & (nu <= band[1])
    coeff = np.zeros(grid.N, dtype=complex)
    idx = np.flatnonzero(inside)
    if count is not None and idx.size > count:
        idx = rng.choice(idx, size=count, replace=False)
    coeff[idx] = rng.normal(size=idx.size) + 1j * rng.normal(size=idx.size)
    return GridFunction(grid, np.fft.ifft(coeff) * grid.N, band)


def corpus(rng, size: int = 10, L: float = 8, N: int = 1024) -> list[GridFunction]:
    grid = make_grid(L, N)
    out = []
    for i in range(size):
        top = 2.0 ** rng.integers(0, 5)
        out.append(random_band_limited(grid, rng, (-top, top)))
    return out


def _rel(a, b, scale=None) -> float:
    """Max deviation relative to ``max |b|`` (or to ``scale`` when given)."""
    a, b = np.asarray(a), np.asarray(b)
    ref = float(np.max(np.abs(b))) if scale is None else float(scale)
    return float(np.max(np.abs(a - b)) / max(ref, 1e-300))


# --- exact identities ---------------------------------------------------------


def check_peetre_shift(rng):
    worst = 0.0
    for f in corpus(rng, 10):
        k = int(rng.integers(0, 4))
        y = float(rng.uniform(-40, 40))
        p = ShiftedOpParams(4.0, float(rng.choice([0.5, 1.0, 2.0, math.inf])), k, y)
        a = peetre_shifted(f, p).values
        shift = 2.0 ** (-k) * y
        if math.isinf(p.t):
            # the supremum form snaps its shift to the grid
            shift = round(shift / f.grid.h) * f.grid.h
        b = translate(peetre_shifted(f, ShiftedOpParams(p.sigma, p.t, k, 0.0)), shift).values
        worst = max(worst, _rel(a, b))
    return worst, 1e-10


def check_lp_shift(rng):
    worst = 0.0
    for f in corpus(rng, 10):
        k = int(rng.integers(0, 4))
        y = float(rng.uniform(-40, 40))
        kind = FilterKind(rng.choice([e.value for e in FilterKind]))
        a = lp_conv_shifted(f, kind, k, y).values
        b = translate(convolve(f, make_filter(f.grid, kind, k)), 2.0 ** (-k) * y).values
        # the filter band may miss f entirely, so measure against f's size
        worst = max(worst, _rel(a, b, np.max(np.abs(f.values))))
    return worst, 1e-10


def check_dilation(rng):
    worst = 0.0
    for f in corpus(rng, 10, L=4, N=256):
        t = float(rng.choice([0.25, 0.5, 2.0, 3.0]))
        y = float(rng.uniform(-20, 20))
        a = shifted_dyadic_maximal(f, y, t).values.real
        powered = GridFunction(f.grid, np.abs(f.values) ** t)
        b = shifted_dyadic_maximal(powered, y, 1.0).values.real ** (1.0 / t)
        worst = max(worst, _rel(a, b))
    return worst, 1e-10


def check_psitilde_annulus(rng):
    worst = 0.0
    for k in range(-3, 8):
        xi = np.linspace(2.0 ** (k - 1), 2.0 ** (k + 1), 1001)
        m = filter_multiplier(FilterKind.PsiTilde, k, np.concatenate([xi, -xi]))
        worst = max(worst, float(np.max(np.abs(m - 1))))
    return worst, 1e-12


def check_partition(rng):
    grid = make_grid(8, 4096)
    nu = np.abs(grid.tone_frequencies())
    lo, hi = -2, 7
    total = sum(filter_multiplier(FilterKind.Psi, k, nu) for k in range(lo, hi + 1))
    mask = (nu >= 2.0**lo) & (nu <= 2.0 ** (hi - 1))
    return float(np.max(np.abs(total[mask] - 1))), 1e-12


def check_modulation_commutes(rng):
    worst = 0.0
    for f in corpus(rng, 10):
        a = float(rng.uniform(-3, 3))
        xi0 = int(rng.integers(-20, 20)) / f.grid.L
        lhs = modulate(translate(f, a), xi0).values
        rhs = np.exp(2j * np.pi * xi0 * a) * translate(modulate(f, xi0), a).values
        worst = max(worst, _rel(lhs, rhs))
    return worst, 1e-12


def check_cz_reconstruction(rng):
    F = _random_double_family(rng)
    dec = cz_decompose(F, 2.0, 1.0, 1.0)
    return cz_invariants(dec, F)["reconstruction_residual"], 1e-12


# --- oracle comparisons ---------------------------------------------------------


def check_dft(rng):
    f = random_band_limited(make_grid(4, 256), rng)
    a = to_spectrum(f).coefficients
    b = oracles.direct_dft(f.values, 4.0)
    back = from_spectrum(to_spectrum(f)).values
    return max(_rel(a, b), _rel(back, f.values)), 1e-12


def check_convolution(rng):
    grid = make_grid(2, 256)
    f = GridFunction(grid, rng.normal(size=256) + 1j * rng.normal(size=256))
    g = GridFunction(grid, rng.normal(size=256))
    return _rel(convolve(f, g).values, oracles.direct_convolution(f.values, g.values, grid.h)), 1e-9


def check_dyadic_average(rng):
    grid = make_grid(4, 256)
    f = GridFunction(grid, rng.normal(size=256))
    worst = 0.0
    for k in range(-2, 7):
        y = float(rng.uniform(-10, 10))
        worst = max(worst, _rel(dyadic_average(f, k, y).values, oracles.direct_dyadic_average(f.values, grid.h, k, y)))
    return worst, 1e-12


def check_shifted_maximal(rng):
    grid = make_grid(2, 128)
    f = GridFunction(grid, rng.normal(size=128))
    y = float(rng.uniform(-10, 10))
    a = shifted_dyadic_maximal(f, y, 1.0).values.real
    b = oracles.direct_shifted_maximal(f.values, grid.h, grid.L, y, 1.0)
    return _rel(a, b), 1e-12


def check_peetre_direct(rng):
    grid = make_grid(2, 128)
    f = GridFunction(grid, rng.normal(size=128))
    k, sigma = 1, 6.0
    shift = int(rng.integers(-50, 50))
    y = shift * grid.h * 2.0**k
    a = peetre_shifted(f, ShiftedOpParams(sigma, 1.0, k, y)).values.real
    b = oracles.direct_peetre_t1(f.values, grid.h, grid.L, sigma, k, shift, 200)
    return _rel(a, b), 1e-10


def _random_level_family(rng, grid, k_min=-1, count=4):
    arrays = [rng.normal(size=grid.N) for _ in range(count)]
    return LevelFamily(grid, k_min, tuple(GridFunction(grid, a) for a in arrays))


def check_carleson(rng):
    grid = make_grid(2, 64)
    F = _random_level_family(rng, grid, -1, 6)
    a = carleson_norm(F, 2.0)
    b = oracles.brute_carleson({k: f.values for k, f in F.items()}, grid.h, 2.0)
    return abs(a - b) / b, 1e-10


def check_sharp_q2(rng):
    grid = make_grid(2, 64)
    F = _random_level_family(rng, grid, 0, 5)
    a = sharp_q2(F, 1.5).values.real
    b = oracles.brute_sharp_q2({k: f.values for k, f in F.items()}, grid.h, 1.5)
    return _rel(a, b), 1e-10


def check_weak(rng):
    grid = make_grid(1, 256)
    f = GridFunction(grid, rng.exponential(size=256))
    a = weak_l1_norm(f)
    b = oracles.threshold_weak_l1(f.values, grid.h)
    return abs(a - b), 0.0


# --- invariants -------------------------------------------------------------------


def check_parseval(rng):
    grid = make_grid(64, 4096)
    eta = make_eta(grid, 0.5, 0.25)
    lhs = grid.h * float(np.sum(eta.values.real))
    b = eta.meta["g_tones"]
    rhs = grid.L * float(np.sum(np.abs(b) ** 2))
    return abs(lhs - rhs) / rhs, 1e-10


def check_sigma_monotone(rng):
    worst = 0.0
    for f in corpus(rng, 5):
        a = peetre_shifted(f, ShiftedOpParams(2.0, 1.0, 1, 3.0)).values.real
        b = peetre_shifted(f, ShiftedOpParams(3.0, 1.0, 1, 3.0)).values.real
        worst = max(worst, float(np.max(b - a)) / float(np.max(a)))
    return max(worst, 0.0), 1e-12


def check_mixed_monotone(rng):
    grid = make_grid(2, 256)
    F = _random_level_family(rng, grid, 0, 5)
    vals = [mixed_norm(F, 2.0, q) for q in (0.5, 1.0, 2.0, 4.0, math.inf)]
    return max(0.0, max(b - a for a, b in zip(vals, vals[1:]))), 0.0


def _random_double_family(rng, N=256):
    grid = make_grid(1, N)
    return DoubleFamily(grid, 0, 0, rng.exponential(size=(3, 2, N)) * (rng.random((3, 2, N)) < 0.2))


def check_cz_invariants(rng):
    F = _random_double_family(rng)
    dec = cz_decompose(F, 2.0, 4.0, 1.0)
    inv = cz_invariants(dec, F)
    bad = (not inv["disjoint"]) or (not inv["measure_ok"])
    return max(float(bad), inv["mean_residual"], inv["good_ratio"] - 1.0 if inv["good_ratio"] > 1 else 0.0), 1e-12


def check_ay_monotone(rng):
    y = math.exp(3)
    w = [-1.0, 0.7, 1.3]
    a = estimate_Ay(y, 2.0, (-4, 8), w).value
    b = estimate_Ay(y, 2.0, (-6, 10), w).value
    return max(0.0, a - b), 0.0


EXACT = {
    "peetre-shift-covariance": check_peetre_shift,
    "lp-shift-identity": check_lp_shift,
    "dilation-identity": check_dilation,
    "psitilde-annulus": check_psitilde_annulus,
    "lp-partition-of-unity": check_partition,
    "modulation-translation": check_modulation_commutes,
    "cz-reconstruction": check_cz_reconstruction,
}

ORACLES = {
    "dft-direct": check_dft,
    "convolution-direct": check_convolution,
    "dyadic-average-direct": check_dyadic_average,
    "shifted-maximal-direct": check_shifted_maximal,
    "peetre-direct": check_peetre_direct,
    "carleson-brute": check_carleson,
    "sharp-q2-brute": check_sharp_q2,
    "weak-l1-threshold": check_weak,
}

INVARIANTS = {
    "parseval-eta": check_parseval,
    "peetre-sigma-monotone": check_sigma_monotone,
    "mixed-norm-q-monotone": check_mixed_monotone,
    "cz-invariants": check_cz_invariants,
    "ay-monotone-j-range": check_ay_monotone,
}
