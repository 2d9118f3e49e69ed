"""Shifted dyadic averages, maximal operators and decaying convolution kernels."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.ndimage import maximum_filter1d
from scipy.special import zeta

from .grid import (
    DomainError,
    FilterKind,
    Grid,
    GridFunction,
    lp_multiplier_shifted,
    shift_samples,
    snap,
)

# Beyond this many samples the smooth periodization tail is interpolated.
_TAIL_DIRECT_MAX = 8192
_TAIL_NODES = 4097


@dataclass(frozen=True)
class DyadicCube:
    """Cube ``[j 2^-s, (j+1) 2^-s)`` of side ``2^-s`` on the torus."""

    s: int
    j: int

    @property
    def side(self) -> float:
        return 2.0 ** (-self.s)

    @property
    def measure(self) -> Fraction:
        return Fraction(2) ** (-self.s)

    def validate(self, grid: Grid) -> None:
        if not -grid.a <= self.s <= grid.m - grid.a:
            raise DomainError(f"side exponent {self.s} outside [{-grid.a}, {grid.m - grid.a}]")
        count = int(round(grid.L * 2.0**self.s))
        if not 0 <= self.j < count:
            raise DomainError(f"offset {self.j} outside [0, {count})")

    def sample_range(self, grid: Grid) -> tuple[int, int]:
        n = int(round(self.side / grid.h))
        return self.j * n, (self.j + 1) * n


@dataclass(frozen=True)
class ShiftedOpParams:
    sigma: float
    t: float
    k: int
    y: float
    V: int = 1

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma={self.sigma} must be positive")
        if not self.t > 0:
            raise DomainError(f"t={self.t} must be positive")
        if math.isfinite(self.t) and not self.sigma * self.t > 1:
            raise DomainError(
                f"sigma*t = {self.sigma * self.t} <= 1: kernel mass diverges"
            )
        if self.V < 1:
            raise DomainError(f"periodization count V={self.V} must be >= 1")


@dataclass(frozen=True, eq=False)
class LevelFamily:
    """Functions ``f_k`` for consecutive levels ``k_min, k_min+1, ...``."""

    grid: Grid
    k_min: int
    functions: tuple

    def __post_init__(self):
        fs = tuple(self.functions)
        if not fs:
            raise DomainError("a level family needs at least one function")
        for f in fs:
            if f.grid != self.grid:
                raise DomainError("all family members must share the grid")
        object.__setattr__(self, "functions", fs)

    @property
    def k_max(self) -> int:
        return self.k_min + len(self.functions) - 1

    @property
    def levels(self) -> range:
        return range(self.k_min, self.k_max + 1)

    def __len__(self):
        return len(self.functions)

    def __getitem__(self, k: int) -> GridFunction:
        return self.functions[k - self.k_min]

    def items(self):
        return zip(self.levels, self.functions)


def family_from_arrays(grid: Grid, k_min: int, arrays: Sequence[np.ndarray]) -> LevelFamily:
    return LevelFamily(grid, k_min, tuple(GridFunction(grid, a) for a in arrays))


# --- dyadic averages --------------------------------------------------------


def _level_samples(grid: Grid, k: int) -> int:
    side = 2.0 ** (-k)
    if side < grid.h or side > grid.L:
        raise DomainError(
            f"level k={k}: cube side {side:g} outside [h, L] = [{grid.h:g}, {grid.L:g}]"
        )
    return int(round(side / grid.h))


def level_range(grid: Grid) -> range:
    """All admissible levels, from the whole torus down to single samples."""
    return range(-grid.a, grid.m - grid.a + 1)


def _dyadic_average_values(values: np.ndarray, grid: Grid, k: int, y: float) -> np.ndarray:
    n = _level_samples(grid, k)
    s = snap(2.0 ** (-k) * y, grid.h)
    g = np.roll(values, -s)
    means = g.reshape(grid.N // n, n).mean(axis=1)
    return np.repeat(means, n)


def dyadic_average(f: GridFunction, k: int, y: float) -> GridFunction:
    """Mean of ``f`` over the level-``k`` cube of ``x`` shifted by ``2^-k y``.

    The shift is snapped to the nearest grid multiple.
    """
    out = _dyadic_average_values(f.values, f.grid, k, y)
    return GridFunction(f.grid, out, meta={"k": k, "y": y})


def _shifted_maximal_values(values: np.ndarray, grid: Grid, y: float, t: float) -> np.ndarray:
    a = np.abs(values) ** t
    best = np.zeros(grid.N)
    for k in level_range(grid):
        np.maximum(best, _dyadic_average_values(a, grid, k, y), out=best)
    return best ** (1.0 / t)


def shifted_dyadic_maximal(f: GridFunction, y: float, t: float = 1.0) -> GridFunction:
    """Shifted dyadic maximal function of ``|f|^t``, then the ``t``-th root.

    The tree is truncated at the whole torus; the level range used is
    recorded under ``meta["levels"]``.
    """
    if not (t > 0 and math.isfinite(t)):
        raise DomainError(f"t={t} must be positive and finite")
    out = _shifted_maximal_values(f.values, f.grid, y, t)
    lv = level_range(f.grid)
    return GridFunction(f.grid, out, meta={"levels": (lv.start, lv.stop - 1), "y": y, "t": t})


def hl_maximal(f: GridFunction, t: float = 1.0) -> GridFunction:
    """Maximal average of ``|f|^t`` over windows of dyadic length containing ``x``.

    Every grid offset is allowed, so this sits within a factor ``2^(1/t)`` of
    the maximal function over all windows.
    """
    if not (t > 0 and math.isfinite(t)):
        raise DomainError(f"t={t} must be positive and finite")
    g = f.grid
    a = np.abs(f.values) ** t
    csum = np.concatenate([[0.0], np.cumsum(np.concatenate([a, a]))])
    best = a.copy()
    n = 2
    while n <= g.N:
        starts = np.arange(g.N)
        means = (csum[starts + n] - csum[starts]) / n
        # window starting at s covers x for s in [x-n+1, x]
        centred = maximum_filter1d(means, size=n, mode="wrap")
        np.maximum(best, np.roll(centred, n - 1 - n // 2), out=best)
        n *= 2
    return GridFunction(g, best ** (1.0 / t), meta={"t": t})


# --- decaying kernels -------------------------------------------------------


def _antiderivative(u: np.ndarray, s: float) -> np.ndarray:
    """Odd antiderivative of ``(1+|u|)^-s`` vanishing at 0."""
    return np.sign(u) * (1.0 - (1.0 + np.abs(u)) ** (1.0 - s)) / (s - 1.0)


def _wrap_tail(d: np.ndarray, scale: float, L: float, s: float, V: int) -> np.ndarray:
    """Exact sum over wraps ``|nu| > V`` of ``(1+|scale (d + nu L)|)^-s``."""
    sl = scale * L
    return sl ** (-s) * (
        zeta(s, V + 1 + (1.0 + scale * d) / sl) + zeta(s, V + 1 + (1.0 - scale * d) / sl)
    )


def decay_kernel(grid: Grid, scale: float, center: float, s: float, V: int = 1) -> np.ndarray:
    """Cell averages of the periodized ``scale / (1 + |scale (x - center)|)^s``.

    Wraps with ``|nu| <= V`` are integrated exactly over each cell; the rest
    are summed in closed form with the Hurwitz zeta function and averaged
    over each cell by Simpson's rule.
    """
    if not s > 1:
        raise DomainError(f"decay exponent {s} must exceed 1")
    if V < 1:
        raise DomainError(f"periodization count V={V} must be >= 1")
    L, h = grid.L, grid.h
    c = math.fmod(center, L)
    d = grid.centered_points() - c
    d = np.mod(d + L / 2, L) - L / 2
    out = np.zeros(grid.N)
    for nu in range(-V, V + 1):
        lo = scale * (d - h / 2 + nu * L)
        hi = scale * (d + h / 2 + nu * L)
        out += _antiderivative(hi, s) - _antiderivative(lo, s)
    out /= h
    if grid.N <= _TAIL_DIRECT_MAX:
        def tail(u):
            return _wrap_tail(u, scale, L, s, V)
    else:
        nodes = np.linspace(-L / 2 - h, L / 2 + h, _TAIL_NODES)
        values = _wrap_tail(nodes, scale, L, s, V)

        def tail(u):
            return np.interp(u, nodes, values)
    # Simpson cell average keeps the smooth tail accurate to O(h^4)
    cell = (tail(d - h / 2) + 4 * tail(d) + tail(d + h / 2)) / 6
    return out + scale * cell


def kernel_mass(s: float) -> float:
    """Integral over the line of ``(1+|u|)^-s``."""
    return 2.0 / (s - 1.0)


def _circular_real(a: np.ndarray, b: np.ndarray, h: float) -> np.ndarray:
    n = len(a)
    return np.fft.irfft(np.fft.rfft(a) * np.fft.rfft(b), n=n) * h


def _peetre_unshifted_finite(absf: np.ndarray, grid: Grid, sigma: float, t: float, k: int, V: int):
    K = decay_kernel(grid, 2.0**k, 0.0, sigma * t, V)
    power = _circular_real(absf**t, K, grid.h)
    return np.maximum(power, 0.0) ** (1.0 / t)


def _peetre_sup(absf: np.ndarray, grid: Grid, sigma: float, k: int) -> np.ndarray:
    """``max_z |f(x-z)| / (1+|2^k z|)^sigma`` over grid ``z`` (min-image)."""
    N = grid.N
    z = grid.centered_points()
    order = np.argsort(np.abs(z), kind="stable")
    w = (1.0 + np.abs(2.0**k * z[order])) ** (-sigma)
    shifts = np.arange(N)[order]
    best = absf.copy()
    top = absf.max()
    block = max(1, (1 << 21) // N)
    base = np.arange(N)
    i = 1
    while i < N:
        if w[i] * top <= best.min():
            break
        sl = slice(i, min(N, i + block))
        idx = (base[None, :] - shifts[sl, None]) % N
        cand = (absf[idx] * w[sl, None]).max(axis=0)
        np.maximum(best, cand, out=best)
        i = sl.stop
    return best


def _spectral_upsample(values: np.ndarray, factor: int) -> np.ndarray:
    N = len(values)
    F = np.fft.fft(values)
    G = np.zeros(N * factor, dtype=complex)
    half = N // 2
    G[:half] = F[:half]
    G[-half:] = F[-half:]
    return np.fft.ifft(G) * factor


def peetre_values(values: np.ndarray, grid: Grid, p: ShiftedOpParams, upsample: int = 1) -> np.ndarray:
    """Real samples of the shifted Peetre operator applied to ``values``."""
    shift = 2.0 ** (-p.k) * p.y
    if math.isinf(p.t):
        if upsample > 1:
            fine = Grid(grid.L, grid.N * upsample)
            absf = np.abs(_spectral_upsample(values, upsample))
            out = _peetre_sup(absf, fine, p.sigma, p.k)[::upsample]
        else:
            out = _peetre_sup(np.abs(values), grid, p.sigma, p.k)
        return np.roll(out, snap(shift, grid.h) % grid.N)
    out = _peetre_unshifted_finite(np.abs(values), grid, p.sigma, p.t, p.k, p.V)
    return shift_samples(out, shift, grid.h)


def peetre_shifted(f: GridFunction, p: ShiftedOpParams, upsample: int = 1) -> GridFunction:
    """Shifted Peetre maximal function at level ``k``.

    For finite ``t`` the unshifted operator is a convolution of ``|f|^t``
    with the cell-averaged kernel ``2^k (1+|2^k z|)^(-sigma t)``, and the
    shift by ``2^-k y`` is applied afterwards (exact roll on grid multiples,
    spectral phase otherwise). For ``t = inf`` the supremum runs over grid
    points and the shift is snapped.
    """
    out = peetre_values(f.values, f.grid, p, upsample)
    return GridFunction(f.grid, out, meta={"sigma": p.sigma, "t": p.t, "k": p.k, "y": p.y})


def lambda_kernel(grid: Grid, j: int, sigma: float, y: float, V: int = 1) -> GridFunction:
    """Periodized, cell-averaged ``2^j / (1 + |2^j x - y|)^sigma``."""
    if not sigma > 1:
        raise DomainError(f"sigma={sigma} must exceed 1")
    K = decay_kernel(grid, 2.0**j, 2.0 ** (-j) * y, sigma, V)
    return GridFunction(grid, K, meta={"j": j, "sigma": sigma, "y": y})


def lambda_convolve(f: GridFunction, j: int, sigma: float, y: float, V: int = 1) -> GridFunction:
    K = lambda_kernel(f.grid, j, sigma, y, V)
    out = np.fft.ifft(np.fft.fft(f.values) * np.fft.fft(K.values)) * f.grid.h
    if not np.any(f.values.imag):
        out = out.real
    return GridFunction(f.grid, out)


def lp_conv_shifted(f: GridFunction, kind: FilterKind, k: int, y: float) -> GridFunction:
    """``(filter_k)^y * f``: the level-``k`` filter output translated by ``2^-k y``.

    The multiplier is evaluated on the grid's discrete frequencies, which is
    exact for trigonometric polynomials, so no Nyquist headroom is demanded.
    """
    return lp_multiplier_shifted(f, kind, k, 2.0 ** (-k) * y)
