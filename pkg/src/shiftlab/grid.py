"""Periodic 1-D grids, spectral transforms and band-limited generators.

Frequencies come in two flavours here. A *tone* frequency ``nu`` labels the
synthesis component ``exp(2*pi*i*nu*x)``; band descriptors, modulation and the
filter multipliers are all stated in tone frequency. The :class:`Spectrum`
type follows the ``exp(+2*pi*i*x*xi)`` analysis transform literally, so a tone
at ``nu`` shows up as the coefficient at ``xi = -nu``.
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

LEAKAGE_TOL = 1e-10
MAGIC = b"SHL1"


class DomainError(ValueError):
    """A precondition of a numerical operation was violated."""


def is_power_of_two(value: float) -> bool:
    if value <= 0 or not math.isfinite(value):
        return False
    mantissa, _ = math.frexp(value)
    return mantissa == 0.5


def snap(a: float, h: float) -> int:
    """Nearest integer number of samples to the shift ``a`` (ties round up)."""
    return int(math.floor(a / h + 0.5))


@dataclass(frozen=True)
class Grid:
    """Torus of circumference ``L`` sampled at ``N`` equispaced points."""

    L: float
    N: int

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def a(self) -> int:
        return int(round(math.log2(self.L)))

    @property
    def m(self) -> int:
        return int(round(math.log2(self.N)))

    def points(self) -> np.ndarray:
        return np.arange(self.N) * self.h

    def centered_points(self) -> np.ndarray:
        """Sample positions wrapped into ``[-L/2, L/2)``."""
        i = np.arange(self.N)
        i = np.where(i >= self.N // 2, i - self.N, i)
        return i * self.h

    def tone_frequencies(self) -> np.ndarray:
        """Tone frequency of each bin of ``np.fft.fft`` output."""
        return np.fft.fftfreq(self.N, d=self.h)

    def to_dict(self) -> dict:
        return {"L": self.L, "N": self.N}


def make_grid(L: float, N: int) -> Grid:
    """Build a grid, rejecting anything but powers of two with ``h <= 1``.

    Examples
    --------
    >>> make_grid(4, 4096).h
    0.0009765625
    """
    if not is_power_of_two(float(L)):
        raise DomainError(f"torus length L={L} is not a power of two")
    if int(N) != N or not is_power_of_two(float(N)):
        raise DomainError(f"sample count N={N} is not a power of two")
    if L < 1:
        raise DomainError(f"torus length L={L} must be at least 1")
    if N < 2:
        raise DomainError(f"sample count N={N} must be at least 2")
    if N < L:
        raise DomainError(f"N={N} < L={L}: spacing h must not exceed 1")
    return Grid(float(L), int(N))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Complex samples on a grid, with an optional tone-frequency band."""

    grid: Grid
    values: np.ndarray
    band: tuple[float, float] | None = None
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != (self.grid.N,):
            raise DomainError(
                f"values have shape {values.shape}, grid needs ({self.grid.N},)"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if self.band is not None:
            lo, hi = float(self.band[0]), float(self.band[1])
            object.__setattr__(self, "band", (lo, hi))

    def abs(self) -> np.ndarray:
        return np.abs(self.values)

    def with_values(self, values, band=None, **meta) -> "GridFunction":
        return GridFunction(self.grid, values, band, dict(meta))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Coefficients at ``xi_j = j/L`` for ``j`` in ``[-N/2, N/2)``, ascending."""

    grid: Grid
    coefficients: np.ndarray

    def frequencies(self) -> np.ndarray:
        N = self.grid.N
        return np.arange(-N // 2, N // 2) / self.grid.L


class FilterKind(enum.Enum):
    Phi = "phi"
    Psi = "psi"
    PsiTilde = "psitilde"


def to_spectrum(f: GridFunction) -> Spectrum:
    """``coefficients[j] = h * sum_i f(x_i) exp(+2 pi i x_i j / L)``."""
    g = f.grid
    c = np.fft.ifft(f.values) * (g.N * g.h)
    return Spectrum(g, np.fft.fftshift(c))


def from_spectrum(s: Spectrum) -> GridFunction:
    g = s.grid
    c = np.fft.ifftshift(s.coefficients)
    return GridFunction(g, np.fft.fft(c) / g.L)


def _smooth_step(u: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    u = np.asarray(u, dtype=float)
    a = np.clip(u, 0.0, 1.0)
    b = 1.0 - a
    with np.errstate(divide="ignore", over="ignore"):
        ea = np.where(a > 0, np.exp(-1.0 / np.where(a > 0, a, 1.0)), 0.0)
        eb = np.where(b > 0, np.exp(-1.0 / np.where(b > 0, b, 1.0)), 0.0)
    return ea / (ea + eb)


def phi_hat(xi) -> np.ndarray:
    """Smooth radial cutoff: 1 on ``|xi| <= 1``, 0 on ``|xi| >= 2``."""
    return _smooth_step(2.0 - np.abs(np.asarray(xi, dtype=float)))


def filter_multiplier(kind: FilterKind, k: int, xi) -> np.ndarray:
    """Fourier multiplier of ``phi_k``, ``psi_k`` or ``psi~_k`` at ``xi``."""
    xi = np.asarray(xi, dtype=float)
    kind = FilterKind(kind)
    if kind is FilterKind.Phi:
        return phi_hat(xi / 2.0**k)
    if kind is FilterKind.Psi:
        return phi_hat(xi / 2.0**k) - phi_hat(xi / 2.0 ** (k - 1))
    # psi_{k-1} + psi_k + psi_{k+1} telescopes to two cutoffs
    return phi_hat(xi / 2.0 ** (k + 1)) - phi_hat(xi / 2.0 ** (k - 2))


def filter_band(kind: FilterKind, k: int) -> tuple[float, float]:
    """Tone band outside which the multiplier vanishes (``Phi`` is two-sided)."""
    kind = FilterKind(kind)
    if kind is FilterKind.Phi:
        return (-(2.0 ** (k + 1)), 2.0 ** (k + 1))
    if kind is FilterKind.Psi:
        return (2.0 ** (k - 1), 2.0 ** (k + 1))
    return (2.0 ** (k - 2), 2.0 ** (k + 2))


def make_filter(grid: Grid, kind: FilterKind, k: int) -> GridFunction:
    """Sampled periodization of the filter ``phi_k``, ``psi_k`` or ``psi~_k``.

    Raises
    ------
    DomainError
        If ``2**(k+2)`` does not sit strictly below the Nyquist frequency.
    """
    nyquist = grid.N / (2 * grid.L)
    if not 2.0 ** (k + 2) < nyquist:
        raise DomainError(
            f"filter level k={k} needs 2^(k+2) < N/(2L) = {nyquist:g}; "
            f"use N > {int(2.0 ** (k + 3) * grid.L)}"
        )
    m = filter_multiplier(kind, k, grid.tone_frequencies())
    values = np.fft.ifft(m) * (grid.N / grid.L)
    kind = FilterKind(kind)
    band = filter_band(kind, k)
    if kind is not FilterKind.Phi:
        # radial multipliers are even, so the band is symmetric
        band = (-band[1], band[1])
    return GridFunction(grid, values, band, {"filter": kind.value, "k": k})


def apply_multiplier(f: GridFunction, m: np.ndarray) -> np.ndarray:
    """Samples of the function whose tone coefficients are ``m * f``'s."""
    return np.fft.ifft(np.fft.fft(f.values) * m)


def bump(u) -> np.ndarray:
    """``exp(-1/(1-u^2))`` on ``|u| < 1``, zero elsewhere."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


def make_eta(grid: Grid, W: float = 1 / 16, R: float = 1 / 4) -> GridFunction:
    """Nonnegative bump ``eta = |g|^2`` with ``g`` band-limited to ``[-W/2, W/2]``.

    ``eta`` peaks at the torus origin with ``eta(0) = 1``. Its meta records
    the attained floor ``c = min_{|x| <= R} eta(x)`` and the coefficients of
    ``g`` (tone convention) under ``"g_tones"``.
    """
    if W < 2 / grid.L:
        raise DomainError(f"W={W} < 2/L={2 / grid.L}: fewer than two interior frequencies")
    if R < grid.h:
        raise DomainError(f"floor radius R={R} is below the spacing h={grid.h}")
    nu = grid.tone_frequencies()
    b = bump(2.0 * nu / W)
    g = np.fft.ifft(b) * grid.N
    peak = abs(g[0])
    b = b / peak
    g = g / peak
    eta = np.abs(g) ** 2
    x = grid.centered_points()
    near = np.abs(x) <= R
    floor = float(eta[near].min())
    if floor <= 1e-12:
        ok = eta > 1e-6
        radius = float(np.min(np.abs(x[~ok]))) - grid.h if (~ok).any() else grid.L / 2
        raise DomainError(
            f"eta floor {floor:.3g} on |x| <= {R} vanishes; attainable radius about {radius:.4g}"
        )
    return GridFunction(grid, eta, (-W, W), {"W": W, "R": R, "floor": floor, "g_tones": b})


def modulate(f: GridFunction, xi0: float) -> GridFunction:
    """Multiply by ``exp(2 pi i xi0 x)``; ``xi0 * L`` must be an integer."""
    g = f.grid
    steps = xi0 * g.L
    if abs(steps - round(steps)) > 1e-9 * max(1.0, abs(steps)):
        raise DomainError(f"modulation frequency {xi0} is not a multiple of 1/L = {1 / g.L}")
    n = int(round(steps))
    # integer phase index keeps the factor exact modulo N
    phase = np.exp(2j * np.pi * ((n * np.arange(g.N)) % g.N) / g.N)
    band = None if f.band is None else (f.band[0] + xi0, f.band[1] + xi0)
    return GridFunction(g, f.values * phase, band, dict(f.meta))


def shift_samples(values: np.ndarray, a: float, h: float) -> np.ndarray:
    """Samples of ``v(. - a)``: a roll for grid multiples, a phase shift otherwise."""
    r = a / h
    n = round(r)
    if abs(r - n) <= 1e-9 * max(1.0, abs(r)):
        return np.roll(values, int(n) % len(values))
    N = len(values)
    if np.iscomplexobj(values) and not np.any(values.imag):
        values = values.real
    if np.isrealobj(values):
        # real input stays real; the Nyquist bin keeps only its cosine part
        nu = np.fft.rfftfreq(N, d=h)
        return np.fft.irfft(np.fft.rfft(values) * np.exp(-2j * np.pi * nu * a), n=N)
    nu = np.fft.fftfreq(N, d=h)
    return np.fft.ifft(np.fft.fft(values) * np.exp(-2j * np.pi * nu * a))


def translate(f: GridFunction, a: float) -> GridFunction:
    """Return ``f(. - a)`` with ``a`` taken modulo ``L``."""
    return GridFunction(f.grid, shift_samples(f.values, a, f.grid.h), f.band, dict(f.meta))


def _band_intersection(b1, b2):
    if b1 is None:
        return b2
    if b2 is None:
        return b1
    lo, hi = max(b1[0], b2[0]), min(b1[1], b2[1])
    return (lo, hi) if lo <= hi else (0.0, 0.0)


def convolve(f: GridFunction, g: GridFunction) -> GridFunction:
    """Periodic convolution ``h * sum_z f(x - z) g(z)``, computed spectrally."""
    if f.grid != g.grid:
        raise DomainError(f"grid mismatch: {f.grid} vs {g.grid}")
    out = np.fft.ifft(np.fft.fft(f.values) * np.fft.fft(g.values)) * f.grid.h
    return GridFunction(f.grid, out, _band_intersection(f.band, g.band))


@dataclass(frozen=True)
class BandCheck:
    passed: bool
    leakage: float


def band_leakage(values: np.ndarray, h: float, interval) -> float:
    a = np.fft.fft(values)
    energy = np.abs(a) ** 2
    total = float(energy.sum())
    if total == 0.0:
        return 0.0
    nu = np.fft.fftfreq(len(values), d=h)
    lo, hi = interval
    # frequencies are multiples of 1/L, so a relative slack absorbs roundoff
    slack = 1e-9 / (len(values) * h)
    out = (nu < lo - slack) | (nu > hi + slack)
    return float(energy[out].sum() / total)


def band_support_check(f: GridFunction, interval) -> BandCheck:
    """Fraction of spectral energy outside ``interval``; passes at ``<= 1e-10``."""
    leak = band_leakage(f.values, f.grid.h, interval)
    return BandCheck(leak <= LEAKAGE_TOL, leak)


def lp_multiplier_shifted(
    f: GridFunction, kind: FilterKind, k: int, shift: float
) -> GridFunction:
    """``filter_k * f`` translated by ``shift``, done in one spectral pass."""
    g = f.grid
    nu = g.tone_frequencies()
    m = filter_multiplier(kind, k, nu) * np.exp(-2j * np.pi * nu * shift)
    band = filter_band(kind, k)
    if FilterKind(kind) is not FilterKind.Phi:
        band = (-band[1], band[1])
    return GridFunction(g, apply_multiplier(f, m), _band_intersection(f.band, band))


# --- SHL1 container -------------------------------------------------------

_HEADER = struct.Struct("<4sdQdd")


def encode_shl1(f: GridFunction) -> bytes:
    lo, hi = (math.nan, math.nan) if f.band is None else f.band
    head = _HEADER.pack(MAGIC, f.grid.L, f.grid.N, lo, hi)
    body = np.ascontiguousarray(f.values, dtype="<c16").tobytes()
    return head + body


def decode_shl1(buf: bytes, offset: int = 0) -> tuple[GridFunction, int]:
    """Decode one record starting at ``offset``; returns it and the next offset."""
    if len(buf) - offset < _HEADER.size:
        raise DomainError("truncated SHL1 header")
    magic, L, N, lo, hi = _HEADER.unpack_from(buf, offset)
    if magic != MAGIC:
        raise DomainError(f"bad magic {magic!r}, expected {MAGIC!r}")
    grid = make_grid(L, N)
    start = offset + _HEADER.size
    end = start + 16 * N
    if len(buf) < end:
        raise DomainError("truncated SHL1 sample block")
    values = np.frombuffer(buf, dtype="<c16", count=N, offset=start)
    band = None if (math.isnan(lo) and math.isnan(hi)) else (lo, hi)
    return GridFunction(grid, values, band), end


def save_shl1(path, functions) -> None:
    """Write one or more functions as back-to-back SHL1 records."""
    if isinstance(functions, GridFunction):
        functions = [functions]
    with open(path, "wb") as fh:
        for f in functions:
            fh.write(encode_shl1(f))


def load_shl1(path) -> list[GridFunction]:
    with open(path, "rb") as fh:
        buf = fh.read()
    out, pos = [], 0
    while pos < len(buf):
        f, pos = decode_shl1(buf, pos)
        out.append(f)
    if not out:
        raise DomainError(f"{path}: empty SHL1 file")
    return out
