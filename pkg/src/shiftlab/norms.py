"""Lebesgue, mixed, weak, Carleson, Hardy and sharp-maximal functionals."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np

from .grid import DomainError, FilterKind, Grid, GridFunction, apply_multiplier, filter_multiplier
from .operators import LevelFamily

VARIANTS = ("strong", "weak-L1", "carleson")


@dataclass(frozen=True)
class MixedNormSpec:
    p: float
    q: float
    variant: str = "strong"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DomainError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if not self.p > 0 or not self.q > 0:
            raise DomainError(f"exponents must be positive, got p={self.p}, q={self.q}")
        if self.variant == "weak-L1" and self.p != 1:
            raise DomainError("the weak-L1 variant measures p = 1 only")
        if self.variant == "carleson" and math.isinf(self.q):
            raise DomainError("the carleson variant needs finite q")


@dataclass
class NormReport:
    value: float
    spec: MixedNormSpec
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        spec = {k: _json_number(v) for k, v in asdict(self.spec).items()}
        return {"value": self.value, "spec": spec, "metadata": self.metadata}


def _json_number(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def _check_exponent(p: float, name: str = "p") -> None:
    if not p > 0:
        raise DomainError(f"{name}={p} must be positive")


def lp_of_values(values: np.ndarray, h: float, p: float) -> float:
    _check_exponent(p)
    a = np.abs(values)
    if math.isinf(p):
        return float(a.max())
    return float((h * np.sum(a**p)) ** (1.0 / p))


def lp_norm(f: GridFunction, p: float) -> float:
    """``(h sum |f|^p)^(1/p)``, or ``max |f|`` for ``p = inf``."""
    return lp_of_values(f.values, f.grid.h, p)


class LevelAccumulator:
    """Pointwise ``l^q`` accumulation over levels, one level at a time."""

    def __init__(self, N: int, q: float):
        _check_exponent(q, "q")
        self.q = q
        self.acc = np.zeros(N)
        self.count = 0

    def add(self, values: np.ndarray) -> None:
        a = np.abs(values)
        if math.isinf(self.q):
            np.maximum(self.acc, a, out=self.acc)
        else:
            self.acc += a**self.q
        self.count += 1

    def pointwise(self) -> np.ndarray:
        if self.count == 0:
            raise DomainError("no levels accumulated")
        if math.isinf(self.q):
            return self.acc
        return self.acc ** (1.0 / self.q)


def mixed_norm(F: LevelFamily, p: float, q: float) -> float:
    """``|| {f_k} ||_{L^p(l^q)}``: pointwise ``l^q`` over levels, then ``L^p``."""
    if len(F) == 0:
        raise DomainError("empty family")
    acc = LevelAccumulator(F.grid.N, q)
    for f in F.functions:
        acc.add(f.values)
    return lp_of_values(acc.pointwise(), F.grid.h, p)


def weak_l1_norm(f: GridFunction) -> float:
    """``sup_alpha alpha |{|f| > alpha}|``, exact via order statistics."""
    v = np.sort(np.abs(f.values))[::-1]
    if v.size == 0:
        return 0.0
    measure = np.arange(1, v.size + 1) * f.grid.h
    return float(np.max(v * measure))


def _scale_sides(grid: Grid):
    """Yield ``(samples per cube, cube side)`` from the whole torus down to one sample."""
    n = grid.N
    while n >= 1:
        yield n, n * grid.h
        n //= 2


def _min_level(side: float) -> int:
    """Smallest integer ``k`` with ``2^k side >= 1``."""
    return math.ceil(-math.log2(side) - 1e-12)


def _suffix_sums(F: LevelFamily, q: float) -> list[np.ndarray]:
    """``T[i] = sum_{k >= k_min + i} |f_k|^q`` for each level index ``i``."""
    _check_exponent(q, "q")
    if math.isinf(q):
        raise DomainError("Carleson-type functionals need finite q")
    out = [None] * len(F)
    run = np.zeros(F.grid.N)
    for i in range(len(F) - 1, -1, -1):
        run = run + np.abs(F.functions[i].values) ** q
        out[i] = run
    return out


def _restricted_sum(T: list[np.ndarray], k_min: int, side: float):
    i = max(0, _min_level(side) - k_min)
    return T[i] if i < len(T) else None


def sharp_q1(F: LevelFamily, q: float) -> GridFunction:
    """Sup over dyadic cubes containing ``x`` of the level-restricted ``q``-average.

    Only levels with ``2^k l(P) >= 1`` enter the average over ``P``.
    """
    grid = F.grid
    T = _suffix_sums(F, q)
    best = np.zeros(grid.N)
    for n, side in _scale_sides(grid):
        S = _restricted_sum(T, F.k_min, side)
        if S is None:
            continue
        means = S.reshape(grid.N // n, n).mean(axis=1)
        np.maximum(best, np.repeat(means, n), out=best)
    return GridFunction(grid, best ** (1.0 / q))


def carleson_norm(F: LevelFamily, q: float) -> float:
    """``sup_P ((1/|P|) int_P sum_{k: 2^k l(P) >= 1} |f_k|^q)^(1/q)``."""
    return float(np.max(sharp_q1(F, q).values.real))


def carleson_from_levels(grid: Grid, levels: Iterable[tuple[int, np.ndarray]], q: float) -> float:
    """Carleson functional of levels streamed in *decreasing* ``k`` order.

    Only one running sum is held in memory, which keeps large grids usable.
    """
    _check_exponent(q, "q")
    sides = [(n, _min_level(side)) for n, side in _scale_sides(grid)]
    best = 0.0
    run = np.zeros(grid.N)
    prev = math.inf

    def flush(upper, lower):
        # cubes whose smallest admitted level lies in (lower, upper] see ``run``
        nonlocal best
        for n, kmin in sides:
            if lower < kmin <= upper:
                means = run.reshape(grid.N // n, n).mean(axis=1)
                best = max(best, float(means.max()))

    for k, values in levels:
        if k >= prev:
            raise DomainError("levels must arrive in strictly decreasing k")
        if math.isfinite(prev):
            flush(prev, k)
        run += np.abs(values) ** q
        prev = k
    if math.isfinite(prev):
        flush(prev, -math.inf)
    return best ** (1.0 / q)


def hardy_norm(f: GridFunction, p: float, k_range: tuple[int, int]) -> float:
    """``|| sup_k |phi_k * f| ||_{L^p}`` over ``k_lo <= k <= k_hi``.

    Multipliers are applied on the grid frequencies, so levels beyond
    Nyquist act as the identity rather than being rejected.
    """
    lo, hi = k_range
    if hi < lo:
        raise DomainError(f"empty level range {k_range}")
    nu = f.grid.tone_frequencies()
    best = np.zeros(f.grid.N)
    for k in range(lo, hi + 1):
        np.maximum(best, np.abs(apply_multiplier(f, filter_multiplier(FilterKind.Phi, k, nu))), out=best)
    return lp_of_values(best, f.grid.h, p)


def sharp_maximal(f: GridFunction) -> GridFunction:
    """Sup over dyadic cubes containing ``x`` of the mean deviation from the cube mean."""
    grid = f.grid
    v = f.values
    best = np.zeros(grid.N)
    for n, _ in _scale_sides(grid):
        blocks = v.reshape(grid.N // n, n)
        dev = np.abs(blocks - blocks.mean(axis=1, keepdims=True)).mean(axis=1)
        np.maximum(best, np.repeat(dev, n), out=best)
    return GridFunction(grid, best)


def _mean_abs_difference(blocks: np.ndarray) -> np.ndarray:
    """Row-wise ``(1/n^2) sum_{i,j} |b_i - b_j|`` via sorting."""
    n = blocks.shape[1]
    s = np.sort(blocks, axis=1)
    weights = 2 * np.arange(1, n + 1) - n - 1
    return 2.0 * (s @ weights) / n**2


def sharp_q2(F: LevelFamily, q: float) -> GridFunction:
    """Sup over cubes of the double average of ``| |g_k(z)|^q - |g_k(u)|^q |``.

    Only levels with ``2^k l(P) < 1`` contribute on the cube ``P``.
    """
    _check_exponent(q, "q")
    if math.isinf(q):
        raise DomainError("sharp_q2 needs finite q")
    grid = F.grid
    powers = [np.abs(f.values) ** q for f in F.functions]
    best = np.zeros(grid.N)
    for n, side in _scale_sides(grid):
        top = _min_level(side)  # levels k < top satisfy 2^k side < 1
        total = np.zeros(grid.N // n)
        for k, P in zip(F.levels, powers):
            if k < top:
                total += _mean_abs_difference(P.reshape(grid.N // n, n))
        np.maximum(best, np.repeat(total, n), out=best)
    return GridFunction(grid, best)
