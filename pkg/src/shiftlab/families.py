"""Extremal test families: modulated, translated and sparse bump constructions."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, replace
from typing import Iterator

import numpy as np

from .grid import (
    DomainError,
    FilterKind,
    Grid,
    GridFunction,
    filter_multiplier,
    make_eta,
    make_grid,
    modulate,
    save_shl1,
    load_shl1,
    shift_samples,
)
from .operators import LevelFamily

FAMILY_IDS = ("A", "B", "PsiSingle", "SparseModulated", "SparseShifted")
SPARSE_IDS = ("SparseModulated", "SparseShifted")

# Per-family bump bandwidth W and floor radius R.
DEFAULT_ETA = {
    "A": (2.0, 0.25),
    "B": (0.5, 0.25),
    "SparseModulated": (0.5, 0.25),
    "SparseShifted": (0.5, 0.25),
    "PsiSingle": (0.5, 0.25),
}


def _pow2_above(x: float) -> float:
    """Smallest power of two strictly greater than ``x`` (at least 1)."""
    if x < 1:
        return 1.0
    return 2.0 ** (math.floor(math.log2(x)) + 1)


@dataclass(frozen=True)
class FamilySpec:
    """Parameters that determine a test family bit-for-bit.

    ``K`` follows the floor of ``ln(e+|y|)`` for families A and B and of
    ``ln(e+|y|) / spacing`` for the sparse ones. ``L`` and ``N`` are
    chosen automatically when left as ``None``.
    """

    family_id: str
    y: float
    eta_W: float | None = None
    eta_R: float | None = None
    zeta_spacing: int = 10
    L: float | None = None
    N: int | None = None
    oversample: int = 3

    def __post_init__(self):
        if self.family_id not in FAMILY_IDS:
            raise DomainError(f"unknown family {self.family_id!r}; choose from {FAMILY_IDS}")
        if not self.y > 0:
            raise DomainError(f"y={self.y} must be positive")
        if self.zeta_spacing < 3:
            raise DomainError("zeta spacing below 3 lets the psi~ bands overlap")
        W, R = DEFAULT_ETA[self.family_id]
        if self.eta_W is None:
            object.__setattr__(self, "eta_W", W)
        if self.eta_R is None:
            object.__setattr__(self, "eta_R", R)
        if self.family_id in SPARSE_IDS and self.eta_W > 0.5:
            raise DomainError("sparse families need W <= 1/2 so psi~ sees one band per level")

    @property
    def below_standing_assumption(self) -> bool:
        """True when ``y < 10 e``, outside the range the constructions assume."""
        return self.y < 10 * math.e

    @property
    def K(self) -> int:
        ln = math.log(math.e + abs(self.y))
        if self.family_id in SPARSE_IDS:
            return int(math.floor(ln / self.zeta_spacing))
        return int(math.floor(ln))

    def zetas(self) -> list[int]:
        return [self.zeta_spacing * k for k in range(self.K + 1)]

    def top_frequency_exponent(self) -> int:
        if self.family_id in ("A", "B"):
            return self.K
        if self.family_id == "PsiSingle":
            return 1
        return self.zetas()[-1]

    def max_shift(self) -> float:
        if self.family_id in ("A", "B", "PsiSingle"):
            return self.y / 2
        if self.family_id == "SparseShifted":
            return self.y
        return 0.0

    def grid(self) -> Grid:
        """Auto-sized grid: ``h = 2^-(top + oversample)`` and ``L`` clear of all shifts."""
        if self.L is not None and self.N is not None:
            grid = make_grid(self.L, self.N)
        else:
            span = 4 * self.max_shift() if self.family_id in ("A", "B", "PsiSingle") else 2 * self.max_shift()
            L = self.L or max(_pow2_above(span), _pow2_above(64 / self.eta_W))
            oversample = self.oversample if self.family_id not in SPARSE_IDS else self.oversample - 1
            h = 2.0 ** -(self.top_frequency_exponent() + oversample)
            grid = make_grid(L, int(round(L / h)))
        top = 2.0 ** self.top_frequency_exponent() + self.eta_W
        if not top < grid.N / (2 * grid.L):
            need = int(_pow2_above(2 * top * grid.L))
            raise DomainError(f"frequency {top:g} exceeds Nyquist of {grid}; need N >= {need}")
        return grid

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FamilySpec":
        return cls(**d)


def _check_spec(spec: FamilySpec, allowed) -> None:
    if spec.family_id not in allowed:
        raise DomainError(f"family {spec.family_id!r} is not one of {allowed}")
    if spec.below_standing_assumption:
        warnings.warn(f"y={spec.y:.4g} is below 10e; the family is built anyway", stacklevel=3)


def eta_for(spec: FamilySpec, grid: Grid | None = None) -> GridFunction:
    return make_eta(grid or spec.grid(), spec.eta_W, spec.eta_R)


def _level_function(eta: GridFunction, k_freq: int, shift: float) -> GridFunction:
    """``eta(x + shift) exp(2 pi i 2^k x)``."""
    g = eta.grid
    base = eta if shift == 0 else GridFunction(
        g, shift_samples(eta.values.real, -shift, g.h), eta.band
    )
    return modulate(base, 2.0**k_freq)


def iter_levels(spec: FamilySpec, eta: GridFunction | None = None) -> Iterator[tuple[int, GridFunction]]:
    """Yield ``(k, f_k)`` for families A and B without holding them all."""
    _check_spec(spec, ("A", "B"))
    eta = eta or eta_for(spec)
    for k in range(1, spec.K + 1):
        shift = 0.0 if spec.family_id == "A" else 2.0 ** (-k) * spec.y
        yield k, _level_function(eta, k, shift)


def build_family_A(spec: FamilySpec) -> LevelFamily:
    """``f_k = eta exp(2 pi i 2^k x)`` for ``1 <= k <= K``."""
    _check_spec(spec, ("A",))
    fs = [f for _, f in iter_levels(spec)]
    return LevelFamily(fs[0].grid, 1, tuple(fs))


def build_family_B(spec: FamilySpec) -> LevelFamily:
    """``f_k = eta(x + 2^-k y) exp(2 pi i 2^k x)`` for ``1 <= k <= K``."""
    _check_spec(spec, ("B",))
    fs = [f for _, f in iter_levels(spec)]
    return LevelFamily(fs[0].grid, 1, tuple(fs))


def build_psi_single(grid: Grid) -> GridFunction:
    """The level-0 band-pass function ``psi`` with multiplier ``phi(xi) - phi(2 xi)``."""
    m = filter_multiplier(FilterKind.Psi, 0, grid.tone_frequencies())
    values = np.fft.ifft(m) * (grid.N / grid.L)
    return GridFunction(grid, values, (-2.0, 2.0), {"filter": "psi", "k": 0})


def build_sparse(spec: FamilySpec) -> GridFunction:
    """Sum of bumps modulated to ``2^zeta_k``, translated by ``-2^-zeta_k y`` if shifted."""
    _check_spec(spec, SPARSE_IDS)
    grid = spec.grid()
    eta = eta_for(spec, grid)
    total = np.zeros(grid.N, dtype=complex)
    bands = []
    for z in spec.zetas():
        shift = 2.0 ** (-z) * spec.y if spec.family_id == "SparseShifted" else 0.0
        total += _level_function(eta, z, shift).values
        bands.append((2.0**z - spec.eta_W, 2.0**z + spec.eta_W))
    lo = bands[0][0]
    hi = bands[-1][1]
    meta = {"bands": bands, "zetas": spec.zetas(), "zeta_spacing": spec.zeta_spacing}
    return GridFunction(grid, total, (lo, hi), meta)


def build(spec: FamilySpec):
    """Dispatch on ``family_id``: a LevelFamily for A/B, one function otherwise."""
    if spec.family_id == "A":
        return build_family_A(spec)
    if spec.family_id == "B":
        return build_family_B(spec)
    if spec.family_id == "PsiSingle":
        return build_psi_single(spec.grid())
    return build_sparse(spec)


def lower_bound_balls_disjoint(spec: FamilySpec) -> bool:
    """Whether the balls ``|x - 2^-m y| <= R/4``, ``1 <= m <= K``, are pairwise disjoint on the torus."""
    L = spec.grid().L
    centres = [math.fmod(2.0 ** (-m) * spec.y, L) for m in range(1, spec.K + 1)]
    for i in range(len(centres)):
        for j in range(i + 1, len(centres)):
            d = abs(centres[i] - centres[j]) % L
            d = min(d, L - d)
            if d <= spec.eta_R / 2:
                return False
    return True


def overlap_bound(spec: FamilySpec) -> float:
    """``max_x sum_k eta(x + 2^-k y)`` for family B."""
    _check_spec(spec, ("B",))
    grid = spec.grid()
    eta = eta_for(spec, grid).values.real
    total = np.zeros(grid.N)
    for k in range(1, spec.K + 1):
        total += shift_samples(eta, -(2.0 ** (-k)) * spec.y, grid.h)
    return float(total.max())


def save_family(path, spec: FamilySpec, obj) -> None:
    """SHL1 records plus a ``.json`` sidecar carrying the spec."""
    if isinstance(obj, LevelFamily):
        functions, k_min = list(obj.functions), obj.k_min
    else:
        functions, k_min = [obj], 0
    save_shl1(path, functions)
    sidecar = {"spec": spec.to_dict(), "k_min": k_min, "count": len(functions)}
    with open(str(path) + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_family(path):
    """Return ``(spec or None, LevelFamily)`` from an SHL1 file and optional sidecar."""
    functions = load_shl1(path)
    spec, k_min = None, 0
    try:
        with open(str(path) + ".json") as fh:
            side = json.load(fh)
        if side.get("spec") is not None:
            spec = FamilySpec.from_dict(side["spec"])
        k_min = int(side.get("k_min", 0))
    except FileNotFoundError:
        pass
    grid = functions[0].grid
    return spec, LevelFamily(grid, k_min, tuple(functions))


def with_grid(spec: FamilySpec, L: float, N: int) -> FamilySpec:
    return replace(spec, L=L, N=N)
