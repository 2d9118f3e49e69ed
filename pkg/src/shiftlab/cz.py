"""Vector-valued Calderon-Zygmund decomposition and the kernel constant A_y."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .grid import DomainError, Grid
from .operators import DyadicCube


@dataclass(frozen=True, eq=False)
class DoubleFamily:
    """Samples ``f_{j,k}`` stored as an array of shape ``(n_j, n_k, N)``."""

    grid: Grid
    j_min: int
    k_min: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 3 or v.shape[2] != self.grid.N:
            raise DomainError(f"values must have shape (n_j, n_k, {self.grid.N}), got {v.shape}")
        if v.shape[0] == 0 or v.shape[1] == 0:
            raise DomainError("index ranges must be nonempty")
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape[0], self.values.shape[1]

    def pointwise_norm(self, q: float) -> np.ndarray:
        """``(sum_k (sum_j |f_{j,k}|)^q)^(1/q)`` at every sample."""
        inner = np.abs(self.values).sum(axis=0)
        if math.isinf(q):
            return inner.max(axis=0)
        return (inner**q).sum(axis=0) ** (1.0 / q)


def ellq_ell1(values: np.ndarray, q: float) -> np.ndarray:
    inner = np.abs(values).sum(axis=0)
    return (inner**q).sum(axis=0) ** (1.0 / q)


@dataclass(frozen=True, eq=False)
class BadPiece:
    """``b^l_{j,k}`` stored on its cube's samples ``[start, stop)`` only."""

    cube: DyadicCube
    start: int
    stop: int
    values: np.ndarray

    def expanded(self, N: int) -> np.ndarray:
        out = np.zeros(self.values.shape[:2] + (N,), dtype=self.values.dtype)
        out[:, :, self.start:self.stop] = self.values
        return out


@dataclass(frozen=True, eq=False)
class CZDecomposition:
    alpha: float
    gamma: float
    q: float
    scale: float
    cubes: tuple
    good: DoubleFamily
    bad_pieces: tuple
    degenerate: bool = False

    def reconstruct(self) -> np.ndarray:
        out = np.array(self.good.values, copy=True)
        for b in self.bad_pieces:
            out[:, :, b.start:b.stop] += b.values
        return out


def _side_exponent(n: int, grid: Grid) -> int:
    return -int(round(math.log2(n * grid.h)))


def cz_decompose(F: DoubleFamily, q: float, alpha: float, gamma: float) -> CZDecomposition:
    """Stopping-time decomposition at height ``gamma * alpha``.

    The family is first normalized to unit ``L^1`` mass of its pointwise
    ``l^q(l^1)`` norm; ``scale`` records the divisor. Maximal dyadic cubes
    whose average norm exceeds ``gamma * alpha`` are selected top-down from
    the whole torus. If the torus itself is selected the result is flagged
    ``degenerate``.
    """
    if not (1 < q < math.inf):
        raise DomainError(f"q={q} must lie in (1, inf)")
    if not (alpha > 0 and gamma > 0):
        raise DomainError(f"alpha={alpha} and gamma={gamma} must be positive")
    grid = F.grid
    N = grid.N
    norm = F.pointwise_norm(q)
    mass = float(grid.h * norm.sum())
    scale = mass if mass > 0 else 1.0
    f = F.values / scale
    nrm = norm / scale
    threshold = gamma * alpha

    covered = np.zeros(N, dtype=bool)
    found: list[tuple[int, int]] = []  # (samples per cube, cube index)
    n = N
    while n >= 1:
        means = nrm.reshape(N // n, n).mean(axis=1)
        free = ~covered.reshape(N // n, n)[:, 0]
        for idx in np.flatnonzero((means > threshold) & free):
            found.append((n, int(idx)))
            covered[idx * n:(idx + 1) * n] = True
        n //= 2

    good = np.array(f, copy=True)
    cubes, pieces = [], []
    for n, idx in found:
        start, stop = idx * n, (idx + 1) * n
        block = f[:, :, start:stop]
        mean = block.mean(axis=2, keepdims=True)
        bad = block - mean
        # second centering pass: near-flat blocks leave a roundoff mean that is
        # large next to the bad piece's own tiny mass
        drift = bad.mean(axis=2, keepdims=True)
        good[:, :, start:stop] = mean + drift
        cube = DyadicCube(_side_exponent(n, grid), idx)
        cubes.append(cube)
        pieces.append(BadPiece(cube, start, stop, bad - drift))
    degenerate = bool(found) and found[0][0] == N
    return CZDecomposition(
        alpha, gamma, q, scale, tuple(cubes), DoubleFamily(grid, F.j_min, F.k_min, good),
        tuple(pieces), degenerate,
    )


def cz_invariants(dec: CZDecomposition, F: DoubleFamily) -> dict:
    """Residuals of the decomposition's structural guarantees.

    Keys: ``disjoint``, ``measure_total`` (exact), ``measure_ok``,
    ``mean_residual`` (worst bad-piece mean relative to its ``L^1`` mass),
    ``reconstruction_residual`` (relative), ``good_ratio`` (sup of the good
    part's norm over ``2 gamma alpha``) and ``degenerate``.
    """
    grid = F.grid
    spans = sorted((b.start, b.stop) for b in dec.bad_pieces)
    disjoint = all(a[1] <= b[0] for a, b in zip(spans, spans[1:]))
    total = sum((c.measure for c in dec.cubes), Fraction(0))
    bound = 1 / (Fraction(dec.gamma) * Fraction(dec.alpha))
    mean_res = 0.0
    for b in dec.bad_pieces:
        l1 = np.abs(b.values).sum(axis=2)
        m = np.abs(b.values.sum(axis=2))
        ratio = np.where(l1 > 0, m / np.where(l1 > 0, l1, 1.0), 0.0)
        mean_res = max(mean_res, float(ratio.max()))
    f = F.values / dec.scale
    rec = dec.reconstruct()
    denom = max(float(np.abs(f).max()), 1e-300)
    rec_res = float(np.abs(rec - f).max()) / denom
    g = ellq_ell1(dec.good.values, dec.q)
    good_ratio = float(g.max()) / (2 * dec.gamma * dec.alpha)
    return {
        "disjoint": disjoint,
        "measure_total": total,
        "measure_ok": total <= bound,
        "mean_residual": mean_res,
        "reconstruction_residual": rec_res,
        "good_ratio": good_ratio,
        "degenerate": dec.degenerate,
        "cube_count": len(dec.cubes),
        "grid": grid.to_dict(),
    }


# --- the constant A_y ----------------------------------------------------------


def lambda_line(x: np.ndarray, j: int, sigma: float, y: float) -> np.ndarray:
    """``2^j / (1 + |2^j x - y|)^sigma`` on the real line."""
    s = 2.0**j
    return s * (1.0 + np.abs(s * x - y)) ** (-sigma)


@dataclass
class AyEstimate:
    """Lower estimate of ``A_y`` from finitely many ``w`` and levels ``j``."""

    y: float
    sigma: float
    value: float
    w_best: float
    j_range: tuple[int, int]
    w_count: int
    per_w: np.ndarray = field(repr=False, default=None)
    warning: str | None = None


def default_w_samples(count: int = 64) -> np.ndarray:
    """Log-spaced ``|w|`` over ``[1/2, 2]``, both signs (``count`` points in total).

    The integral is invariant under ``w -> 2w`` together with ``j -> j-1``,
    so two octaves per sign already cover the supremum over ``w``.
    """
    half = count // 2
    mags = np.geomspace(0.5, 2.0, half)
    return np.concatenate([-mags[::-1], mags])


def default_j_range(y: float, w_samples: Sequence[float]) -> tuple[int, int]:
    """Levels with ``2^j |w|`` from about ``2^-8`` up to ``2^8 (e + |y|)``."""
    w = np.abs(np.asarray(w_samples, dtype=float))
    lo = math.floor(math.log2(2.0**-8 / w.max()))
    hi = math.ceil(math.log2(2.0**8 * (math.e + abs(y)) / w.min()))
    return lo, hi


def doubled_j_range(j_range: tuple[int, int]) -> tuple[int, int]:
    lo, hi = j_range
    span = hi - lo + 1
    return lo - span // 2, hi + span - span // 2


def _node_levels(y: float, w: float) -> range:
    """Level set for quadrature nodes; fixed by ``(y, w)`` alone."""
    lo = math.floor(math.log2(2.0**-24 / abs(w)))
    hi = math.ceil(math.log2(2.0**24 * (math.e + abs(y)) / abs(w)))
    return range(lo, hi + 1)


def _geometric_offsets(start: float, stop: float, ratio: float) -> np.ndarray:
    count = max(2, int(math.ceil(math.log(stop / start) / math.log(ratio))) + 1)
    return start * ratio ** np.arange(count)


def quadrature_nodes(y: float, w: float, ratio: float = 1.03) -> np.ndarray:
    """Sorted nodes on ``{|x| >= 2|w|}`` resolving every kernel's scale.

    Each level contributes geometric grids around the peaks ``2^-j y`` and
    ``2^-j y + w`` starting at ``2^-j / 64``; a global geometric grid covers
    the rest out to ``10^6`` times the largest centre.
    """
    edge = 2.0 * abs(w)
    pieces = []
    reach = 1.0
    for j in _node_levels(y, w):
        width = 2.0 ** (-j)
        c0 = width * y
        offs = _geometric_offsets(width / 64, 2.0 * abs(c0) + 64.0 * width + 4.0 * edge, ratio)
        for c in (c0, c0 + w):
            pieces.append(c + offs)
            pieces.append(c - offs)
            pieces.append(np.array([c]))
        reach = max(reach, abs(c0) + abs(w))
    far = _geometric_offsets(edge, 1e6 * reach, ratio)
    pieces.extend([far, -far])
    x = np.unique(np.concatenate(pieces))
    return x[np.abs(x) >= edge]


def _integral_for_w(y: float, sigma: float, w: float, levels: range, ratio: float) -> float:
    x = quadrature_nodes(y, w, ratio)
    best = np.zeros_like(x)
    for j in levels:
        diff = np.abs(lambda_line(x - w, j, sigma, y) - lambda_line(x, j, sigma, y))
        np.maximum(best, diff, out=best)
    total = 0.0
    # integrate each half-line separately so the excluded gap is skipped
    for side in (x < 0, x > 0):
        xs, fs = x[side], best[side]
        if xs.size > 1:
            total += float(np.trapezoid(fs, xs))
    return total


def estimate_Ay(
    y: float,
    sigma: float = 2.0,
    j_range: tuple[int, int] | None = None,
    w_samples: Sequence[float] | None = None,
    ratio: float = 1.03,
) -> AyEstimate:
    """Lower estimate of ``sup_w int_{|x|>2|w|} sup_j |Lambda_j(x-w) - Lambda_j(x)| dx``.

    The integral is computed on the real line with a nonuniform trapezoid
    rule whose nodes depend only on ``(y, w)``, so enlarging ``j_range`` or
    adding ``w`` samples can only increase the estimate.
    """
    if not sigma > 1:
        raise DomainError(f"sigma={sigma} must exceed 1")
    if w_samples is None:
        w_samples = default_w_samples()
    w_arr = np.asarray(list(w_samples), dtype=float)
    if w_arr.size == 0:
        raise DomainError("w_samples must be nonempty")
    if j_range is None:
        j_range = default_j_range(y, w_arr[w_arr != 0] if np.any(w_arr != 0) else [1.0])
    lo, hi = int(j_range[0]), int(j_range[1])
    if hi < lo:
        raise DomainError(f"empty j_range {j_range}")
    levels = range(lo, hi + 1)
    per_w = np.zeros(w_arr.size)
    for i, w in enumerate(w_arr):
        # the integrand vanishes identically at w = 0
        per_w[i] = 0.0 if w == 0 else _integral_for_w(y, sigma, float(w), levels, ratio)
    warning = None
    nz = np.abs(w_arr[w_arr != 0])
    if nz.size:
        if 2.0**lo * nz.max() > 0.25 or 2.0**hi * nz.min() < 4.0 * (math.e + abs(y)):
            warning = (
                f"j_range {j_range} does not span 2^j|w| from below 1/4 to above 4(e+|y|)"
            )
    best = int(np.argmax(per_w))
    return AyEstimate(y, sigma, float(per_w[best]), float(w_arr[best]), (lo, hi), int(w_arr.size), per_w, warning)
