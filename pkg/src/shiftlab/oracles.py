"""Slow reference implementations used to cross-check the fast code paths.

Everything here is written as direct loops or sums over explicit index sets
and shares no arithmetic shortcuts with the production modules.
"""

from __future__ import annotations

import math

import numpy as np


def direct_dft(values: np.ndarray, L: float) -> np.ndarray:
    """``c_j = h sum_i f(x_i) exp(+2 pi i x_i j / L)`` for ``j`` in ``[-N/2, N/2)``."""
    N = len(values)
    h = L / N
    j = np.arange(-N // 2, N // 2)
    x = np.arange(N) * h
    E = np.exp(2j * np.pi * np.outer(j, x) / L)
    return h * (E @ values)


def direct_convolution(f: np.ndarray, g: np.ndarray, h: float) -> np.ndarray:
    N = len(f)
    out = np.zeros(N, dtype=complex)
    for i in range(N):
        for z in range(N):
            out[i] += f[(i - z) % N] * g[z]
    return out * h


def direct_dyadic_average(values: np.ndarray, h: float, k: int, y: float) -> np.ndarray:
    N = len(values)
    n = int(round(2.0 ** (-k) / h))
    s = int(math.floor(2.0 ** (-k) * y / h + 0.5))
    out = np.zeros(N, dtype=complex)
    for i in range(N):
        start = (i // n) * n + s
        acc = 0.0
        for r in range(n):
            acc += values[(start + r) % N]
        out[i] = acc / n
    return out


def direct_shifted_maximal(values: np.ndarray, h: float, L: float, y: float, t: float) -> np.ndarray:
    """Enumerate every dyadic cube explicitly and take the pointwise sup."""
    N = len(values)
    a = np.abs(values) ** t
    best = np.zeros(N)
    n = N
    while n >= 1:
        side = n * h
        s = int(math.floor(side * y / h + 0.5))
        for c in range(N // n):
            window = [(c * n + s + r) % N for r in range(n)]
            mean = sum(a[w] for w in window) / n
            for r in range(n):
                best[c * n + r] = max(best[c * n + r], mean)
        n //= 2
    return best ** (1.0 / t)


def tree_dyadic_maximal(values: np.ndarray) -> np.ndarray:
    """Unshifted dyadic maximal function by recursion over the cube tree."""
    a = np.abs(values).astype(float)
    N = len(a)
    out = np.zeros(N)

    def visit(lo, hi, inherited):
        total = float(np.sum(a[lo:hi]))
        mean = total / (hi - lo)
        cur = max(inherited, mean)
        if hi - lo == 1:
            out[lo] = cur
            return
        mid = (lo + hi) // 2
        visit(lo, mid, cur)
        visit(mid, hi, cur)

    visit(0, N, 0.0)
    return out


def brute_hl_maximal(values: np.ndarray, t: float) -> np.ndarray:
    """Sup over every window length and offset on the torus containing ``x``."""
    a = np.abs(values) ** t
    N = len(a)
    best = np.zeros(N)
    doubled = np.concatenate([a, a])
    for n in range(1, N + 1):
        means = np.array([doubled[s:s + n].sum() / n for s in range(N)])
        for r in range(n):
            # the window starting at s covers s + r
            best = np.maximum(best, np.roll(means, r))
    return best ** (1.0 / t)


def cell_kernel_direct(x_centre: float, h: float, L: float, scale: float, s: float, wraps: int) -> float:
    """Cell average of ``scale (1+|scale u|)^-s`` summed over ``|nu| <= wraps``."""
    def G(u):
        return math.copysign(1.0 - (1.0 + abs(u)) ** (1.0 - s), u) / (s - 1.0)

    total = 0.0
    for nu in range(-wraps, wraps + 1):
        lo = scale * (x_centre - h / 2 + nu * L)
        hi = scale * (x_centre + h / 2 + nu * L)
        total += G(hi) - G(lo)
    return total / h


def direct_peetre_t1(values: np.ndarray, h: float, L: float, sigma: float, k: int, shift_samples: int, wraps: int) -> np.ndarray:
    """``h sum_z K(z) |f(x - z - shift)|`` with an explicitly wrapped kernel."""
    N = len(values)
    a = np.abs(values)
    K = np.empty(N)
    for z in range(N):
        zc = z if z < N // 2 else z - N
        K[z] = cell_kernel_direct(zc * h, h, L, 2.0**k, sigma, wraps)
    out = np.zeros(N)
    for i in range(N):
        acc = 0.0
        for z in range(N):
            acc += K[z] * a[(i - z - shift_samples) % N]
        out[i] = acc * h
    return out


def brute_carleson(levels: dict, h: float, q: float) -> float:
    """Loop over every dyadic cube ``P`` and every level ``k`` explicitly."""
    N = len(next(iter(levels.values())))
    best = 0.0
    n = N
    while n >= 1:
        side = n * h
        for c in range(N // n):
            acc = 0.0
            for k, v in levels.items():
                if 2.0**k * side >= 1 - 1e-12:
                    for r in range(n):
                        acc += abs(v[c * n + r]) ** q
            best = max(best, acc / n)
        n //= 2
    return best ** (1.0 / q)


def brute_sharp_q2(levels: dict, h: float, q: float) -> np.ndarray:
    N = len(next(iter(levels.values())))
    best = np.zeros(N)
    n = N
    while n >= 1:
        side = n * h
        for c in range(N // n):
            acc = 0.0
            for k, v in levels.items():
                if 2.0**k * side < 1 - 1e-12:
                    p = np.abs(v[c * n:(c + 1) * n]) ** q
                    for zi in range(n):
                        for ui in range(n):
                            acc += abs(p[zi] - p[ui])
            val = acc / (n * n)
            for r in range(n):
                best[c * n + r] = max(best[c * n + r], val)
        n //= 2
    return best


def threshold_weak_l1(values: np.ndarray, h: float) -> float:
    """``sup_alpha alpha |{|f| >= alpha}|`` scanning every sample value as alpha."""
    a = np.abs(values)
    best = 0.0
    for alpha in a:
        best = max(best, alpha * h * int(np.count_nonzero(a >= alpha)))
    return best


def median_sharp_maximal(values: np.ndarray) -> np.ndarray:
    """Sharp maximal function with the cube median as the constant."""
    N = len(values)
    best = np.zeros(N)
    n = N
    while n >= 1:
        for c in range(N // n):
            block = values[c * n:(c + 1) * n]
            med = np.median(block.real) + 1j * np.median(block.imag)
            dev = float(np.mean(np.abs(block - med)))
            best[c * n:(c + 1) * n] = np.maximum(best[c * n:(c + 1) * n], dev)
        n //= 2
    return best


def brute_cz_cubes(norm: np.ndarray, threshold: float) -> list[tuple[int, int]]:
    """Maximal cubes by checking every cube against all of its ancestors."""
    N = len(norm)
    chosen = []
    n = N
    while n >= 1:
        for c in range(N // n):
            if norm[c * n:(c + 1) * n].mean() <= threshold:
                continue
            ancestor_hit = False
            m, idx = n * 2, c // 2
            while m <= N:
                if norm[idx * m:(idx + 1) * m].mean() > threshold:
                    ancestor_hit = True
                    break
                m, idx = m * 2, idx // 2
            if not ancestor_hit:
                chosen.append((c * n, (c + 1) * n))
        n //= 2
    return sorted(chosen)
