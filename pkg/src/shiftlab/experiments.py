"""Growth sweeps over ``y = e^K``, exponent fits and the verification suite."""

from __future__ import annotations

import csv
import io
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import DomainError, FilterKind, filter_multiplier
from .families import FamilySpec, SPARSE_IDS, build_psi_single, eta_for, iter_levels
from .norms import LevelAccumulator, carleson_from_levels, hardy_norm, lp_of_values
from .operators import ShiftedOpParams, _shifted_maximal_values, peetre_values

CSV_HEADER = ["y", "K", "lhs", "rhs", "ratio", "seconds"]

# functional name -> family kinds it accepts
FUNCTIONALS = {
    "mixed_raw": ("A", "B"),
    "mixed_peetre": ("A", "B"),
    "mixed_dyadic_shifted": ("A", "B"),
    "lp_sup_phi_shifted": ("PsiSingle",),
    "hardy": ("PsiSingle",),
    "carleson_psi": SPARSE_IDS,
    "carleson_psitilde_shifted": SPARSE_IDS,
}


@dataclass
class SweepSpec:
    """One growth experiment; the JSON config mirrors these fields."""

    family_id: str
    p: float
    q: float
    t: float
    sigma: float
    K_list: list
    lhs: str
    rhs: str
    eta_W: float | None = None
    eta_R: float | None = None
    zeta_spacing: int = 10
    oversample: int = 3
    record_seconds: bool = False

    def __post_init__(self):
        self.K_list = [int(k) for k in self.K_list]
        for name in (self.lhs, self.rhs):
            if name not in FUNCTIONALS:
                raise DomainError(f"unknown functional {name!r}; choose from {sorted(FUNCTIONALS)}")
            if self.family_id not in FUNCTIONALS[name]:
                raise DomainError(f"functional {name!r} does not apply to family {self.family_id!r}")
        for name, v in (("p", self.p), ("q", self.q), ("t", self.t), ("sigma", self.sigma)):
            if not v > 0:
                raise DomainError(f"{name}={v} must be positive")
        uses = {self.lhs, self.rhs}
        if "mixed_peetre" in uses:
            # hypothesis of the vector-valued Peetre bound in one dimension
            floor = 1.0 / min(self.p, self.q, self.t)
            if not self.sigma > floor:
                raise DomainError(f"sigma={self.sigma} must exceed 1/min(p,q,t) = {floor:g}")
            if math.isfinite(self.t) and not self.sigma * self.t > 1:
                raise DomainError(f"sigma*t = {self.sigma * self.t} <= 1")
        if "mixed_dyadic_shifted" in uses and not math.isfinite(self.t):
            raise DomainError("the dyadic maximal functional needs finite t")
        if uses & {"carleson_psi", "carleson_psitilde_shifted"} and math.isinf(self.q):
            raise DomainError("Carleson functionals need finite q")

    def family_spec(self, K: int) -> FamilySpec:
        return FamilySpec(
            self.family_id, math.exp(K), self.eta_W, self.eta_R, self.zeta_spacing,
            oversample=self.oversample,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("p", "q", "t", "sigma"):
            if math.isinf(d[key]):
                d[key] = "inf"
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        d = dict(d)
        for key in ("p", "q", "t", "sigma"):
            d[key] = float(d[key])
        return cls(**d)


@dataclass
class SweepRecord:
    y: float
    K: int
    lhs: float
    rhs: float
    ratio: float
    seconds: float
    grid: dict = field(default_factory=dict)
    skipped: str | None = None


@dataclass
class FitResult:
    exponent: float
    intercept: float
    r_squared: float
    n_points: int


# --- functionals ------------------------------------------------------------


def _eval_levels(spec: SweepSpec, fam: FamilySpec, names: list[str]) -> dict:
    grid = fam.grid()
    eta = eta_for(fam, grid)
    accs = {n: LevelAccumulator(grid.N, spec.q) for n in names}
    for k, f in iter_levels(fam, eta):
        for n in names:
            if n == "mixed_raw":
                accs[n].add(f.values)
            elif n == "mixed_peetre":
                params = ShiftedOpParams(spec.sigma, spec.t, k, fam.y)
                accs[n].add(peetre_values(f.values, grid, params))
            else:
                accs[n].add(_shifted_maximal_values(f.values, grid, fam.y, spec.t))
        del f
    return {n: lp_of_values(a.pointwise(), grid.h, spec.p) for n, a in accs.items()}, grid


def _eval_psi(spec: SweepSpec, fam: FamilySpec, names: list[str]):
    grid = fam.grid()
    psi = build_psi_single(grid)
    out = {}
    for n in names:
        if n == "hardy":
            out[n] = hardy_norm(psi, spec.p, (-2, 2))
        else:
            F = np.fft.fft(psi.values)
            nu = grid.tone_frequencies()
            best = np.zeros(grid.N)
            for m in range(1, fam.K + 1):
                mult = filter_multiplier(FilterKind.Phi, m, nu) * np.exp(-2j * np.pi * nu * 2.0 ** (-m) * fam.y)
                np.maximum(best, np.abs(np.fft.ifft(F * mult)), out=best)
            out[n] = lp_of_values(best, grid.h, spec.p)
    return out, grid


def _sparse_levels(F: np.ndarray, nu: np.ndarray, kind: FilterKind, js, y: float | None):
    for j in sorted(js, reverse=True):
        m = filter_multiplier(kind, j, nu)
        if y is not None:
            m = m * np.exp(-2j * np.pi * nu * 2.0 ** (-j) * y)
        yield j, np.fft.ifft(F * m)


def _eval_sparse(spec: SweepSpec, fam: FamilySpec, names: list[str]):
    from .families import build_sparse

    f = build_sparse(fam)
    grid = f.grid
    F = np.fft.fft(f.values)
    nu = grid.tone_frequencies()
    zetas = fam.zetas()
    # every nonzero piece lies within two levels of some zeta_k
    js = range(zetas[0] - 2, zetas[-1] + 3)
    out = {}
    for n in names:
        if n == "carleson_psi":
            levels = _sparse_levels(F, nu, FilterKind.Psi, js, None)
        else:
            levels = _sparse_levels(F, nu, FilterKind.PsiTilde, js, fam.y)
        out[n] = carleson_from_levels(grid, levels, spec.q)
    return out, grid


def evaluate_point(spec: SweepSpec, K: int) -> SweepRecord:
    """Build the family for ``y = e^K`` and evaluate both functionals."""
    start = time.perf_counter()
    fam = spec.family_spec(K)
    names = list(dict.fromkeys([spec.lhs, spec.rhs]))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if spec.family_id in ("A", "B"):
                vals, grid = _eval_levels(spec, fam, names)
            elif spec.family_id == "PsiSingle":
                vals, grid = _eval_psi(spec, fam, names)
            else:
                vals, grid = _eval_sparse(spec, fam, names)
    except (DomainError, MemoryError) as exc:
        return SweepRecord(fam.y, K, math.nan, math.nan, math.nan,
                           time.perf_counter() - start, {}, skipped=str(exc) or type(exc).__name__)
    lhs, rhs = vals[spec.lhs], vals[spec.rhs]
    meta = {"L": grid.L, "N": grid.N, "K_family": fam.K,
            "below_standing_assumption": fam.below_standing_assumption}
    return SweepRecord(fam.y, K, lhs, rhs, lhs / rhs, time.perf_counter() - start, meta)


def _point_job(args):
    spec_dict, K = args
    return evaluate_point(SweepSpec.from_dict(spec_dict), K)


def growth_sweep(spec: SweepSpec, jobs: int = 1) -> list[SweepRecord]:
    """Evaluate every ``K`` in ``spec.K_list``; output is ordered by ``K``."""
    Ks = sorted(set(spec.K_list))
    if jobs > 1 and len(Ks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_point_job, [(spec.to_dict(), K) for K in Ks]))
    else:
        records = [evaluate_point(spec, K) for K in Ks]
    return sorted(records, key=lambda r: r.K)


def fit_exponent(records) -> FitResult:
    """Least-squares slope of ``ln ratio`` against ``ln ln(e + y)``."""
    rows = [r for r in records if r.skipped is None and np.isfinite(r.ratio) and r.ratio > 0]
    if len({r.K for r in rows}) < 3:
        raise DomainError("a fit needs at least three points with distinct K")
    x = np.log(np.log(math.e + np.abs(np.array([r.y for r in rows]))))
    z = np.log(np.array([r.ratio for r in rows]))
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0:
        raise DomainError("regressor has zero variance")
    slope = float(xc @ (z - z.mean())) / sxx
    intercept = float(z.mean() - slope * x.mean())
    resid = z - (intercept + slope * x)
    sst = float(((z - z.mean()) ** 2).sum())
    r2 = 1.0 if sst == 0 else max(0.0, 1.0 - float(resid @ resid) / sst)
    return FitResult(slope, intercept, r2, len(rows))


def _fmt(v: float) -> str:
    return repr(float(v))


def sweep_csv(records, record_seconds: bool = False) -> str:
    """CSV text; the ``seconds`` field stays blank unless timing is requested."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        secs = f"{r.seconds:.3f}" if record_seconds else ""
        w.writerow([_fmt(r.y), r.K, _fmt(r.lhs), _fmt(r.rhs), _fmt(r.ratio), secs])
    return buf.getvalue()


def write_sweep(records, path, record_seconds: bool = False) -> FitResult | None:
    """Write the CSV and a ``.fit.json`` footer next to it."""
    with open(path, "w", newline="") as fh:
        fh.write(sweep_csv(records, record_seconds))
    try:
        fit = fit_exponent(records)
        footer = asdict(fit)
    except DomainError as exc:
        fit, footer = None, {"error": str(exc)}
    with open(str(path) + ".fit.json", "w") as fh:
        json.dump(footer, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return fit


# --- verification suite -------------------------------------------------------

SELECTORS = ("exact-identities", "oracles", "invariants", "all")


def run_verify_suite(selector: str = "all", seed: int = 0) -> dict:
    """Run named checks; returns ``{name: {"passed": bool, "residual": float}}``."""
    from . import verify

    if selector not in SELECTORS:
        raise DomainError(f"unknown selector {selector!r}; choose from {SELECTORS}")
    groups = {
        "exact-identities": verify.EXACT,
        "oracles": verify.ORACLES,
        "invariants": verify.INVARIANTS,
    }
    chosen = groups.values() if selector == "all" else [groups[selector]]
    rng = np.random.default_rng(seed)
    report = {}
    for group in chosen:
        for name, check in group.items():
            residual, tol = check(rng)
            report[name] = {"passed": bool(residual <= tol), "residual": float(residual), "tolerance": tol}
    return report
