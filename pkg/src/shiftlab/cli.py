"""Command-line entry point: ``shiftlab <gen|apply|norm|sweep|cz|ay|verify> ...``.

Exit codes: 0 success, 1 usage or domain error, 2 verification failure.
Every run writes a ``.manifest.json`` next to its main output.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import platform
import shutil
import sys
import time
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .cz import DoubleFamily, cz_decompose, cz_invariants, default_w_samples, estimate_Ay
from .experiments import SELECTORS, SweepSpec, growth_sweep, run_verify_suite, write_sweep
from .families import FAMILY_IDS, FamilySpec, build, load_family, save_family
from .grid import DomainError, FilterKind, GridFunction, load_shl1, make_grid, save_shl1
from .norms import (
    VARIANTS,
    LevelAccumulator,
    MixedNormSpec,
    NormReport,
    carleson_norm,
    mixed_norm,
    weak_l1_norm,
)
from .operators import (
    ShiftedOpParams,
    hl_maximal,
    lambda_convolve,
    lp_conv_shifted,
    peetre_shifted,
    shifted_dyadic_maximal,
)

OUT_DIR_ENV = "SHIFTLAB_OUT_DIR"
OPS = ("identity", "peetre", "dyadic-maximal", "hl-maximal", "lp-shifted", "lambda")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would collide with the
    # verification-failure code
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _number(text: str) -> float:
    """Float parser that also accepts ``inf``."""
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, np.generic):
        return _jsonable(v.item())
    if hasattr(v, "numerator") and hasattr(v, "denominator") and not isinstance(v, int):
        return f"{v.numerator}/{v.denominator}"
    return v


def _dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_path(args, default_name: str) -> Path:
    base = Path(os.environ.get(OUT_DIR_ENV, "."))
    if args.out is None:
        return base / default_name
    p = Path(args.out)
    return p if p.is_absolute() else base / p


def _write_manifest(path: Path, args, inputs, outputs, started: float, extra=None) -> None:
    params = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    manifest = {
        "command": args.command,
        "argv": sys.argv[1:],
        "parameters": params,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "versions": {
            "shiftlab": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "started": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "wall_seconds": time.time() - started,
    }
    if extra:
        manifest.update(extra)
    _dump_json(manifest, str(path) + ".manifest.json")


# --- subcommands -------------------------------------------------------------


def cmd_gen(args, started) -> int:
    if (args.K is None) == (args.y is None):
        raise UsageError("gen: give exactly one of --K or --y")
    y = math.exp(args.K) if args.K is not None else args.y
    spec = FamilySpec(args.family, y, args.W, args.R, args.spacing, args.L, args.N, args.oversample)
    out = _out_path(args, f"family_{args.family}.shl1")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        obj = build(spec)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    save_family(out, spec, obj)
    _write_manifest(out, args, [], [out, str(out) + ".json"], started,
                    {"family": spec.to_dict(), "K_family": spec.K})
    print(out)
    return 0


def _apply_one(f: GridFunction, k: int, args) -> GridFunction:
    op = args.op
    if op == "peetre":
        return peetre_shifted(f, ShiftedOpParams(args.sigma, args.t, k, args.y), args.upsample)
    if op == "dyadic-maximal":
        return shifted_dyadic_maximal(f, args.y, args.t)
    if op == "hl-maximal":
        return hl_maximal(f, args.t)
    if op == "lp-shifted":
        return lp_conv_shifted(f, FilterKind(args.kind), k, args.y)
    return lambda_convolve(f, k, args.sigma, args.y)


def cmd_apply(args, started) -> int:
    src = Path(args.input)
    out = _out_path(args, f"{src.stem}.{args.op}.shl1")
    sidecar = Path(str(src) + ".json")
    outputs = [out]
    if args.op == "identity":
        save_shl1(out, load_shl1(src))
        if sidecar.exists():
            shutil.copyfile(sidecar, str(out) + ".json")
            outputs.append(Path(str(out) + ".json"))
    else:
        spec, F = load_family(src)
        results = []
        for k, f in F.items():
            results.append(_apply_one(f, k if args.k is None else args.k, args))
        save_shl1(out, results)
        side = {"spec": None if spec is None else spec.to_dict(), "k_min": F.k_min,
                "count": len(results), "op": args.op}
        _dump_json(side, str(out) + ".json")
        outputs.append(Path(str(out) + ".json"))
    _write_manifest(out, args, [src], outputs, started)
    print(out)
    return 0


def cmd_norm(args, started) -> int:
    spec = MixedNormSpec(args.p, args.q, args.variant)
    src = Path(args.input)
    _, F = load_family(src)
    if spec.variant == "strong":
        value = mixed_norm(F, spec.p, spec.q)
    elif spec.variant == "carleson":
        value = carleson_norm(F, spec.q)
    else:
        # weak-L1 of the pointwise l^q function
        la = LevelAccumulator(F.grid.N, spec.q)
        for f in F.functions:
            la.add(f.values)
        value = weak_l1_norm(GridFunction(F.grid, la.pointwise()))
    report = NormReport(value, spec, {"grid": F.grid.to_dict(), "k_min": F.k_min, "levels": len(F)})
    text = json.dumps(_jsonable(report.to_dict()), indent=2, sort_keys=True)
    print(text)
    if args.out is not None:
        out = _out_path(args, "norm.json")
        out.write_text(text + "\n")
        _write_manifest(out, args, [src], [out], started)
    else:
        _write_manifest(_out_path(args, "norm.json"), args, [src], [], started)
    return 0


def cmd_sweep(args, started) -> int:
    with open(args.config) as fh:
        spec = SweepSpec.from_dict(json.load(fh))
    out = _out_path(args, f"sweep_{spec.family_id}.csv")
    records = growth_sweep(spec, jobs=args.jobs)
    fit = write_sweep(records, out, spec.record_seconds)
    skipped = [{"K": r.K, "reason": r.skipped} for r in records if r.skipped]
    for s in skipped:
        print(f"skipped K={s['K']}: {s['reason']}", file=sys.stderr)
    _write_manifest(out, args, [args.config], [out, str(out) + ".fit.json"], started,
                    {"sweep": spec.to_dict(), "skipped": skipped,
                     "grids": {r.K: r.grid for r in records}})
    print(out if fit is None else f"{out} exponent={fit.exponent:.4f} r2={fit.r_squared:.4f}")
    return 0


def cmd_cz(args, started) -> int:
    if args.input is None:
        rng = np.random.default_rng(args.seed)
        grid = make_grid(1, args.random_N)
        values = rng.exponential(size=(args.nj, args.nk, args.random_N))
        values *= rng.random(values.shape) < 0.2
        F = DoubleFamily(grid, 0, 0, values)
        inputs = []
    else:
        functions = load_shl1(args.input)
        if len(functions) % args.nj:
            raise DomainError(f"{len(functions)} records do not split into --nj {args.nj} rows")
        grid = functions[0].grid
        nk = len(functions) // args.nj
        values = np.stack([f.values for f in functions]).reshape(args.nj, nk, grid.N)
        F = DoubleFamily(grid, 0, 0, values)
        inputs = [args.input]
    dec = cz_decompose(F, args.q, args.alpha, args.gamma)
    inv = cz_invariants(dec, F)
    h = F.grid.h
    report = {
        "alpha": dec.alpha,
        "gamma": dec.gamma,
        "q": dec.q,
        "scale": dec.scale,
        "cubes": [{"s": c.s, "j": c.j, "measure": c.measure,
                   "mass": float(np.abs(b.values).sum()) * h}
                  for c, b in zip(dec.cubes, dec.bad_pieces)],
        "invariants": inv,
    }
    out = _out_path(args, "cz.json")
    _dump_json(report, out)
    _write_manifest(out, args, inputs, [out], started)
    print(out)
    return 0


def cmd_ay(args, started) -> int:
    ys = [math.exp(K) for K in args.K] + list(args.y)
    if not ys:
        raise UsageError("ay: give at least one --K or --y")
    out = _out_path(args, "ay.csv")
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y", "A_y", "j_range", "w_count"])
        for y in ys:
            w_samples = None if args.w_count is None else default_w_samples(args.w_count)
            est = estimate_Ay(y, args.sigma, w_samples=w_samples)
            if est.warning:
                print(f"warning: {est.warning}", file=sys.stderr)
            w.writerow([repr(y), repr(est.value), f"{est.j_range[0]}:{est.j_range[1]}", est.w_count])
    _write_manifest(out, args, [], [out], started)
    print(out)
    return 0


def cmd_verify(args, started) -> int:
    report = run_verify_suite(args.suite, args.seed)
    ok = all(r["passed"] for r in report.values())
    print(json.dumps(_jsonable(report), indent=2, sort_keys=True))
    out = _out_path(args, f"verify_{args.suite}.json")
    _dump_json(report, out)
    _write_manifest(out, args, [], [out], started, {"passed": ok})
    return 0 if ok else 2


# --- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shiftlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="build a test family")
    p.add_argument("--family", required=True, choices=FAMILY_IDS)
    p.add_argument("--K", type=int, help="set y = e^K")
    p.add_argument("--y", type=_number)
    p.add_argument("--W", type=_number, help="bump bandwidth")
    p.add_argument("--R", type=_number, help="floor radius")
    p.add_argument("--spacing", type=int, default=10, help="zeta spacing of sparse families")
    p.add_argument("--L", type=_number)
    p.add_argument("--N", type=int)
    p.add_argument("--oversample", type=int, default=3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("apply", help="apply an operator to every record of a file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--op", required=True, choices=OPS)
    p.add_argument("--sigma", type=_number, default=2.0)
    p.add_argument("--t", type=_number, default=1.0)
    p.add_argument("--y", type=_number, default=0.0)
    p.add_argument("--k", type=int, help="level for every record (default: the record's own)")
    p.add_argument("--kind", choices=[e.value for e in FilterKind], default="phi")
    p.add_argument("--upsample", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("norm", help="evaluate a mixed norm of a family file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--p", type=_number, default=1.0)
    p.add_argument("--q", type=_number, default=2.0)
    p.add_argument("--variant", choices=VARIANTS, default="strong")
    p.add_argument("--out")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("sweep", help="run a growth sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("cz", help="Calderon-Zygmund decomposition report")
    p.add_argument("--in", dest="input", help="SHL1 file with nj*nk records, j-major")
    p.add_argument("--nj", type=int, default=1)
    p.add_argument("--nk", type=int, default=2, help="levels per row for --random input")
    p.add_argument("--random-N", type=int, default=256)
    p.add_argument("--q", type=_number, default=2.0)
    p.add_argument("--alpha", type=_number, default=1.0)
    p.add_argument("--gamma", type=_number, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cz)

    p = sub.add_parser("ay", help="estimate A_y over a list of y")
    p.add_argument("--K", type=int, nargs="*", default=[])
    p.add_argument("--y", type=_number, nargs="*", default=[])
    p.add_argument("--sigma", type=_number, default=2.0)
    p.add_argument("--w-count", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ay)

    p = sub.add_parser("verify", help="run the identity/oracle/invariant suite")
    p.add_argument("--suite", choices=SELECTORS, default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    started = time.time()
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, started)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DomainError, OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
