"""Command-line surface.

Subcommands: ``simulate`` (planted datasets), ``fit`` (one model),
``benchmark`` (Monte Carlo sweeps), ``landscape`` (multi-start study),
``minorizers`` (surrogate curve dump).  Exit codes: 0 success or
converged, 2 usage error, 3 iteration budget exhausted (outputs still
written), 4 numerical failure.

All artifacts are deterministic given ``--seed``; wall-clock timings
are deliberately kept out of the files so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import benchmark as bench
from .dataio import model_record, read_dataset, write_dataset, write_json
from .errors import NumericalError
from .fitter import FitConfig, fit
from .fupdate import compress_gram
from .model import GroupedData
from .simgen import TruthModel, generate, haar_orthonormal, rng_stream

__all__ = ["main"]


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _tokens(text: str) -> list:
    return [t.strip() for t in text.split(",") if t.strip()]


def parse_feature_blocks(text: str, L: int) -> list:
    """Parse the ``--feature-blocks`` value.

    Syntax: semicolon-separated group entries, each either ``-`` (keep
    the group's isotropic variance) or comma-separated
    ``count:variance`` pairs.  A single entry without semicolons is
    applied to every group.
    """
    entries = text.split(";")
    if len(entries) == 1 and L > 1:
        entries = entries * L
    if len(entries) != L:
        raise ValueError(f"--feature-blocks needs 1 or {L} group entries, got {len(entries)}")
    out = []
    for entry in entries:
        entry = entry.strip()
        if entry in ("-", ""):
            out.append(None)
            continue
        spec = []
        for pair in entry.split(","):
            try:
                cnt, var = pair.split(":")
                spec.append((int(cnt), float(var)))
            except ValueError:
                raise ValueError(f"bad feature-block pair {pair!r}; expected count:variance") from None
        out.append(spec)
    return out


def _write_rows(path, fieldnames, rows) -> None:
    """CSV writer with shortest round-trip float formatting."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(fieldnames)
        for r in rows:
            w.writerow(
                [repr(float(r[f])) if isinstance(r[f], float) else r[f] for f in fieldnames]
            )


def _print_summary(rows, keys, value="value") -> None:
    groups: dict = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r[value])
    header = list(keys) + ["median", "p25", "p75"]
    print("  ".join(f"{h:>14s}" for h in header))
    for key in sorted(groups):
        vals = np.asarray(groups[key])
        stats = [np.median(vals), np.percentile(vals, 25), np.percentile(vals, 75)]
        cells = [f"{k:>14}" for k in key] + [f"{s:14.6g}" for s in stats]
        print("  ".join(cells))


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    lambdas = np.asarray(args.lambdas, dtype=float)
    sizes = tuple(args.group_sizes)
    variances = np.asarray(args.variances, dtype=float)
    if lambdas.size != args.k:
        raise ValueError(f"--lambdas must list k={args.k} values, got {lambdas.size}")
    if variances.size != len(sizes):
        raise ValueError("--variances must list one value per group")
    fb = parse_feature_blocks(args.feature_blocks, len(sizes)) if args.feature_blocks else None
    U = haar_orthonormal(args.d, args.k, rng_stream(args.seed, 1, 0, 0))
    truth = TruthModel(U=U, lam=lambdas, v=variances, group_sizes=sizes, feature_blocks=fb)
    data = generate(truth, args.seed, trial=0)
    os.makedirs(args.out, exist_ok=True)
    data_path = os.path.join(args.out, "data.csv")
    truth_path = os.path.join(args.out, "truth.json")
    write_dataset(data_path, data)
    write_json(
        truth_path,
        {
            "schema_version": 1,
            "d": truth.d,
            "k": truth.k,
            "L": truth.L,
            "F": truth.F.tolist(),
            "v": truth.v.tolist(),
            "lambda_true": truth.lam.tolist(),
            "U_true": truth.U.tolist(),
            "group_sizes": list(truth.group_sizes),
            "feature_blocks": fb,
            "seed": args.seed,
            "config_echo": {
                "d": args.d,
                "k": args.k,
                "lambdas": list(map(float, lambdas)),
                "group_sizes": list(sizes),
                "variances": list(map(float, variances)),
                "feature_blocks": args.feature_blocks,
            },
        },
    )
    print(f"wrote {data_path} ({data.n} samples, {data.d} features, {data.L} groups)")
    print(f"wrote {truth_path}")
    return 0


def _load_data(args) -> GroupedData:
    data, _ = read_dataset(args.data)
    if args.center:
        data = GroupedData(
            [B - B.mean(axis=1, keepdims=True) for B in data.blocks], data.group_sizes
        )
    if args.compress:
        data = compress_gram(data)
    return data


def cmd_fit(args) -> int:
    data = _load_data(args)
    cfg = FitConfig(
        rank=args.rank,
        v_method=args.method,
        max_iters=args.max_iters,
        tol=args.tol,
        init=args.init,
        block_rule=args.block_rule.replace("-", "_"),
        record_trace=args.trace,
        seed=args.seed,
        v_tol=args.v_tol,
        loglik_tol=args.loglik_tol,
    )
    result = fit(data, cfg)
    echo = {
        "data": args.data,
        "rank": args.rank,
        "method": args.method,
        "max_iters": args.max_iters,
        "tol": args.tol,
        "init": args.init,
        "block_rule": args.block_rule,
        "seed": args.seed,
        "center": args.center,
        "compress": args.compress,
        "v_tol": args.v_tol,
        "loglik_tol": args.loglik_tol,
    }
    rec = model_record(
        result.model,
        loglik=result.trace.loglik[-1],
        config_echo=echo,
        seed=args.seed,
    )
    if args.trace:
        # wall-times stay out of the artifact so reruns are byte-identical
        rec["trace"] = {
            "loglik": result.trace.loglik.tolist(),
            "f_change": result.trace.f_change.tolist(),
            "v": result.trace.v.tolist(),
        }
    write_json(args.out, rec)
    status = "converged" if result.converged else "max-iters reached"
    print(
        f"{status} after {result.iterations} iterations; "
        f"loglik {result.trace.loglik[-1]:.6f} "
        "(constant -n*d/2*ln(2*pi) omitted); "
        f"v_hat {np.array2string(result.model.v, precision=6)}"
    )
    print(f"wrote {args.out}")
    return 0 if result.converged else 3


def cmd_benchmark(args) -> int:
    rows = bench.run_benchmark(
        args.preset,
        trials=args.trials,
        sigma_grid=args.sigma_grid,
        methods=args.methods,
        seed=args.seed,
    )
    _write_rows(args.out, ["trial", "sigma2", "method", "metric", "value"], rows)
    print(f"wrote {args.out} ({len(rows)} rows)")
    _print_summary(rows, ("sigma2", "method", "metric"))
    return 0


def cmd_landscape(args) -> int:
    rows = []
    for method in args.methods:
        rows.extend(
            bench.run_landscape(
                sigma2_squared_grid=args.sigma2_squared_grid,
                n_random=args.random_inits,
                method=method,
                seed=args.seed,
                max_iters=args.max_iters,
            )
        )
    fields = ["sigma2_squared", "method", "init", "run", "iteration", "loglik", "gap", "converged"]
    _write_rows(args.out, fields, rows)
    print(f"wrote {args.out} ({len(rows)} rows)")
    finals = [r for r in rows if r["converged"]]
    if finals:
        _print_summary(
            [r for r in finals if r["iteration"] == 0], ("sigma2_squared", "method", "init"), "gap"
        )
    return 0


def cmd_minorizers(args) -> int:
    data, _ = read_dataset(args.data)
    rows = bench.minorizer_curves(data, args.rank, n_grid=args.grid_points, span=args.span)
    _write_rows(args.out, ["group", "v", "curve", "value"], rows)
    print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="heppcat",
        description="Probabilistic PCA with per-group heteroscedastic noise.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write a planted dataset (data.csv, truth.json)")
    sim.add_argument("--d", type=int, default=100)
    sim.add_argument("--k", type=int, default=3)
    sim.add_argument("--lambdas", type=_floats, default=[4.0, 2.0, 1.0])
    sim.add_argument("--group-sizes", type=_ints, default=[200, 800])
    sim.add_argument("--variances", type=_floats, default=[1.0, 4.0])
    sim.add_argument(
        "--feature-blocks",
        default=None,
        help="per-group 'count:variance' pairs, ';' between groups, '-' keeps a group "
        "isotropic (values starting with '-' need the --feature-blocks=VALUE form)",
    )
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", default=".")
    sim.set_defaults(func=cmd_simulate)

    fitp = sub.add_parser(
        "fit",
        help="fit one model to a dataset CSV",
        description="Fit one model to a dataset CSV.  Reported log-likelihoods "
        "omit the constant -n*d/2*ln(2*pi) term.",
    )
    fitp.add_argument("--data", required=True)
    fitp.add_argument("--rank", type=int, required=True)
    fitp.add_argument(
        "--method", default="em", choices=["rootfind", "em", "doc", "quad", "cubic"]
    )
    fitp.add_argument("--max-iters", type=int, default=1000)
    fitp.add_argument("--tol", type=float, default=1e-6)
    fitp.add_argument("--init", default="ppca", choices=["ppca", "random"])
    fitp.add_argument(
        "--block-rule", default="alternate", choices=["alternate", "max-improvement"]
    )
    fitp.add_argument("--seed", type=int, default=0)
    fitp.add_argument("--center", action="store_true", help="subtract each group's sample mean")
    fitp.add_argument("--compress", action="store_true", help="replace wide groups by Gram proxies")
    fitp.add_argument("--trace", action="store_true", help="store per-iteration history")
    fitp.add_argument("--v-tol", type=float, default=None, help="extra stop criterion on v change")
    fitp.add_argument(
        "--loglik-tol", type=float, default=None, help="extra stop criterion on likelihood change"
    )
    fitp.add_argument("--out", default="model.json")
    fitp.set_defaults(func=cmd_fit)

    ben = sub.add_parser("benchmark", help="Monte Carlo sweep over noise levels and methods")
    ben.add_argument("--preset", required=True, choices=list(bench.PRESETS))
    ben.add_argument("--trials", type=int, default=20)
    ben.add_argument("--sigma-grid", type=_floats, default=None)
    ben.add_argument("--methods", type=_tokens, default=None)
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--out", default="metrics.csv")
    ben.set_defaults(func=cmd_benchmark)

    land = sub.add_parser("landscape", help="multi-initialization likelihood study")
    land.add_argument("--sigma2-squared-grid", type=_floats, default=[0.1, 1.0, 2.0, 3.0])
    land.add_argument("--random-inits", type=int, default=20)
    land.add_argument("--methods", type=_tokens, default=["em"])
    land.add_argument("--max-iters", type=int, default=500)
    land.add_argument("--seed", type=int, default=0)
    land.add_argument("--out", default="gaps.csv")
    land.set_defaults(func=cmd_landscape)

    mino = sub.add_parser("minorizers", help="dump objective and surrogate curves per group")
    mino.add_argument("--data", required=True)
    mino.add_argument("--rank", type=int, required=True)
    mino.add_argument("--grid-points", type=int, default=200)
    mino.add_argument("--span", type=float, default=100.0)
    mino.add_argument("--out", default="curves.csv")
    mino.set_defaults(func=cmd_minorizers)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
