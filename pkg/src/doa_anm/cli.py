"""``doa-anm`` command line: simulate, estimate, bench.

Exit codes: 0 success, 2 usage or configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .array_model import ArrayGeometry, SourceConfig, simulate
from .bench import AGGREGATE_COLUMNS, TRIAL_COLUMNS, BenchSpec, aggregate, run_bench, write_csv
from .covariance import ConfigurationError, estimate_error_model, sample_ccm
from .retrieval import retrieve
from .solver import NumericError, SdpProblem, SolverOptions, solve

EXIT_USAGE = 2
EXIT_NUMERIC = 3

log = logging.getLogger("doa_anm")


class UsageError(Exception):
    pass


def _load_config(path) -> dict:
    try:
        cfg = io.load_json(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError(f"config {path} must be a JSON object")
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    try:
        geometry = ArrayGeometry.from_dict(cfg)
        sources = SourceConfig.from_dict(cfg)
        l = int(args.snapshots if args.snapshots is not None else cfg.get("l", 100))
        snaps = simulate(geometry, sources, l)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid config {args.config}: {exc!r}") from exc
    io.save_snapshots(snaps, args.output)
    return 0


def cmd_estimate(args) -> int:
    if args.method == "cc_anm" and args.eta is None:
        raise UsageError("cc_anm requires --eta")
    if args.method == "mcc_anm" and args.eta is not None:
        raise UsageError("--eta applies to cc_anm only; mcc_anm uses --kappa")
    try:
        snaps = io.load_snapshots(args.input)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot read snapshots {args.input}: {exc!r}") from exc

    opts = SolverOptions(tol=args.tol, max_iter=args.max_iter)
    ccm = sample_ccm(snaps)
    if args.method == "cc_anm":
        if args.eta < 0:
            raise UsageError("--eta must be non-negative")
        problem = (SdpProblem.exact(snaps.geometry, ccm.r_hat) if args.eta == 0
                   else SdpProblem.ball(snaps.geometry, ccm.r_hat, args.eta))
    else:
        if not 0 < args.kappa <= 0.5:
            raise UsageError("--kappa must lie in (0, 0.5]")
        problem = SdpProblem.whitened(snaps.geometry, ccm.r_hat, estimate_error_model(snaps, args.kappa))
    sol = solve(problem, opts)
    est = retrieve(sol.tlt, tau=args.tau)
    out = est.to_dict()
    out.update(status=sol.status.value, method=args.method, objective=sol.objective,
               iterations=sol.iterations)
    if args.method == "mcc_anm":
        out["beta_bound"] = problem.error_model.beta_bound
    print(json.dumps(out, indent=2))
    return 0


def cmd_bench(args) -> int:
    cfg = _load_config(args.config)
    try:
        spec = BenchSpec.from_dict(cfg)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid bench config {args.config}: {exc!r}") from exc
    if args.trials is not None:
        spec.trials = args.trials

    def progress(done, total):
        if done % max(1, total // 20) == 0 or done == total:
            log.info("bench: %d/%d trials", done, total)

    rows = run_bench(spec, n_jobs=args.jobs, progress=progress)
    write_csv(rows, args.output, TRIAL_COLUMNS)
    agg_path = args.aggregate or str(Path(args.output).with_suffix("")) + "_aggregate.csv"
    agg = aggregate(rows, k_true=spec.sources.k)
    write_csv(agg, agg_path, AGGREGATE_COLUMNS)
    for row in agg:
        log.info("%s L=%d rmse=%.4f deg, median solve %.4f s, failures %d",
                 row["method"], row["L"], row["rmse_deg"], row["median_solve_seconds"], row["failures"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="doa-anm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate L-shaped array snapshots from a JSON config")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("-l", "--snapshots", type=int, help="number of snapshots (overrides config 'l')")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate paired DOAs from a snapshot file")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-m", "--method", required=True, choices=["cc_anm", "mcc_anm"])
    p.add_argument("--eta", type=float, help="data-fit radius for cc_anm (0 = exact fit)")
    p.add_argument("--kappa", type=float, default=1e-4, help="tail probability for mcc_anm")
    p.add_argument("--tau", type=float, default=1e-3, help="relative eigenvalue threshold for K")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=20000)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bench", help="Monte-Carlo RMSE and solve-time sweep")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--output", required=True, help="per-trial CSV")
    p.add_argument("--aggregate", help="aggregate CSV (default: <output>_aggregate.csv)")
    p.add_argument("--trials", type=int, help="override the trial count")
    p.add_argument("-j", "--jobs", type=int, default=1)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"doa-anm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, ConfigurationError, np.linalg.LinAlgError) as exc:
        print(f"doa-anm: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
