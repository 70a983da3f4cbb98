"""Command-line interface.

Subcommands: ``fit`` (single fit, JSON result on stdout), ``simulate``
(seeded dataset files), ``replicate`` (full benchmark tables + figures),
``kkt`` (optimality certificate for given coefficients) and ``signcheck``
(sign-recovery experiment).  Exit codes: 0 success, 1 input error,
2 solver non-convergence (result still printed), 3 infeasible certificate.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .core import PenaltySpec, RngSpec, ValidationError
from .diag import kkt_check
from .harness import (
    ALL_METHODS,
    DEFAULT_COVS,
    DEFAULT_NOISES,
    ExperimentConfig,
    GridSpec,
    replicate_tables,
    sign_consistency_experiment,
)
from .lssolver import LsPenaltySpec, fit_lasso_ls, fit_scad_ls
from .objective import ScadParams
from .pipeline import ar_lasso, r_lasso
from .qrsolver import SolverConfig, fit_wrlasso, standardize_columns, unstandardize_coefficients
from .simgen import CovModel, NoiseModel, beta_star, make_dataset, read_dataset_csv, write_dataset_csv

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2
EXIT_INFEASIBLE = 3

_CLI_METHODS = {
    "rlasso": "r_lasso",
    "arlasso": "ar_lasso",
    "lasso": "lasso",
    "scad": "scad",
    "wrlasso": "wrlasso",
}


class CliInputError(Exception):
    """Bad flags or unreadable/malformed input files."""


def _read_vector_csv(path, flag: str) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            values = []
            for row in csv.reader(fh):
                values.extend(v for v in row if v.strip() != "")
        return np.array([float(v) for v in values])
    except OSError as exc:
        raise CliInputError(f"{flag}: cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise CliInputError(f"{flag}: malformed number in {path}: {exc}") from exc


def _load_dataset(path, flag: str = "--data"):
    try:
        return read_dataset_csv(path)
    except OSError as exc:
        raise CliInputError(f"{flag}: cannot read {path}: {exc}") from exc
    except (ValidationError, ValueError, StopIteration) as exc:
        raise CliInputError(f"{flag}: malformed dataset CSV {path}: {exc}") from exc


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _json_print(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

def cmd_fit(args) -> int:
    method = _CLI_METHODS[args.method]
    data = _load_dataset(args.data)
    std = standardize_columns(data)
    cfg = SolverConfig()
    lam = args.lam

    kkt_report = None
    if method == "wrlasso":
        if args.weights is None:
            raise CliInputError("--weights is required for method wrlasso")
        w = _read_vector_csv(args.weights, "--weights")
        if w.size != std.p:
            raise CliInputError(
                f"--weights: expected {std.p} weights, got {w.size}"
            )
        pen = PenaltySpec(tau=args.tau, lam=lam, weights=w)
        fit = fit_wrlasso(std, pen, cfg)
        kkt_report = fit.meta.get("kkt")
    elif method == "r_lasso":
        fit = r_lasso(std, args.tau, lam, cfg)
        kkt_report = fit.meta.get("kkt")
    elif method == "ar_lasso":
        lam_init = args.lambda_init if args.lambda_init is not None else lam
        fit = ar_lasso(std, args.tau, lam_init, lam, scad=ScadParams(lam=lam, a=args.scad_a), cfg=cfg)
        kkt_report = fit.meta.get("kkt")
    elif method == "lasso":
        fit = fit_lasso_ls(std, lam, cfg)
    elif method == "scad":
        fit = fit_scad_ls(std, LsPenaltySpec(lam, "scad", a=args.scad_a), cfg)
    else:  # pragma: no cover - mapping is exhaustive
        raise CliInputError(f"unknown method {args.method}")

    beta_orig = unstandardize_coefficients(fit.beta, std.column_scales)
    payload = {
        "schema": SCHEMA_VERSION,
        "version": __version__,
        "method": args.method,
        "tau": args.tau,
        "lambda": lam,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "objective": fit.objective,
        "beta": [float(b) for b in beta_orig],
        "beta_standardized": [float(b) for b in fit.beta],
        "support": [int(j) for j in fit.support],
        "kkt": kkt_report.to_dict() if kkt_report is not None else None,
    }
    _json_print(payload)
    return EXIT_OK if fit.converged else EXIT_NOT_CONVERGED


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _write_matrix_csv(path, arr: np.ndarray) -> None:
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    with open(path, "w", newline="") as fh:
        for row in arr:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def cmd_simulate(args) -> int:
    try:
        noise = NoiseModel.parse(args.noise)
        cov = CovModel.parse(args.cov)
    except ValidationError as exc:
        raise CliInputError(str(exc)) from exc
    rng = RngSpec(args.seed)
    data = make_dataset(args.n, args.p, cov, noise, rng)
    os.makedirs(args.out, exist_ok=True)
    paths = {
        "X": os.path.join(args.out, "X.csv"),
        "y": os.path.join(args.out, "y.csv"),
        "beta_star": os.path.join(args.out, "beta_star.csv"),
        "data": os.path.join(args.out, "data.csv"),
    }
    _write_matrix_csv(paths["X"], data.X)
    _write_matrix_csv(paths["y"], data.y[:, None])
    _write_matrix_csv(paths["beta_star"], beta_star(args.p)[:, None])
    write_dataset_csv(data, paths["data"])
    manifest = {
        "schema": SCHEMA_VERSION,
        "version": __version__,
        "n": args.n,
        "p": args.p,
        "noise": noise.label(),
        "cov": cov.label(),
        "seed": {"seed": rng.seed, "stream_id": rng.stream_id},
        "files": {name: {"path": os.path.basename(p), "sha256": _sha256(p)}
                  for name, p in paths.items()},
    }
    with open(os.path.join(args.out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {args.out}: X.csv y.csv beta_star.csv data.csv manifest.json")
    return EXIT_OK


# ---------------------------------------------------------------------------
# replicate
# ---------------------------------------------------------------------------

def _parse_methods(text: str) -> tuple[str, ...]:
    out = []
    for name in text.split(","):
        name = name.strip().lower()
        if not name:
            continue
        if name in _CLI_METHODS and _CLI_METHODS[name] in ALL_METHODS:
            out.append(_CLI_METHODS[name])
        elif name in ALL_METHODS:
            out.append(name)
        else:
            raise CliInputError(f"--methods: unknown method {name!r}")
    if not out:
        raise CliInputError("--methods: no methods given")
    return tuple(out)


def _config_from_args(args) -> ExperimentConfig:
    base = {}
    if args.config:
        try:
            with open(args.config) as fh:
                base = json.load(fh)
        except OSError as exc:
            raise CliInputError(f"--config: cannot read {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise CliInputError(f"--config: invalid JSON: {exc}") from exc
        if not isinstance(base, dict):
            raise CliInputError("--config: top level must be an object")
        base = dict(base.get("config", base))

    def pick(flag_value, key, default):
        if flag_value is not None:
            return flag_value
        return base.get(key, default)

    grid_cfg = base.get("grid", {})
    methods = pick(None, "methods", list(ALL_METHODS))
    if args.methods is not None:
        methods = list(_parse_methods(args.methods))
    return ExperimentConfig(
        n=int(pick(args.n, "n", 100)),
        p=int(pick(args.p, "p", 400)),
        tau=float(pick(args.tau, "tau", 0.5)),
        methods=tuple(methods),
        reps=int(pick(args.reps, "reps", 100)),
        tuning_reps=int(pick(args.tuning_reps, "tuning_reps", 100)),
        grid=GridSpec(
            num_points=int(pick(args.grid_points, "num_points", grid_cfg.get("num_points", 30))),
            span_decades=float(grid_cfg.get("span_decades", 3.0)),
        ),
        seed=RngSpec(args.seed),
        scad_a=float(base.get("scad_a", 3.7)),
        lla_iters=int(base.get("lla_iters", 3)),
    )


def cmd_replicate(args) -> int:
    config = _config_from_args(args)
    noises = DEFAULT_NOISES
    if args.noises:
        try:
            noises = tuple(NoiseModel.parse(t) for t in args.noises.split(","))
        except ValidationError as exc:
            raise CliInputError(f"--noises: {exc}") from exc
    covs = DEFAULT_COVS
    if args.covs:
        try:
            covs = tuple(CovModel.parse(t) for t in args.covs.split(","))
        except ValidationError as exc:
            raise CliInputError(f"--covs: {exc}") from exc
    paths = replicate_tables(
        config, args.out,
        methods=config.methods, noises=noises, covs=covs,
        jobs=args.jobs, smoke=args.smoke, figures=not args.no_figures,
    )
    # stamp output hashes into the manifest for idempotence checks
    with open(paths["manifest"]) as fh:
        manifest = json.load(fh)
    manifest["files"] = {
        name: {"path": os.path.basename(p), "sha256": _sha256(p)}
        for name, p in paths.items() if name != "manifest"
    }
    with open(paths["manifest"], "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for name, p in sorted(paths.items()):
        print(f"{name}: {p}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# kkt
# ---------------------------------------------------------------------------

def cmd_kkt(args) -> int:
    data = _load_dataset(args.data)
    beta = _read_vector_csv(args.beta, "--beta")
    if beta.size != data.p:
        raise CliInputError(f"--beta: expected {data.p} coefficients, got {beta.size}")
    if args.weights is not None:
        w = _read_vector_csv(args.weights, "--weights")
        if w.size != data.p:
            raise CliInputError(f"--weights: expected {data.p} weights, got {w.size}")
    else:
        w = np.ones(data.p)
    pen = PenaltySpec(tau=args.tau, lam=args.lam, weights=w)
    report = kkt_check(beta, data, pen, tol=args.tol)
    payload = {"schema": SCHEMA_VERSION, "version": __version__}
    payload.update(report.to_dict())
    _json_print(payload)
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


# ---------------------------------------------------------------------------
# signcheck
# ---------------------------------------------------------------------------

def cmd_signcheck(args) -> int:
    try:
        beta0_grid = [float(v) for v in args.beta0.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise CliInputError(f"--beta0: {exc}") from exc
    if not beta0_grid:
        raise CliInputError("--beta0: empty grid")
    result = sign_consistency_experiment(
        beta0_grid, reps=args.reps, rng=RngSpec(args.seed),
        n=args.n, s=args.s, grid_points=args.grid_points, jobs=args.jobs,
    )
    os.makedirs(args.out, exist_ok=True)
    curve_path = os.path.join(args.out, "recovery.csv")
    with open(curve_path, "w", newline="") as fh:
        methods = sorted(result.rates)
        fh.write("beta0," + ",".join(methods) + "\n")
        for i, b0 in enumerate(result.beta0_grid):
            fh.write(repr(float(b0)) + "," + ",".join(repr(result.rates[m][i]) for m in methods) + "\n")
    from .report import recovery_curves

    fig_path = recovery_curves(result, os.path.join(args.out, "recovery.png"))
    manifest = {
        "schema": SCHEMA_VERSION,
        "version": __version__,
        "seed": args.seed,
        "result": result.to_dict(),
        "files": {
            "recovery_csv": {"path": "recovery.csv", "sha256": _sha256(curve_path)},
            "recovery_png": {"path": "recovery.png"},
        },
    }
    with open(os.path.join(args.out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {curve_path} and {fig_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arlasso",
        description="Robust penalized quantile regression and benchmark harness.",
    )
    parser.add_argument("--version", action="version", version=f"arlasso {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit one estimator on a dataset CSV")
    p_fit.add_argument("--data", required=True, help="dataset CSV (header row, y first column)")
    p_fit.add_argument("--method", required=True, choices=sorted(_CLI_METHODS))
    p_fit.add_argument("--tau", type=float, default=0.5)
    p_fit.add_argument("--lambda", dest="lam", type=float, required=True)
    p_fit.add_argument("--lambda-init", dest="lambda_init", type=float, default=None,
                       help="first-stage penalty for arlasso (defaults to --lambda)")
    p_fit.add_argument("--weights", default=None, help="weights CSV for wrlasso")
    p_fit.add_argument("--scad-a", dest="scad_a", type=float, default=3.7)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.set_defaults(func=cmd_fit)

    p_sim = sub.add_parser("simulate", help="write a seeded synthetic dataset")
    p_sim.add_argument("--n", type=int, default=100)
    p_sim.add_argument("--p", type=int, default=400)
    p_sim.add_argument("--noise", default="gauss",
                       help="gauss[:var] | mn1 | mn2 | laplace[:scale] | t4_scaled | cauchy")
    p_sim.add_argument("--cov", default="identity", help="identity | ar1[:rho]")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_rep = sub.add_parser("replicate", help="replicate the benchmark tables")
    p_rep.add_argument("--out", required=True)
    p_rep.add_argument("--reps", type=int, default=None)
    p_rep.add_argument("--tuning-reps", dest="tuning_reps", type=int, default=None)
    p_rep.add_argument("--n", type=int, default=None)
    p_rep.add_argument("--p", type=int, default=None)
    p_rep.add_argument("--tau", type=float, default=None)
    p_rep.add_argument("--grid-points", dest="grid_points", type=int, default=None)
    p_rep.add_argument("--methods", default=None,
                       help="comma list: rlasso,arlasso,lasso,scad,l2_oracle")
    p_rep.add_argument("--noises", default=None, help="comma list of noise models")
    p_rep.add_argument("--covs", default=None, help="comma list of covariance models")
    p_rep.add_argument("--smoke", action="store_true",
                       help="reduced protocol: 25 reps, 25 tuning sets, 12 grid points")
    p_rep.add_argument("--jobs", type=int, default=1)
    p_rep.add_argument("--seed", type=int, default=0)
    p_rep.add_argument("--config", default=None, help="JSON config mirroring the manifest")
    p_rep.add_argument("--no-figures", action="store_true")
    p_rep.set_defaults(func=cmd_replicate)

    p_kkt = sub.add_parser("kkt", help="check optimality of given coefficients")
    p_kkt.add_argument("--data", required=True)
    p_kkt.add_argument("--beta", required=True, help="coefficient CSV")
    p_kkt.add_argument("--tau", type=float, default=0.5)
    p_kkt.add_argument("--lambda", dest="lam", type=float, required=True)
    p_kkt.add_argument("--weights", default=None)
    p_kkt.add_argument("--tol", type=float, default=1e-4)
    p_kkt.set_defaults(func=cmd_kkt)

    p_sign = sub.add_parser("signcheck", help="sign-recovery experiment (Cauchy noise)")
    p_sign.add_argument("--out", required=True)
    p_sign.add_argument("--beta0", default="0,0.5,1,2,4,8",
                        help="comma list of signal strengths")
    p_sign.add_argument("--reps", type=int, default=200)
    p_sign.add_argument("--n", type=int, default=100)
    p_sign.add_argument("--s", type=int, default=3)
    p_sign.add_argument("--grid-points", dest="grid_points", type=int, default=17)
    p_sign.add_argument("--jobs", type=int, default=1)
    p_sign.add_argument("--seed", type=int, default=0)
    p_sign.set_defaults(func=cmd_signcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    try:
        return args.func(args)
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
