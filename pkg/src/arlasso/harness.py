"""Monte Carlo experiment engine.

Implements the benchmark protocol: penalty levels tuned on independent
validation datasets (grid search for the lowest L2 coefficient error, median
of the per-dataset optima), seeded replicate cells for every noise model and
covariance design, metric aggregation, delimited/text table emission, and the
orthogonal-design experiment contrasting exact sign recovery of Lasso and
R-Lasso under heavy-tailed noise.

Every output is a pure function of (config, master seed): datasets come from
per-(purpose, replicate) RNG streams and aggregation order is fixed by
replicate index, so reruns are byte-identical, with or without worker
processes.
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .core import Dataset, RngSpec, ValidationError
from .diag import sign_consistency
from .lssolver import LassoLsSolver, LsPenaltySpec, fit_l2_oracle, fit_scad_ls
from .objective import ScadParams
from .pipeline import ar_lasso_from_pilot
from .qrsolver import (
    SolverConfig,
    WrLassoSolver,
    standardize_columns,
    unstandardize_coefficients,
)
from .simgen import CovModel, NoiseModel, gen_noise, make_dataset

ALL_METHODS = ("l2_oracle", "lasso", "scad", "r_lasso", "ar_lasso")
QUANTILE_METHODS = ("r_lasso", "ar_lasso")
TUNABLE_METHODS = ("lasso", "scad", "r_lasso", "ar_lasso")
DEFAULT_COVS = (CovModel.identity(), CovModel.ar1(0.5))
DEFAULT_NOISES = (
    NoiseModel.gauss(),
    NoiseModel.mn1(),
    NoiseModel.mn2(),
    NoiseModel.laplace(),
    NoiseModel.t4_scaled(),
    NoiseModel.cauchy(),
)


@dataclass(frozen=True)
class GridSpec:
    """Log-spaced penalty grid, bracketed by the zero-solution threshold."""

    num_points: int = 30
    span_decades: float = 3.0

    def __post_init__(self):
        if self.num_points < 1:
            raise ValidationError("grid needs at least one point")
        if self.span_decades <= 0:
            raise ValidationError("span_decades must be positive")

    def build(self, lam_max: float) -> np.ndarray:
        if lam_max <= 0:
            raise ValidationError("zero-solution threshold must be positive")
        if self.num_points == 1:
            return np.array([lam_max])
        return np.geomspace(lam_max * 10.0 ** (-self.span_decades), lam_max, self.num_points)


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark cell (or the base settings replicated across cells)."""

    n: int = 100
    p: int = 400
    cov: CovModel = CovModel.identity()
    noise: NoiseModel = NoiseModel.gauss()
    tau: float = 0.5
    methods: tuple = ALL_METHODS
    reps: int = 100
    tuning_reps: int = 100
    grid: GridSpec = GridSpec()
    seed: RngSpec = RngSpec(0)
    scad_a: float = 3.7
    lla_iters: int = 3
    max_failure_rate: float = 0.1
    solver: SolverConfig = SolverConfig()

    def __post_init__(self):
        if self.reps < 1 or self.tuning_reps < 1:
            raise ValidationError("reps and tuning_reps must be >= 1")
        unknown = set(self.methods) - set(ALL_METHODS)
        if unknown:
            raise ValidationError(f"unknown methods: {sorted(unknown)}")

    def cell_key(self) -> tuple[str, str]:
        return (self.noise.label(), self.cov.label())

    def smoke(self) -> "ExperimentConfig":
        """Reduced protocol: 25 replicates, 25 tuning sets, 12 grid points."""
        return replace(
            self,
            reps=min(self.reps, 25),
            tuning_reps=min(self.tuning_reps, 25),
            grid=GridSpec(num_points=min(self.grid.num_points, 12),
                          span_decades=self.grid.span_decades),
        )


@dataclass(frozen=True)
class MetricsRow:
    """Aggregated metrics for one (method, noise, covariance) cell.

    ``lam`` is the (final-stage) penalty level; ``lam_init`` is the pilot
    level of the two-step method and None elsewhere.
    """

    method: str
    noise: str
    cov: str
    lam: float
    reps: int
    l2_loss: float
    l2_se: float
    l1_loss: float
    l1_se: float
    fp: float
    fp_se: float
    fn: float
    fn_se: float
    n_failed: int
    valid: bool
    lam_init: float | None = None


@dataclass(frozen=True)
class RepRecord:
    """Per-replicate metrics; the raw material for the summary rows."""

    noise: str
    cov: str
    method: str
    rep: int
    l2_loss: float
    l1_loss: float
    fp: int
    fn: int
    converged: bool
    iterations: int


# ---------------------------------------------------------------------------
# penalty grids
# ---------------------------------------------------------------------------

def quantile_zero_threshold(data: Dataset, tau: float, weights: np.ndarray | None = None) -> float:
    """Smallest lam making beta = 0 stationary for the quantile objective."""
    g = tau - (data.y <= 0.0)
    corr = np.abs(data.X.T @ g)
    if weights is None:
        return float(corr.max() / data.n)
    w = np.asarray(weights, dtype=float)
    ratios = np.where(w > 0, corr / (data.n * np.maximum(w, 1e-300)), np.inf)
    finite = ratios[np.isfinite(ratios)]
    if finite.size == 0:
        raise ValidationError("no positive weights; zero threshold undefined")
    return float(finite.max())


def ls_zero_threshold(data: Dataset) -> float:
    """Smallest lam making beta = 0 stationary for the LS-Lasso objective."""
    return float(np.max(np.abs(data.X.T @ data.y)) / data.n)


def build_grids(config: ExperimentConfig, methods) -> dict[str, np.ndarray]:
    """Pick each method's grid from its zero-solution threshold on a pilot set."""
    pilot = make_dataset(
        config.n, config.p, config.cov, config.noise,
        config.seed.child("pilot", *config.cell_key()),
    )
    pilot = standardize_columns(pilot)
    grids: dict[str, np.ndarray] = {}
    for method in methods:
        if method == "l2_oracle":
            continue
        if method in QUANTILE_METHODS:
            lam_max = quantile_zero_threshold(pilot, config.tau)
        else:
            lam_max = ls_zero_threshold(pilot)
        grids[method] = config.grid.build(lam_max)
    return grids


# ---------------------------------------------------------------------------
# tuning
# ---------------------------------------------------------------------------

def _coef_l2_error(fit_beta: np.ndarray, data: Dataset) -> float:
    beta_orig = unstandardize_coefficients(fit_beta, data.column_scales)
    return float(np.linalg.norm(beta_orig - data.true_beta))


def _tuning_errors_one_dataset(args) -> dict[str, np.ndarray]:
    """Validation-set L2 errors over each method's grid (ascending order)."""
    config, grids, rep = args
    data = make_dataset(
        config.n, config.p, config.cov, config.noise,
        config.seed.child("tune", *config.cell_key(), rep),
    )
    data = standardize_columns(data)
    errors: dict[str, np.ndarray] = {}

    if "r_lasso" in grids:
        solver = WrLassoSolver(data, config.solver)
        state = None
        fits = {}
        for lam in grids["r_lasso"][::-1]:
            fit, state = solver.fit(_pen(config.tau, lam, data.p), state=state)
            fits[lam] = fit
        errors["r_lasso"] = np.array([
            _coef_l2_error(fits[lam].beta, data) if fits[lam].converged else np.inf
            for lam in grids["r_lasso"]
        ])

    if "lasso" in grids or "scad" in grids:
        ls = LassoLsSolver(data, config.solver)
        if "lasso" in grids:
            errs = []
            beta_prev = None
            for lam in grids["lasso"][::-1]:
                fit = ls.fit(lam, beta0=beta_prev)
                beta_prev = fit.beta
                errs.append(_coef_l2_error(fit.beta, data) if fit.converged else np.inf)
            errors["lasso"] = np.array(errs[::-1])
        if "scad" in grids:
            errs = []
            beta_prev = None
            for lam in grids["scad"][::-1]:
                fit = fit_scad_ls(
                    data,
                    LsPenaltySpec(lam, "scad", a=config.scad_a, lla_iters=config.lla_iters),
                    config.solver,
                    beta0=beta_prev,
                )
                beta_prev = fit.beta
                errs.append(_coef_l2_error(fit.beta, data) if fit.converged else np.inf)
            errors["scad"] = np.array(errs[::-1])
    return errors


def _pen(tau: float, lam: float, p: int):
    from .core import PenaltySpec

    return PenaltySpec(tau=tau, lam=lam, weights=np.ones(p))


def _ar_tuning_errors_one_dataset(args) -> np.ndarray:
    """Second-stage L2 errors over the grid, pilot fixed at lam_init."""
    config, grid, lam_init, rep = args
    data = make_dataset(
        config.n, config.p, config.cov, config.noise,
        config.seed.child("tune", *config.cell_key(), rep),
    )
    data = standardize_columns(data)
    solver = WrLassoSolver(data, config.solver)
    pilot, _ = solver.fit(_pen(config.tau, lam_init, data.p))
    if not pilot.converged:
        return np.full(grid.size, np.inf)
    errs = []
    state = None
    for lam in grid[::-1]:
        final, state = ar_lasso_from_pilot(
            solver, pilot, config.tau, lam,
            scad=ScadParams(lam=lam, a=config.scad_a), state=state,
        )
        errs.append(_coef_l2_error(final.beta, data) if final.converged else np.inf)
    return np.array(errs[::-1])


def _median_pick(grid: np.ndarray, per_dataset_errors, method: str) -> float:
    picks = []
    for rep, errs in enumerate(per_dataset_errors):
        if not np.isfinite(errs).any():
            raise RuntimeError(f"tuning dataset {rep}: every grid point failed for {method}")
        picks.append(grid[int(np.argmin(errs))])
    return float(np.median(picks))


def tune_methods(config: ExperimentConfig, methods, jobs: int = 1) -> dict:
    """Tuned penalty level per method: median over validation-set optima.

    All methods see the same validation datasets.  On each dataset the grid
    value minimizing the L2 coefficient error is recorded (diverged fits are
    excluded; a dataset with no usable grid point raises); the tuned value is
    the per-method median across datasets.

    The two-step method is tuned sequentially, giving a pair: the pilot level
    is R-Lasso's own tuned value, and the second-stage level is then grid
    searched with that pilot held fixed.  Its entry is (lam_init, lam_final).
    """
    methods = [m for m in methods if m != "l2_oracle"]
    if not methods:
        return {}
    want_ar = "ar_lasso" in methods
    phase1 = [m for m in methods if m != "ar_lasso"]
    if want_ar and "r_lasso" not in phase1:
        phase1.append("r_lasso")
    grids = build_grids(config, list(dict.fromkeys(phase1 + (["ar_lasso"] if want_ar else []))))

    tuned: dict = {}
    if phase1:
        sub = {m: grids[m] for m in phase1}
        tasks = [(config, sub, rep) for rep in range(config.tuning_reps)]
        results = _map_tasks(_tuning_errors_one_dataset, tasks, jobs)
        for m in phase1:
            tuned[m] = _median_pick(grids[m], [r[m] for r in results], m)

    if want_ar:
        lam_init = tuned["r_lasso"]
        tasks = [
            (config, grids["ar_lasso"], lam_init, rep)
            for rep in range(config.tuning_reps)
        ]
        results = _map_tasks(_ar_tuning_errors_one_dataset, tasks, jobs)
        lam_final = _median_pick(grids["ar_lasso"], results, "ar_lasso")
        tuned["ar_lasso"] = (lam_init, lam_final)
        if "r_lasso" not in methods:
            tuned.pop("r_lasso")
    return tuned


def tune_lambda(method: str, config: ExperimentConfig, jobs: int = 1):
    """Tuned penalty for one method: a float, or a (pilot, final) pair for
    the two-step method."""
    if method == "l2_oracle":
        raise ValidationError("l2_oracle takes no penalty; nothing to tune")
    return tune_methods(config, [method], jobs=jobs)[method]


# ---------------------------------------------------------------------------
# replicate cells
# ---------------------------------------------------------------------------

def _fit_method(data: Dataset, method: str, lam: float, config: ExperimentConfig):
    if method == "l2_oracle":
        support = np.flatnonzero(data.true_beta)
        return fit_l2_oracle(data, support)
    if method == "lasso":
        return LassoLsSolver(data, config.solver).fit(lam)
    if method == "scad":
        spec = LsPenaltySpec(lam, "scad", a=config.scad_a, lla_iters=config.lla_iters)
        return fit_scad_ls(data, spec, config.solver)
    if method == "r_lasso":
        solver = WrLassoSolver(data, config.solver)
        fit, _ = solver.fit(_pen(config.tau, lam, data.p))
        return fit
    if method == "ar_lasso":
        lam_init, lam_final = _split_pair(lam)
        solver = WrLassoSolver(data, config.solver)
        pilot, _ = solver.fit(_pen(config.tau, lam_init, data.p))
        if not pilot.converged:
            return pilot
        final, _ = ar_lasso_from_pilot(
            solver, pilot, config.tau, lam_final,
            scad=ScadParams(lam=lam_final, a=config.scad_a),
        )
        return final
    raise ValidationError(f"unknown method {method!r}")


def _split_pair(lam) -> tuple[float, float]:
    """A scalar means both stages share the level; a pair is (init, final)."""
    if np.isscalar(lam):
        return float(lam), float(lam)
    lam_init, lam_final = lam
    return float(lam_init), float(lam_final)


def _run_replicate(args) -> RepRecord:
    config, method, lam, rep = args
    data = make_dataset(
        config.n, config.p, config.cov, config.noise,
        config.seed.child("main", *config.cell_key(), rep),
    )
    data = standardize_columns(data)
    fit = _fit_method(data, method, lam, config)
    beta_orig = unstandardize_coefficients(fit.beta, data.column_scales)
    report = sign_consistency(beta_orig, data.true_beta)
    noise_label, cov_label = config.cell_key()
    return RepRecord(
        noise=noise_label,
        cov=cov_label,
        method=method,
        rep=rep,
        l2_loss=float(np.linalg.norm(beta_orig - data.true_beta)),
        l1_loss=float(np.sum(np.abs(beta_orig - data.true_beta))),
        fp=report.fp,
        fn=report.fn,
        converged=bool(fit.converged),
        iterations=int(fit.iterations),
    )


def run_cell(
    config: ExperimentConfig,
    method: str,
    lam: float,
    jobs: int = 1,
) -> tuple[MetricsRow, list[RepRecord]]:
    """Run the seeded replicates of one cell at a fixed penalty level.

    Replicates whose fit did not converge are recorded but excluded from the
    aggregates; a cell with more than ``max_failure_rate`` failures is marked
    invalid.
    """
    tasks = [(config, method, lam, rep) for rep in range(config.reps)]
    records = _map_tasks(_run_replicate, tasks, jobs)
    ok = [r for r in records if r.converged]
    n_failed = config.reps - len(ok)
    valid = n_failed <= config.max_failure_rate * config.reps and len(ok) > 0

    def agg(getter):
        vals = np.array([getter(r) for r in ok], dtype=float)
        if vals.size == 0:
            return float("nan"), float("nan")
        se = float(np.std(vals, ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
        return float(np.mean(vals)), se

    l2, l2_se = agg(lambda r: r.l2_loss)
    l1, l1_se = agg(lambda r: r.l1_loss)
    fp, fp_se = agg(lambda r: r.fp)
    fn, fn_se = agg(lambda r: r.fn)
    noise_label, cov_label = config.cell_key()
    lam_init, lam_final = _split_pair(lam)
    row = MetricsRow(
        method=method, noise=noise_label, cov=cov_label, lam=lam_final,
        reps=len(ok), l2_loss=l2, l2_se=l2_se, l1_loss=l1, l1_se=l1_se,
        fp=fp, fp_se=fp_se, fn=fn, fn_se=fn_se,
        n_failed=n_failed, valid=valid,
        lam_init=lam_init if method == "ar_lasso" else None,
    )
    return row, records


def _map_tasks(fn, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


# ---------------------------------------------------------------------------
# full table replication
# ---------------------------------------------------------------------------

SUMMARY_COLUMNS = [
    "noise", "cov", "method", "lambda", "lambda_init", "reps", "l2_loss", "l2_se",
    "l1_loss", "l1_se", "fp", "fp_se", "fn", "fn_se", "n_failed", "valid",
]
REPLICATE_COLUMNS = [
    "noise", "cov", "method", "rep", "l2_loss", "l1_loss", "fp", "fn",
    "converged", "iterations",
]


def replicate_tables(
    config: ExperimentConfig,
    out_dir,
    methods=None,
    noises=DEFAULT_NOISES,
    covs=DEFAULT_COVS,
    jobs: int = 1,
    smoke: bool = False,
    figures: bool = True,
) -> dict:
    """Run every (noise x covariance x method) cell and emit the table artifact.

    Writes summary.csv, replicates.csv, table.txt, manifest.json and (when
    ``figures``) per-covariance boxplot figures of the replicate L2 losses.
    Deterministic: identical (config, seed) reproduce identical bytes for the
    delimited outputs.
    """
    import os

    os.makedirs(out_dir, exist_ok=True)
    if smoke:
        config = config.smoke()
    methods = list(methods if methods is not None else config.methods)

    rows: list[MetricsRow] = []
    records: list[RepRecord] = []
    tuned_by_cell: dict[str, dict[str, float]] = {}
    grids_by_cell: dict[str, dict[str, list[float]]] = {}
    for noise in noises:
        for cov in covs:
            cell_cfg = replace(config, noise=noise, cov=cov, methods=tuple(methods))
            tuned = tune_methods(cell_cfg, methods, jobs=jobs)
            key = "|".join(cell_cfg.cell_key())
            tuned_by_cell[key] = tuned
            grids_by_cell[key] = {
                m: [float(v) for v in g] for m, g in build_grids(cell_cfg, methods).items()
            }
            for method in methods:
                lam = tuned.get(method, 0.0)
                row, recs = run_cell(cell_cfg, method, lam, jobs=jobs)
                rows.append(row)
                records.extend(recs)

    paths = {
        "summary": os.path.join(out_dir, "summary.csv"),
        "replicates": os.path.join(out_dir, "replicates.csv"),
        "table": os.path.join(out_dir, "table.txt"),
        "manifest": os.path.join(out_dir, "manifest.json"),
    }
    _write_summary_csv(paths["summary"], rows)
    _write_replicates_csv(paths["replicates"], records)
    with open(paths["table"], "w") as fh:
        fh.write(format_text_tables(rows, methods))
    manifest = {
        "schema": 1,
        "version": __version__,
        "seed": {"seed": config.seed.seed, "stream_id": config.seed.stream_id},
        "config": _config_dict(config, methods),
        "grids": grids_by_cell,
        "tuned_lambda": tuned_by_cell,
    }
    with open(paths["manifest"], "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if figures:
        from .report import loss_boxplots

        for cov in covs:
            label = cov.label()
            fname = f"l2_boxplot_{label.replace('(', '_').replace(')', '').replace('.', 'p')}.png"
            path = os.path.join(out_dir, fname)
            loss_boxplots(records, cov_label=label, out_path=path)
            paths[f"figure_{label}"] = path
    return paths


def _config_dict(config: ExperimentConfig, methods) -> dict:
    return {
        "n": config.n,
        "p": config.p,
        "tau": config.tau,
        "methods": list(methods),
        "reps": config.reps,
        "tuning_reps": config.tuning_reps,
        "grid": {"num_points": config.grid.num_points, "span_decades": config.grid.span_decades},
        "scad_a": config.scad_a,
        "lla_iters": config.lla_iters,
        "max_failure_rate": config.max_failure_rate,
    }


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_summary_csv(path, rows: list[MetricsRow]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(v) for v in [
                r.noise, r.cov, r.method, r.lam,
                "" if r.lam_init is None else r.lam_init,
                r.reps, r.l2_loss, r.l2_se,
                r.l1_loss, r.l1_se, r.fp, r.fp_se, r.fn, r.fn_se,
                r.n_failed, r.valid,
            ]) + "\n")


def _write_replicates_csv(path, records: list[RepRecord]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(REPLICATE_COLUMNS) + "\n")
        for r in records:
            fh.write(",".join(_fmt(v) for v in [
                r.noise, r.cov, r.method, r.rep, r.l2_loss, r.l1_loss,
                r.fp, r.fn, r.converged, r.iterations,
            ]) + "\n")


def format_text_tables(rows: list[MetricsRow], methods) -> str:
    """Text tables mirroring the benchmark layout: one block per covariance."""
    by_cov: dict[str, list[MetricsRow]] = {}
    for r in rows:
        by_cov.setdefault(r.cov, []).append(r)
    out = []
    for cov_label, cov_rows in by_cov.items():
        title = (
            "Simulation results with independent covariates"
            if cov_label == "identity"
            else f"Simulation results with correlated covariates ({cov_label})"
        )
        out.append(title)
        header = f"{'noise':<10}{'metric':<10}" + "".join(f"{m:>14}" for m in methods)
        out.append(header)
        out.append("-" * len(header))
        noises = []
        for r in cov_rows:
            if r.noise not in noises:
                noises.append(r.noise)
        cell = {(r.noise, r.method): r for r in cov_rows}
        for noise in noises:
            for metric, label in (("l2_loss", "L2 loss"), ("l1_loss", "L1 loss"), ("fpfn", "FP, FN")):
                vals = []
                for m in methods:
                    r = cell.get((noise, m))
                    if r is None:
                        vals.append("")
                    elif metric == "fpfn":
                        vals.append(f"{r.fp:.2f}, {r.fn:.2f}")
                    else:
                        vals.append(f"{getattr(r, metric):.3f}")
                name = noise if metric == "l2_loss" else ""
                out.append(f"{name:<10}{label:<10}" + "".join(f"{v:>14}" for v in vals))
        out.append("")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# sign-consistency experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SignExperimentResult:
    """Exact-sign recovery rates by signal strength for each method."""

    beta0_grid: tuple
    rates: dict
    best_lambda: dict
    n: int
    s: int
    m: int
    p: int
    reps: int

    def to_dict(self) -> dict:
        return {
            "beta0_grid": list(self.beta0_grid),
            "rates": {k: list(v) for k, v in self.rates.items()},
            "best_lambda": {k: list(v) for k, v in self.best_lambda.items()},
            "n": self.n, "s": self.s, "m": self.m, "p": self.p, "reps": self.reps,
        }


def make_orthogonal_sparse_design(n: int, s: int, rng: RngSpec) -> tuple[np.ndarray, int]:
    """Design for the suboptimality demonstration.

    Signal block S: n x s with S'S = n I (orthonormalized Gaussian columns
    scaled to norm sqrt(n)).  Noise block Q: one column per row-block of size
    m = round(sqrt(n)); each column is supported on its own block (disjoint
    supports), orthogonal to S by construction, and scaled to norm sqrt(n),
    so entries are of order n^(1/4).  Returns (X, m).
    """
    m = int(round(np.sqrt(n)))
    k_blocks = n // m
    if k_blocks < 1:
        raise ValidationError("n too small for the block design")
    if s >= m:
        raise ValidationError(f"need s < block size m={m} to orthogonalize; got s={s}")
    g = rng.generator()
    # orthonormal signal columns scaled to norm sqrt(n)
    base = g.standard_normal((n, s))
    q_mat, _ = np.linalg.qr(base)
    S = q_mat[:, :s] * np.sqrt(n)
    cols = [S]
    for b in range(k_blocks):
        rows = slice(b * m, (b + 1) * m)
        for _ in range(50):
            v = g.standard_normal(m)
            Sb = S[rows]
            v = v - Sb @ np.linalg.lstsq(Sb, v, rcond=None)[0]
            norm = np.linalg.norm(v)
            if norm > 1e-8:
                break
        else:
            raise ValidationError(f"could not build a noise column for block {b}")
        q = np.zeros(n)
        q[rows] = v / norm * np.sqrt(n)
        cols.append(q[:, None])
    X = np.hstack(cols)
    return X, m


def _sign_worker(args):
    X, s, tau, beta0, grids, rep, seed, solver_cfg = args
    n, p = X.shape
    beta_true = np.zeros(p)
    beta_true[:s] = beta0
    signal = X[:, :s].sum(axis=1) * beta0
    eps = gen_noise(NoiseModel.cauchy(), n, seed.child("noise", rep))
    y = signal + eps
    from .core import validate_dataset

    data = validate_dataset(y, X, true_beta=beta_true)
    out = {}
    if "r_lasso" in grids:
        solver = WrLassoSolver(data, solver_cfg)
        hits = []
        state = None
        for lam in grids["r_lasso"][::-1]:
            fit, state = solver.fit(_pen(tau, lam, p), state=state)
            ok = bool(fit.converged) and sign_consistency(fit.beta, beta_true).exact_sign
            hits.append(ok)
        out["r_lasso"] = np.array(hits[::-1], dtype=bool)
    if "lasso" in grids:
        ls = LassoLsSolver(data, solver_cfg)
        hits = []
        beta_prev = None
        for lam in grids["lasso"][::-1]:
            fit = ls.fit(lam, beta0=beta_prev)
            beta_prev = fit.beta
            ok = bool(fit.converged) and sign_consistency(fit.beta, beta_true).exact_sign
            hits.append(ok)
        out["lasso"] = np.array(hits[::-1], dtype=bool)
    return out


def sign_consistency_experiment(
    beta0_grid,
    reps: int = 200,
    rng: RngSpec = RngSpec(0),
    n: int = 100,
    s: int = 3,
    methods=("lasso", "r_lasso"),
    grid_points: int = 17,
    span_decades: float = 3.0,
    jobs: int = 1,
    solver_cfg: SolverConfig | None = None,
) -> SignExperimentResult:
    """Exact-sign recovery of Lasso vs R-Lasso under Cauchy noise.

    The design is fixed across replicates (orthogonal signal block, disjoint
    sparse noise columns); each replicate redraws the Cauchy errors, shared
    across signal strengths.  For each method and signal strength the reported
    rate is the best over that method's penalty grid, i.e. each method is
    given its most favorable fixed penalty.  beta0 = 0 is reported as rate 0
    for both methods (with no signal there is nothing to recover).
    """
    solver_cfg = solver_cfg or SolverConfig()
    X, m = make_orthogonal_sparse_design(n, s, rng.child("design"))
    p = X.shape[1]
    beta0_grid = tuple(float(b) for b in beta0_grid)
    rates = {meth: np.zeros(len(beta0_grid)) for meth in methods}
    best_lambda = {meth: np.zeros(len(beta0_grid)) for meth in methods}
    gspec = GridSpec(num_points=grid_points, span_decades=span_decades)

    for bi, beta0 in enumerate(beta0_grid):
        if beta0 == 0.0:
            for meth in methods:
                rates[meth][bi] = 0.0
                best_lambda[meth][bi] = float("nan")
            continue
        pilot_eps = gen_noise(NoiseModel.cauchy(), n, rng.child("pilot", bi))
        y_pilot = X[:, :s].sum(axis=1) * beta0 + pilot_eps
        from .core import validate_dataset

        pilot_ds = validate_dataset(y_pilot, X)
        grids = {}
        for meth in methods:
            if meth == "r_lasso":
                grids[meth] = gspec.build(quantile_zero_threshold(pilot_ds, 0.5))
            else:
                grids[meth] = gspec.build(ls_zero_threshold(pilot_ds))
        tasks = [(X, s, 0.5, beta0, grids, rep, rng, solver_cfg) for rep in range(reps)]
        hit_mats = _map_tasks(_sign_worker, tasks, jobs)
        for meth in methods:
            hits = np.vstack([h[meth] for h in hit_mats])  # (reps, n_lambda)
            per_lambda = hits.mean(axis=0)
            best = int(np.argmax(per_lambda))
            rates[meth][bi] = float(per_lambda[best])
            best_lambda[meth][bi] = float(grids[meth][best])

    return SignExperimentResult(
        beta0_grid=beta0_grid,
        rates={k: tuple(float(x) for x in v) for k, v in rates.items()},
        best_lambda={k: tuple(float(x) for x in v) for k, v in best_lambda.items()},
        n=n, s=s, m=m, p=p, reps=reps,
    )
