"""The named quantile estimators as one-call procedures.

R-Lasso is the plain L1-penalized quantile regression (all weights one).
AR-Lasso is the two-step adaptive procedure: an R-Lasso pilot fit, then a
weighted fit whose penalty weights come from the SCAD derivative evaluated at
the pilot coefficients, so large pilot coefficients are penalized lightly or
not at all.
"""
from __future__ import annotations

import numpy as np

from .core import Dataset, FitResult, PenaltySpec, make_fit_result
from .objective import ScadParams, scad_weights
from .qrsolver import SolverConfig, WrLassoSolver, fit_wrlasso


def r_lasso(
    data: Dataset,
    tau: float,
    lam: float,
    cfg: SolverConfig | None = None,
    beta0: np.ndarray | None = None,
) -> FitResult:
    """L1-penalized quantile regression with unit weights."""
    pen = PenaltySpec(tau=tau, lam=lam, weights=np.ones(data.p))
    return fit_wrlasso(data, pen, cfg, beta0=beta0)


def ar_lasso(
    data: Dataset,
    tau: float,
    lambda_init: float,
    lambda_final: float,
    scad: ScadParams | None = None,
    cfg: SolverConfig | None = None,
    initial: FitResult | None = None,
) -> FitResult:
    """Two-step adaptive fit: R-Lasso pilot, then SCAD-weighted refit.

    The weight-generating SCAD level defaults to ``lambda_final`` (override via
    ``scad``).  ``initial`` injects an arbitrary pilot fit for experimentation;
    by default the pilot is R-Lasso at ``lambda_init``.  The returned result
    carries the pilot fit and the weights under ``meta["initial"]`` and
    ``meta["weights"]``.  If the pilot does not converge, no second step is
    attempted and the pilot is returned flagged as failed.
    """
    if scad is None:
        if lambda_final <= 0:
            raise ValueError("ar_lasso with lambda_final=0 needs explicit ScadParams")
        scad = ScadParams(lam=lambda_final)
    if initial is None:
        initial = r_lasso(data, tau, lambda_init, cfg)
    if not initial.converged:
        return make_fit_result(
            initial.beta, initial.objective, initial.iterations,
            primal_residual=initial.primal_residual,
            dual_residual=initial.dual_residual,
            converged=False,
            meta={**initial.meta, "stage": "initial_failed", "initial": initial},
        )
    weights = scad_weights(initial.beta, scad)
    pen = PenaltySpec(tau=tau, lam=lambda_final, weights=weights)
    final = fit_wrlasso(data, pen, cfg, beta0=initial.beta)
    final.meta.update(
        initial=initial,
        weights=weights,
        lambda_init=float(lambda_init),
        lambda_final=float(lambda_final),
        scad=scad,
    )
    return final


def ar_lasso_from_pilot(
    solver: WrLassoSolver,
    pilot: FitResult,
    tau: float,
    lambda_final: float,
    scad: ScadParams | None = None,
    state=None,
) -> tuple[FitResult, object]:
    """Second AR-Lasso stage on a prebuilt solver, for warm-started grids.

    Equivalent to the second step of :func:`ar_lasso`; exposed so tuning loops
    can reuse the solver's cached factorization and a warm-start state across
    a penalty path.
    """
    if scad is None:
        scad = ScadParams(lam=lambda_final)
    weights = scad_weights(pilot.beta, scad)
    pen = PenaltySpec(tau=tau, lam=lambda_final, weights=weights)
    if state is None:
        final, out_state = solver.fit(pen, beta0=pilot.beta)
    else:
        final, out_state = solver.fit(pen, state=state)
    final.meta.update(initial=pilot, weights=weights, lambda_final=float(lambda_final))
    return final, out_state
