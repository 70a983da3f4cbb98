"""Optimality and theory-facing diagnostics.

``kkt_check`` certifies (approximate) global optimality of a weighted-L1
quantile fit from first-order conditions, ``sign_consistency`` scores
selection quality against a known truth, and ``normality_diagnostic`` runs an
empirical sanity check of the oracle fit's asymptotic normality.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    Dataset,
    DimensionMismatch,
    PenaltySpec,
    RngSpec,
    ValidationError,
)

# Residuals within this band of zero are treated as check-loss kinks, where the
# subgradient is the full interval [tau-1, tau] rather than a point.
DEFAULT_ZERO_RESIDUAL_TOL = 1e-5
# Coefficients within this band of zero take the inequality branch of the
# stationarity conditions.
DEFAULT_BETA_ZERO_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class KktReport:
    """Per-coordinate stationarity slacks for a candidate minimizer.

    ``max_zero_violation`` is the worst excess of the attainable correlation
    over n*lam*d_j on inactive coordinates; ``max_active_violation`` is the
    worst distance of the attainable correlation interval from its required
    value n*lam*d_j*sgn(beta_j) (+ ridge term) on active coordinates.
    ``feasible`` holds iff both are within ``tol``.
    """

    max_zero_violation: float
    max_active_violation: float
    feasible: bool
    tol: float
    per_coordinate: np.ndarray

    @property
    def max_violation(self) -> float:
        return max(self.max_zero_violation, self.max_active_violation)

    def to_dict(self) -> dict:
        return {
            "max_zero_violation": self.max_zero_violation,
            "max_active_violation": self.max_active_violation,
            "feasible": self.feasible,
            "tol": self.tol,
            "per_coordinate": [float(v) for v in self.per_coordinate],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def kkt_check(
    beta: np.ndarray,
    data: Dataset,
    pen: PenaltySpec,
    tol: float = 1e-4,
    zero_resid_tol: float = DEFAULT_ZERO_RESIDUAL_TOL,
    beta_zero_tol: float = DEFAULT_BETA_ZERO_TOL,
) -> KktReport:
    """Check first-order optimality of ``beta`` for the penalized objective.

    For each coordinate j the attainable correlation sum_i x_ij g_i, over
    subgradient selections g_i of the check loss at the residuals, is an
    interval [A_j, B_j]: residuals at a kink (|u_i| <= zero_resid_tol)
    contribute the full range x_ij * [tau-1, tau], others a fixed slope.
    The subgradient selection is therefore resolved per coordinate by
    interval feasibility, never by a fixed convention at zero residuals.

    Coordinates with |beta_j| <= beta_zero_tol need the interval to meet
    [-n*lam*d_j, n*lam*d_j]; active coordinates need it to reach
    n*lam*d_j*sgn(beta_j) + ridge_eps*beta_j.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.size != data.p:
        raise DimensionMismatch("beta", expected=data.p, got=beta.size)
    X, y, tau = data.X, data.y, pen.tau
    resid = y - X @ beta
    kink = np.abs(resid) <= zero_resid_tol

    g_fixed = np.where(resid > 0, tau, tau - 1.0)
    g_fixed[kink] = 0.0
    base = X.T @ g_fixed
    if kink.any():
        Xk = X[kink]
        lo = base + np.minimum(Xk * (tau - 1.0), Xk * tau).sum(axis=0)
        hi = base + np.maximum(Xk * (tau - 1.0), Xk * tau).sum(axis=0)
    else:
        lo = hi = base

    level = data.n * pen.lam * pen.weights
    active = np.abs(beta) > beta_zero_tol
    viol = np.zeros(data.p)

    # inactive: interval [lo, hi] must intersect [-level, level]
    inactive = ~active
    viol[inactive] = np.maximum(
        0.0,
        np.maximum(lo[inactive] - level[inactive], -level[inactive] - hi[inactive]),
    )
    # active: interval must contain level*sgn(beta) + ridge_eps*beta
    target = level[active] * np.sign(beta[active]) + pen.ridge_eps * beta[active]
    viol[active] = np.maximum(0.0, np.maximum(lo[active] - target, target - hi[active]))

    max_zero = float(viol[inactive].max()) if inactive.any() else 0.0
    max_active = float(viol[active].max()) if active.any() else 0.0
    viol.flags.writeable = False
    return KktReport(
        max_zero_violation=max_zero,
        max_active_violation=max_active,
        feasible=bool(max(max_zero, max_active) <= tol),
        tol=float(tol),
        per_coordinate=viol,
    )


@dataclass(frozen=True)
class SignReport:
    """Exact-sign agreement plus false positive/negative counts."""

    exact_sign: bool
    fp: int
    fn: int


def sign_consistency(
    beta_hat: np.ndarray,
    beta_true: np.ndarray,
    support_tol: float = 1e-6,
) -> SignReport:
    """Compare estimated and true signs; count selection errors.

    ``fp`` counts noise covariates included (|beta_hat_j| > support_tol where
    beta_true_j == 0) and ``fn`` counts signal covariates missed.
    ``exact_sign`` requires componentwise sign agreement, with estimated
    coefficients inside the support_tol band matched to true zeros.
    """
    if support_tol <= 0:
        raise ValidationError("support_tol must be positive")
    bh = np.asarray(beta_hat, dtype=float).reshape(-1)
    bt = np.asarray(beta_true, dtype=float).reshape(-1)
    if bh.size != bt.size:
        raise DimensionMismatch("beta_hat", expected=bt.size, got=bh.size)
    sel = np.abs(bh) > support_tol
    true_sel = bt != 0.0
    fp = int(np.sum(sel & ~true_sel))
    fn = int(np.sum(~sel & true_sel))
    sign_hat = np.where(sel, np.sign(bh), 0.0)
    exact = bool(np.all(sign_hat == np.sign(bt)))
    return SignReport(exact_sign=exact, fp=fp, fn=fn)


@dataclass(frozen=True)
class NormalitySummary:
    """Sample mean/variance of the standardized oracle-fit contrast."""

    mean: float
    variance: float
    reps: int
    density_at_zero: float


def noise_density_at_zero(noise) -> float:
    """Analytic density at 0 for the i.i.d. noise models.

    Refuses the per-observation scale-mixture models, whose observations do
    not share a common density.
    """
    kind = noise.kind
    if kind == "gauss":
        return 1.0 / math.sqrt(2.0 * math.pi * noise.var)
    if kind == "laplace":
        return 0.5 / noise.scale
    if kind == "t4_scaled":
        # density of sqrt(2) * t_4 at the origin
        f_t4 = math.gamma(2.5) / (math.sqrt(4.0 * math.pi) * math.gamma(2.0))
        return f_t4 / math.sqrt(2.0)
    if kind == "cauchy":
        return 1.0 / math.pi
    raise ValidationError(
        f"noise model {kind!r} is heteroscedastic; the normality diagnostic "
        "requires a common error density"
    )


def normality_diagnostic(
    noise,
    reps: int,
    rng: RngSpec,
    n: int = 500,
    tau: float = 0.5,
) -> NormalitySummary:
    """Monte Carlo check that the oracle quantile fit is asymptotically normal.

    Each replicate draws a fresh design, fits unpenalized quantile regression
    restricted to the true support (s = 7 signal covariates), and standardizes
    the contrast c'(beta_hat - beta_true) by its theoretical asymptotic
    standard deviation sqrt(tau*(1-tau)/f(0)^2 * c'(S'S)^{-1}c).  Under the
    theory the standardized statistic is approximately N(0, 1), so the sample
    mean should be near 0 and the sample variance near 1.
    """
    from .qrsolver import fit_wrlasso
    from .simgen import CovModel, beta_star, gen_design, gen_noise

    f0 = noise_density_at_zero(noise)
    bstar = beta_star(16)
    support = np.flatnonzero(bstar)
    b1 = bstar[support]
    s = support.size
    c = np.ones(s) / math.sqrt(s)

    stats = np.empty(reps)
    for rep in range(reps):
        stream = rng.child("normality", rep)
        X = gen_design(n, 16, CovModel.identity(), stream.child("design"))
        S = X[:, support]
        eps = gen_noise(noise, n, stream.child("noise"))
        y = S @ b1 + eps
        ds = _oracle_dataset(y, S)
        pen = PenaltySpec(tau=tau, lam=0.0, weights=np.ones(s))
        fit = fit_wrlasso(ds, pen)
        gram_inv_quad = float(c @ np.linalg.solve(S.T @ S, c))
        sd = math.sqrt(tau * (1.0 - tau) / f0**2 * gram_inv_quad)
        stats[rep] = float(c @ (fit.beta - b1)) / sd
    return NormalitySummary(
        mean=float(np.mean(stats)),
        variance=float(np.var(stats, ddof=1)),
        reps=int(reps),
        density_at_zero=f0,
    )


def _oracle_dataset(y: np.ndarray, S: np.ndarray) -> Dataset:
    from .core import validate_dataset

    return validate_dataset(y, S)
