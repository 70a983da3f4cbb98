"""Quantile check loss, its subgradient, the weighted-L1 objective, and SCAD weights."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, DimensionMismatch, PenaltySpec, ValidationError

SCAD_A_DEFAULT = 3.7


@dataclass(frozen=True)
class SubgradientInterval:
    """Closed interval of subgradients of the check loss at one residual."""

    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValidationError("interval requires lo <= hi")

    def contains(self, g: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= g <= self.hi + tol


@dataclass(frozen=True)
class ScadParams:
    """SCAD derivative parameters: penalty level and shape constant a > 2."""

    lam: float
    a: float = SCAD_A_DEFAULT

    def __post_init__(self):
        if self.lam <= 0:
            raise ValidationError(f"scad lambda must be positive, got {self.lam}")
        if self.a <= 2:
            raise ValidationError(f"scad a must exceed 2, got {self.a}")


def _check_tau(tau: float) -> None:
    if not 0.0 < tau < 1.0:
        raise ValidationError(f"tau must be in (0, 1), got {tau}")


def quantile_loss(u, tau: float):
    """Check loss u * (tau - 1{u <= 0}); accepts scalars or arrays.

    Equals tau*u for u > 0 and (tau-1)*u for u <= 0, hence nonnegative.
    """
    _check_tau(tau)
    u = np.asarray(u, dtype=float)
    out = u * (tau - (u <= 0.0))
    return out[()] if out.ndim == 0 else out


def quantile_subgradient(u: float, tau: float) -> SubgradientInterval:
    """Subdifferential of the check loss at residual ``u``.

    Degenerate (a single slope) away from zero; the full kink interval
    [tau-1, tau] at u = 0, which optimality checks need because quantile
    fits interpolate data points.
    """
    _check_tau(tau)
    if u > 0:
        return SubgradientInterval(tau, tau)
    if u < 0:
        return SubgradientInterval(tau - 1.0, tau - 1.0)
    return SubgradientInterval(tau - 1.0, tau)


def objective_value(beta: np.ndarray, data: Dataset, pen: PenaltySpec) -> float:
    """Full weighted-L1 penalized quantile objective at ``beta``.

    sum_i rho_tau(y_i - x_i'beta) + n*lam*sum_j d_j|beta_j|
    + (ridge_eps/2)*||beta||_2^2
    """
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.size != data.p:
        raise DimensionMismatch("beta", expected=data.p, got=beta.size)
    if pen.weights.size != data.p:
        raise DimensionMismatch("weights", expected=data.p, got=pen.weights.size)
    resid = data.y - data.X @ beta
    loss = float(np.sum(quantile_loss(resid, pen.tau)))
    penalty = data.n * pen.lam * float(np.sum(pen.weights * np.abs(beta)))
    ridge = 0.5 * pen.ridge_eps * float(beta @ beta)
    return loss + penalty + ridge


def scad_derivative(beta_abs, params: ScadParams):
    """SCAD-derived weight: 1 on [0, lam], then a linear ramp to 0 at a*lam.

    Nonincreasing, valued in [0, 1], continuous at beta_abs = lam, and
    Lipschitz with constant 1/((a-1)*lam).  Accepts scalars or arrays.
    """
    b = np.asarray(beta_abs, dtype=float)
    if np.any(b < 0):
        raise ValidationError("beta_abs must be nonnegative")
    lam, a = params.lam, params.a
    ramp = np.maximum(a * lam - b, 0.0) / ((a - 1.0) * lam)
    out = np.where(b <= lam, 1.0, ramp)
    return out[()] if out.ndim == 0 else out


def scad_penalty(beta_abs, params: ScadParams):
    """SCAD penalty value (the antiderivative of ``scad_derivative``).

    t on [0, lam]; quadratic blend on (lam, a*lam]; constant (a+1)*lam/2
    beyond.  Used to evaluate the folded-concave least-squares objective.
    """
    b = np.asarray(beta_abs, dtype=float)
    if np.any(b < 0):
        raise ValidationError("beta_abs must be nonnegative")
    lam, a = params.lam, params.a
    mid = lam + (a * lam * (b - lam) - 0.5 * (b**2 - lam**2)) / ((a - 1.0) * lam)
    out = np.where(b <= lam, b, np.where(b <= a * lam, mid, 0.5 * (a + 1.0) * lam))
    return out[()] if out.ndim == 0 else out


def scad_weights(beta: np.ndarray, params: ScadParams) -> np.ndarray:
    """Adaptive weights d_j = scad_derivative(|beta_j|) for a whole vector."""
    return scad_derivative(np.abs(np.asarray(beta, dtype=float)), params)
