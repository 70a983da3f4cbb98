"""Global solver for weighted-L1 penalized quantile regression.

The main fitter splits the nonsmooth objective with an auxiliary residual
variable and an auxiliary coefficient variable:

    minimize  sum_i rho_tau(z_i) + n*lam*||d o w||_1
    subject   X beta + z = y,   beta - w = 0.

Each block update is exact: the z-update is the closed-form proximal map of
the check loss (a shifted soft threshold), the w-update is per-coordinate
soft thresholding, and the beta-update solves a fixed ridge system whose
factorization is cached across iterations, penalty levels and warm starts.

Convergence is declared on primal/dual residuals AND a first-order optimality
audit; the audit is authoritative.  The audit also tries an active-set
"polish": it solves the interpolation system implied by the current support
and near-zero residuals, which snaps the iterate onto the exact vertex the
piecewise-linear objective is minimized at.  Any candidate is only accepted
after passing both the per-coordinate check (``diag.kkt_check``) and a joint
subgradient feasibility check, so a fit reported as converged is a certified
global minimizer within tolerance.

``lp_oracle`` independently solves the exact linear-programming reformulation
with a simplex method and is used to cross-check the fitter on small
instances.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .core import (
    Dataset,
    DimensionMismatch,
    FitResult,
    PenaltySpec,
    SizeGuardExceeded,
    SolverDivergence,
    ValidationError,
    make_fit_result,
    validate_dataset,
)
from .diag import DEFAULT_ZERO_RESIDUAL_TOL, kkt_check
from .objective import objective_value


@dataclass(frozen=True)
class SolverConfig:
    """Iteration and tolerance knobs for the splitting solver.

    ``ridge_eps`` is the negligible L2 tiebreak added inside the solver to
    keep the minimizer unique; it is not part of the reported objective.
    ``kkt_tol`` is the optimality-audit tolerance that gates ``converged``.
    """

    max_iters: int = 20000
    abs_tol: float = 1e-7
    rel_tol: float = 1e-5
    penalty_param_rho: float = 1.0
    ridge_eps: float = 1e-8
    kkt_tol: float = 1e-4
    over_relaxation: float = 1.7
    adapt_rho: bool = True
    adapt_every: int = 100
    check_every: int = 10
    # weight of the coefficient-splitting constraint relative to the residual
    # constraint; None means n, which balances the two blocks when columns are
    # standardized to norm sqrt(n)
    coupling: float | None = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        for name in ("abs_tol", "rel_tol", "penalty_param_rho", "kkt_tol"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be strictly positive")
        if self.ridge_eps < 0:
            raise ValidationError("ridge_eps must be nonnegative")
        if not 0.0 < self.over_relaxation < 2.0:
            raise ValidationError("over_relaxation must lie in (0, 2)")
        if self.coupling is not None and self.coupling <= 0:
            raise ValidationError("coupling must be positive when given")


def standardize_columns(data: Dataset) -> Dataset:
    """Rescale every column of X to L2-norm sqrt(n).

    Records per-column factors s_j (X_std[:, j] = X[:, j] / s_j) in
    ``column_scales``, composing with any existing scales.  ``true_beta`` is
    left on the original scale; map fitted coefficients back with
    ``unstandardize_coefficients`` before comparing.
    """
    norms = np.sqrt(np.sum(data.X**2, axis=0))
    if np.any(norms == 0):
        j = int(np.flatnonzero(norms == 0)[0])
        raise ValidationError(f"column {j} of X has zero norm; cannot standardize")
    scales = norms / np.sqrt(data.n)
    X_std = data.X / scales
    combined = scales if data.column_scales is None else data.column_scales * scales
    return validate_dataset(data.y, X_std, true_beta=data.true_beta, column_scales=combined)


def unstandardize_coefficients(beta: np.ndarray, column_scales: np.ndarray) -> np.ndarray:
    """Map coefficients fitted on standardized columns back to the original scale."""
    beta = np.asarray(beta, dtype=float).reshape(-1)
    scales = np.asarray(column_scales, dtype=float).reshape(-1)
    if beta.size != scales.size:
        raise DimensionMismatch("column_scales", expected=beta.size, got=scales.size)
    return beta / scales


def prox_check_loss(v, sigma: float, tau: float):
    """Proximal map of the check loss: argmin_z rho_tau(z) + (z - v)^2 / (2 sigma).

    Piecewise linear with a dead zone: v - sigma*tau above it, v + sigma*(1-tau)
    below it, 0 inside.  Accepts scalars or arrays.
    """
    if sigma <= 0:
        raise ValidationError(f"sigma must be positive, got {sigma}")
    if not 0.0 < tau < 1.0:
        raise ValidationError(f"tau must be in (0, 1), got {tau}")
    v = np.asarray(v, dtype=float)
    upper = sigma * tau
    lower = -sigma * (1.0 - tau)
    out = np.where(v > upper, v - upper, np.where(v < lower, v - lower, 0.0))
    return out[()] if out.ndim == 0 else out


def _soft_threshold(v: np.ndarray, level: np.ndarray) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - level, 0.0)


@dataclass
class AdmmState:
    """Warm-start carrier between consecutive fits on the same dataset."""

    beta: np.ndarray
    z: np.ndarray
    w: np.ndarray
    u: np.ndarray
    v: np.ndarray
    rho: float


class WrLassoSolver:
    """Reusable solver bound to one dataset; caches the beta-update factorization.

    The normal-equation matrix (X'X + I) does not depend on the penalty, the
    splitting parameter or the ridge tiebreak, so one factorization serves an
    entire lambda path and all weight vectors.
    """

    def __init__(self, data: Dataset, cfg: SolverConfig | None = None):
        self.data = data
        self.cfg = cfg or SolverConfig()
        X = data.X
        n, p = data.n, data.p
        eta = self.cfg.coupling if self.cfg.coupling is not None else float(n)
        self.eta = eta
        if p <= n:
            M = np.linalg.inv(X.T @ X + eta * np.eye(p))
            self._solve = lambda r: M @ r
        else:
            # Woodbury: (X'X + eta I)^{-1} r = (r - X'(eta I + XX')^{-1} X r) / eta
            P = X.T @ np.linalg.inv(eta * np.eye(n) + X @ X.T)
            self._solve = lambda r: (r - P @ (X @ r)) / eta

    def fit(
        self,
        pen: PenaltySpec,
        state: AdmmState | None = None,
        beta0: np.ndarray | None = None,
    ) -> tuple[FitResult, AdmmState]:
        data, cfg = self.data, self.cfg
        X, y = data.X, data.y
        n, p = data.n, data.p
        if pen.weights.size != p:
            raise DimensionMismatch("weights", expected=p, got=pen.weights.size)
        tau = pen.tau
        level = n * pen.lam * pen.weights
        ridge = pen.ridge_eps + cfg.ridge_eps
        alpha = cfg.over_relaxation
        eta = self.eta

        if state is not None:
            beta, z, w, u, v, rho = (
                state.beta.copy(), state.z.copy(), state.w.copy(),
                state.u.copy(), state.v.copy(), state.rho,
            )
        else:
            beta = np.zeros(p) if beta0 is None else np.asarray(beta0, dtype=float).copy()
            z = y - X @ beta
            w = beta.copy()
            u = np.zeros(n)
            v = np.zeros(p)
            rho = cfg.penalty_param_rho

        y_norm = float(np.linalg.norm(y))
        sqrt_np = np.sqrt(n + p)
        sqrt_p = np.sqrt(p)
        r_norm = s_norm = np.inf
        best_beta, best_obj = None, np.inf
        skip_lp_until = 0

        for k in range(1, cfg.max_iters + 1):
            z_old, w_old = z, w

            rhs = X.T @ (y - z - u) + eta * (w - v)
            beta = self._solve(rhs)
            Xb = X @ beta

            Xb_hat = alpha * Xb + (1.0 - alpha) * (y - z_old)
            b_hat = alpha * beta + (1.0 - alpha) * w_old

            z = prox_check_loss(y - Xb_hat - u, 1.0 / rho, tau)
            w = _soft_threshold(b_hat + v, level / (rho * eta))
            if ridge > 0:
                w *= (rho * eta) / (rho * eta + ridge)
            u = u + (Xb_hat + z - y)
            v = v + (b_hat - w)

            if k % cfg.check_every != 0 and k != cfg.max_iters:
                continue

            if not np.isfinite(beta).all():
                raise SolverDivergence("non-finite iterate in splitting solver", k)

            r1 = Xb + z - y
            r2 = beta - w
            r_norm = float(np.sqrt(np.linalg.norm(r1) ** 2 + np.linalg.norm(r2) ** 2))
            s_vec = rho * (X.T @ (z - z_old)) - rho * eta * (w - w_old)
            s_norm = float(np.linalg.norm(s_vec))
            eps_pri = sqrt_np * cfg.abs_tol + cfg.rel_tol * max(
                float(np.sqrt(Xb @ Xb + beta @ beta)),
                float(np.sqrt(z @ z + w @ w)),
                y_norm,
            )
            eps_dual = sqrt_p * cfg.abs_tol + cfg.rel_tol * float(
                np.linalg.norm(rho * (X.T @ u) + rho * eta * v)
            )
            resid_converged = r_norm <= eps_pri and s_norm <= eps_dual

            # optimality audit: certify w (exact zeros) or its polished vertex;
            # the LP fallback for degenerate structures only runs once the
            # splitting residuals themselves have converged
            allow_lp = resid_converged and k >= skip_lp_until
            cand, report, lp_ran = self._certify(w, pen, allow_lp=allow_lp)
            if cand is not None:
                obj = objective_value(cand, data, pen)
                result = make_fit_result(
                    cand, obj, iterations=k,
                    primal_residual=r_norm, dual_residual=s_norm,
                    converged=True,
                    meta={"kkt": report, "rho": rho},
                )
                return result, AdmmState(beta, z, w, u, v, rho)
            if lp_ran:
                # the LP fallback is the costly stage; back off before retrying it
                skip_lp_until = k + 5 * cfg.check_every

            obj_w = objective_value(w, data, pen)
            if obj_w < best_obj:
                best_obj, best_beta = obj_w, w.copy()

            # residual balancing; a long period avoids thrashing the scale
            if cfg.adapt_rho and k % cfg.adapt_every == 0:
                if r_norm > 10.0 * s_norm and rho < 1e8:
                    rho *= 2.0
                    u /= 2.0
                    v /= 2.0
                elif s_norm > 10.0 * r_norm and rho > 1e-8:
                    rho /= 2.0
                    u *= 2.0
                    v *= 2.0

        if best_beta is None:
            best_beta, best_obj = w, objective_value(w, data, pen)
        report = kkt_check(best_beta, data, pen, tol=cfg.kkt_tol)
        result = make_fit_result(
            best_beta, best_obj, iterations=cfg.max_iters,
            primal_residual=r_norm, dual_residual=s_norm,
            converged=False,
            meta={"kkt": report, "rho": rho},
        )
        return result, AdmmState(beta, z, w, u, v, rho)

    # -- certification ----------------------------------------------------

    def _certify(self, w: np.ndarray, pen: PenaltySpec, allow_lp: bool):
        data, cfg = self.data, self.cfg
        lp_ran = False
        report = kkt_check(w, data, pen, tol=cfg.kkt_tol)
        if report.feasible:
            ok, used = _joint_subgradient_feasible(w, data, pen, cfg.kkt_tol, allow_lp=allow_lp)
            lp_ran |= used
            if ok:
                return w, report, lp_ran
        cand = self._polish(w)
        if cand is not None:
            report2 = kkt_check(cand, data, pen, tol=cfg.kkt_tol)
            if report2.feasible:
                ok, used = _joint_subgradient_feasible(
                    cand, data, pen, cfg.kkt_tol, allow_lp=allow_lp
                )
                lp_ran |= used
                if ok:
                    return cand, report2, lp_ran
        return None, None, lp_ran

    def _polish(self, w: np.ndarray) -> np.ndarray | None:
        """Snap the iterate to the vertex implied by its support.

        A minimizer of the piecewise-linear objective generically interpolates
        as many observations as it has active coefficients; solving that
        square system removes the splitting solver's residual error in one
        step.  The caller verifies the candidate, so a wrong guess is merely
        a no-op.
        """
        data = self.data
        X, y = data.X, data.y
        active = np.flatnonzero(w)
        k = active.size
        if k == 0 or k > min(data.n, data.p):
            return None
        resid = y - X @ w
        interp = np.argsort(np.abs(resid), kind="stable")[:k]
        sub = X[np.ix_(interp, active)]
        try:
            sol = np.linalg.solve(sub, y[interp])
        except np.linalg.LinAlgError:
            return None
        if not np.isfinite(sol).all():
            return None
        cand = np.zeros(data.p)
        cand[active] = sol
        return cand


def _joint_subgradient_feasible(
    beta: np.ndarray,
    data: Dataset,
    pen: PenaltySpec,
    tol: float,
    allow_lp: bool = True,
    zero_resid_tol: float = DEFAULT_ZERO_RESIDUAL_TOL,
) -> tuple[bool, bool]:
    """Check that a single subgradient selection satisfies all coordinates.

    The per-coordinate interval check is a relaxation; this verifies the
    exact condition: one g with g_i in [tau-1, tau] at kink residuals (fixed
    slope elsewhere) such that X'g meets the stationarity conditions of every
    coordinate within ``tol``.

    At a nondegenerate vertex the kink count equals the active count, so the
    candidate g solves a small square system and is verified directly.  Other
    shapes fall back to a linear feasibility program when ``allow_lp`` is set.
    Returns (feasible, lp_used).
    """
    X, y = data.X, data.y
    tau = pen.tau
    resid = y - X @ beta
    kink = np.abs(resid) <= zero_resid_tol
    g_fixed = np.where(resid > 0, tau, tau - 1.0)
    g_fixed[kink] = 0.0
    base = X.T @ g_fixed
    level = data.n * pen.lam * pen.weights
    active = beta != 0.0
    target = level * np.sign(beta) + pen.ridge_eps * beta

    def verify(corr: np.ndarray) -> bool:
        ok_active = np.all(np.abs(corr[active] - target[active]) <= tol)
        ok_zero = np.all(np.abs(corr[~active]) <= level[~active] + tol)
        return bool(ok_active and ok_zero)

    if not kink.any():
        return verify(base), False

    Mk = X[kink]  # (k_kink, p)
    n_kink = Mk.shape[0]
    n_active = int(active.sum())

    if n_kink == n_active:
        # candidate g from the square stationarity system on active coords
        try:
            gk = np.linalg.solve(Mk[:, active].T, target[active] - base[active])
        except np.linalg.LinAlgError:
            gk = None
        if (
            gk is not None
            and np.isfinite(gk).all()
            and gk.min() >= tau - 1.0 - 1e-9
            and gk.max() <= tau + 1e-9
        ):
            if verify(base + Mk.T @ gk):
                return True, False

    if not allow_lp:
        return False, False

    rows = []
    ubs = []
    if active.any():
        Ma = Mk[:, active].T
        ta = target[active] - base[active]
        rows.extend([Ma, -Ma])
        ubs.extend([ta + tol, -ta + tol])
    inactive = ~active
    if inactive.any():
        Mz = Mk[:, inactive].T
        tz = base[inactive]
        lvl = level[inactive]
        rows.extend([Mz, -Mz])
        ubs.extend([lvl - tz + tol, lvl + tz + tol])
    res = linprog(
        np.zeros(n_kink),
        A_ub=np.vstack(rows),
        b_ub=np.concatenate(ubs),
        bounds=(tau - 1.0, tau),
        method="highs",
    )
    return bool(res.status == 0), True


def fit_wrlasso(
    data: Dataset,
    pen: PenaltySpec,
    cfg: SolverConfig | None = None,
    beta0: np.ndarray | None = None,
) -> FitResult:
    """Compute the global minimizer of the weighted-L1 quantile objective.

    A result with ``converged=True`` passed the optimality audit at
    ``cfg.kkt_tol``; otherwise the best iterate seen is returned with
    ``converged=False``.  The audit report is stored under ``meta["kkt"]``.
    """
    solver = WrLassoSolver(data, cfg)
    result, _ = solver.fit(pen, beta0=beta0)
    return result


LP_ORACLE_MAX_N = 200
LP_ORACLE_MAX_P = 50


def lp_oracle(data: Dataset, pen: PenaltySpec) -> FitResult:
    """Solve the exact LP reformulation with a simplex method.

    minimize  sum_i (tau*u_i + (1-tau)*v_i) + n*lam*sum_j d_j (p_j + q_j)
    s.t.      y - X beta = u - v,  beta = p - q,  u, v, p, q >= 0.

    Deliberately size-guarded: this is a verification oracle for small
    instances, independent of the splitting solver.
    """
    n, p = data.n, data.p
    if n > LP_ORACLE_MAX_N or p > LP_ORACLE_MAX_P:
        raise SizeGuardExceeded(
            f"lp_oracle is limited to n <= {LP_ORACLE_MAX_N}, p <= {LP_ORACLE_MAX_P}; "
            f"got n={n}, p={p}"
        )
    if pen.weights.size != p:
        raise DimensionMismatch("weights", expected=p, got=pen.weights.size)
    tau = pen.tau
    lam_term = n * pen.lam * pen.weights
    cost = np.concatenate([
        lam_term, lam_term, tau * np.ones(n), (1.0 - tau) * np.ones(n),
    ])
    A_eq = np.hstack([data.X, -data.X, np.eye(n), -np.eye(n)])
    res = linprog(cost, A_eq=A_eq, b_eq=data.y, bounds=(0, None), method="highs-ds")
    if res.status != 0:
        raise SolverDivergence(f"LP oracle failed: {res.message}", 0)
    x = res.x
    beta = x[:p] - x[p:2 * p]
    beta[np.abs(beta) < 1e-11] = 0.0
    obj = objective_value(beta, data, pen)
    nit = int(getattr(res, "nit", 0) or 0)
    return make_fit_result(
        beta, obj, iterations=max(nit, 1), converged=True,
        meta={"solver": "lp", "lp_objective": float(res.fun)},
    )
