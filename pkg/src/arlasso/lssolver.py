"""Least-squares comparators: Lasso, SCAD-penalized LS, and the L2 oracle.

The Lasso objective is 0.5*||y - X beta||_2^2 + n*lam*sum_j d_j |beta_j|,
solved by cyclic coordinate descent on the cached Gram system with
deterministic (ascending) coordinate order and active-set iterations.
SCAD-penalized least squares is nonconvex and is handled by local linear
approximation: iteratively reweighted Lasso started from the plain Lasso
solution, each round exactly solving its weighted convex surrogate.
"""
from __future__ import annotations

import numpy as np

from .core import (
    Dataset,
    DimensionMismatch,
    FitResult,
    ValidationError,
    make_fit_result,
)
from .objective import ScadParams, scad_penalty, scad_weights
from .qrsolver import SolverConfig

from dataclasses import dataclass

# absolute stationarity tolerance for converged least-squares Lasso fits
LS_KKT_TOL = 1e-6


@dataclass(frozen=True)
class LsPenaltySpec:
    """Penalty for the least-squares fitters: plain L1 or SCAD via LLA."""

    lam: float
    kind: str = "lasso"
    a: float = 3.7
    lla_iters: int = 3

    def __post_init__(self):
        if self.lam < 0:
            raise ValidationError("lambda must be nonnegative")
        if self.kind not in ("lasso", "scad"):
            raise ValidationError(f"kind must be 'lasso' or 'scad', got {self.kind!r}")
        if self.kind == "scad" and self.a <= 2:
            raise ValidationError("scad parameter a must exceed 2")
        if self.lla_iters < 1:
            raise ValidationError("lla_iters must be positive")


def _ls_objective(data: Dataset, beta: np.ndarray, lam: float, weights: np.ndarray) -> float:
    r = data.y - data.X @ beta
    return 0.5 * float(r @ r) + data.n * lam * float(np.sum(weights * np.abs(beta)))


class LassoLsSolver:
    """Coordinate-descent Lasso bound to one dataset; caches X'X and X'y."""

    def __init__(self, data: Dataset, cfg: SolverConfig | None = None):
        self.data = data
        self.cfg = cfg or SolverConfig()
        self.G = data.X.T @ data.X
        self.Xty = data.X.T @ data.y
        self.col_sq = np.diag(self.G).copy()
        if np.any(self.col_sq == 0):
            j = int(np.flatnonzero(self.col_sq == 0)[0])
            raise ValidationError(f"column {j} of X has zero norm")

    def fit(
        self,
        lam: float,
        weights: np.ndarray | None = None,
        beta0: np.ndarray | None = None,
    ) -> FitResult:
        data, cfg = self.data, self.cfg
        n, p = data.n, data.p
        if lam < 0:
            raise ValidationError("lambda must be nonnegative")
        w = np.ones(p) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
        if w.size != p:
            raise DimensionMismatch("weights", expected=p, got=w.size)
        thresh = n * lam * w
        beta = np.zeros(p) if beta0 is None else np.asarray(beta0, dtype=float).copy()
        grad = self.Xty - self.G @ beta  # grad_j = x_j'(y - X beta)
        G, col_sq = self.G, self.col_sq
        order = range(p)

        def sweep(idx) -> float:
            nonlocal grad
            delta_max = 0.0
            for j in idx:
                old = beta[j]
                cj = grad[j] + col_sq[j] * old
                new = np.sign(cj) * max(abs(cj) - thresh[j], 0.0) / col_sq[j]
                if new != old:
                    d = new - old
                    grad -= G[:, j] * d
                    beta[j] = new
                    delta_max = max(delta_max, abs(d))
            return delta_max

        max_rounds = 20
        passes = 0
        converged = False
        for _ in range(max_rounds):
            passes += 1
            sweep(order)
            active = np.flatnonzero(beta)
            for _ in range(40):
                if active.size == 0:
                    break
                passes += 1
                if sweep(active) <= 1e-10 * (1.0 + float(np.max(np.abs(beta[active])))):
                    break
            # snap to the exact stationary point of the identified active set;
            # verified below, so a wrong guess just continues the descent
            polished = self._polish(beta, thresh)
            if polished is not None:
                beta, grad = polished
                converged = True
                break
            # refresh the maintained gradient before judging stationarity, so
            # float drift accumulated across sweeps cannot mask convergence
            grad = self.Xty - G @ beta
            viol = self._kkt_violation(beta, grad, thresh)
            if viol <= LS_KKT_TOL:
                converged = True
                break
        obj = _ls_objective(data, beta, lam, w)
        return make_fit_result(
            beta, obj, iterations=passes,
            primal_residual=self._kkt_violation(beta, grad, thresh),
            dual_residual=0.0,
            converged=converged,
            meta={"solver": "cd"},
        )

    def _polish(self, beta: np.ndarray, thresh: np.ndarray):
        """Solve the stationarity equalities on the current active set.

        Active coordinates of a Lasso solution satisfy
        x_j'(y - X beta) = thresh_j * sgn(beta_j); given the active set and
        signs this is a linear system, so one solve removes the coordinate
        descent tail.  Returns (beta, grad) when the full stationarity
        conditions verify at LS_KKT_TOL, else None.
        """
        A = np.flatnonzero(beta)
        if A.size == 0 or A.size >= self.data.n:
            return None
        signs = np.sign(beta[A])
        G_AA = self.G[np.ix_(A, A)]
        try:
            sol = np.linalg.solve(G_AA, self.Xty[A] - thresh[A] * signs)
        except np.linalg.LinAlgError:
            return None
        if not np.isfinite(sol).all():
            return None
        cand = np.zeros(self.data.p)
        cand[A] = sol
        grad = self.Xty - self.G[:, A] @ sol
        if self._kkt_violation(cand, grad, thresh) > LS_KKT_TOL:
            return None
        return cand, grad

    @staticmethod
    def _kkt_violation(beta: np.ndarray, grad: np.ndarray, thresh: np.ndarray) -> float:
        active = beta != 0.0
        viol = 0.0
        if active.any():
            viol = float(np.max(np.abs(grad[active] - thresh[active] * np.sign(beta[active]))))
        if (~active).any():
            viol = max(viol, float(np.max(np.abs(grad[~active]) - thresh[~active])))
        return max(viol, 0.0)


def fit_lasso_ls(
    data: Dataset,
    lam: float,
    cfg: SolverConfig | None = None,
    weights: np.ndarray | None = None,
    beta0: np.ndarray | None = None,
) -> FitResult:
    """L1-penalized least squares, stationary within LS_KKT_TOL when converged."""
    return LassoLsSolver(data, cfg).fit(lam, weights=weights, beta0=beta0)


def fit_scad_ls(
    data: Dataset,
    spec: LsPenaltySpec,
    cfg: SolverConfig | None = None,
    beta0: np.ndarray | None = None,
) -> FitResult:
    """SCAD-penalized least squares via local linear approximation.

    Starts from the plain Lasso solution and runs ``spec.lla_iters`` rounds of
    weighted Lasso with weights from the SCAD derivative at the previous
    iterate.  The SCAD objective per round is recorded in
    ``meta["objective_path"]`` (it is nonincreasing by majorization).
    """
    if spec.kind != "scad":
        raise ValidationError("fit_scad_ls requires an LsPenaltySpec with kind='scad'")
    solver = LassoLsSolver(data, cfg)
    if spec.lam == 0:
        fit = solver.fit(0.0, beta0=beta0)
        return make_fit_result(
            fit.beta, fit.objective, fit.iterations,
            primal_residual=fit.primal_residual, dual_residual=0.0,
            converged=fit.converged, meta={"solver": "lla", "objective_path": [fit.objective]},
        )
    params = ScadParams(lam=spec.lam, a=spec.a)

    def scad_objective(beta: np.ndarray) -> float:
        r = data.y - data.X @ beta
        return 0.5 * float(r @ r) + data.n * spec.lam * float(
            np.sum(scad_penalty(np.abs(beta), params))
        )

    fit = solver.fit(spec.lam, beta0=beta0)
    beta = fit.beta
    path = [scad_objective(beta)]
    iterations = fit.iterations
    converged = fit.converged
    for _ in range(spec.lla_iters):
        w = scad_weights(beta, params)
        fit = solver.fit(spec.lam, weights=w, beta0=beta)
        beta = fit.beta
        iterations += fit.iterations
        converged = converged and fit.converged
        path.append(scad_objective(beta))
    return make_fit_result(
        beta, path[-1], iterations,
        primal_residual=fit.primal_residual, dual_residual=0.0,
        converged=converged,
        meta={"solver": "lla", "objective_path": path, "final_weights": scad_weights(beta, params)},
    )


def fit_l2_oracle(data: Dataset, support) -> FitResult:
    """Ordinary least squares on the given support columns, zeros elsewhere."""
    support = np.asarray(sorted(set(int(j) for j in support)), dtype=int)
    if support.size == 0:
        raise ValidationError("support must be nonempty")
    if support.min() < 0 or support.max() >= data.p:
        raise ValidationError("support indices out of range")
    if support.size >= data.n:
        raise ValidationError(
            f"support size {support.size} must be smaller than n={data.n}"
        )
    S = data.X[:, support]
    sol, _, rank, _ = np.linalg.lstsq(S, data.y, rcond=None)
    if rank < support.size:
        raise ValidationError(
            f"design submatrix on support is rank deficient (rank {rank} < {support.size})"
        )
    beta = np.zeros(data.p)
    beta[support] = sol
    r = data.y - S @ sol
    return make_fit_result(
        beta, 0.5 * float(r @ r), iterations=1,
        converged=True, meta={"solver": "ols"},
    )
