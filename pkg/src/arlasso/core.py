"""Shared domain types: validated datasets, penalty specs, fit results, RNG streams.

All container types are immutable after construction (arrays are copied and
marked read-only), so instances can be shared freely across threads and
worker processes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

DEFAULT_SUPPORT_TOL = 1e-6

_U64 = 0xFFFFFFFFFFFFFFFF
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15


class ValidationError(ValueError):
    """Raised when inputs violate a construction contract."""


class DimensionMismatch(ValidationError):
    """Input dimensions are inconsistent.

    Attributes
    ----------
    name : str
        Which dimension is offending (e.g. ``"rows of X"``).
    expected, got : int
    """

    def __init__(self, name: str, expected: int, got: int):
        self.name = name
        self.expected = expected
        self.got = got
        super().__init__(f"{name}: expected {expected}, got {got}")


class NonFiniteValue(ValidationError):
    """A matrix or vector entry is NaN or infinite.

    Attributes
    ----------
    where : str
        Name of the offending array.
    row, col : int
        Location of the first non-finite entry (col is -1 for vectors).
    """

    def __init__(self, where: str, row: int, col: int = -1):
        self.where = where
        self.row = row
        self.col = col
        loc = f"({row}, {col})" if col >= 0 else f"({row},)"
        super().__init__(f"non-finite entry in {where} at {loc}")


class SolverDivergence(RuntimeError):
    """Solver produced non-finite iterates.

    Attributes
    ----------
    iterations : int
        Iteration count at which divergence was detected.
    """

    def __init__(self, message: str, iterations: int):
        self.iterations = iterations
        super().__init__(f"{message} (iteration {iterations})")


class SizeGuardExceeded(ValueError):
    """A routine meant for small instances was called at scale."""


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.flags.writeable = False
    return out


def _mix64(state: int, value: int) -> int:
    # splitmix64 finalizer; folds `value` into `state` on unsigned 64-bit words
    z = (state + _SPLITMIX_GAMMA + (value & _U64)) & _U64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64
    return z ^ (z >> 31)


def _fold_key(state: int, key: Any) -> int:
    if isinstance(key, str):
        for b in key.encode("utf-8"):
            state = _mix64(state, b)
        return _mix64(state, len(key))
    if isinstance(key, (bool, int, np.integer)):
        return _mix64(state, int(key))
    raise TypeError(f"stream keys must be str or int, got {type(key).__name__}")


@dataclass(frozen=True)
class RngSpec:
    """Seed plus stream id for a counter-based generator (Philox).

    Equal ``(seed, stream_id)`` pairs produce bit-identical sequences on the
    same build.  ``child`` derives statistically independent streams, so each
    (replicate, purpose) pair of a Monte Carlo run owns its own stream.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) <= _U64:
                raise ValidationError(f"{name} must be an unsigned 64-bit integer")

    def child(self, *keys: Any) -> "RngSpec":
        """Derive a sub-stream from string/int keys (order-sensitive)."""
        state = self.stream_id
        for key in keys:
            state = _fold_key(state, key)
        return RngSpec(self.seed, state)

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Response vector and dense design matrix, with optional synthetic truth.

    ``column_scales`` is populated by ``qrsolver.standardize_columns``; entry j
    is the factor s_j such that ``X_std[:, j] = X_orig[:, j] / s_j``.
    """

    y: np.ndarray
    X: np.ndarray
    n: int
    p: int
    true_beta: np.ndarray | None = None
    column_scales: np.ndarray | None = None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.n == other.n
            and self.p == other.p
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.X, other.X)
            and _opt_array_equal(self.true_beta, other.true_beta)
            and _opt_array_equal(self.column_scales, other.column_scales)
        )


def _opt_array_equal(a: np.ndarray | None, b: np.ndarray | None) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return np.array_equal(a, b)


def validate_dataset(
    y: np.ndarray,
    X: np.ndarray,
    true_beta: np.ndarray | None = None,
    column_scales: np.ndarray | None = None,
) -> Dataset:
    """Validate raw (y, X) and build an immutable Dataset.

    Raises
    ------
    DimensionMismatch
        If X's row count differs from len(y), or optional vectors mismatch p.
    NonFiniteValue
        If any entry is NaN or infinite; carries the (row, col) location.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    X = np.asarray(X, dtype=float)
    if y.size == 0:
        raise ValidationError("y must be nonempty")
    if X.ndim != 2:
        raise ValidationError(f"X must be a 2-d matrix, got ndim={X.ndim}")
    n, p = X.shape
    if n != y.size:
        raise DimensionMismatch("rows of X", expected=y.size, got=n)
    if not np.isfinite(y).all():
        row = int(np.flatnonzero(~np.isfinite(y))[0])
        raise NonFiniteValue("y", row)
    if not np.isfinite(X).all():
        row, col = np.argwhere(~np.isfinite(X))[0]
        raise NonFiniteValue("X", int(row), int(col))
    if true_beta is not None:
        true_beta = np.asarray(true_beta, dtype=float).reshape(-1)
        if true_beta.size != p:
            raise DimensionMismatch("true_beta", expected=p, got=true_beta.size)
        true_beta = _readonly(true_beta)
    if column_scales is not None:
        column_scales = np.asarray(column_scales, dtype=float).reshape(-1)
        if column_scales.size != p:
            raise DimensionMismatch("column_scales", expected=p, got=column_scales.size)
        if not (column_scales > 0).all():
            raise ValidationError("column_scales must be strictly positive")
        norms = np.sqrt(np.sum(X**2, axis=0))
        if np.any(np.abs(norms - np.sqrt(n)) > 1e-8 * np.sqrt(n)):
            j = int(np.argmax(np.abs(norms - np.sqrt(n))))
            raise ValidationError(
                f"column_scales present but column {j} has norm {norms[j]:.6g} "
                f"!= sqrt(n)={np.sqrt(n):.6g}; standardize before attaching scales"
            )
        column_scales = _readonly(column_scales)
    return Dataset(
        y=_readonly(y), X=_readonly(X), n=int(n), p=int(p),
        true_beta=true_beta, column_scales=column_scales,
    )


@dataclass(frozen=True, eq=False)
class PenaltySpec:
    """Quantile level, penalty level and per-coordinate weights.

    The objective is  sum_i rho_tau(y_i - x_i'b) + n*lam*sum_j weights_j*|b_j|
    + (ridge_eps/2)*||b||_2^2.  ``ridge_eps`` is the negligible L2 term used
    only to force a unique minimizer; it defaults to 0 here and solvers add
    their own tiebreak.
    """

    tau: float
    lam: float
    weights: np.ndarray
    ridge_eps: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValidationError(f"tau must be in (0, 1), got {self.tau}")
        if self.lam < 0:
            raise ValidationError(f"lambda must be nonnegative, got {self.lam}")
        if self.ridge_eps < 0:
            raise ValidationError(f"ridge_eps must be nonnegative, got {self.ridge_eps}")
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size and w.min() < 0:
            raise ValidationError("weights must be nonnegative")
        object.__setattr__(self, "weights", _readonly(w))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PenaltySpec):
            return NotImplemented
        return (
            self.tau == other.tau
            and self.lam == other.lam
            and self.ridge_eps == other.ridge_eps
            and np.array_equal(self.weights, other.weights)
        )


@dataclass(frozen=True, eq=False)
class FitResult:
    """Fitted coefficients plus solver diagnostics.

    ``support`` is exactly {j : |beta_j| > support_tol}.  ``meta`` holds
    extras such as the KKT report, warm-start info, or the first-stage fit of
    a two-step procedure; it never participates in equality.
    """

    beta: np.ndarray
    support: np.ndarray
    objective: float
    iterations: int
    primal_residual: float
    dual_residual: float
    converged: bool
    support_tol: float = DEFAULT_SUPPORT_TOL
    meta: dict = field(default_factory=dict)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FitResult):
            return NotImplemented
        return (
            np.array_equal(self.beta, other.beta)
            and np.array_equal(self.support, other.support)
            and self.objective == other.objective
            and self.iterations == other.iterations
            and self.converged == other.converged
        )


def make_fit_result(
    beta: np.ndarray,
    objective: float,
    iterations: int,
    primal_residual: float = 0.0,
    dual_residual: float = 0.0,
    converged: bool = True,
    support_tol: float = DEFAULT_SUPPORT_TOL,
    meta: dict | None = None,
) -> FitResult:
    """Build a FitResult, deriving the support set from ``beta``."""
    if support_tol <= 0:
        raise ValidationError("support_tol must be positive")
    beta = _readonly(np.asarray(beta, dtype=float).reshape(-1))
    support = np.flatnonzero(np.abs(beta) > support_tol)
    support.flags.writeable = False
    return FitResult(
        beta=beta,
        support=support,
        objective=float(objective),
        iterations=int(iterations),
        primal_residual=float(primal_residual),
        dual_residual=float(dual_residual),
        converged=bool(converged),
        support_tol=float(support_tol),
        meta=dict(meta or {}),
    )
