"""Seeded generation of the synthetic benchmark designs.

Gaussian covariates under identity or AR(1) covariance, the canonical sparse
coefficient vector with seven nonzero entries, and six symmetric noise models
ranging from Gaussian to standard Cauchy.  Everything is a pure function of an
RngSpec stream, so datasets are bit-reproducible.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import Dataset, RngSpec, ValidationError, validate_dataset

# first 16 coefficients; everything beyond is zero
_BETA_HEAD = np.array(
    [2.0, 0.0, 1.5, 0.0, 0.80, 0.0, 0.0, 1.0, 0.0, 1.75, 0.0, 0.0, 0.75, 0.0, 0.0, 0.3]
)

NOISE_KINDS = ("gauss", "mn1", "mn2", "laplace", "t4_scaled", "cauchy")


@dataclass(frozen=True)
class CovModel:
    """Covariate covariance: identity or AR(1) with correlation rho."""

    kind: str
    rho: float = 0.0

    def __post_init__(self):
        if self.kind not in ("identity", "ar1"):
            raise ValidationError(f"unknown covariance kind {self.kind!r}")
        if self.kind == "ar1" and not -1.0 < self.rho < 1.0:
            raise ValidationError("ar1 correlation must lie in (-1, 1)")

    @classmethod
    def identity(cls) -> "CovModel":
        return cls("identity")

    @classmethod
    def ar1(cls, rho: float = 0.5) -> "CovModel":
        return cls("ar1", rho)

    def label(self) -> str:
        return self.kind if self.kind == "identity" else f"ar1({self.rho:g})"

    @classmethod
    def parse(cls, text: str) -> "CovModel":
        text = text.strip().lower()
        if text in ("identity", "id", "i"):
            return cls.identity()
        if text.startswith("ar1"):
            if ":" in text:
                return cls.ar1(float(text.split(":", 1)[1]))
            return cls.ar1()
        raise ValidationError(f"cannot parse covariance model {text!r}")


@dataclass(frozen=True)
class NoiseModel:
    """One of the six symmetric error distributions.

    gauss      normal with the given variance (default 2)
    mn1        scale mixture: sigma_i^2 = 1 w.p. 0.9 and 25 w.p. 0.1
    mn2        scale mixture: sigma_i ~ Unif(1, 5), eps_i ~ N(0, sigma_i^2)
    laplace    double exponential with the given scale (default 1)
    t4_scaled  sqrt(2) times Student-t with 4 degrees of freedom
    cauchy     standard Cauchy

    All are symmetric about 0, so P(eps <= 0) = 1/2.
    """

    kind: str
    var: float = 2.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValidationError(f"unknown noise kind {self.kind!r}")
        if self.var <= 0 or self.scale <= 0:
            raise ValidationError("noise parameters must be positive")

    @classmethod
    def gauss(cls, var: float = 2.0) -> "NoiseModel":
        return cls("gauss", var=var)

    @classmethod
    def mn1(cls) -> "NoiseModel":
        return cls("mn1")

    @classmethod
    def mn2(cls) -> "NoiseModel":
        return cls("mn2")

    @classmethod
    def laplace(cls, scale: float = 1.0) -> "NoiseModel":
        return cls("laplace", scale=scale)

    @classmethod
    def t4_scaled(cls) -> "NoiseModel":
        return cls("t4_scaled")

    @classmethod
    def cauchy(cls) -> "NoiseModel":
        return cls("cauchy")

    def label(self) -> str:
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "NoiseModel":
        text = text.strip().lower()
        if ":" in text:
            kind, arg = text.split(":", 1)
            if kind == "gauss":
                return cls.gauss(float(arg))
            if kind == "laplace":
                return cls.laplace(float(arg))
            raise ValidationError(f"noise kind {kind!r} takes no parameter")
        if text in NOISE_KINDS:
            return cls(text)
        raise ValidationError(f"cannot parse noise model {text!r}")


def beta_star(p: int) -> np.ndarray:
    """Canonical true coefficient vector: 7 nonzeros in the first 16 slots."""
    if p < 16:
        raise ValidationError(f"beta_star requires p >= 16, got {p}")
    beta = np.zeros(p)
    beta[:16] = _BETA_HEAD
    return beta


def gen_design(n: int, p: int, cov: CovModel, rng: RngSpec) -> np.ndarray:
    """Draw n i.i.d. rows from N(0, Sigma).

    For AR(1), each row follows the exact recursion x_1 ~ N(0,1),
    x_j = rho*x_{j-1} + sqrt(1-rho^2)*z_j, so Sigma_jk = rho^|j-k| exactly.
    """
    if n < 1 or p < 1:
        raise ValidationError("n and p must be positive")
    g = rng.generator()
    Z = g.standard_normal((n, p))
    if cov.kind == "identity":
        return Z
    X = np.empty_like(Z)
    X[:, 0] = Z[:, 0]
    scale = np.sqrt(1.0 - cov.rho**2)
    for j in range(1, p):
        X[:, j] = cov.rho * X[:, j - 1] + scale * Z[:, j]
    return X


def gen_noise(model: NoiseModel, n: int, rng: RngSpec) -> np.ndarray:
    """Draw n i.i.d. errors from the given noise model."""
    if n < 1:
        raise ValidationError("n must be positive")
    g = rng.generator()
    kind = model.kind
    if kind == "gauss":
        return g.standard_normal(n) * np.sqrt(model.var)
    if kind == "mn1":
        mix = g.random(n)
        z = g.standard_normal(n)
        return z * np.where(mix < 0.9, 1.0, 5.0)
    if kind == "mn2":
        sigma = g.uniform(1.0, 5.0, n)
        z = g.standard_normal(n)
        return z * sigma
    if kind == "laplace":
        return g.laplace(0.0, model.scale, n)
    if kind == "t4_scaled":
        return np.sqrt(2.0) * g.standard_t(4, n)
    if kind == "cauchy":
        return g.standard_cauchy(n)
    raise ValidationError(f"unknown noise kind {kind!r}")


def make_dataset(
    n: int,
    p: int,
    cov: CovModel,
    noise: NoiseModel | None,
    rng: RngSpec,
) -> Dataset:
    """Build y = X beta_star + eps with per-purpose sub-streams.

    ``noise=None`` injects zero noise (test hook): y = X beta_star exactly.
    """
    X = gen_design(n, p, cov, rng.child("design"))
    beta = beta_star(p)
    y = X @ beta
    if noise is not None:
        y = y + gen_noise(noise, n, rng.child("noise"))
    return validate_dataset(y, X, true_beta=beta)


def write_dataset_csv(data: Dataset, path) -> None:
    """Write the documented delimited layout: header row, y first column."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y"] + [f"x{j + 1}" for j in range(data.p)])
        for i in range(data.n):
            writer.writerow([repr(float(data.y[i]))] + [repr(float(v)) for v in data.X[i]])


def read_dataset_csv(path) -> Dataset:
    """Read the layout written by :func:`write_dataset_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "y":
            raise ValidationError(f"{path}: expected header starting with 'y'")
        rows = [[float(v) for v in row] for row in reader if row]
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != len(header):
        raise ValidationError(f"{path}: ragged or empty table")
    return validate_dataset(arr[:, 0], arr[:, 1:])
