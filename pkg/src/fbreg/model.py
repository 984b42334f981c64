"""
Flexible Beta regression layer: data, linear predictor, likelihoods and prior.

The regression links the overall mean of each response to the covariates
through the logit, ``mu_i = inv_logit(x_i @ beta)``.  The component means are
then rebuilt as ``lambda1 = mu + (1-p)*omega_tilde`` and
``lambda2 = mu - p*omega_tilde`` with ``omega_tilde = omega * cap(mu, p)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from fbreg.beta_math import inv_logit, lambdas_valid, log_beta_kernel, omega_tilde_cap


@dataclass(frozen=True)
class Dataset:
    """Responses ``y`` in (0, 1) and an ``n x k`` design whose first column is ones."""

    y: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        if y.size == 0:
            raise ValueError("dataset is empty")
        if X.shape[0] != y.size:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.size} entries")
        bad = np.flatnonzero(~((y > 0.0) & (y < 1.0)))
        if bad.size:
            raise ValueError(f"responses must lie in (0, 1); offending rows: {bad[:10].tolist()}")
        if not np.all(X[:, 0] == 1.0):
            raise ValueError("column 0 of X must be the intercept (all ones)")
        if X.shape[1] > y.size or np.linalg.matrix_rank(X) < X.shape[1]:
            raise ValueError("design matrix is rank deficient")

    @classmethod
    def from_z(cls, y, z):
        """Build a dataset with design rows ``(1, z_i)``."""
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            z = z[:, None]
        return cls(y, np.column_stack([np.ones(z.shape[0]), z]))

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def k(self) -> int:
        return self.X.shape[1]

    @property
    def z(self):
        """The single non-intercept covariate (only for ``k == 2``)."""
        if self.k != 2:
            raise ValueError("z is only defined for a single covariate plus intercept")
        return self.X[:, 1]

    @cached_property
    def log_y(self):
        return np.log(self.y)

    @cached_property
    def log_1my(self):
        return np.log1p(-self.y)


@dataclass(frozen=True)
class FBRParams:
    """A point in parameter space.

    Construction does not enforce the support so that proposals and prior
    evaluations can represent out-of-support points; use :meth:`check` when
    a valid point is required.
    """

    beta: np.ndarray
    phi: float
    omega: float
    p: float

    def __post_init__(self):
        object.__setattr__(self, "beta", np.atleast_1d(np.asarray(self.beta, dtype=float)))

    @property
    def in_support(self) -> bool:
        return bool(
            self.phi > 0
            and 0.0 < self.omega < 1.0
            and 0.0 < self.p < 1.0
            and np.all(np.isfinite(self.beta))
        )

    def check(self):
        if not self.in_support:
            raise ValueError(
                f"parameters outside support: phi={self.phi!r}, omega={self.omega!r}, p={self.p!r}"
            )
        return self


@dataclass(frozen=True)
class Allocation:
    """Latent component labels: 1 for the lambda1 component, 0 otherwise."""

    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v).astype(np.int8).ravel()
        if not np.all((v == 0) | (v == 1)):
            raise ValueError("allocation entries must be 0 or 1")
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.v.size

    @property
    def n1(self) -> int:
        return int(self.v.sum())

    @property
    def n0(self) -> int:
        return self.n - self.n1


@dataclass(frozen=True)
class PriorConfig:
    """Independent priors: beta_r ~ N(0, sigma_beta_diag[r]), phi ~ Gamma(kappa*g, g).

    The Gamma is in shape-rate form, so its mean is ``kappa``.  ``omega`` and
    ``p`` are Uniform(0, 1).
    """

    sigma_beta_diag: np.ndarray = field(default_factory=lambda: np.full(2, 1e4))
    kappa: float = 30.0
    g: float = 0.1

    def __post_init__(self):
        sig = np.atleast_1d(np.asarray(self.sigma_beta_diag, dtype=float))
        object.__setattr__(self, "sigma_beta_diag", sig)
        if not np.all(sig > 0):
            raise ValueError("prior variances for beta must be positive")
        if not (self.kappa > 0 and self.g > 0):
            raise ValueError("kappa and g must be positive")

    @classmethod
    def default(cls, k: int, **kwargs):
        return cls(sigma_beta_diag=np.full(k, 1e4), **kwargs)

    @property
    def phi_shape(self) -> float:
        return self.kappa * self.g

    @property
    def phi_rate(self) -> float:
        return self.g


def squeeze(y):
    """Map [0, 1] into (0, 1) via ``(y*(n-1) + 0.5) / n``."""
    y = np.asarray(y, dtype=float)
    n = y.size
    return (y * (n - 1) + 0.5) / n


def mu_of(beta, X):
    return inv_logit(np.asarray(X, dtype=float) @ np.asarray(beta, dtype=float))


def omega_tilde_of(omega, mu, p):
    return omega * np.asarray(omega_tilde_cap(mu, p))


def component_means(params: FBRParams, X):
    """Per-row ``(lambda1, lambda2)`` implied by ``params`` at design ``X``."""
    mu = mu_of(params.beta, X)
    wt = omega_tilde_of(params.omega, mu, params.p)
    return mu + (1.0 - params.p) * wt, mu - params.p * wt


def loglik_lambdas(data: Dataset, lam1, lam2, phi, p) -> float:
    """Observed-data log-likelihood for explicit per-observation component means."""
    if not lambdas_valid(lam1, lam2):
        return -np.inf
    terms = np.logaddexp(
        np.log(p) + log_beta_kernel(data.log_y, data.log_1my, lam1, phi),
        np.log1p(-p) + log_beta_kernel(data.log_y, data.log_1my, lam2, phi),
    )
    return float(terms.sum())


def loglik_complete_lambdas(data: Dataset, v, lam1, lam2, phi, p) -> float:
    """Complete-data log-likelihood for explicit component means and labels."""
    if not lambdas_valid(lam1, lam2):
        return -np.inf
    v = np.asarray(v)
    lam = np.where(v == 1, lam1, lam2)
    n1 = int(v.sum())
    n0 = v.size - n1
    dens = log_beta_kernel(data.log_y, data.log_1my, lam, phi).sum()
    return float(n1 * np.log(p) + n0 * np.log1p(-p) + dens)


def loglik(params: FBRParams, data: Dataset) -> float:
    """Sum over observations of the FB log-density; ``-inf`` if any lambda pair is invalid."""
    if not params.in_support:
        return -np.inf
    lam1, lam2 = component_means(params, data.X)
    return loglik_lambdas(data, lam1, lam2, params.phi, params.p)


def loglik_complete(params: FBRParams, alloc: Allocation, data: Dataset) -> float:
    if not params.in_support:
        return -np.inf
    lam1, lam2 = component_means(params, data.X)
    return loglik_complete_lambdas(data, alloc.v, lam1, lam2, params.phi, params.p)


def log_prior_phi(phi, prior: PriorConfig) -> float:
    if not phi > 0:
        return -np.inf
    a, rate = prior.phi_shape, prior.phi_rate
    return float(a * np.log(rate) - gammaln(a) + (a - 1.0) * np.log(phi) - rate * phi)


def log_prior_beta(beta, prior: PriorConfig) -> float:
    beta = np.asarray(beta, dtype=float)
    var = prior.sigma_beta_diag
    return float(np.sum(-0.5 * np.log(2.0 * np.pi * var) - 0.5 * beta**2 / var))


def log_prior(params: FBRParams, prior: PriorConfig) -> float:
    if not params.in_support:
        return -np.inf
    return log_prior_beta(params.beta, prior) + log_prior_phi(params.phi, prior)
