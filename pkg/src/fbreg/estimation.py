"""
Point estimates from pooled posterior draws, prediction, and the OLS baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fbreg.beta_math import inv_logit, omega_tilde_cap
from fbreg.diagnostics import ThinnedSample
from fbreg.model import Dataset


@dataclass(frozen=True)
class FBREstimate:
    beta_hat: np.ndarray
    p_hat: float
    phi_hat: float
    omega_hat: float
    mu_hat: np.ndarray
    omega_tilde_opt: np.ndarray
    lambda1_hat: np.ndarray
    lambda2_hat: np.ndarray

    scale_by_omega: bool = False

    def curves(self, X):
        """``(mu, lambda1, lambda2)`` at the rows of ``X``."""
        scale = self.omega_hat if self.scale_by_omega else 1.0
        return regression_curves(self.beta_hat, self.p_hat, X, scale)


@dataclass(frozen=True)
class OlsFit:
    coef: np.ndarray
    fitted: np.ndarray
    n_out_of_range: int

    @property
    def beta0(self) -> float:
        return float(self.coef[0])

    @property
    def beta1(self) -> float:
        return float(self.coef[1])


def regression_curves(beta_hat, p_hat, X, omega_scale=1.0):
    mu = inv_logit(np.atleast_2d(np.asarray(X, dtype=float)) @ np.asarray(beta_hat, dtype=float))
    wt = omega_scale * np.asarray(omega_tilde_cap(mu, p_hat))
    return mu, mu + (1.0 - p_hat) * wt, mu - p_hat * wt


def point_estimate(thinned, data: Dataset, scale_by_omega: bool = False) -> FBREstimate:
    """Column medians of the pooled draws and the fitted curves they imply.

    ``thinned`` is a :class:`ThinnedSample` or a mapping with keys
    ``beta0..beta{k-1}``, ``phi``, ``omega`` and ``p``.

    By default the width is the full cap, ``omega_tilde_opt = cap(mu_hat, p_hat)``,
    which puts one of the two curves on the boundary (lambda2 = 0 where
    ``mu/p`` is the smaller branch, lambda1 = 1 otherwise).  With
    ``scale_by_omega`` the cap is multiplied by ``omega_hat`` and both curves
    stay strictly inside (0, 1).
    """
    values = thinned.values if isinstance(thinned, ThinnedSample) else thinned
    names = [f"beta{r}" for r in range(data.k)] + ["phi", "omega", "p"]
    for name in names:
        if np.asarray(values.get(name, [])).size == 0:
            raise ValueError(f"no draws for {name}")
    beta_hat = np.array([np.median(values[f"beta{r}"]) for r in range(data.k)])
    p_hat = float(np.median(values["p"]))
    omega_hat = float(np.median(values["omega"]))
    scale = omega_hat if scale_by_omega else 1.0
    mu, lam1, lam2 = regression_curves(beta_hat, p_hat, data.X, scale)
    return FBREstimate(
        beta_hat=beta_hat,
        p_hat=p_hat,
        phi_hat=float(np.median(values["phi"])),
        omega_hat=omega_hat,
        mu_hat=mu,
        omega_tilde_opt=scale * np.asarray(omega_tilde_cap(mu, p_hat)),
        lambda1_hat=lam1,
        lambda2_hat=lam2,
        scale_by_omega=scale_by_omega,
    )


def predict(beta_hat, x_new):
    """Fitted mean ``inv_logit(x_new @ beta_hat)`` for one row or a matrix of rows."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    x_new = np.asarray(x_new, dtype=float)
    if x_new.shape[-1] != beta_hat.size:
        raise ValueError(f"covariate rows have length {x_new.shape[-1]}, expected {beta_hat.size}")
    return inv_logit(x_new @ beta_hat)


def z_grid(z, size: int = 200):
    return np.linspace(np.min(z), np.max(z), size)


def ols_fit(data: Dataset) -> OlsFit:
    """Least squares of ``y`` on the design through the normal equations."""
    X, y = data.X, data.y
    if data.n < data.k or np.any(np.ptp(X[:, 1:], axis=0) == 0):
        raise ValueError("degenerate design: a covariate is constant")
    coef = np.linalg.solve(X.T @ X, X.T @ y)
    fitted = X @ coef
    out = int(np.count_nonzero((fitted <= 0.0) | (fitted >= 1.0)))
    return OlsFit(coef=coef, fitted=fitted, n_out_of_range=out)
