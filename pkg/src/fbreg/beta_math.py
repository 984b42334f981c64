"""
Densities, transforms and samplers for the mean-precision Beta and the
flexible Beta (FB) mixture.

Everything is computed in log space with ``gammaln``; the two mixture
components are combined with ``logaddexp``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, gammaln

# inv_logit never returns exact 0 or 1
EPS = 1e-15
# Gamma-ratio draws can underflow to exactly 0 or round to 1 for tiny shapes
_DRAW_LO = np.finfo(float).tiny
_DRAW_HI = 1.0 - np.finfo(float).epsneg


class LambdaRangeError(ValueError):
    """Raised when (mu, omega_tilde, p) does not give 0 < lambda2 < lambda1 < 1."""


def _check_open_unit(name, value):
    arr = np.asarray(value, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise ValueError(f"{name} must lie in the open interval (0, 1), got {value!r}")


@dataclass(frozen=True)
class MeanPrecisionBeta:
    """Beta distribution with mean ``a`` and precision ``b``.

    The classical shapes are ``(a*b, (1-a)*b)``.
    """

    a: float
    b: float

    def __post_init__(self):
        _check_open_unit("a", self.a)
        if not self.b > 0:
            raise ValueError(f"precision b must be positive, got {self.b!r}")

    @property
    def shapes(self):
        return self.a * self.b, (1.0 - self.a) * self.b


@dataclass(frozen=True)
class FlexibleBeta:
    """Two-component Beta mixture with shared precision and ordered means."""

    lambda1: float
    lambda2: float
    phi: float
    p: float

    def __post_init__(self):
        _check_open_unit("lambda1", self.lambda1)
        _check_open_unit("lambda2", self.lambda2)
        _check_open_unit("p", self.p)
        if not self.lambda2 < self.lambda1:
            raise ValueError(
                f"need lambda2 < lambda1, got lambda1={self.lambda1!r}, lambda2={self.lambda2!r}"
            )
        if not self.phi > 0:
            raise ValueError(f"precision phi must be positive, got {self.phi!r}")

    def components(self):
        return MeanPrecisionBeta(self.lambda1, self.phi), MeanPrecisionBeta(self.lambda2, self.phi)


@dataclass(frozen=True)
class FBMeanParam:
    """FB distribution in the (mean, precision, width scale, weight) form.

    ``omega`` is a scale in (0, 1); the component gap is
    ``omega * omega_tilde_cap(mu, p)``.
    """

    mu: float
    phi: float
    omega: float
    p: float

    def __post_init__(self):
        _check_open_unit("mu", self.mu)
        _check_open_unit("omega", self.omega)
        _check_open_unit("p", self.p)
        if not self.phi > 0:
            raise ValueError(f"precision phi must be positive, got {self.phi!r}")

    @property
    def omega_tilde(self):
        return self.omega * omega_tilde_cap(self.mu, self.p)

    def to_flexible_beta(self):
        lam1, lam2 = lambdas_from(self.mu, self.omega_tilde, self.p)
        return FlexibleBeta(float(lam1), float(lam2), self.phi, self.p)


def logit(x):
    """log(x / (1 - x)); ``x`` must lie in (0, 1)."""
    _check_open_unit("x", x)
    x = np.asarray(x, dtype=float)
    out = np.log(x) - np.log1p(-x)
    return out.item() if out.ndim == 0 else out


def inv_logit(t):
    """Logistic function, clamped to [EPS, 1 - EPS]."""
    out = np.clip(expit(np.asarray(t, dtype=float)), EPS, 1.0 - EPS)
    return out.item() if out.ndim == 0 else out


def log_beta_kernel(log_x, log_1mx, a, b):
    """Unchecked vectorised log f_B^*(x; a, b) given precomputed log x, log(1-x)."""
    s1 = a * b
    s2 = (1.0 - a) * b
    return gammaln(b) - gammaln(s1) - gammaln(s2) + (s1 - 1.0) * log_x + (s2 - 1.0) * log_1mx


def log_beta_mp(x, dist: MeanPrecisionBeta):
    """Log-density of the mean-precision Beta at ``x``.

    >>> float(log_beta_mp(0.3, MeanPrecisionBeta(0.5, 2.0)))
    0.0
    """
    _check_open_unit("x", x)
    x = np.asarray(x, dtype=float)
    out = log_beta_kernel(np.log(x), np.log1p(-x), dist.a, dist.b)
    return out.item() if out.ndim == 0 else out


def log_fb_density(y, fb: FlexibleBeta):
    """Log-density of the flexible Beta mixture at ``y``."""
    _check_open_unit("y", y)
    y = np.asarray(y, dtype=float)
    log_y, log_1my = np.log(y), np.log1p(-y)
    out = np.logaddexp(
        np.log(fb.p) + log_beta_kernel(log_y, log_1my, fb.lambda1, fb.phi),
        np.log1p(-fb.p) + log_beta_kernel(log_y, log_1my, fb.lambda2, fb.phi),
    )
    return out.item() if out.ndim == 0 else out


def fb_mean(fb: FlexibleBeta) -> float:
    return fb.p * fb.lambda1 + (1.0 - fb.p) * fb.lambda2


def omega_tilde_cap(mu, p):
    """Largest component gap keeping both component means inside (0, 1)."""
    mu = np.asarray(mu, dtype=float)
    out = np.minimum(mu / p, (1.0 - mu) / (1.0 - p))
    return out.item() if out.ndim == 0 else out


def lambdas_from(mu, omega_tilde, p):
    """Component means ``(lambda1, lambda2)`` from mean, gap and weight.

    Works elementwise on arrays. Raises :class:`LambdaRangeError` if any
    resulting pair violates ``0 < lambda2 < lambda1 < 1``.
    """
    mu = np.asarray(mu, dtype=float)
    omega_tilde = np.asarray(omega_tilde, dtype=float)
    lam1 = mu + (1.0 - p) * omega_tilde
    lam2 = mu - p * omega_tilde
    if not lambdas_valid(lam1, lam2):
        raise LambdaRangeError(
            f"invalid reconstruction from mu={mu!r}, omega_tilde={omega_tilde!r}, p={p!r}"
        )
    if lam1.ndim == 0:
        return lam1.item(), lam2.item()
    return lam1, lam2


def lambdas_valid(lam1, lam2) -> bool:
    return bool(np.all((lam2 > 0.0) & (lam2 < lam1) & (lam1 < 1.0)))


def sample_beta_mp(dist: MeanPrecisionBeta, rng: np.random.Generator, size=None):
    """Draw from Beta(a*b, (1-a)*b) as a ratio of two Gamma variates."""
    s1, s2 = dist.shapes
    g1 = rng.standard_gamma(s1, size=size)
    g2 = rng.standard_gamma(s2, size=size)
    return np.clip(g1 / (g1 + g2), _DRAW_LO, _DRAW_HI)


def sample_fb(fb: FlexibleBeta, rng: np.random.Generator, size=None):
    """Composition draw from the FB mixture.

    Returns ``(y, component)`` where ``component`` is 1 for the lambda1
    component and 0 for the lambda2 component.
    """
    y, component = sample_fb_arrays(fb.lambda1, fb.lambda2, fb.phi, fb.p, rng, size=size)
    if size is None:
        return float(y), int(component)
    return y, component


def sample_fb_arrays(lambda1, lambda2, phi, p, rng: np.random.Generator, size=None):
    """Vectorised composition draw; ``lambda1``/``lambda2`` may be per-observation arrays."""
    if size is None:
        size = np.broadcast(np.asarray(lambda1), np.asarray(lambda2)).shape
    component = (rng.random(size=size) < p).astype(int)
    mean = np.where(component == 1, lambda1, lambda2)
    g1 = rng.standard_gamma(mean * phi)
    g2 = rng.standard_gamma((1.0 - mean) * phi)
    return np.clip(g1 / (g1 + g2), _DRAW_LO, _DRAW_HI), component
