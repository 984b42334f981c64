"""
Metropolis-Hastings-within-Gibbs sampler for flexible Beta regression.

One sweep updates, in order: the latent labels ``v``, the weight ``p``, the
means ``mu`` (from the current ``beta``), the width ``omega_tilde``, the
precision ``phi`` (random-walk MH) and finally ``beta`` (Gaussian random-walk
MH with diagonal proposal covariance).  ``v``, ``p`` and ``omega_tilde`` are
drawn exactly from their conditionals.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from fbreg.beta_math import inv_logit, log_beta_kernel, omega_tilde_cap
from fbreg.model import (
    Allocation,
    Dataset,
    FBRParams,
    PriorConfig,
    log_prior_beta,
    log_prior_phi,
    loglik,
    loglik_complete_lambdas,
)

OMEGA_STYLES = ("vector", "scalar-min")


class ChainError(RuntimeError):
    def __init__(self, chain_id, message):
        super().__init__(f"chain {chain_id}: {message}")
        self.chain_id = chain_id


@dataclass(frozen=True)
class SamplerConfig:
    n_samples: int = 8000
    n_chains: int = 20
    burn_in: int = 4000
    sigma_phi: float = 0.125
    sigma_J_diag: np.ndarray | None = None  # proposal variances for beta; 1e-3 each if None
    init: FBRParams | None = None  # None: OLS coefficients, phi=3, omega=p=0.5
    seed: int = 0
    omega_style: str = "vector"

    def __post_init__(self):
        if self.n_samples < 1 or self.n_chains < 1:
            raise ValueError("n_samples and n_chains must be positive")
        if not 0 <= self.burn_in < self.n_samples:
            raise ValueError(f"burn_in={self.burn_in} must be in [0, n_samples={self.n_samples})")
        if not self.sigma_phi >= 0:
            raise ValueError("sigma_phi must be non-negative")
        if self.sigma_J_diag is not None:
            sj = np.atleast_1d(np.asarray(self.sigma_J_diag, dtype=float))
            if np.any(sj < 0):
                raise ValueError("sigma_J_diag entries must be non-negative")
            object.__setattr__(self, "sigma_J_diag", sj)
        if self.omega_style not in OMEGA_STYLES:
            raise ValueError(f"omega_style must be one of {OMEGA_STYLES}")

    def proposal_variances(self, k: int):
        if self.sigma_J_diag is None:
            return np.full(k, 1e-3)
        sj = self.sigma_J_diag
        if sj.size == 1:
            return np.full(k, sj[0])
        if sj.size != k:
            raise ValueError(f"sigma_J_diag has {sj.size} entries, expected {k}")
        return sj


@dataclass
class FBRState:
    """Mutable state of one chain between sweeps."""

    beta: np.ndarray
    phi: float
    omega: float
    omega_tilde: np.ndarray
    p: float
    mu: np.ndarray
    alloc: Allocation | None = None

    @property
    def lambdas(self):
        return (
            self.mu + (1.0 - self.p) * self.omega_tilde,
            self.mu - self.p * self.omega_tilde,
        )


@dataclass
class ChainDraws:
    beta: np.ndarray  # (n_samples, k)
    phi: np.ndarray
    omega: np.ndarray
    p: np.ndarray
    accept_phi: int = 0
    accept_beta: int = 0
    final_alloc: Allocation | None = None
    chain_id: int = 0
    # original draw index of each row; burn() shifts this
    index: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.index is None:
            self.index = np.arange(len(self.phi))

    def __len__(self):
        return len(self.phi)

    @property
    def n_total(self) -> int:
        """Number of sweeps that produced the acceptance counts."""
        return int(self.index[-1]) + 1 if len(self.index) else 0

    def params(self):
        """Mapping parameter name -> 1-D draw vector."""
        out = {f"beta{r}": self.beta[:, r] for r in range(self.beta.shape[1])}
        out.update(phi=self.phi, omega=self.omega, p=self.p)
        return out


def chain_rng(seed: int, chain_id: int) -> np.random.Generator:
    """Generator for chain ``chain_id``: child ``chain_id`` of ``SeedSequence(seed)``.

    Identical to ``SeedSequence(seed).spawn(n)[chain_id]`` for any ``n > chain_id``.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chain_id,)))


def _uniform_open(rng):
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return u


def prob_v(data: Dataset, lambda1, lambda2, phi, p):
    """P(v_i = 1 | y_i, params) for every observation, via log-odds."""
    l1 = np.log(p) + log_beta_kernel(data.log_y, data.log_1my, lambda1, phi)
    l2 = np.log1p(-p) + log_beta_kernel(data.log_y, data.log_1my, lambda2, phi)
    return expit(l1 - l2)


def draw_v(data: Dataset, lambda1, lambda2, phi, p, rng) -> Allocation:
    """Draw each label from its Bernoulli full conditional."""
    return Allocation(rng.random(data.n) < prob_v(data, lambda1, lambda2, phi, p))


def draw_p(alloc: Allocation, rng) -> float:
    """Beta(n1 + 1, n0 + 1) draw via two Gamma variates."""
    g1 = rng.standard_gamma(alloc.n1 + 1.0)
    g0 = rng.standard_gamma(alloc.n0 + 1.0)
    p = g1 / (g1 + g0)
    # keep p strictly inside (0, 1) for the log terms downstream
    return float(np.clip(p, 1e-15, 1.0 - 1e-15))


def draw_omega(mu, p, rng, style="vector"):
    """Draw the width scale ``u ~ U(0, 1)`` and return ``(u, omega_tilde)``.

    ``style="vector"`` scales each observation's own cap;
    ``style="scalar-min"`` scales the smallest cap and uses it for every observation.
    """
    u = _uniform_open(rng)
    cap = np.asarray(omega_tilde_cap(mu, p))
    if style == "vector":
        return u, u * cap
    if style == "scalar-min":
        return u, np.full_like(cap, u * cap.min())
    raise ValueError(f"unknown omega style {style!r}")


def _log_target_phi(phi, state: FBRState, alloc, data, prior, lam=None):
    if not phi > 0:
        return -np.inf
    lam1, lam2 = state.lambdas if lam is None else lam
    return loglik_complete_lambdas(data, alloc.v, lam1, lam2, phi, state.p) + log_prior_phi(phi, prior)


def mh_phi(current: FBRState, alloc: Allocation, data, prior, sigma_phi, rng):
    """Random-walk MH step for ``phi``. Returns ``(phi, accepted)``."""
    proposal = current.phi + sigma_phi * rng.standard_normal()
    log_u = np.log(rng.random())
    if proposal <= 0:
        return current.phi, False
    lam = current.lambdas
    diff = _log_target_phi(proposal, current, alloc, data, prior, lam) - _log_target_phi(
        current.phi, current, alloc, data, prior, lam
    )
    if log_u < diff:
        return float(proposal), True
    return current.phi, False


def mh_beta(current: FBRState, alloc: Allocation, data, prior, sigma_J_diag, rng):
    """Gaussian random-walk MH step for ``beta`` with ``omega_tilde`` held fixed.

    Returns ``(beta, accepted)``.  Proposals that push any component mean
    out of (0, 1) have zero target density and are rejected.
    """
    sd = np.sqrt(np.asarray(sigma_J_diag, dtype=float))
    proposal = current.beta + sd * rng.standard_normal(current.beta.size)
    log_u = np.log(rng.random())
    p, wt = current.p, current.omega_tilde

    mu_new = inv_logit(data.X @ proposal)
    new = loglik_complete_lambdas(
        data, alloc.v, mu_new + (1.0 - p) * wt, mu_new - p * wt, current.phi, p
    )
    if new == -np.inf:
        return current.beta, False
    lam1, lam2 = current.lambdas
    old = loglik_complete_lambdas(data, alloc.v, lam1, lam2, current.phi, p)
    diff = (new + log_prior_beta(proposal, prior)) - (old + log_prior_beta(current.beta, prior))
    if log_u < diff:
        return proposal, True
    return current.beta, False


def default_init(data: Dataset) -> FBRParams:
    """OLS coefficients as the starting beta, phi=3, omega=p=0.5."""
    coef, *_ = np.linalg.lstsq(data.X, data.y, rcond=None)
    return FBRParams(beta=coef, phi=3.0, omega=0.5, p=0.5)


def initial_state(data: Dataset, init: FBRParams) -> FBRState:
    init.check()
    if init.beta.size != data.k:
        raise ValueError(f"initial beta has {init.beta.size} entries, expected {data.k}")
    if not np.isfinite(loglik(init, data)):
        raise ValueError("log-likelihood is -inf at the initial parameters")
    mu = inv_logit(data.X @ init.beta)
    wt = init.omega * np.asarray(omega_tilde_cap(mu, init.p))
    return FBRState(
        beta=init.beta.copy(), phi=float(init.phi), omega=float(init.omega),
        omega_tilde=wt, p=float(init.p), mu=mu,
    )


def sweep(state: FBRState, data, prior, sigma_phi, sigma_J_diag, rng, omega_style="vector"):
    """One full update of ``state`` in place; returns ``(phi_accepted, beta_accepted)``."""
    lam1, lam2 = state.lambdas
    alloc = draw_v(data, lam1, lam2, state.phi, state.p, rng)
    state.alloc = alloc
    state.p = draw_p(alloc, rng)
    state.mu = inv_logit(data.X @ state.beta)
    state.omega, state.omega_tilde = draw_omega(state.mu, state.p, rng, omega_style)
    state.phi, acc_phi = mh_phi(state, alloc, data, prior, sigma_phi, rng)
    state.beta, acc_beta = mh_beta(state, alloc, data, prior, sigma_J_diag, rng)
    if acc_beta:
        # the next label draw must see the means of the accepted beta
        state.mu = inv_logit(data.X @ state.beta)
    return acc_phi, acc_beta


def run_chain(data: Dataset, prior: PriorConfig, config: SamplerConfig, chain_id: int = 0) -> ChainDraws:
    rng = chain_rng(config.seed, chain_id)
    init = config.init if config.init is not None else default_init(data)
    try:
        state = initial_state(data, init)
    except ValueError as exc:
        raise ChainError(chain_id, f"invalid initialisation: {exc}") from exc
    sigma_J = config.proposal_variances(data.k)

    n = config.n_samples
    beta = np.empty((n, data.k))
    phi = np.empty(n)
    omega = np.empty(n)
    p = np.empty(n)
    acc_phi = acc_beta = 0
    for j in range(n):
        a_phi, a_beta = sweep(state, data, prior, config.sigma_phi, sigma_J, rng, config.omega_style)
        acc_phi += a_phi
        acc_beta += a_beta
        beta[j] = state.beta
        phi[j] = state.phi
        omega[j] = state.omega
        p[j] = state.p
    return ChainDraws(
        beta=beta, phi=phi, omega=omega, p=p,
        accept_phi=acc_phi, accept_beta=acc_beta,
        final_alloc=state.alloc, chain_id=chain_id,
    )


def _run_one(args):
    data, prior, config, chain_id = args
    return run_chain(data, prior, config, chain_id)


def run_chains(data: Dataset, prior: PriorConfig, config: SamplerConfig, n_jobs: int = 1):
    """Run ``config.n_chains`` independent chains, optionally in worker processes.

    Each chain seeds itself from ``(config.seed, chain_id)`` so the result
    does not depend on ``n_jobs``.
    """
    jobs = [(data, prior, config, c) for c in range(config.n_chains)]
    if n_jobs == 1:
        chains = [_run_one(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            chains = list(pool.map(_run_one, jobs))
    return chains

