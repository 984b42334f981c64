import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import expit

from fbreg.model import Allocation, Dataset, FBRParams, PriorConfig
from fbreg.sampler import (
    ChainError,
    FBRState,
    SamplerConfig,
    chain_rng,
    draw_omega,
    draw_p,
    draw_v,
    initial_state,
    mh_beta,
    mh_phi,
    prob_v,
    run_chain,
    run_chains,
    sweep,
)
from oracles import (
    CONCENTRATED_PRIOR,
    beta0_log_target,
    central_range,
    grid_mass,
    phi_log_target,
    pinned_problem,
    run_pinned_beta,
    run_pinned_phi,
    total_variation,
)


@pytest.fixture
def data20():
    rng = np.random.default_rng(7)
    return Dataset.from_z(rng.uniform(0.05, 0.95, 20), rng.uniform(-1, 1, 20))


class TestDrawV:
    def test_equal_components_give_weight(self, data20):
        lam = np.full(20, 0.4)
        np.testing.assert_allclose(prob_v(data20, lam, lam, 6.0, 0.3), 0.3, atol=1e-14)

    def test_weight_near_one(self, data20):
        lam1, lam2 = np.full(20, 0.7), np.full(20, 0.2)
        alloc = draw_v(data20, lam1, lam2, 6.0, 1 - 1e-15, np.random.default_rng(0))
        assert alloc.n1 == 20

    def test_matches_density_ratio(self, data20):
        lam1, lam2 = np.full(20, 0.7), np.full(20, 0.25)
        a = stats.beta.pdf(data20.y, 0.7 * 5, 0.3 * 5)
        b = stats.beta.pdf(data20.y, 0.25 * 5, 0.75 * 5)
        expected = 0.4 * a / (0.4 * a + 0.6 * b)
        np.testing.assert_allclose(prob_v(data20, lam1, lam2, 5.0, 0.4), expected, rtol=1e-10)

    def test_frequencies(self, data20):
        lam1, lam2 = np.full(20, 0.7), np.full(20, 0.25)
        q = prob_v(data20, lam1, lam2, 5.0, 0.4)
        rng = np.random.default_rng(1)
        reps = 10_000
        freq = np.mean([draw_v(data20, lam1, lam2, 5.0, 0.4, rng).v for _ in range(reps)], axis=0)
        se = np.sqrt(q * (1 - q) / reps)
        assert np.all(np.abs(freq - q) <= 4 * se + 1e-12)


class TestDrawP:
    def _draws(self, v, n=100_000, seed=0):
        rng = np.random.default_rng(seed)
        alloc = Allocation(np.array(v))
        return np.array([draw_p(alloc, rng) for _ in range(n)])

    def test_half_split_symmetric(self):
        x = self._draws([1] * 5 + [0] * 5)
        se = x.std(ddof=1) / math.sqrt(x.size)
        assert abs(x.mean() - 0.5) < 3 * se

    def test_all_ones(self):
        x = self._draws([1] * 10, seed=1)
        se = x.std(ddof=1) / math.sqrt(x.size)
        assert abs(x.mean() - 11 / 12) < 3 * se
        assert stats.kstest(x, stats.beta(11, 1).cdf).pvalue > 0.01

    def test_empty_allocation_is_uniform(self):
        x = self._draws([], n=20_000)
        assert stats.kstest(x, "uniform").pvalue > 0.01

    def test_stays_inside(self):
        x = self._draws([1] * 2000, n=200)
        assert np.all((x > 0) & (x < 1))


class TestDrawOmega:
    def test_uniform(self):
        rng = np.random.default_rng(3)
        mu = np.array([0.3, 0.6])
        u = np.array([draw_omega(mu, 0.4, rng)[0] for _ in range(5000)])
        assert stats.kstest(u, "uniform").pvalue > 0.01

    def test_caps(self):
        rng = np.random.default_rng(4)
        mu = np.random.default_rng(5).uniform(0.01, 0.99, 50)
        for _ in range(200):
            p = rng.uniform(0.01, 0.99)
            u, wt = draw_omega(mu, p, rng)
            cap = np.minimum(mu / p, (1 - mu) / (1 - p))
            assert np.all(wt <= cap) and np.all(wt > 0)
            lam1, lam2 = mu + (1 - p) * wt, mu - p * wt
            assert np.all((lam2 > 0) & (lam1 < 1))

    def test_homogeneous_cap_one(self):
        u, wt = draw_omega(np.full(5, 0.45), 0.45, np.random.default_rng(6))
        np.testing.assert_allclose(wt, u)

    def test_scalar_min(self):
        mu = np.array([0.1, 0.5, 0.8])
        u, wt = draw_omega(mu, 0.5, np.random.default_rng(6), style="scalar-min")
        np.testing.assert_allclose(wt, u * 0.2)

    def test_bad_style(self):
        with pytest.raises(ValueError):
            draw_omega(np.array([0.5]), 0.5, np.random.default_rng(0), style="other")


class TestMetropolis:
    def _state(self):
        data, beta, p, u, wt, alloc = pinned_problem()
        state = FBRState(beta=beta, phi=5.0, omega=u, omega_tilde=wt, p=p, mu=expit(data.X @ beta))
        return data, state, alloc

    def test_zero_step_always_accepts(self):
        data, state, alloc = self._state()
        rng = np.random.default_rng(0)
        for _ in range(100):
            phi, acc = mh_phi(state, alloc, data, PriorConfig(), 0.0, rng)
            assert acc and phi == state.phi
            beta, acc = mh_beta(state, alloc, data, PriorConfig(), np.zeros(2), rng)
            assert acc
            np.testing.assert_array_equal(beta, state.beta)

    def test_nonpositive_phi_rejected(self):
        data, state, alloc = self._state()
        state.phi = 1e-3
        rng = np.random.default_rng(1)
        for _ in range(500):
            phi, _ = mh_phi(state, alloc, data, PriorConfig(), 5.0, rng)
            assert phi > 0

    def test_beta_rejects_invalid_means(self):
        data, state, alloc = self._state()
        rng = np.random.default_rng(2)
        for _ in range(200):
            beta, acc = mh_beta(state, alloc, data, PriorConfig(), np.full(2, 25.0), rng)
            mu = expit(data.X @ beta)
            lam1, lam2 = mu + (1 - state.p) * state.omega_tilde, mu - state.p * state.omega_tilde
            assert np.all((lam2 > 0) & (lam1 < 1))

    @pytest.mark.slow
    def test_phi_chain_matches_grid_posterior(self):
        data, beta, p, u, wt, alloc = pinned_problem()
        target = phi_log_target(data, wt, p, beta, alloc, CONCENTRATED_PRIOR)
        grid, w, _ = grid_mass(target, 1e-3, 20.0, np.linspace(0, 20, 2))
        lo, hi = central_range(grid, w)
        edges = np.linspace(lo, hi, 201)
        _, _, mass = grid_mass(target, 1e-3, 20.0, edges)
        draws = run_pinned_phi(data, beta, p, u, wt, alloc, CONCENTRATED_PRIOR, 0.125,
                               200_000, seed=1, phi0=float((grid * w).sum()))
        assert total_variation(draws, mass, edges) < 0.05

    @pytest.mark.slow
    def test_beta_chain_matches_grid_posterior(self):
        data, beta, p, u, wt, alloc = pinned_problem(k=1)
        prior = PriorConfig(sigma_beta_diag=[1e4])
        target = beta0_log_target(data, wt, p, 5.0, alloc, prior)
        grid, w, _ = grid_mass(target, -3.0, 3.0, np.linspace(-3, 3, 2))
        lo, hi = central_range(grid, w)
        edges = np.linspace(lo, hi, 201)
        _, _, mass = grid_mass(target, -3.0, 3.0, edges)
        sd = math.sqrt(((grid - (grid * w).sum()) ** 2 * w).sum())
        draws = run_pinned_beta(data, beta, p, u, wt, alloc, prior, 5.0,
                                np.array([(2.4 * sd) ** 2]), 200_000, seed=2)
        assert total_variation(draws[:, 0], mass, edges) < 0.05


class TestSweep:
    def test_state_stays_valid(self):
        data, beta, p, u, wt, alloc = pinned_problem()
        state = initial_state(data, FBRParams(beta, 5.0, u, p))
        rng = np.random.default_rng(0)
        for _ in range(300):
            sweep(state, data, PriorConfig(), 0.125, np.full(2, 1e-3), rng)
            np.testing.assert_allclose(state.mu, expit(data.X @ state.beta))
            lam1, lam2 = state.lambdas
            assert np.all((lam2 > 0) & (lam2 < lam1) & (lam1 < 1))
            assert state.phi > 0 and 0 < state.p < 1


class TestRunChain:
    @pytest.fixture
    def data(self):
        return pinned_problem(n=30)[0]

    def test_deterministic(self, data):
        cfg = SamplerConfig(n_samples=50, n_chains=1, burn_in=0, seed=9)
        a, b = run_chain(data, PriorConfig(), cfg), run_chain(data, PriorConfig(), cfg)
        for name, vec in a.params().items():
            np.testing.assert_array_equal(vec, b.params()[name])

    def test_single_sample(self, data):
        ch = run_chain(data, PriorConfig(), SamplerConfig(n_samples=1, n_chains=1, burn_in=0))
        assert len(ch) == 1 and ch.beta.shape == (1, 2)
        assert np.all(np.isfinite(ch.beta)) and ch.phi[0] > 0

    def test_chains_differ(self, data):
        chains = run_chains(data, PriorConfig(), SamplerConfig(n_samples=20, n_chains=2, burn_in=0))
        assert not np.array_equal(chains[0].phi, chains[1].phi)

    def test_seed_stream(self):
        a = chain_rng(5, 3).random(4)
        b = np.random.default_rng(np.random.SeedSequence(5).spawn(4)[3]).random(4)
        np.testing.assert_array_equal(a, b)

    def test_independent_of_jobs(self, data):
        cfg = SamplerConfig(n_samples=30, n_chains=3, burn_in=0, seed=4)
        serial = run_chains(data, PriorConfig(), cfg, n_jobs=1)
        parallel = run_chains(data, PriorConfig(), cfg, n_jobs=2)
        for s, q in zip(serial, parallel):
            np.testing.assert_array_equal(s.beta, q.beta)
            np.testing.assert_array_equal(s.p, q.p)

    @pytest.mark.parametrize("init", [
        FBRParams([0.0, 0.0], -1.0, 0.5, 0.5),
        FBRParams([0.0, 0.0], 3.0, 0.5, 1.5),
        FBRParams([0.0, 0.0, 0.0], 3.0, 0.5, 0.5),
    ])
    def test_invalid_init(self, data, init):
        cfg = SamplerConfig(n_samples=5, n_chains=1, burn_in=0, init=init)
        with pytest.raises(ChainError):
            run_chain(data, PriorConfig(), cfg)

    def test_acceptance_counts(self, data):
        ch = run_chain(data, PriorConfig(), SamplerConfig(n_samples=200, n_chains=1, burn_in=0))
        assert ch.n_total == 200
        assert 0 <= ch.accept_phi <= 200 and 0 <= ch.accept_beta <= 200

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SamplerConfig(n_samples=10, burn_in=10)
        with pytest.raises(ValueError):
            SamplerConfig(omega_style="median")
        with pytest.raises(ValueError):
            SamplerConfig(sigma_J_diag=[1e-3, 1e-3]).proposal_variances(3)
