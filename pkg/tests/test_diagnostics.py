import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbreg.diagnostics import (
    AcfResult,
    DegenerateSeriesError,
    ThinningInfeasibleError,
    acceptance_rates,
    acf,
    burn,
    chain_gap,
    largest_significant_lag,
    pool,
    summarize,
    thin,
    thin_indices,
)
from fbreg.sampler import ChainDraws


def naive_acf(x, max_lag):
    """Direct double loop with the 1/n denominator."""
    n = len(x)
    m = sum(x) / n
    c0 = sum((v - m) ** 2 for v in x) / n
    return [sum((x[t] - m) * (x[t + h] - m) for t in range(n - h)) / n / c0 for h in range(max_lag + 1)]


def ar1(phi, n, rng):
    e = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = e[0] / np.sqrt(1 - phi**2)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + e[t]
    return x


def fake_chain(n=4000, seed=0, chain_id=0):
    rng = np.random.default_rng(seed)
    return ChainDraws(
        beta=rng.standard_normal((n, 2)), phi=rng.gamma(5.0, size=n),
        omega=rng.random(n), p=rng.random(n), accept_phi=n // 3, accept_beta=n // 4,
        chain_id=chain_id,
    )


class TestAcf:
    def test_matches_naive(self):
        x = np.random.default_rng(0).standard_normal(300)
        np.testing.assert_allclose(acf(x, 20).rho, naive_acf(list(x), 20), atol=1e-12)

    def test_alternating(self):
        res = acf(np.tile([1.0, -1.0], 500), 3)
        assert res.rho[1] == pytest.approx(-1.0, abs=2e-3)
        assert res.rho[2] == pytest.approx(1.0, abs=3e-3)

    def test_constant_raises(self):
        with pytest.raises(DegenerateSeriesError):
            acf(np.full(100, 0.3), 5)

    def test_lag_too_large(self):
        with pytest.raises(ValueError):
            acf(np.arange(10.0), 10)

    def test_band(self):
        assert AcfResult(np.arange(2), np.ones(2), 4000).band == pytest.approx(1.96 / np.sqrt(4000))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_reversal_invariant(self, seed):
        x = np.random.default_rng(seed).standard_normal(200)
        np.testing.assert_allclose(acf(x, 15).rho, acf(x[::-1], 15).rho, atol=1e-12)

    def test_white_noise_false_positive_rate(self):
        # each lag of white noise leaves the band about 5% of the time
        rng = np.random.default_rng(1)
        hits = [np.abs(acf(rng.standard_normal(4000), 50).rho[1:]) > 1.96 / np.sqrt(4000)
                for _ in range(200)]
        assert np.mean(hits) == pytest.approx(0.05, abs=0.01)

    def test_ar1_detected(self):
        rng = np.random.default_rng(2)
        lags = [largest_significant_lag(acf(ar1(0.8, 4000, rng), 50)) for _ in range(100)]
        assert np.mean(np.array(lags) >= 5) >= 0.95

    def test_largest_lag_zero(self):
        assert largest_significant_lag(AcfResult(np.arange(4), np.array([1.0, 0.0, 0.01, 0.0]), 100)) == 0

    def test_largest_lag_picks_last(self):
        rho = np.array([1.0, 0.5, 0.0, 0.3, 0.0])
        assert largest_significant_lag(AcfResult(np.arange(5), rho, 100)) == 3


class TestBurn:
    def test_slices_and_keeps_index(self):
        ch = fake_chain(100)
        b = burn(ch, 40)
        assert len(b) == 60 and b.index[0] == 40
        np.testing.assert_array_equal(b.phi, ch.phi[40:])
        assert b.n_total == 100

    @pytest.mark.parametrize("n_burn", [-1, 100, 101])
    def test_invalid(self, n_burn):
        with pytest.raises(ValueError):
            burn(fake_chain(100), n_burn)

    def test_chain_gap_degenerate(self):
        ch = fake_chain(200)
        ch.omega[:] = 0.5
        gaps = chain_gap(ch, 10)
        assert gaps["omega"] == 0 and set(gaps) == {"beta0", "beta1", "phi", "omega", "p"}


class TestThinning:
    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 5000), st.integers(1, 60), st.integers(1, 600), st.integers(0, 2**32 - 1))
    def test_spacing(self, length, gap, count, seed):
        if count * gap > length:
            with pytest.raises(ThinningInfeasibleError):
                thin_indices(length, gap, count, np.random.default_rng(seed))
            return
        idx = thin_indices(length, gap, count, np.random.default_rng(seed))
        assert idx.size == count
        assert idx[0] >= 0 and idx[-1] < length
        assert np.all(np.diff(idx) >= gap)

    def test_gap_one_full_count_is_identity(self):
        np.testing.assert_array_equal(thin_indices(50, 1, 50, np.random.default_rng(0)), np.arange(50))

    def test_exact_fit(self):
        idx = thin_indices(100, 10, 10, np.random.default_rng(0))
        # only the first segment has any freedom
        np.testing.assert_array_equal(idx[1:], np.arange(19, 100, 10))

    def test_infeasible(self):
        with pytest.raises(ThinningInfeasibleError):
            thin_indices(4000, 15, 500, np.random.default_rng(0))

    def test_deterministic(self):
        a = thin_indices(4000, 8, 500, np.random.default_rng(3))
        b = thin_indices(4000, 8, 500, np.random.default_rng(3))
        np.testing.assert_array_equal(a, b)

    def test_thin_records_source(self):
        ch = burn(fake_chain(300, chain_id=4), 100)
        t = thin(ch, 4, 20, np.random.default_rng(0))
        assert len(t) == 20 and np.all(t.source[:, 0] == 4)
        pos = t.source[:, 1] - 100
        np.testing.assert_array_equal(t.values["phi"], ch.phi[pos])
        np.testing.assert_array_equal(t.beta, ch.beta[pos])

    def test_pool_order(self):
        rng = np.random.default_rng(0)
        parts = [thin(fake_chain(200, seed=s, chain_id=s), 2, 10, rng) for s in range(3)]
        pooled = pool(parts)
        assert len(pooled) == 30
        np.testing.assert_array_equal(pooled.source[:, 0], np.repeat([0, 1, 2], 10))
        np.testing.assert_array_equal(pooled.values["p"][10:20], parts[1].values["p"])

    def test_pool_empty(self):
        with pytest.raises(ValueError):
            pool([])


class TestSummaries:
    def test_against_sorted_oracle(self):
        x = np.random.default_rng(5).standard_normal(1001)
        s = np.sort(x)
        out = summarize({"x": x})["x"]
        assert out["median"] == s[500]
        assert out["min"] == s[0] and out["max"] == s[-1]
        # linear interpolation between order statistics at (n - 1) q
        assert out["q025"] == pytest.approx(s[25], abs=1e-12)
        assert out["q975"] == pytest.approx(s[975], abs=1e-12)

    def test_empty(self):
        with pytest.raises(ValueError):
            summarize({"x": []})

    def test_acceptance_rates(self):
        rates = acceptance_rates([fake_chain(400, chain_id=2)])
        assert rates == {2: {"phi": 133 / 400, "beta": 0.25}}
