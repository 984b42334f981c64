"""
Burn-in, autocorrelation, segment thinning and posterior summaries.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from fbreg.sampler import ChainDraws

DEFAULT_MAX_LAG = 50
# largest dependence level reported for the original water-fraction chains
DEFAULT_GAP = 15


class DegenerateSeriesError(ValueError):
    pass


class ThinningInfeasibleError(ValueError):
    pass


@dataclass(frozen=True)
class AcfResult:
    lags: np.ndarray
    rho: np.ndarray
    n: int

    @property
    def band(self) -> float:
        """Half-width of the 95% white-noise band."""
        return 1.96 / np.sqrt(self.n)


def acf(series, max_lag: int = DEFAULT_MAX_LAG) -> AcfResult:
    """Sample autocorrelation with the biased (1/n) denominator."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if max_lag >= n:
        raise ValueError(f"max_lag={max_lag} must be smaller than the series length {n}")
    xc = x - x.mean()
    c0 = np.dot(xc, xc) / n
    if not c0 > 0:
        raise DegenerateSeriesError("series has zero variance")
    rho = np.empty(max_lag + 1)
    rho[0] = 1.0
    for lag in range(1, max_lag + 1):
        rho[lag] = np.dot(xc[:-lag], xc[lag:]) / n / c0
    return AcfResult(lags=np.arange(max_lag + 1), rho=rho, n=n)


def largest_significant_lag(result: AcfResult) -> int:
    """Largest lag >= 1 whose |rho| exceeds the band, or 0 if none does."""
    sig = np.flatnonzero(np.abs(result.rho[1:]) > result.band)
    return int(sig[-1] + 1) if sig.size else 0


def burn(draws: ChainDraws, n_burn: int) -> ChainDraws:
    if not 0 <= n_burn < len(draws):
        raise ValueError(f"cannot burn {n_burn} of {len(draws)} draws")
    return replace(
        draws,
        beta=draws.beta[n_burn:],
        phi=draws.phi[n_burn:],
        omega=draws.omega[n_burn:],
        p=draws.p[n_burn:],
        index=draws.index[n_burn:],
    )


def chain_gap(draws: ChainDraws, max_lag: int = DEFAULT_MAX_LAG) -> dict:
    """Largest significant lag of each parameter; constant series report 0."""
    out = {}
    for name, values in draws.params().items():
        try:
            out[name] = largest_significant_lag(acf(values, min(max_lag, len(values) - 1)))
        except DegenerateSeriesError:
            out[name] = 0
    return out


def thin_indices(length: int, gap: int, count: int, rng) -> np.ndarray:
    """Pick one position per segment so consecutive picks are >= ``gap`` apart.

    The series is cut into ``count`` segments of ``length // count``
    positions.  In every segment but the first, the leading ``gap - 1``
    positions are excluded, which enforces the spacing across each boundary.
    """
    if gap < 1 or count < 1:
        raise ValueError("gap and count must be positive")
    if count * gap > length:
        raise ThinningInfeasibleError(
            f"cannot keep {count} draws spaced {gap} apart from {length} draws"
        )
    seg = length // count
    starts = np.arange(count) * seg
    offsets = np.full(count, gap - 1)
    offsets[0] = 0
    low = starts + offsets
    return low + rng.integers(0, seg - offsets)


@dataclass(frozen=True)
class ThinnedSample:
    """Pooled thinned draws plus where each row came from.

    ``source`` is an ``(m, 2)`` integer array of ``(chain_id, draw_index)``
    where ``draw_index`` counts sweeps from the start of the chain.
    """

    values: dict
    source: np.ndarray
    gap: int

    def __len__(self):
        return self.source.shape[0]

    @property
    def beta(self):
        keys = sorted((k for k in self.values if k.startswith("beta")), key=lambda s: int(s[4:]))
        return np.column_stack([self.values[k] for k in keys])


def thin(draws, gap: int, count: int, rng) -> ThinnedSample:
    """Thin one post-burn chain, or a list of them (pooled in list order)."""
    if isinstance(draws, ChainDraws):
        draws = [draws]
    values = {}
    sources = []
    for ch in draws:
        pos = thin_indices(len(ch), gap, count, rng)
        for name, vec in ch.params().items():
            values.setdefault(name, []).append(vec[pos])
        sources.append(np.column_stack([np.full(pos.size, ch.chain_id), ch.index[pos]]))
    return ThinnedSample(
        values={k: np.concatenate(v) for k, v in values.items()},
        source=np.vstack(sources),
        gap=gap,
    )


def pool(samples) -> ThinnedSample:
    """Concatenate per-chain thinned samples in the given order."""
    samples = list(samples)
    if not samples:
        raise ValueError("nothing to pool")
    gaps = {s.gap for s in samples}
    return ThinnedSample(
        values={k: np.concatenate([s.values[k] for s in samples]) for k in samples[0].values},
        source=np.vstack([s.source for s in samples]),
        gap=min(gaps),
    )


def summarize(sample) -> dict:
    """Per-parameter median, mean, central 95% interval, min and max.

    Accepts a :class:`ThinnedSample` or a plain ``name -> values`` mapping.
    """
    values = sample.values if isinstance(sample, ThinnedSample) else sample
    out = {}
    for name, vec in values.items():
        vec = np.asarray(vec, dtype=float)
        if vec.size == 0:
            raise ValueError(f"no draws for {name}")
        lo, hi = np.quantile(vec, [0.025, 0.975])
        out[name] = {
            "median": float(np.median(vec)),
            "mean": float(vec.mean()),
            "q025": float(lo),
            "q975": float(hi),
            "min": float(vec.min()),
            "max": float(vec.max()),
        }
    return out


def acceptance_rates(chains) -> dict:
    return {
        ch.chain_id: {
            "phi": ch.accept_phi / ch.n_total,
            "beta": ch.accept_beta / ch.n_total,
        }
        for ch in chains
    }
