"""
End-to-end workflows behind the command line: simulate, fit, diagnose, predict.
"""

from __future__ import annotations

import hashlib
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from fbreg import __version__
from fbreg.beta_math import sample_fb_arrays
from fbreg.diagnostics import (
    DEFAULT_MAX_LAG,
    DegenerateSeriesError,
    ThinnedSample,
    ThinningInfeasibleError,
    acceptance_rates,
    acf,
    burn,
    chain_gap,
    largest_significant_lag,
    pool,
    summarize,
    thin,
)
from fbreg.estimation import FBREstimate, OlsFit, ols_fit, point_estimate, regression_curves, z_grid
from fbreg.io import (
    find_draw_files,
    load_dataset,
    param_names,
    read_draws,
    read_kv,
    read_table,
    write_dataset,
    write_draws,
    write_kv,
    write_table,
)
from fbreg.model import Dataset, FBRParams, PriorConfig, component_means
from fbreg.sampler import SamplerConfig, run_chains

logger = logging.getLogger(__name__)

# shipped synthetic scenario
DEFAULT_TRUTH = FBRParams(beta=np.array([0.6, 1.1]), phi=30.0, omega=0.5, p=0.7)
DEFAULT_N = 2000
DEFAULT_Z_RANGE = (-1.5, 0.5)

ACCEPT_BAND = (0.1, 0.7)


class StageError(RuntimeError):
    def __init__(self, stage, exc):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage


def thin_rng(seed: int, chain_id: int) -> np.random.Generator:
    # (chain_id,) is the chain's own sampler stream; (chain_id, 1) never collides with it
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chain_id, 1)))


# -- simulate --------------------------------------------------------------


def simulate_data(params: FBRParams = DEFAULT_TRUTH, n: int = DEFAULT_N, seed: int = 0,
                  z_range=DEFAULT_Z_RANGE):
    """Draw ``z ~ U(z_range)`` and FB responses. Returns ``(dataset, labels, lambdas)``."""
    params.check()
    z_min, z_max = z_range
    if not z_min < z_max:
        raise ValueError(f"need z_min < z_max, got {z_min}, {z_max}")
    if params.beta.size != 2:
        raise ValueError("the simulator supports one covariate plus intercept")
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = np.random.default_rng(seed)
    z = rng.uniform(z_min, z_max, size=n)
    X = np.column_stack([np.ones(n), z])
    lam1, lam2 = component_means(params, X)
    y, labels = sample_fb_arrays(lam1, lam2, params.phi, params.p, rng)
    return Dataset(y, X), labels, (lam1, lam2)


def simulate(out_dir, params: FBRParams = DEFAULT_TRUTH, n: int = DEFAULT_N, seed: int = 0,
             z_range=DEFAULT_Z_RANGE):
    """Write ``dataset.csv``, ``truth.csv`` (per-row labels) and ``truth_params.txt``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data, labels, (lam1, lam2) = simulate_data(params, n, seed, z_range)
    write_dataset(out / "dataset.csv", data.y, data.z)
    write_table(out / "truth.csv", ["label", "lambda1", "lambda2"], [labels, lam1, lam2])
    truth = {f"beta{r}": float(b) for r, b in enumerate(params.beta)}
    truth.update(phi=float(params.phi), omega=float(params.omega), p=float(params.p),
                 n=n, seed=seed, z_min=float(z_range[0]), z_max=float(z_range[1]))
    write_kv(out / "truth_params.txt", truth)
    return data, labels


# -- fit ---------------------------------------------------------------------


@dataclass
class FitResult:
    chains: list
    post_burn: list
    lags: dict  # chain_id -> {param: largest significant lag}
    gap_auto: int | None
    gap: int
    thinned: ThinnedSample
    estimate: FBREstimate
    ols: OlsFit
    warnings: list = field(default_factory=list)

    def summary(self):
        return summarize(self.thinned)


def choose_gap(lags: dict, length: int, count: int):
    """Largest significant lag over chains and parameters, made feasible.

    Returns ``(auto_gap, used_gap, warning_or_None)``.
    """
    auto = max((lag for per_chain in lags.values() for lag in per_chain.values()), default=0)
    used = max(auto, 1)
    if used * count > length:
        cap = length // count
        if cap < 1:
            raise ThinningInfeasibleError(f"cannot keep {count} draws per chain from {length}")
        msg = (f"auto gap {auto} cannot keep {count} draws per chain from {length}; "
               f"using the largest feasible gap {cap}")
        logger.warning(msg)
        return auto, cap, msg
    return auto, used, None


def fit(data: Dataset, prior: PriorConfig, config: SamplerConfig, gap="auto",
        per_chain_count: int = 500, max_lag: int = DEFAULT_MAX_LAG, n_jobs: int = 1,
        scale_by_omega: bool = False) -> FitResult:
    """Run chains, burn, choose the thinning gap, thin, pool and estimate."""
    warnings = []
    try:
        chains = run_chains(data, prior, config, n_jobs=n_jobs)
    except Exception as exc:
        raise StageError("sampling", exc) from exc
    post = [burn(ch, config.burn_in) for ch in chains]
    lags = {ch.chain_id: chain_gap(ch, max_lag) for ch in post}
    length = len(post[0])
    try:
        if gap == "auto":
            gap_auto, gap_used, msg = choose_gap(lags, length, per_chain_count)
            if msg:
                warnings.append(msg)
        else:
            gap_auto, gap_used = None, int(gap)
        thinned = pool([thin(ch, gap_used, per_chain_count, thin_rng(config.seed, ch.chain_id))
                        for ch in post])
    except ValueError as exc:
        raise StageError("thinning", exc) from exc
    for cid, rates in acceptance_rates(chains).items():
        for name, rate in rates.items():
            if not ACCEPT_BAND[0] < rate < ACCEPT_BAND[1]:
                warnings.append(f"chain {cid}: {name} acceptance {rate:.3f} outside {ACCEPT_BAND}")
                logger.warning(warnings[-1])
    estimate = point_estimate(thinned, data, scale_by_omega=scale_by_omega)
    try:
        ols = ols_fit(data)
    except ValueError as exc:
        raise StageError("ols baseline", exc) from exc
    return FitResult(chains, post, lags, gap_auto, gap_used, thinned, estimate, ols, warnings)


@dataclass
class RunConfig:
    data_path: Path
    out_dir: Path
    prior: PriorConfig
    sampler: SamplerConfig
    gap: str | int = "auto"
    per_chain_count: int = 500
    squeeze: bool = False
    scale_by_omega: bool = False
    max_lag: int = DEFAULT_MAX_LAG
    n_jobs: int = 1

    def manifest(self) -> dict:
        s = self.sampler
        return {
            "version": __version__,
            "data": str(Path(self.data_path).resolve()),
            "data_sha256": _sha256(self.data_path),
            "seed": s.seed,
            "chains": s.n_chains,
            "samples": s.n_samples,
            "burn": s.burn_in,
            "sigma_phi": _fmt(s.sigma_phi),
            "sigma_j": ",".join(_fmt(v) for v in s.proposal_variances(self.prior.sigma_beta_diag.size)),
            "kappa": _fmt(self.prior.kappa),
            "g": _fmt(self.prior.g),
            "sigma_beta": ",".join(_fmt(v) for v in self.prior.sigma_beta_diag),
            "omega_style": s.omega_style,
            "gap": self.gap,
            "per_chain_count": self.per_chain_count,
            "squeeze": int(self.squeeze),
            "scale_by_omega": int(self.scale_by_omega),
            "max_lag": self.max_lag,
        }

    @classmethod
    def from_manifest(cls, path, out_dir, n_jobs: int = 1):
        m = read_kv(path)
        data_path = Path(m["data"])
        if _sha256(data_path) != m["data_sha256"]:
            raise ValueError(f"{data_path} no longer matches the manifest checksum")
        prior = PriorConfig(
            sigma_beta_diag=_floats(m["sigma_beta"]), kappa=float(m["kappa"]), g=float(m["g"])
        )
        sampler = SamplerConfig(
            n_samples=int(m["samples"]), n_chains=int(m["chains"]), burn_in=int(m["burn"]),
            sigma_phi=float(m["sigma_phi"]), sigma_J_diag=_floats(m["sigma_j"]),
            seed=int(m["seed"]), omega_style=m["omega_style"],
        )
        gap = m["gap"] if m["gap"] == "auto" else int(m["gap"])
        return cls(
            data_path=data_path, out_dir=Path(out_dir), prior=prior, sampler=sampler, gap=gap,
            per_chain_count=int(m["per_chain_count"]), squeeze=bool(int(m["squeeze"])),
            scale_by_omega=bool(int(m["scale_by_omega"])), max_lag=int(m["max_lag"]), n_jobs=n_jobs,
        )


def _fmt(x):
    return "{:.17g}".format(float(x))


def _floats(text):
    return np.array([float(v) for v in text.split(",")])


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def cmd_fit(config: RunConfig) -> dict:
    """Fit from ``config`` and write every artifact into ``config.out_dir``.

    Returns a mapping of artifact name to path.
    """
    t0 = time.perf_counter()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        data, report = load_dataset(config.data_path, squeeze=config.squeeze)
    except (OSError, ValueError) as exc:
        raise StageError("loading data", exc) from exc
    logger.info("loaded %d rows (%d on the boundary)", report.n_rows, report.n_boundary)
    result = fit(
        data, config.prior, config.sampler, gap=config.gap,
        per_chain_count=config.per_chain_count, max_lag=config.max_lag,
        n_jobs=config.n_jobs, scale_by_omega=config.scale_by_omega,
    )
    paths = write_fit(out, data, result, config)
    manifest = config.manifest()
    manifest["wall_time_s"] = f"{time.perf_counter() - t0:.3f}"
    write_kv(out / "manifest.txt", manifest)
    paths["manifest"] = out / "manifest.txt"
    return paths


def write_fit(out: Path, data: Dataset, result: FitResult, config: RunConfig) -> dict:
    paths = {}
    names = param_names(data.k)
    for ch in result.chains:
        path = out / f"draws_chain{ch.chain_id}.csv"
        write_draws(path, ch)
        paths[f"draws_chain{ch.chain_id}"] = path
    write_table(
        out / "acceptance.csv", ["chain", "n", "accept_phi", "accept_beta"],
        [[c.chain_id for c in result.chains], [len(c) for c in result.chains],
         [c.accept_phi for c in result.chains], [c.accept_beta for c in result.chains]],
    )
    paths["acceptance"] = out / "acceptance.csv"

    th = result.thinned
    write_table(out / "thinned.csv", ["chain", "index"] + names,
                [th.source[:, 0], th.source[:, 1]] + [th.values[n] for n in names])
    paths["thinned"] = out / "thinned.csv"

    for ch in result.post_burn:
        paths.update(write_acf_tables(out, ch, config.max_lag))

    est = result.estimate
    z = data.X[:, 1] if data.k == 2 else np.arange(data.n, dtype=float)
    write_table(out / "fitted.csv", ["z", "mu", "lambda1", "lambda2"],
                [z, est.mu_hat, est.lambda1_hat, est.lambda2_hat])
    paths["fitted"] = out / "fitted.csv"
    if data.k == 2:
        grid = z_grid(z)
        mu, l1, l2 = est.curves(np.column_stack([np.ones_like(grid), grid]))
        write_table(out / "curve.csv", ["z", "mu", "lambda1", "lambda2"], [grid, mu, l1, l2])
        paths["curve"] = out / "curve.csv"

    write_kv(out / "summary.txt", summary_items(data, result, config))
    paths["summary"] = out / "summary.txt"
    return paths


def write_acf_tables(out: Path, draws, max_lag: int) -> dict:
    paths = {}
    for name, values in draws.params().items():
        path = out / f"acf_{name}_chain{draws.chain_id}.csv"
        try:
            res = acf(values, min(max_lag, len(values) - 1))
        except DegenerateSeriesError:
            write_table(path, ["lag", "rho", "band"], [[], [], []])
        else:
            write_table(path, ["lag", "rho", "band"],
                        [res.lags, res.rho, np.full(res.rho.size, res.band)])
        paths[f"acf_{name}_chain{draws.chain_id}"] = path
    return paths


def summary_items(data: Dataset, result: FitResult, config: RunConfig) -> dict:
    est, ols = result.estimate, result.ols
    items = {
        "n": data.n,
        "k": data.k,
        "chains": len(result.chains),
        "samples": len(result.chains[0]),
        "burn": config.sampler.burn_in,
        "gap_auto": "none" if result.gap_auto is None else result.gap_auto,
        "gap_used": result.gap,
        "per_chain_count": config.per_chain_count,
        "thinned_total": len(result.thinned),
    }
    for r, b in enumerate(est.beta_hat):
        items[f"beta_hat.{r}"] = float(b)
    items.update(p_hat=est.p_hat, phi_hat=est.phi_hat, omega_hat=est.omega_hat,
                 scale_by_omega=int(est.scale_by_omega))
    for name, stats in result.summary().items():
        for stat, value in stats.items():
            items[f"posterior.{name}.{stat}"] = value
    for cid, rates in acceptance_rates(result.chains).items():
        items[f"accept.chain{cid}.phi"] = rates["phi"]
        items[f"accept.chain{cid}.beta"] = rates["beta"]
    for cid, per in result.lags.items():
        for name, lag in per.items():
            items[f"lag.chain{cid}.{name}"] = lag
    fbr_out = int(np.count_nonzero((est.mu_hat <= 0.0) | (est.mu_hat >= 1.0)))
    items["fbr.n_out_of_range"] = fbr_out
    for r, c in enumerate(ols.coef):
        items[f"ols.beta{r}"] = float(c)
    items["ols.n_out_of_range"] = ols.n_out_of_range
    items["curve.reference_choice"] = "lambda2"
    for i, msg in enumerate(result.warnings):
        items[f"warning.{i}"] = msg
    return items


# -- predict -----------------------------------------------------------------


def read_estimate(run_dir):
    path = Path(run_dir) / "summary.txt"
    if not path.exists():
        raise FileNotFoundError(f"missing estimate: {path} not found")
    kv = read_kv(path)
    k = int(kv["k"])
    beta = np.array([float(kv[f"beta_hat.{r}"]) for r in range(k)])
    scale = float(kv["omega_hat"]) if int(kv.get("scale_by_omega", "0")) else 1.0
    return beta, float(kv["p_hat"]), scale


def cmd_predict(run_dir, z) -> np.ndarray:
    """Columns ``z, mu, lambda1, lambda2`` at each requested ``z``."""
    beta, p_hat, scale = read_estimate(run_dir)
    if beta.size != 2:
        raise ValueError("prediction by z needs a model with one covariate")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    mu, l1, l2 = regression_curves(beta, p_hat, np.column_stack([np.ones_like(z), z]), scale)
    return np.column_stack([z, mu, l1, l2])


# -- diagnose ----------------------------------------------------------------


def cmd_diagnose(run_dir, max_lag: int = DEFAULT_MAX_LAG, burn_in: int | None = None) -> dict:
    """ACF tables, largest significant lags and acceptance rates for a run directory.

    Draws before ``burn_in`` (default: the manifest's burn, else 0) are dropped.
    Zero-variance series are reported as ``None`` with a warning.
    """
    run_dir = Path(run_dir)
    files = find_draw_files(run_dir)
    if not files:
        raise FileNotFoundError(f"no draws_chain<k>.csv files in {run_dir}")
    if burn_in is None:
        manifest = run_dir / "manifest.txt"
        burn_in = int(read_kv(manifest)["burn"]) if manifest.exists() else 0
    lags, warnings = {}, []
    for cid, path in files:
        draws = read_draws(path, chain_id=cid)
        keep = int(np.count_nonzero(draws.index < burn_in))
        if keep:
            draws = burn(draws, keep)
        write_acf_tables(run_dir, draws, max_lag)
        per = {}
        for name, values in draws.params().items():
            try:
                per[name] = largest_significant_lag(acf(values, min(max_lag, len(values) - 1)))
            except DegenerateSeriesError:
                per[name] = None
                warnings.append(f"chain {cid}: {name} has zero variance")
        lags[cid] = per
    rates = {}
    acc_path = run_dir / "acceptance.csv"
    if acc_path.exists():
        _, table = read_table(acc_path)
        for cid, n, a_phi, a_beta in table:
            rates[int(cid)] = {"phi": a_phi / n, "beta": a_beta / n}
            for name, rate in rates[int(cid)].items():
                if not ACCEPT_BAND[0] < rate < ACCEPT_BAND[1]:
                    warnings.append(f"chain {int(cid)}: {name} acceptance {rate:.3f} outside {ACCEPT_BAND}")
    report = {"lags": lags, "acceptance": rates, "warnings": warnings}
    items = {f"lag.chain{c}.{n}": ("degenerate" if v is None else v)
             for c, per in lags.items() for n, v in per.items()}
    items.update({f"accept.chain{c}.{n}": v for c, r in rates.items() for n, v in r.items()})
    items.update({f"warning.{i}": w for i, w in enumerate(warnings)})
    write_kv(run_dir / "diagnostics.txt", items)
    return report
