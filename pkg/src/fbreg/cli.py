"""Command line entry point: ``fbreg {simulate,fit,diagnose,predict}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from fbreg import __version__
from fbreg.io import fmt
from fbreg.model import FBRParams, PriorConfig
from fbreg.pipeline import (
    DEFAULT_N,
    DEFAULT_TRUTH,
    DEFAULT_Z_RANGE,
    RunConfig,
    cmd_diagnose,
    cmd_fit,
    cmd_predict,
    simulate,
)
from fbreg.sampler import SamplerConfig


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _gap(text):
    return text if text == "auto" else int(text)


def build_parser():
    parser = argparse.ArgumentParser(prog="fbreg", description="Flexible Beta regression.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write a synthetic dataset with known parameters")
    sim.add_argument("--n", type=int, default=DEFAULT_N)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--beta", type=_floats, default=list(DEFAULT_TRUTH.beta))
    sim.add_argument("--phi", type=float, default=DEFAULT_TRUTH.phi)
    sim.add_argument("--omega", type=float, default=DEFAULT_TRUTH.omega)
    sim.add_argument("--p", type=float, default=DEFAULT_TRUTH.p)
    sim.add_argument("--z-min", type=float, default=DEFAULT_Z_RANGE[0])
    sim.add_argument("--z-max", type=float, default=DEFAULT_Z_RANGE[1])
    sim.add_argument("--out", type=Path, required=True)

    fit = sub.add_parser("fit", help="run the sampler and write all artifacts")
    fit.add_argument("--data", type=Path)
    fit.add_argument("--out", type=Path, required=True)
    fit.add_argument("--manifest", type=Path, help="rerun exactly from a previous manifest.txt")
    fit.add_argument("--chains", type=int, default=20)
    fit.add_argument("--samples", type=int, default=8000)
    fit.add_argument("--burn", type=int, default=4000)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--kappa", type=float, default=30.0)
    fit.add_argument("--g", type=float, default=0.1)
    fit.add_argument("--sigma-beta", type=_floats, default=None,
                     help="prior variances for beta, comma separated (default 1e4 each)")
    fit.add_argument("--sigma-phi", type=float, default=0.125)
    fit.add_argument("--sigma-j", type=_floats, default=None,
                     help="proposal variances for beta, comma separated (default 1e-3 each)")
    fit.add_argument("--gap", type=_gap, default="auto")
    fit.add_argument("--per-chain-count", type=int, default=500)
    fit.add_argument("--max-lag", type=int, default=50)
    fit.add_argument("--squeeze", action="store_true")
    fit.add_argument("--omega-style", choices=["vector", "scalar-min"], default="vector")
    fit.add_argument("--scale-by-omega", action="store_true",
                     help="multiply the fitted width by the posterior median of omega")
    fit.add_argument("--jobs", type=int, default=1)

    diag = sub.add_parser("diagnose", help="ACF tables and acceptance report for a run")
    diag.add_argument("--run", type=Path, required=True)
    diag.add_argument("--max-lag", type=int, default=50)
    diag.add_argument("--burn", type=int, default=None)

    pred = sub.add_parser("predict", help="fitted mean and component curves at new z")
    pred.add_argument("--run", type=Path, required=True)
    pred.add_argument("--z", required=True, help="comma-separated values or a file with one per line")
    return parser


def _run_config(args):
    if args.manifest is not None:
        return RunConfig.from_manifest(args.manifest, args.out, n_jobs=args.jobs)
    if args.data is None:
        raise SystemExit("fit: --data or --manifest is required")
    k = 2
    prior = PriorConfig(
        sigma_beta_diag=np.full(k, 1e4) if args.sigma_beta is None else args.sigma_beta,
        kappa=args.kappa, g=args.g,
    )
    sampler = SamplerConfig(
        n_samples=args.samples, n_chains=args.chains, burn_in=args.burn,
        sigma_phi=args.sigma_phi, sigma_J_diag=args.sigma_j, seed=args.seed,
        omega_style=args.omega_style,
    )
    return RunConfig(
        data_path=args.data, out_dir=args.out, prior=prior, sampler=sampler, gap=args.gap,
        per_chain_count=args.per_chain_count, squeeze=args.squeeze,
        scale_by_omega=args.scale_by_omega, max_lag=args.max_lag, n_jobs=args.jobs,
    )


def _z_values(text):
    path = Path(text)
    if path.exists():
        return [float(line) for line in path.read_text().split() if line]
    return _floats(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            params = FBRParams(beta=args.beta, phi=args.phi, omega=args.omega, p=args.p).check()
            data, labels = simulate(args.out, params, n=args.n, seed=args.seed,
                                    z_range=(args.z_min, args.z_max))
            print(f"wrote {data.n} rows to {args.out / 'dataset.csv'}")
        elif args.command == "fit":
            paths = cmd_fit(_run_config(args))
            print((Path(args.out) / "summary.txt").read_text(), end="")
            print(f"artifacts: {len(paths)} files in {args.out}")
        elif args.command == "diagnose":
            report = cmd_diagnose(args.run, max_lag=args.max_lag, burn_in=args.burn)
            for cid, per in report["lags"].items():
                lags = ", ".join(f"{n}={'degenerate' if v is None else v}" for n, v in per.items())
                print(f"chain {cid}: {lags}")
            for cid, rates in report["acceptance"].items():
                print(f"chain {cid}: acceptance phi={rates['phi']:.3f} beta={rates['beta']:.3f}")
            for w in report["warnings"]:
                print(f"warning: {w}")
        elif args.command == "predict":
            table = cmd_predict(args.run, _z_values(args.z))
            print("z,mu,lambda1,lambda2")
            for row in table:
                print(",".join(fmt(v) for v in row))
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"fbreg {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
