"""Empirical coverage of batch-means 95% intervals for the posterior mean.

    python3 scripts/coverage_experiment.py --reps 200 --iters 20000
"""

import argparse
import math
import time

import numpy as np
from scipy import integrate

from pg_gibbs.dataio import load_bundled
from pg_gibbs.gibbs import SamplerConfig, run_chain
from pg_gibbs.mcse import report
from pg_gibbs.model import log_posterior_unnorm


def posterior_mean_1d(ds, lo=-30.0, hi=30.0):
    grid = np.linspace(lo, hi, 2001)
    shift = max(log_posterior_unnorm([b], ds) for b in grid)
    dens = lambda b, k: b**k * math.exp(log_posterior_unnorm([b], ds) - shift)
    m0 = integrate.quad(dens, lo, hi, args=(0,), limit=400, epsrel=1e-12)[0]
    m1 = integrate.quad(dens, lo, hi, args=(1,), limit=400, epsrel=1e-12)[0]
    return m1 / m0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dataset", default="n4p1")
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--iters", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=9000)
    args = ap.parse_args()

    ds = load_bundled(args.dataset)
    if ds.p != 1:
        raise SystemExit("the quadrature reference needs a single coefficient")
    truth = posterior_mean_1d(ds)
    hits, widths = 0, []
    t0 = time.perf_counter()
    for r in range(args.reps):
        d = run_chain(ds, SamplerConfig(n_iterations=args.iters, seed=args.seed + r))
        e = report([d], squares=False)["beta[0]"]
        lo, hi = e.interval()
        hits += lo <= truth <= hi
        widths.append(hi - lo)
    cov = hits / args.reps
    se = math.sqrt(cov * (1 - cov) / args.reps)
    print(f"posterior mean (quadrature): {truth:.6f}")
    print(f"coverage: {hits}/{args.reps} = {cov:.3f} +/- {se:.3f}")
    print(f"median interval width: {np.median(widths):.4f}")
    print(f"elapsed: {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
