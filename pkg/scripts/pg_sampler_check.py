"""Sampler diagnostics: moments, KS distance against the series CDF, and throughput."""

import argparse
import math
import time

import numpy as np
from scipy import integrate

from pg_gibbs.pg_dist import pg_density, pg_inv_moment, pg_mean, pg_sample
from pg_gibbs.rng import make_rng


def cdf(w, b):
    return integrate.quad(lambda u: pg_density(u, b), 0.0, w, limit=200, epsabs=1e-13)[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--draws", type=int, default=200_000)
    ap.add_argument("--b", type=float, nargs="+", default=[0.0, 0.5, 1.0, 2.0, 5.0, 20.0])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'b':>6}{'mean z':>9}{'E(1/w) z':>10}{'KS*sqrt(n)':>12}{'draws/s':>12}")
    for k, b in enumerate(args.b):
        rng = make_rng(args.seed, k)
        t0 = time.perf_counter()
        w = pg_sample(b, rng, size=args.draws)
        rate = args.draws / (time.perf_counter() - t0)
        z_mean = (w.mean() - pg_mean(b)) / (w.std(ddof=1) / math.sqrt(w.size))
        inv = 1 / w
        z_inv = (inv.mean() - pg_inv_moment(b, 1.0)) / (inv.std(ddof=1) / math.sqrt(w.size))
        qs = np.quantile(w, np.linspace(0.01, 0.99, 49))
        emp = np.searchsorted(np.sort(w), qs, side="right") / w.size
        ks = max(abs(e - cdf(q, b)) for e, q in zip(emp, qs)) * math.sqrt(w.size)
        print(f"{b:>6.2f}{z_mean:>9.2f}{z_inv:>10.2f}{ks:>12.3f}{rate:>12.0f}")
    print("KS*sqrt(n) above 1.63 would reject at the 1% level")


if __name__ == "__main__":
    main()
