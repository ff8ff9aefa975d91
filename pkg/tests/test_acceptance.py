"""Acceptance criteria 1-10. Each test prints one PASS/FAIL line (also collected
in the terminal summary) and fails if its criterion or runtime budget is missed."""

import itertools
import math
import time
import zlib

import numpy as np
import pytest

import oracles
from pg_gibbs.cli import main
from pg_gibbs.dataio import bundled_path, load_bundled
from pg_gibbs.drift import (
    L_of_s,
    build_certificate,
    default_test_points,
    estimate_f0,
    rho1_estimate,
    rho1_ratio,
    verify_drift,
)
from pg_gibbs.gibbs import SamplerConfig, project_moments, run_chain
from pg_gibbs.mcse import report
from pg_gibbs.model import Dataset, derive
from pg_gibbs.pg_dist import CATALAN, pg_inv_moment, pg_mean, pg_sample
from pg_gibbs.propriety import check_propriety
from pg_gibbs.rng import make_rng

pytestmark = pytest.mark.slow


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_1_pg_moment_identity(record):
    with Clock() as c:
        worst = 0.0
        ok = True
        for k, b in enumerate((0.0, 0.5, 1.0, 2.0, 5.0)):
            w = pg_sample(b, make_rng(101, k), size=100_000)
            z = abs(w.mean() - pg_mean(b)) / (w.std(ddof=1) / math.sqrt(w.size))
            worst = max(worst, z)
            ok &= z < 3 and pg_mean(b) <= 0.25
    ok &= c.elapsed < 10
    record(1, ok, f"max |z| = {worst:.2f} over b in {{0, .5, 1, 2, 5}}; {c.elapsed:.1f}s (< 10s)")
    assert ok


def test_2_catalan_identity(record):
    with Clock() as c:
        q = pg_inv_moment(0.0, 1.0)
        inv = 1.0 / pg_sample(0.0, make_rng(102), size=1_000_000)
        z = abs(inv.mean() - q) / (inv.std(ddof=1) / math.sqrt(inv.size))
    ok = abs(q - 8 * 0.9159655942) < 1e-4 and z < 3 and c.elapsed < 60
    record(2, ok, f"quadrature {q:.7f} vs 8C = {8 * CATALAN:.7f}; MC |z| = {z:.2f}; {c.elapsed:.1f}s (< 60s)")
    assert ok


def test_3_inverse_moment_bound(record):
    with Clock() as c:
        slack = []
        for s in (0.5, 1.0):
            L = L_of_s(s, estimate_f0(s).value)
            for b in (0.0, 0.5, 1.0, 3.0, 10.0):
                slack.append(2**s * b**s + L - pg_inv_moment(b, s))
    ok = min(slack) >= 0 and c.elapsed < 30
    record(3, ok, f"min slack of E(w^-s) <= 2^s b^s + L(s) is {min(slack):.4f}; {c.elapsed:.1f}s (< 30s)")
    assert ok


def _verdict(X, y):
    return check_propriety(Dataset(np.asarray(X, float), np.asarray(y))).proper


def test_4_propriety_oracle_equivalence(record):
    """Every (X, y) with n <= 6, p <= 2, X in {-1,0,1}.

    The verdict depends on (X, y) only through Z = diag(1 - 2y) X, and (X, y)
    -> (Z, y) is a bijection, so enumerating all Z covers all datasets. We do
    the literal (X, y) sweep wherever it is affordable (p = 1; p = 2 with
    n <= 4), enumerate all Z for p = 2, n in {5, 6}, and confirm there on a
    random sample of Z that all 2^n response vectors agree.
    """
    mismatches = []
    checked = 0
    oracle_cache = {}

    def oracle(Z, p):
        key = (Z.tobytes(), Z.shape)
        if key not in oracle_cache:
            oracle_cache[key] = oracles.propriety_oracle(Z, p)
        return oracle_cache[key]

    with Clock() as c:
        for p in (1, 2):
            rows = np.array(list(itertools.product((-1, 0, 1), repeat=p)))
            for n in range(1, 7):
                ys = np.array(list(itertools.product((0, 1), repeat=n)))
                literal = p == 1 or n <= 4
                for idx in itertools.product(range(len(rows)), repeat=n):
                    M = rows[list(idx)]
                    if literal:
                        for y in ys:
                            Z = (1 - 2 * y)[:, None] * M
                            checked += 1
                            if _verdict(M, y) != oracle(Z, p):
                                mismatches.append((M.tolist(), y.tolist()))
                    else:
                        # M plays the role of Z; pick y from the index, X = diag(1 - 2y) Z
                        code = zlib.crc32(bytes(idx)) & ((1 << n) - 1)
                        y = np.array([(code >> i) & 1 for i in range(n)])
                        checked += 1
                        if _verdict((1 - 2 * y)[:, None] * M, y) != oracle(M, p):
                            mismatches.append((M.tolist(), y.tolist()))
        rng = np.random.default_rng(104)
        rows = np.array(list(itertools.product((-1, 0, 1), repeat=2)))
        for n in (5, 6):
            ys = np.array(list(itertools.product((0, 1), repeat=n)))
            for _ in range(250):
                Z = rows[rng.integers(0, 9, n)]
                want = oracle(Z, 2)
                for y in ys:
                    checked += 1
                    if _verdict((1 - 2 * y)[:, None] * Z, y) != want:
                        mismatches.append((Z.tolist(), y.tolist()))
    ok = not mismatches and c.elapsed < 300
    record(4, ok, f"{checked} checks, {len(mismatches)} disagreements with the exact oracle; {c.elapsed:.0f}s (< 300s)")
    assert ok, mismatches[:5]


def test_5_sigma_bound_and_cauchy_schwarz(record):
    rng = np.random.default_rng(105)
    worst = {"sigma": -np.inf, "cs": -np.inf, "identity": 0.0}
    with Clock() as c:
        for _ in range(10_000):
            p = int(rng.integers(1, 4))
            n = int(rng.integers(p + 1, 13))
            X = rng.normal(size=(n, p)) * np.exp(rng.uniform(-2, 2, size=(n, 1)))
            ds = Dataset(X, rng.integers(0, 2, n))
            om = np.exp(rng.uniform(-6, 6, n))
            mu, s2 = project_moments(om, ds)
            worst["sigma"] = max(worst["sigma"], np.max(s2 * om) - 1)
            kappa = ds.y - 0.5
            q = kappa @ X @ np.linalg.solve(X.T @ (om[:, None] * X), X.T @ kappa)
            worst["cs"] = max(worst["cs"], np.abs(mu).sum() / math.sqrt(np.sum(1 / om) * q) - 1)
            Z = derive(ds).Z
            one = np.ones(n)
            q_z = 0.25 * one @ Z @ np.linalg.solve(Z.T @ (om[:, None] * Z), Z.T @ one)
            worst["identity"] = max(worst["identity"], abs(q - q_z) / max(1.0, abs(q)))
    ok = worst["sigma"] <= 1e-10 and worst["cs"] <= 1e-10 and worst["identity"] <= 1e-9 and c.elapsed < 60
    record(
        5,
        ok,
        f"max(sigma^2 w) - 1 = {worst['sigma']:.1e}, CS ratio - 1 = {worst['cs']:.1e}, "
        f"identity gap = {worst['identity']:.1e}; {c.elapsed:.1f}s (< 60s)",
    )
    assert ok


def test_6_stationarity(record):
    ds = load_bundled("n4p1")
    with Clock() as c:
        truth, _ = oracles.posterior_moments_1d(ds.X[:, 0], ds.y)
        d = run_chain(ds, SamplerConfig(n_iterations=220_000, n_burnin=20_000, seed=106))
        e = report([d], squares=False)["beta[0]"]
    ok = e.m == 200_000 and abs(e.mean - truth) < 3 * e.mcse and c.elapsed < 120
    record(6, ok, f"mean {e.mean:.4f} vs quadrature {truth:.4f}, 3 MCSE = {3 * e.mcse:.4f}; {c.elapsed:.1f}s (< 120s)")
    assert ok


def test_7_certificate_validity(record):
    details = []
    ok = True
    with Clock() as c:
        for k, name in enumerate(("proper_2x1", "n4p1", "n6p2")):
            ds = load_bundled(name)
            rep = check_propriety(ds)
            rho1 = rho1_estimate(derive(ds).Z, rep.positive_null_vector, 20, make_rng(107, k))
            cert = build_certificate(ds, rho1)
            pts = default_test_points(ds.n, 50, make_rng(107, k, 1))
            chk = verify_drift(ds, cert, pts, 2000, make_rng(107, k, 2))
            ok &= cert.rho < 1 and not cert.invariant_violations() and chk.violations == 0 and chk.n_points == 50
            details.append(f"{name}: rho={cert.rho:.3f}, violations={chk.violations}")
    ok &= c.elapsed < 300
    record(7, ok, "; ".join(details) + f"; {c.elapsed:.1f}s (< 300s)")
    assert ok


def _random_proper_design(rng):
    while True:
        p = int(rng.integers(2, 4))
        n = int(rng.integers(p + 4, 16))
        X = np.column_stack([np.ones(n), rng.normal(size=(n, p - 1))])
        ds = Dataset(X, rng.integers(0, 2, n))
        rep = check_propriety(ds)
        if rep.proper:
            return ds, rep.positive_null_vector


def test_8_rho1_soundness(record):
    rng = np.random.default_rng(108)
    worst, max_hat = -np.inf, 0.0
    with Clock() as c:
        for k in range(20):
            ds, e = _random_proper_design(rng)
            Z = derive(ds).Z
            hat = rho1_estimate(Z, e, 20, make_rng(108, k))
            # random omega: log-uniform with a random spread per draw
            spread = rng.uniform(0, 10, size=(100_000, 1))
            om = np.exp(spread * rng.uniform(-1, 1, size=(100_000, ds.n)))
            worst = max(worst, float(np.nanmax(rho1_ratio(Z, om))) - hat)
            max_hat = max(max_hat, hat)
    ok = worst <= 1e-6 and max_hat < 1 and c.elapsed < 120
    record(8, ok, f"max(ratio - rho1_hat) = {worst:.2e}, max rho1_hat = {max_hat:.3f}; {c.elapsed:.1f}s (< 120s)")
    assert ok


def test_9_clt_coverage(record):
    ds = load_bundled("n4p1")
    truth, _ = oracles.posterior_moments_1d(ds.X[:, 0], ds.y)
    hits = 0
    with Clock() as c:
        for r in range(200):
            d = run_chain(ds, SamplerConfig(n_iterations=20_000, seed=9000 + r))
            lo, hi = report([d], squares=False)["beta[0]"].interval()
            hits += lo <= truth <= hi
    ok = hits / 200 >= 0.90 and c.elapsed < 600
    record(9, ok, f"coverage {hits}/200 = {hits / 200:.3f} (>= 0.90); {c.elapsed:.0f}s (< 600s)")
    assert ok


def test_10_reproducibility(record, tmp_path, capsys):
    data = str(bundled_path("n4p1"))
    outputs = []
    with Clock() as c:
        for run in ("a", "b"):
            out = tmp_path / run
            main(["sample", "--input", data, "--iters", "3000", "--chains", "2", "--seed", "110", "--out", str(out)])
            main(["certify", "--input", data, "--seed", "110", "--test-points", "10", "--mc-draws", "500", "--out", str(out)])
            capsys.readouterr()
            outputs.append({f: (out / f).read_bytes() for f in ("draws.csv", "report.json", "certificate.json")})
    same = outputs[0] == outputs[1]
    ok = same and c.elapsed < 30
    record(10, ok, f"draws.csv, report.json, certificate.json byte-identical: {same}; {c.elapsed:.1f}s (< 30s)")
    assert ok
