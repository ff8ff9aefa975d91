import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pg_gibbs.errors import ImproperPosteriorError, NumericalError
from pg_gibbs.gibbs import (
    SamplerConfig,
    beta_conditional_params,
    draw_beta_given_omega,
    draw_omega_given_beta,
    gibbs_step,
    initial_state,
    project_moments,
    run_chain,
    run_chains,
)
from pg_gibbs.model import Dataset, derive
from pg_gibbs.rng import make_rng

N4P1 = Dataset([[1.0], [-0.5], [2.0], [1.5]], [1, 1, 0, 0])


def test_config_defaults_and_validation():
    c = SamplerConfig(n_iterations=1000)
    assert c.n_burnin == 100 and c.thin == 1
    assert SamplerConfig(n_iterations=1000, n_burnin=100, thin=3).n_kept == 300
    for bad in (dict(n_iterations=0), dict(n_iterations=10, n_burnin=10), dict(thin=0), dict(n_chains=0)):
        with pytest.raises(ValueError):
            SamplerConfig(**bad)


def test_omega_draws():
    ds = Dataset(np.ones((3, 1)), [0, 1, 0])
    om = draw_omega_given_beta(np.zeros(1), ds, make_rng(0))
    assert om.shape == (3,) and np.all(om > 0)
    big = Dataset(np.ones((100_000, 1)), np.zeros(100_000))
    for beta, target in ((0.0, 0.25), (2.0, 0.1903985)):
        w = draw_omega_given_beta(np.array([beta]), big, make_rng(1))
        assert abs(w.mean() - target) < 3 * w.std(ddof=1) / math.sqrt(w.size)


def test_conditional_params_examples():
    g = beta_conditional_params([1.0], Dataset([[2.0]], [1]))
    assert g.mean[0] == pytest.approx(0.25) and g.covariance[0, 0] == pytest.approx(0.25)
    g = beta_conditional_params([1.0, 1.0], Dataset(np.eye(2), [1, 0]))
    assert np.allclose(g.mean, [0.5, -0.5]) and np.allclose(g.covariance, np.eye(2))
    rng = np.random.default_rng(0)
    X = rng.normal(size=(20, 3))
    y = rng.integers(0, 2, 20)
    om = rng.uniform(0.1, 3, 20)
    g = beta_conditional_params(om, Dataset(X, y))
    assert np.abs(X.T @ (om[:, None] * X) @ g.mean - X.T @ (y - 0.5)).max() < 1e-10


def test_rank_deficient_precision_raises():
    with pytest.raises(NumericalError):
        beta_conditional_params([1.0, 1.0], Dataset([[1.0, 1.0], [2.0, 2.0]], [0, 1]))


def test_beta_draw_moments():
    g = beta_conditional_params([1.0], Dataset([[2.0]], [1]))
    rng = make_rng(2)
    d = np.array([draw_beta_given_omega(g, rng)[0] for _ in range(100_000)])
    se_m = d.std(ddof=1) / math.sqrt(d.size)
    assert abs(d.mean() - 0.25) < 3 * se_m
    se_v = math.sqrt(2 / (d.size - 1)) * 0.25
    assert abs(d.var(ddof=1) - 0.25) < 3 * se_v
    # identity precision in p = 2; third cumulants vanish
    g2 = beta_conditional_params([1.0, 1.0], Dataset(np.eye(2), [1, 0]))
    d2 = np.array([draw_beta_given_omega(g2, rng) for _ in range(100_000)]) - g2.mean
    assert np.linalg.norm(np.cov(d2.T) - np.eye(2)) < 0.05 * math.sqrt(2)
    assert np.all(np.abs((d2**3).mean(0)) < 3 * math.sqrt(15 / d2.shape[0]))
    a = draw_beta_given_omega(g2, make_rng(9))
    b = draw_beta_given_omega(g2, make_rng(9))
    assert np.array_equal(a, b)


def test_step_counter():
    s = initial_state(N4P1, "zero", make_rng(0))
    s = gibbs_step(gibbs_step(s, N4P1), N4P1)
    assert s.iteration == 2 and s.omega.shape == (4,)
    with pytest.raises(ValueError):
        initial_state(N4P1, np.zeros(3), make_rng(0))


def test_run_chains_counts_and_reproducibility():
    c = SamplerConfig(n_iterations=10, n_burnin=0, n_chains=2, seed=4)
    a = run_chains(N4P1, c)
    b = run_chains(N4P1, c)
    assert [d.shape for d in a] == [(10, 1), (10, 1)]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not np.array_equal(a[0], a[1])
    beta, om = run_chain(N4P1, c, keep_omega=True)
    assert om.shape == (10, 4) and np.all(om > 0)


def test_improper_refused():
    ds = Dataset(np.ones((2, 1)), [1, 1])
    with pytest.raises(ImproperPosteriorError):
        run_chains(ds, SamplerConfig(n_iterations=10))
    assert run_chains(ds, SamplerConfig(n_iterations=10), allow_improper=True)[0].shape == (9, 1)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_projection_bounds(seed):
    rng = np.random.default_rng(seed)
    p = int(rng.integers(1, 4))
    n = int(rng.integers(p + 1, 15))
    X = rng.normal(size=(n, p))
    ds = Dataset(X, rng.integers(0, 2, n))
    om = np.exp(rng.uniform(-6, 6, n))
    mu, s2 = project_moments(om, ds)
    assert np.all(s2 <= (1 / om) * (1 + 1e-10))
    kappa = ds.y - 0.5
    A = X.T @ (om[:, None] * X)
    q = kappa @ X @ np.linalg.solve(A, X.T @ kappa)
    assert np.abs(mu).sum() <= math.sqrt(np.sum(1 / om) * q) * (1 + 1e-10)
    Z = derive(ds).Z
    one = np.ones(n)
    q_z = 0.25 * one @ Z @ np.linalg.solve(Z.T @ (om[:, None] * Z), Z.T @ one)
    assert q == pytest.approx(q_z, rel=1e-9, abs=1e-12)
