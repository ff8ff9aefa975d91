"""Two-block Polya-Gamma Gibbs sampler for flat-prior logistic regression.

One iteration moves beta' -> beta by

1. omega_i | beta'  ~ PG(1, |x_i^T beta'|) independently,
2. beta | omega     ~ N(m(omega), (X^T Omega X)^-1),  m(omega) = (X^T Omega X)^-1 X^T kappa.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .errors import ImproperPosteriorError, NumericalError
from .model import Dataset
from .pg_dist import pg_sample
from .propriety import check_propriety
from .rng import make_rng

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SamplerConfig:
    n_iterations: int = 10_000
    n_burnin: int | None = None  # default: 10% of n_iterations
    n_chains: int = 1
    seed: int = 0
    init_beta: np.ndarray | str = "zero"
    thin: int = 1

    def __post_init__(self):
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be positive")
        if self.n_burnin is None:
            object.__setattr__(self, "n_burnin", self.n_iterations // 10)
        if not 0 <= self.n_burnin < self.n_iterations:
            raise ValueError("need 0 <= n_burnin < n_iterations")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.n_chains < 1:
            raise ValueError("n_chains must be >= 1")

    @property
    def n_kept(self) -> int:
        return -(-(self.n_iterations - self.n_burnin) // self.thin)


@dataclass(frozen=True)
class GaussianParams:
    """beta | omega: mean and precision X^T Omega X with its lower Cholesky factor."""

    mean: np.ndarray
    precision: np.ndarray
    chol: np.ndarray

    @property
    def covariance(self) -> np.ndarray:
        return cho_solve((self.chol, True), np.eye(len(self.mean)))


@dataclass(frozen=True)
class ChainState:
    beta: np.ndarray
    omega: np.ndarray | None
    iteration: int
    rng: np.random.Generator


def draw_omega_given_beta(beta, dataset: Dataset, rng: np.random.Generator) -> np.ndarray:
    return pg_sample(np.abs(dataset.X @ beta), rng)


def beta_conditional_params(omega, dataset: Dataset) -> GaussianParams:
    omega = np.asarray(omega, dtype=float)
    X = dataset.X
    prec = X.T @ (omega[:, None] * X)
    try:
        L = np.linalg.cholesky(prec)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "X^T Omega X is not numerically positive definite; check that X has full column rank"
        ) from exc
    rhs = X.T @ (dataset.y - 0.5)
    mean = cho_solve((L, True), rhs, check_finite=False)
    return GaussianParams(mean=mean, precision=prec, chol=L)


def draw_beta_given_omega(params: GaussianParams, rng: np.random.Generator) -> np.ndarray:
    # beta = mean + L^-T z has covariance (L L^T)^-1
    z = rng.standard_normal(len(params.mean))
    return params.mean + solve_triangular(params.chol, z, lower=True, trans="T", check_finite=False)


def gibbs_step(state: ChainState, dataset: Dataset) -> ChainState:
    omega = draw_omega_given_beta(state.beta, dataset, state.rng)
    beta = draw_beta_given_omega(beta_conditional_params(omega, dataset), state.rng)
    return dataclasses.replace(state, beta=beta, omega=omega, iteration=state.iteration + 1)


def initial_state(dataset: Dataset, init_beta, rng: np.random.Generator) -> ChainState:
    if isinstance(init_beta, str):
        if init_beta != "zero":
            raise ValueError(f"unknown init_beta {init_beta!r}")
        beta = np.zeros(dataset.p)
    else:
        beta = np.asarray(init_beta, dtype=float).copy()
        if beta.shape != (dataset.p,):
            raise ValueError(f"init_beta must have length p = {dataset.p}")
    return ChainState(beta=beta, omega=None, iteration=0, rng=rng)


def run_chain(dataset: Dataset, config: SamplerConfig, chain: int = 0, keep_omega: bool = False):
    """Kept beta draws (n_kept, p) for one chain; with ``keep_omega`` also the omega draws."""
    state = initial_state(dataset, config.init_beta, make_rng(config.seed, chain))
    out = np.empty((config.n_kept, dataset.p))
    om = np.empty((config.n_kept, dataset.n)) if keep_omega else None
    k = 0
    for it in range(config.n_iterations):
        state = gibbs_step(state, dataset)
        if it >= config.n_burnin and (it - config.n_burnin) % config.thin == 0:
            out[k] = state.beta
            if keep_omega:
                om[k] = state.omega
            k += 1
    return (out, om) if keep_omega else out


def run_chains(
    dataset: Dataset,
    config: SamplerConfig,
    *,
    allow_improper: bool = False,
    keep_omega: bool = False,
) -> list:
    """Run ``config.n_chains`` independent chains; chain k uses stream (seed, k).

    Refuses improper posteriors unless ``allow_improper``: the chain is then not
    positive recurrent and ergodic averages are inconsistent.
    """
    if not allow_improper:
        report = check_propriety(dataset)
        if not report.proper:
            why = "X is rank deficient" if not report.full_rank else "no positive e with Z^T e = 0"
            raise ImproperPosteriorError(
                f"posterior is improper ({why}); the sampler would not be positive recurrent"
            )
    draws = []
    for k in range(config.n_chains):
        log.info("chain %d: %d iterations", k, config.n_iterations)
        draws.append(run_chain(dataset, config, k, keep_omega=keep_omega))
    return draws


def project_moments(omega, dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Mean mu_i and variance sigma_i^2 of x_i^T beta given omega."""
    params = beta_conditional_params(omega, dataset)
    S = solve_triangular(params.chol, dataset.X.T, lower=True, check_finite=False)
    return dataset.X @ params.mean, np.sum(S * S, axis=0)
