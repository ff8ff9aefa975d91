"""Logistic-regression data model: responses, design, derived kappa and Z, log densities."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pg_dist import pg_log_density


@dataclass(frozen=True)
class Dataset:
    """Binary responses ``y`` (n,) and design ``X`` (n, p). Arrays are copied and made read-only."""

    X: np.ndarray
    y: np.ndarray
    names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.y)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError(f"X must be a non-empty n x p matrix, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ValueError(f"y must have length n = {X.shape[0]}, got shape {y.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite entries")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("y entries must be 0 or 1")
        y = y.astype(float)
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        names = tuple(self.names) or tuple(f"x{j}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise ValueError("one name per column of X is required")
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class DerivedDesign:
    kappa: np.ndarray
    Z: np.ndarray
    signs: np.ndarray


def derive(dataset: Dataset) -> DerivedDesign:
    """kappa_i = y_i - 1/2 and rows z_i = c_i x_i with c_i = +1 for y_i = 0, -1 for y_i = 1."""
    kappa = dataset.y - 0.5
    signs = 1.0 - 2.0 * dataset.y
    Z = signs[:, None] * dataset.X
    for a in (kappa, signs, Z):
        a.setflags(write=False)
    return DerivedDesign(kappa=kappa, Z=Z, signs=signs)


def log_posterior_unnorm(beta, dataset: Dataset) -> float:
    """Flat-prior log posterior up to a constant: sum_i y_i t_i - log(1 + e^t_i), t = X beta."""
    t = dataset.X @ np.asarray(beta, dtype=float)
    return float(np.sum(dataset.y * t - np.logaddexp(0.0, t)))


def log_complete_posterior_unnorm(beta, omega, dataset: Dataset) -> float:
    """Log of the augmented (beta, omega) posterior up to a constant.

    sum_i [kappa_i t_i - omega_i t_i^2 / 2 + log p(omega_i)], with t = X beta
    and p the PG(1, 0) density.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (dataset.n,) or not np.all(omega > 0):
        raise ValueError("omega must be a length-n vector of positive values")
    t = dataset.X @ np.asarray(beta, dtype=float)
    kappa = dataset.y - 0.5
    return float(np.sum(kappa * t - 0.5 * omega * t * t) + np.sum(pg_log_density(omega)))
