"""Posterior propriety under a flat prior.

The posterior is proper iff (1) X has full column rank and (2) some e with
strictly positive entries satisfies Z^T e = 0. Condition (2) is scale-free, so
we look for e >= 1 with an LP feasibility problem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .model import Dataset, derive
from .simplex import simplex

FEAS_TOL = 1e-8


@dataclass(frozen=True)
class ProprietyReport:
    full_rank: bool
    rank: int
    positive_null_vector: np.ndarray | None
    proper: bool
    rank_tolerance_used: float
    residual: float | None = None
    null_vector_spread: float | None = None  # max(e) / min(e): large values flag near-degenerate data

    def to_dict(self) -> dict:
        e = self.positive_null_vector
        return {
            "proper": self.proper,
            "full_rank": self.full_rank,
            "rank": self.rank,
            "rank_tolerance_used": self.rank_tolerance_used,
            "positive_null_vector": None if e is None else [float(v) for v in e],
            "residual_inf_norm": self.residual,
            "null_vector_spread": self.null_vector_spread,
        }


def check_rank(X) -> tuple[bool, int, float]:
    """Numerical column rank of ``X`` with tolerance max(n, p) * sigma_max * eps.

    Returns ``(full_rank, rank, tolerance)``.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    try:
        sv = np.linalg.svd(X, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc
    smax = float(sv.max(initial=0.0))
    tol = max(n, p) * smax * np.finfo(float).eps
    rank = int(np.sum(sv > tol))
    return (n >= p and rank == p), rank, tol


def feasibility_tolerance(Z, e) -> float:
    return FEAS_TOL * (1.0 + np.abs(Z).sum(axis=1).max(initial=0.0) * np.abs(e).max(initial=0.0))


def find_positive_null_vector(Z, *, max_iter: int | None = None) -> np.ndarray | None:
    """Some e with every e_i >= 1 and Z^T e = 0, or ``None`` if no such vector exists.

    Raises :class:`~pg_gibbs.errors.LPIterationLimit` if the simplex stalls.
    """
    Z = np.asarray(Z, dtype=float)
    if not np.all(np.isfinite(Z)):
        raise ValueError("Z must be finite")
    n = Z.shape[0]
    ones = np.ones(n)
    # e = 1 + u, u >= 0:  Z^T u = -Z^T 1
    res = simplex(np.zeros(n), Z.T, -(Z.T @ ones), max_iter=max_iter)
    if res.status != "optimal":
        return None
    e = ones + res.x
    if np.abs(Z.T @ e).max(initial=0.0) > feasibility_tolerance(Z, e):
        # polish: remove the component of e outside null(Z^T)
        corr = np.linalg.lstsq(Z.T, Z.T @ e, rcond=None)[0]
        e2 = e - corr
        if e2.min() > 0:
            e = e2 / e2.min()
        if np.abs(Z.T @ e).max(initial=0.0) > feasibility_tolerance(Z, e):
            raise NumericalError("LP reported feasibility but Z^T e is not numerically zero")
    return e


def check_propriety(dataset: Dataset, *, max_iter: int | None = None) -> ProprietyReport:
    full_rank, rank, tol = check_rank(dataset.X)
    Z = derive(dataset).Z
    e = find_positive_null_vector(Z, max_iter=max_iter)
    residual = spread = None
    if e is not None:
        residual = float(np.abs(Z.T @ e).max(initial=0.0))
        spread = float(e.max() / e.min())
    return ProprietyReport(
        full_rank=full_rank,
        rank=rank,
        positive_null_vector=e,
        proper=bool(full_rank and e is not None),
        rank_tolerance_used=tol,
        residual=residual,
        null_vector_spread=spread,
    )
