"""Markov chain output analysis: batch-means variance, Monte Carlo standard errors, ESS.

For a function h of beta, the ergodic average over m draws satisfies
sqrt(m) (h_bar - E h) -> N(0, sigma_h^2) once the chain is geometrically
ergodic and E h^2 < oo. sigma_h^2 is estimated by non-overlapping batch means
with batch size floor(sqrt(m)).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InsufficientDataError

MIN_DRAWS = 100
MOMENT_NOTE = (
    "Under posterior propriety every polynomial moment of beta is finite, so the "
    "CLT applies to both beta_j and beta_j^2."
)


@dataclass(frozen=True)
class Estimate:
    name: str
    mean: float
    sigma_sq: float
    mcse: float
    ess: float
    sample_variance: float
    batch_size: int
    n_batches: int
    m: int

    def interval(self, z: float = 1.959963984540054) -> tuple[float, float]:
        return self.mean - z * self.mcse, self.mean + z * self.mcse


@dataclass(frozen=True)
class McseReport:
    estimates: tuple[Estimate, ...]
    n_chains: int
    method: str = "batch_means"
    note: str = MOMENT_NOTE

    def __getitem__(self, name: str) -> Estimate:
        for e in self.estimates:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "spectral_variance": None,
            "n_chains": self.n_chains,
            "note": self.note,
            "estimates": [asdict(e) for e in self.estimates],
        }


def batch_means(draws) -> tuple[float, int]:
    """Batch-means estimate of the asymptotic variance of the mean of ``draws``.

    Returns ``(sigma_sq_hat, batch_size)``; the first ``n_batches * batch_size``
    draws are used.
    """
    x = np.asarray(draws, dtype=float).ravel()
    m = x.size
    if m < MIN_DRAWS:
        raise InsufficientDataError(f"batch means needs at least {MIN_DRAWS} draws, got {m}")
    bsize = math.isqrt(m)
    nb = m // bsize
    means = x[: nb * bsize].reshape(nb, bsize).mean(axis=1)
    if np.ptp(means) == 0.0:
        return 0.0, bsize
    return float(bsize * means.var(ddof=1)), bsize


def _summarise(name: str, chains: list[np.ndarray]) -> Estimate:
    lengths = np.array([c.size for c in chains], dtype=float)
    m = int(lengths.sum())
    mean = float(sum(c.sum() for c in chains) / m)
    sig = [batch_means(c) for c in chains]
    sigma_sq = float(np.mean([s for s, _ in sig]))
    pooled = np.concatenate(chains)
    var = float(pooled.var(ddof=1)) if m > 1 else 0.0
    ess = m * var / sigma_sq if sigma_sq > 0 else float(m)
    bsize = sig[0][1]
    return Estimate(
        name=name,
        mean=mean,
        sigma_sq=sigma_sq,
        mcse=math.sqrt(sigma_sq / m),
        ess=float(ess),
        sample_variance=var,
        batch_size=bsize,
        n_batches=int(chains[0].size // bsize),
        m=m,
    )


def report(draws_per_chain, names=None, squares: bool = True) -> McseReport:
    """Posterior means, batch-means MCSE and ESS for beta_j (and beta_j^2).

    Chains are pooled: the mean is length-weighted and sigma^2 is the average
    of the per-chain estimates (no between-chain term).
    """
    chains = [np.asarray(d, dtype=float) for d in draws_per_chain]
    if not chains:
        raise InsufficientDataError("no chains supplied")
    chains = [c[:, None] if c.ndim == 1 else c for c in chains]
    p = chains[0].shape[1]
    if any(c.shape[1] != p for c in chains):
        raise ValueError("all chains must have the same number of coordinates")
    names = list(names) if names is not None else [f"beta[{j}]" for j in range(p)]
    out = []
    for j, nm in enumerate(names):
        out.append(_summarise(nm, [c[:, j] for c in chains]))
    if squares:
        for j, nm in enumerate(names):
            out.append(_summarise(f"{nm}^2", [c[:, j] ** 2 for c in chains]))
    return McseReport(estimates=tuple(out), n_chains=len(chains))
