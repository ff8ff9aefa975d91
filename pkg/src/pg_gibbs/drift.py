"""Drift certificate for geometric ergodicity of the omega sub-chain.

With drift function

    V(omega) = alpha * sum 1/omega_i + sum omega_i^-1/2 + sum omega_i

the chain satisfies E[V(omega) | omega'] <= rho V(omega') + L0 with

    rho = max{ sqrt(rho1) (1 + c1^2 / (2 alpha)),  sqrt(2/pi) (2 alpha + c1^2) }
    L0  = n / (2 c1^2) + alpha n L1 + n L2 + n / 4

whenever c1^2 < sqrt(pi/2) (1 - sqrt(rho1)) and
c1^2 sqrt(rho1) / (2 (1 - sqrt(rho1))) < alpha < (sqrt(pi/2) - c1^2) / 2.
Here rho1 < 1 bounds 1' Z (Z' Omega Z)^-1 Z' 1 / sum(1/omega_i) over all omega,
and L1 = L(1), L2 = L(1/2) come from the inverse-moment bound
E(omega^-s) <= 2^s b^s + L(s) for omega ~ PG(1, b).

rho1 is estimated numerically (a lower bound on the true supremum), and the
inequality is then checked by simulation in :func:`verify_drift`.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize, special
from scipy.linalg import solve_triangular

from .errors import CertificateError, ImproperPosteriorError, NumericalError
from .gibbs import beta_conditional_params
from .model import Dataset, derive
from .pg_dist import CATALAN, inverse_moment_table, pg_mean
from .propriety import check_propriety, check_rank, feasibility_tolerance
from .rng import make_rng

SQRT_HALF_PI = math.sqrt(math.pi / 2.0)
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
LAMBDA_FLOOR = 1e-8


@dataclass(frozen=True)
class DriftFunctionParams:
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")


def drift_V(omega, params: DriftFunctionParams | float) -> float:
    alpha = params.alpha if isinstance(params, DriftFunctionParams) else float(params)
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    omega = np.asarray(omega, dtype=float)
    if not np.all(omega > 0):
        raise ValueError("omega must be strictly positive")
    return float(alpha * np.sum(1.0 / omega) + np.sum(omega**-0.5) + np.sum(omega))


def folded_normal_mean(mu, sigma):
    """E|N(mu, sigma^2)| = sigma sqrt(2/pi) exp(-mu^2 / (2 sigma^2)) + mu (1 - 2 Phi(-mu/sigma))."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")
    r = mu / sigma
    out = sigma * SQRT_2_OVER_PI * np.exp(-0.5 * r * r) + mu * (1.0 - 2.0 * special.ndtr(-r))
    return float(out) if out.ndim == 0 else out


# --- rho1 ----------------------------------------------------------------------


def rho1_ratio(Z, omega) -> np.ndarray:
    """1' Z (Z' Omega Z)^-1 Z' 1 / sum(1/omega_i) for one omega (n,) or a batch (k, n)."""
    Z = np.asarray(Z, dtype=float)
    omega = np.atleast_2d(np.asarray(omega, dtype=float))
    v = Z.sum(axis=0)
    A = np.einsum("ki,ij,il->kjl", omega, Z, Z)
    try:
        sol = np.linalg.solve(A, np.broadcast_to(v, (omega.shape[0], v.size))[..., None])[..., 0]
    except np.linalg.LinAlgError:
        # some matrix in the batch is numerically singular: go one by one, NaN where it fails
        sol = np.full((omega.shape[0], v.size), np.nan)
        for k, Ak in enumerate(A):
            try:
                sol[k] = np.linalg.solve(Ak, v)
            except np.linalg.LinAlgError:
                pass
    out = (sol @ v) / np.sum(1.0 / omega, axis=1)
    return out if out.size > 1 else out.reshape(-1)


def _objective(Z: np.ndarray, v: np.ndarray, lam: np.ndarray) -> tuple[float, np.ndarray]:
    """g(lam) = v' (Z' Lam^-2 Z)^-1 v at unit-norm lam, and its gradient in log(lam)."""
    zt = Z / lam[:, None]
    R = np.linalg.qr(zt, mode="r")
    w = solve_triangular(R, v, trans="T", check_finite=False)
    g = float(w @ w)
    u = solve_triangular(R, w, check_finite=False)
    # d g / d log(lam_i) on the sphere: 2 (z_i' u)^2 / lam_i^2 - 2 g lam_i^2
    grad = 2.0 * (zt @ u) ** 2 - 2.0 * g * lam * lam
    return g, grad


def _normalise(theta: np.ndarray) -> np.ndarray:
    lam = np.exp(theta - theta.max())
    lam /= np.linalg.norm(lam)
    np.maximum(lam, LAMBDA_FLOOR, out=lam)
    return lam / np.linalg.norm(lam)


def _ascend(Z, v, lam, max_iter: int = 400, tol: float = 1e-13) -> tuple[float, np.ndarray]:
    """Projected gradient ascent in log(lam) with backtracking."""
    g, grad = _objective(Z, v, lam)
    step = 1.0
    stall = 0
    for _ in range(max_iter):
        gn2 = float(grad @ grad)
        if gn2 < 1e-28:
            break
        theta = np.log(lam)
        while step > 1e-12:
            cand = _normalise(theta + step * grad)
            g_new, grad_new = _objective(Z, v, cand)
            if g_new >= g + 1e-4 * step * gn2 or (g_new > g and step < 1e-6):
                break
            step *= 0.5
        else:
            break
        improvement = g_new - g
        lam, g, grad = cand, g_new, grad_new
        step = min(step * 2.0, 1e6)
        stall = stall + 1 if improvement < tol * max(g, 1e-300) else 0
        if stall >= 5:
            break
    return g, lam


def _polish(Z, v, g: float, lam: np.ndarray, max_rounds: int = 20) -> tuple[float, np.ndarray]:
    """Try pinning small coordinates of lam at the floor, re-ascending after each gain.

    Suprema often sit on the boundary of the sphere, where the log-coordinate
    gradient of the coordinates heading to zero vanishes and plain ascent crawls.
    """
    for _ in range(max_rounds):
        free = np.flatnonzero(lam > 10 * LAMBDA_FLOOR)
        cand = free[np.argsort(lam[free])][:10]
        cand = cand[lam[cand] < 0.5 * np.median(lam)]
        improved = False
        for i in cand:
            trial = lam.copy()
            trial[i] = LAMBDA_FLOOR
            trial /= np.linalg.norm(trial)
            try:
                g_t, lam_t = _ascend(Z, v, trial)
            except np.linalg.LinAlgError:
                continue
            if g_t > g * (1 + 1e-12):
                g, lam, improved = g_t, lam_t, True
                break
        if not improved:
            break
    return g, lam


def rho1_estimate(Z, e, budget: int = 20, rng: np.random.Generator | None = None) -> float:
    """Largest value found of 1' Z (Z' Omega Z)^-1 Z' 1 / sum(1/omega_i) over omega > 0.

    Works on the reparametrisation lam_i proportional to omega_i^-1/2 on the
    positive unit sphere (lam_i >= 1e-8). ``budget`` is the number of gradient
    ascent starts; 500 random points per unit of budget are also screened and
    the best of them used as extra starts. The result is a lower bound on the
    supremum.
    """
    Z = np.asarray(Z, dtype=float)
    e = np.asarray(e, dtype=float)
    if budget is None or int(budget) < 1:
        raise ValueError("optimizer budget must be a positive integer")
    budget = int(budget)
    n, p = Z.shape
    if not check_rank(Z)[0]:
        raise ValueError("Z must have full column rank")
    if e.shape != (n,) or not np.all(e > 0):
        raise ValueError("e must be a strictly positive length-n vector")
    if np.abs(Z.T @ e).max() > feasibility_tolerance(Z, e):
        raise ValueError("Z^T e != 0: no positive null vector supplied (is the posterior proper?)")
    rng = rng if rng is not None else make_rng(0)
    v = Z.sum(axis=0)
    if not np.any(v):
        return 0.0

    # random screening in omega space: log omega ~ N(0, s^2) with s mixed over scales
    k = 500 * budget
    scales = rng.choice([0.5, 2.0, 5.0, 10.0], size=(k, 1))
    omega = np.exp(scales * rng.standard_normal((k, n)))
    # a share of points pushes single coordinates towards the boundary lam_i -> 0
    hit = rng.random((k, n)) < 0.2
    omega = np.where(hit, omega * 1e6, omega)
    with np.errstate(all="ignore"):
        vals = rho1_ratio(Z, omega)
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    best = float(vals.max(initial=0.0))
    order = np.argsort(vals)[::-1]

    starts = [np.full(n, 1.0 / math.sqrt(n))]
    n_screen = max(1, budget // 2)
    for i in order[:n_screen]:
        starts.append(_normalise(-0.5 * np.log(omega[i])))
    while len(starts) < budget + n_screen:
        starts.append(_normalise(rng.standard_normal(n) * rng.choice([0.25, 0.5, 1.0, 2.0])))
    found = []
    for lam in starts:
        try:
            found.append(_ascend(Z, v, lam))
        except np.linalg.LinAlgError:
            continue
    found.sort(key=lambda t: -t[0])
    for g, lam in found[:3]:
        try:
            g, _ = _polish(Z, v, g, lam)
        except np.linalg.LinAlgError:
            pass
        best = max(best, g)
    if best >= 1.0 - 1e-9:
        raise CertificateError(
            f"rho1 estimate {best} is not below 1; the design violates the propriety "
            "conditions numerically"
        )
    return best


# --- L(s) and f0 -----------------------------------------------------------------


def L_of_s(s: float, f0: float) -> float:
    """max{ 2^(s+1) Gamma(2s+1) / Gamma(s+1) + f0,  8 C + 1 } with C Catalan's constant."""
    if not 0 < s <= 1:
        raise ValueError("s must lie in (0, 1]")
    if f0 < 0:
        raise ValueError("f0 must be nonnegative")
    arm = 2.0 ** (s + 1) * math.exp(math.lgamma(2 * s + 1) - math.lgamma(s + 1)) + f0
    return max(arm, 8.0 * CATALAN + 1.0)


def f_gap(b: float, s: float) -> float:
    """(1 + e^-b) b^s / Gamma(s) * int_0^oo t^(s-1) e^(-t/2) / (1 + e^(-b-t)) dt - 2^s b^s.

    Evaluated as 2^s b^s e^-b - (1 + e^-b) b^s J / Gamma(s) with
    J = int t^(s-1) e^(-t/2) / (1 + e^(b+t)) dt, which avoids cancellation at large b.
    """
    if b <= 0:
        return 0.0

    # t = u^2 removes the t^(s-1) endpoint singularity for s >= 1/2
    def integrand(u):
        return 2.0 * u ** (2 * s - 1) * math.exp(-0.5 * u * u) * special.expit(-(b + u * u))

    J, err = integrate.quad(integrand, 0.0, math.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    if not math.isfinite(J) or err > 1e-9 * max(J, 1e-300) + 1e-300:
        raise NumericalError(f"quadrature for f(b) failed at b={b}, s={s}")
    bs = b**s
    return 2.0**s * bs * math.exp(-b) - (1.0 + math.exp(-b)) * bs * J / math.gamma(s)


@dataclass(frozen=True)
class F0Grid:
    b_max: float = 50.0
    step: float = 0.05
    refine: bool = True


@dataclass(frozen=True)
class F0Result:
    value: float
    argmax: float
    tail_value: float
    tail_decreasing: bool
    grid: F0Grid


@lru_cache(maxsize=32)
def estimate_f0(s: float, grid: F0Grid = F0Grid()) -> F0Result:
    """sup |f(b)| over the grid, refined around the grid maximiser.

    Only the scanned range is certified; beyond ``b_max`` we record |f(b_max)|
    and whether |f| was still decreasing over the last tenth of the grid.
    """
    if not 0 < s <= 1:
        raise ValueError("s must lie in (0, 1]")
    bs = np.arange(0.0, grid.b_max + 0.5 * grid.step, grid.step)
    vals = np.abs([f_gap(float(b), s) for b in bs])
    k = int(np.argmax(vals))
    best, arg = float(vals[k]), float(bs[k])
    if grid.refine:
        lo, hi = bs[max(k - 1, 0)], bs[min(k + 1, len(bs) - 1)]
        res = optimize.minimize_scalar(
            lambda b: -abs(f_gap(b, s)), bounds=(lo, hi), method="bounded", options={"xatol": 1e-10}
        )
        if -res.fun > best:
            best, arg = float(-res.fun), float(res.x)
    tail = vals[-max(2, len(vals) // 10) :]
    return F0Result(
        value=best,
        argmax=arg,
        tail_value=float(vals[-1]),
        tail_decreasing=bool(np.all(np.diff(tail) <= 1e-15)),
        grid=grid,
    )


# --- certificate -------------------------------------------------------------------


@dataclass(frozen=True)
class CertificatePolicy:
    selection: str = "midpoint"  # or "grid": minimise rho over (c1^2, alpha)
    grid_size: int = 200
    f0_grid: F0Grid = F0Grid()

    def __post_init__(self):
        if self.selection not in ("midpoint", "grid"):
            raise ValueError(f"unknown selection {self.selection!r}")


@dataclass(frozen=True)
class DriftCertificate:
    n: int
    rho1_hat: float
    c1_sq: float
    alpha: float
    rho: float
    L0: float
    L1: float
    L2: float
    f0: float  # for s = 1
    f0_half: float  # for s = 1/2
    verified_points: int = 0
    violations: int = 0
    caveats: tuple[str, ...] = ()
    settings: dict = field(default_factory=dict)

    def invariant_violations(self) -> list[str]:
        bad = []
        sr = math.sqrt(self.rho1_hat)
        if not 0 < self.c1_sq < SQRT_HALF_PI * (1 - sr):
            bad.append("c1_sq outside (0, sqrt(pi/2)(1 - sqrt(rho1)))")
        lo = 0.5 * self.c1_sq * sr / (1 - sr)
        hi = 0.5 * (SQRT_HALF_PI - self.c1_sq)
        if not lo < self.alpha < hi:
            bad.append("alpha outside its admissible window")
        rho = max(sr * (1 + self.c1_sq / (2 * self.alpha)), SQRT_2_OVER_PI * (2 * self.alpha + self.c1_sq))
        if not (0 < self.rho < 1 and math.isclose(rho, self.rho, rel_tol=1e-12)):
            bad.append("rho inconsistent or not in (0, 1)")
        L0 = self.n / (2 * self.c1_sq) + self.alpha * self.n * self.L1 + self.n * self.L2 + self.n / 4
        if not (self.L0 > 0 and math.isclose(L0, self.L0, rel_tol=1e-12)):
            bad.append("L0 inconsistent")
        return bad

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["caveats"] = list(self.caveats)
        return d


def _rho(rho1: float, c1_sq: float, alpha: float) -> float:
    sr = math.sqrt(rho1)
    return max(sr * (1 + c1_sq / (2 * alpha)), SQRT_2_OVER_PI * (2 * alpha + c1_sq))


def _alpha_window(rho1: float, c1_sq: float) -> tuple[float, float]:
    sr = math.sqrt(rho1)
    return 0.5 * c1_sq * sr / (1 - sr), 0.5 * (SQRT_HALF_PI - c1_sq)


def select_constants(rho1_hat: float, policy: CertificatePolicy = CertificatePolicy()) -> tuple[float, float]:
    """(c1^2, alpha) inside the admissible region."""
    if not 0 <= rho1_hat < 1:
        raise CertificateError(f"rho1_hat must lie in [0, 1), got {rho1_hat}")
    c_max = SQRT_HALF_PI * (1 - math.sqrt(rho1_hat))
    if policy.selection == "midpoint":
        c1_sq = 0.5 * c_max
        lo, hi = _alpha_window(rho1_hat, c1_sq)
        alpha = 0.5 * (lo + hi)
    else:
        k = policy.grid_size
        best = None
        for c in c_max * (np.arange(1, k) / k):
            lo, hi = _alpha_window(rho1_hat, c)
            for a in lo + (hi - lo) * (np.arange(1, k) / k):
                if a <= 0:
                    continue
                r = _rho(rho1_hat, c, a)
                if best is None or r < best[0]:
                    best = (r, float(c), float(a))
        if best is None:
            raise CertificateError("empty (c1, alpha) region")
        _, c1_sq, alpha = best
    lo, hi = _alpha_window(rho1_hat, c1_sq)
    if not (0 < c1_sq < c_max and lo < alpha < hi and alpha > 0):
        raise CertificateError("empty (c1, alpha) region")
    return c1_sq, alpha


def build_certificate(
    dataset: Dataset, rho1_hat: float, policy: CertificatePolicy = CertificatePolicy()
) -> DriftCertificate:
    c1_sq, alpha = select_constants(rho1_hat, policy)
    f1 = estimate_f0(1.0, policy.f0_grid)
    fh = estimate_f0(0.5, policy.f0_grid)
    L1 = L_of_s(1.0, f1.value)
    L2 = L_of_s(0.5, fh.value)
    n = dataset.n
    rho = _rho(rho1_hat, c1_sq, alpha)
    L0 = n / (2 * c1_sq) + alpha * n * L1 + n * L2 + n / 4
    caveats = [
        "rho1_hat is a numerical lower bound on the supremum; the drift inequality is checked by simulation",
        f"f0 certified on b in [0, {policy.f0_grid.b_max}] only",
    ]
    for res, s in ((f1, "1"), (fh, "1/2")):
        if not res.tail_decreasing:
            caveats.append(f"|f(b)| for s={s} was not monotonically decreasing at the end of the grid")
    cert = DriftCertificate(
        n=n,
        rho1_hat=float(rho1_hat),
        c1_sq=c1_sq,
        alpha=alpha,
        rho=rho,
        L0=L0,
        L1=L1,
        L2=L2,
        f0=f1.value,
        f0_half=fh.value,
        caveats=tuple(caveats),
        settings={
            "selection": policy.selection,
            "f0_grid": dataclasses.asdict(policy.f0_grid),
            "f0_tail_value": {"s=1": f1.tail_value, "s=1/2": fh.tail_value},
        },
    )
    bad = cert.invariant_violations()
    if bad:
        raise CertificateError("; ".join(bad))
    return cert


# --- empirical verification ------------------------------------------------------------


@dataclass(frozen=True)
class DriftCheck:
    violations: int
    n_points: int
    mc_draws: int
    min_relative_margin: float
    max_ratio: float  # max over points of E[V | omega'] / (rho V(omega') + L0)
    points: list = field(repr=False, default_factory=list)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("points")
        return d


def default_test_points(n: int, count: int = 50, rng: np.random.Generator | None = None) -> np.ndarray:
    """``count`` points with coordinates on a log grid over [1e-3, 1e3], levels permuted per coordinate."""
    rng = rng if rng is not None else make_rng(0)
    levels = np.logspace(-3, 3, count)
    return np.column_stack([rng.permutation(levels) for _ in range(n)])


def inner_expectation(t, alpha: float) -> np.ndarray:
    """E[V(omega) | beta] given t = |X beta| (shape (..., n)), summed over i."""
    t = np.abs(np.asarray(t, dtype=float))
    e_inv = inverse_moment_table(1.0)(t)
    e_isqrt = inverse_moment_table(0.5)(t)
    return np.sum(alpha * e_inv + e_isqrt + pg_mean(t), axis=-1)


def expected_drift(dataset: Dataset, omega_prime, alpha: float, mc_draws: int, rng) -> tuple[float, float]:
    """Monte Carlo estimate (and its standard error) of E[V(omega) | omega'].

    beta is drawn from its conditional given omega'; the expectation over
    omega | beta is computed from PG moments.
    """
    params = beta_conditional_params(omega_prime, dataset)
    zs = rng.standard_normal((mc_draws, dataset.p))
    betas = params.mean + solve_triangular(params.chol, zs.T, lower=True, trans="T").T
    vals = inner_expectation(betas @ dataset.X.T, alpha)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(mc_draws))


def verify_drift(
    dataset: Dataset,
    cert: DriftCertificate,
    test_points=None,
    mc_draws: int = 2000,
    rng: np.random.Generator | None = None,
) -> DriftCheck:
    """Count test points where the estimate of E[V | omega'] minus 3 standard errors
    exceeds rho V(omega') + L0."""
    rng = rng if rng is not None else make_rng(0)
    if mc_draws < 2:
        raise ValueError("mc_draws must be at least 2")
    if test_points is None:
        test_points = default_test_points(dataset.n, rng=rng)
    pts = np.atleast_2d(np.asarray(test_points, dtype=float))
    violations = 0
    margins, ratios, records = [], [], []
    for om in pts:
        est, se = expected_drift(dataset, om, cert.alpha, mc_draws, rng)
        bound = cert.rho * drift_V(om, cert.alpha) + cert.L0
        if est - 3.0 * se > bound:
            violations += 1
        margins.append((bound - est) / bound)
        ratios.append(est / bound)
        records.append({"omega": om.tolist(), "estimate": est, "se": se, "bound": bound})
    return DriftCheck(
        violations=violations,
        n_points=len(pts),
        mc_draws=mc_draws,
        min_relative_margin=float(min(margins)),
        max_ratio=float(max(ratios)),
        points=records,
    )


def certify(
    dataset: Dataset,
    *,
    budget: int = 20,
    n_test_points: int = 50,
    mc_draws: int = 2000,
    seed: int = 0,
    policy: CertificatePolicy = CertificatePolicy(),
) -> tuple[DriftCertificate, DriftCheck]:
    """Propriety check, rho1 estimate, certificate and drift verification in one go."""
    if budget is None or int(budget) < 1:
        raise ValueError("optimizer budget must be a positive integer")
    report = check_propriety(dataset)
    if not report.proper:
        raise ImproperPosteriorError("posterior is improper; no drift certificate exists")
    Z = derive(dataset).Z
    rho1 = rho1_estimate(Z, report.positive_null_vector, budget, make_rng(seed, 1))
    cert = build_certificate(dataset, rho1, policy)
    pts = default_test_points(dataset.n, n_test_points, make_rng(seed, 2))
    check = verify_drift(dataset, cert, pts, mc_draws, make_rng(seed, 3))
    cert = dataclasses.replace(cert, verified_points=check.n_points, violations=check.violations)
    return cert, check
