"""Dense Gaussian-process primitives.

Gaussian correlation kernel, covariance assembly with an adaptive jitter
ladder, a full-GP reference predictor, and marginal-likelihood hyperparameter
fitting (dense or sparse/inducing-point structure).  Both the global trend
model and the per-region residual models are fit through this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

from cglo.design import latin_hypercube

VARIANCE_FLOOR = 1e-8
JITTER_START = 1e-10  # relative to the process variance
JITTER_MAX = 1e-4


class IllConditionedError(RuntimeError):
    """Covariance factorization failed even after the maximum jitter."""

    def __init__(self, message: str, jitter_tried: float = 0.0):
        super().__init__(f"{message} (largest jitter tried: {jitter_tried:g})")
        self.jitter_tried = jitter_tried


class FittingFailedError(RuntimeError):
    """Every likelihood-optimization start failed to factorize."""


@dataclass(frozen=True)
class GPHyperparams:
    """Constant-mean GP hyperparameters: (mean, variance, lengthscales).

    Lengthscales are rate parameters (units 1/length^2), one per input
    dimension.  The variance is kept away from zero by VARIANCE_FLOOR.
    """

    mean: float
    variance: float
    lengthscales: np.ndarray

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        object.__setattr__(self, "lengthscales", ls)
        if not np.isfinite(self.mean):
            raise ValueError("mean must be finite")
        if not (np.isfinite(self.variance) and self.variance >= VARIANCE_FLOOR):
            raise ValueError(f"variance must be >= {VARIANCE_FLOOR}, got {self.variance}")
        if not (np.all(np.isfinite(ls)) and np.all(ls >= 0)):
            raise ValueError("lengthscales must be finite and nonnegative")

    @property
    def dim(self) -> int:
        return self.lengthscales.shape[0]


@dataclass(frozen=True)
class Prediction:
    mean: float
    variance: float


@dataclass
class CovMatrix:
    """A factorized covariance matrix and the diagonal jitter it needed."""

    entries: np.ndarray
    jitter_used: float
    chol: np.ndarray  # lower Cholesky factor of entries + jitter*I


def gauss_corr(a, b, ls) -> float:
    """Gaussian correlation exp(-sum_k ls_k (a_k - b_k)^2) in [0, 1]."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    ls = np.atleast_1d(np.asarray(ls, dtype=float))
    if a.shape != b.shape or a.shape != ls.shape:
        raise ValueError(
            f"dimension mismatch: a {a.shape}, b {b.shape}, lengthscales {ls.shape}"
        )
    return float(np.exp(-np.sum(ls * (a - b) ** 2)))


def corr_matrix(A: np.ndarray, B: np.ndarray, ls: np.ndarray) -> np.ndarray:
    """Cross-correlation matrix between row-point sets A (p,d) and B (q,d)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    d2 = (A[:, None, :] - B[None, :, :]) ** 2
    return np.exp(-(d2 * np.asarray(ls, dtype=float)).sum(axis=-1))


def chol_with_jitter(M: np.ndarray, variance: float):
    """Cholesky of M, escalating diagonal jitter x10 from JITTER_START*variance.

    Returns (lower factor, jitter_used); raises IllConditionedError past
    JITTER_MAX*variance.
    """
    n = M.shape[0]
    jitter = 0.0
    while True:
        try:
            L = np.linalg.cholesky(M + jitter * np.eye(n)) if jitter else np.linalg.cholesky(M)
            return L, jitter
        except np.linalg.LinAlgError:
            if jitter == 0.0:
                jitter = JITTER_START * variance
            elif jitter >= JITTER_MAX * variance:
                raise IllConditionedError(
                    "covariance not factorizable", jitter_tried=jitter
                ) from None
            else:
                jitter = min(jitter * 10.0, JITTER_MAX * variance)


def build_cov(points: np.ndarray, hp: GPHyperparams, nugget=None) -> CovMatrix:
    """Covariance matrix variance*corr + diag(nugget), Cholesky-factorized."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[0]
    if n == 0:
        raise ValueError("points must be nonempty")
    K = hp.variance * corr_matrix(points, points, hp.lengthscales)
    if nugget is not None:
        nugget = np.asarray(nugget, dtype=float)
        if nugget.shape != (n,):
            raise ValueError(f"nugget length {nugget.shape} does not match {n} points")
        K = K + np.diag(nugget)
    L, jitter = chol_with_jitter(K, hp.variance)
    return CovMatrix(entries=K, jitter_used=jitter, chol=L)


def full_gp_predict(X, y, noise, hp: GPHyperparams, x0) -> Prediction:
    """Standard dense GP predictor with heteroscedastic nugget `noise`.

    mean = mu + r'(R+S)^-1 (y-mu), variance = sigma^2 - r'(R+S)^-1 r (>= 0).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    cov = build_cov(X, hp, nugget=noise)
    alpha = cho_solve((cov.chol, True), y - hp.mean, check_finite=False)
    r = hp.variance * corr_matrix(np.atleast_2d(x0), X, hp.lengthscales)[0]
    mean = hp.mean + float(r @ alpha)
    half = solve_triangular(cov.chol, r, lower=True, check_finite=False)
    var = max(0.0, hp.variance - float(half @ half))
    return Prediction(mean=mean, variance=var)


def _fitc_cov(X, noise, hp: GPHyperparams, inducing):
    """FITC covariance C = Gnm Gm^-1 Gmn + Lam + diag(noise) plus parts."""
    U = np.atleast_2d(np.asarray(inducing, dtype=float))
    Gm = hp.variance * corr_matrix(U, U, hp.lengthscales)
    Gmn = hp.variance * corr_matrix(U, X, hp.lengthscales)
    Lm, _ = chol_with_jitter(Gm, hp.variance)
    W = solve_triangular(Lm, Gmn, lower=True, check_finite=False)  # Gm^-1/2 Gmn
    Qn = W.T @ W
    lam = np.maximum(0.0, hp.variance - np.diag(Qn))
    C = Qn + np.diag(lam + np.asarray(noise, dtype=float))
    return C


def neg_log_likelihood(X, y, noise, hp: GPHyperparams, inducing=None) -> float:
    """Negative log marginal likelihood of the sample-mean observations.

    Dense structure when `inducing` is None; otherwise the sparse structure
    C = Gnm Gm^-1 Gmn + Lam + diag(noise) with Lam the clamped diagonal
    correction.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    noise = np.asarray(noise, dtype=float)
    n = X.shape[0]
    if inducing is None:
        C = hp.variance * corr_matrix(X, X, hp.lengthscales) + np.diag(noise)
    else:
        C = _fitc_cov(X, noise, hp, inducing)
    L, _ = chol_with_jitter(C, hp.variance)
    r = y - hp.mean
    half = solve_triangular(L, r, lower=True, check_finite=False)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return 0.5 * (float(half @ half) + logdet + n * np.log(2.0 * np.pi))


@dataclass(frozen=True)
class HyperBounds:
    """Search box for (mean, variance, lengthscales)."""

    var_lo: float
    var_hi: float
    ls_lo: np.ndarray
    ls_hi: np.ndarray
    mean_bounds: tuple[float, float] | None = None  # None: profiled analytically

    def __post_init__(self):
        object.__setattr__(self, "ls_lo", np.atleast_1d(np.asarray(self.ls_lo, float)))
        object.__setattr__(self, "ls_hi", np.atleast_1d(np.asarray(self.ls_hi, float)))
        if not (0 < self.var_lo <= self.var_hi):
            raise ValueError("need 0 < var_lo <= var_hi")
        if np.any(self.ls_lo > self.ls_hi) or np.any(self.ls_lo < 0):
            raise ValueError("bad lengthscale bounds")


def default_bounds(X, y, domain_bounds=None, fixed_mean=None) -> HyperBounds:
    """Serviceable search box: [1e-3, 1e3] lengthscales on the unit-box scale
    rescaled to the actual coordinate spans, variance bracketed by the
    response variance."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if domain_bounds is not None:
        lo, hi = np.asarray(domain_bounds, dtype=float)
        span = hi - lo
    else:
        span = X.max(axis=0) - X.min(axis=0)
    span = np.where(span > 0, span, 1.0)
    vy = float(np.var(y))
    if vy <= 0:
        vy = 1.0
    mean_bounds = (fixed_mean, fixed_mean) if fixed_mean is not None else None
    return HyperBounds(
        var_lo=max(VARIANCE_FLOOR, 1e-6 * vy),
        var_hi=max(1.0, 1e3 * vy),
        ls_lo=1e-3 / span**2,
        ls_hi=1e3 / span**2,
        mean_bounds=mean_bounds,
    )


def _profiled_mean(L: np.ndarray, y: np.ndarray, bounds: HyperBounds) -> float:
    """Generalized-least-squares mean given the Cholesky factor of C."""
    ones = np.ones_like(y)
    ci_y = cho_solve((L, True), y, check_finite=False)
    ci_1 = cho_solve((L, True), ones, check_finite=False)
    denom = float(ones @ ci_1)
    mu = float(ones @ ci_y) / denom if denom > 0 else float(np.mean(y))
    if bounds.mean_bounds is not None:
        mu = float(np.clip(mu, bounds.mean_bounds[0], bounds.mean_bounds[1]))
    return mu


def _nll_at(X, y, noise, var, ls, bounds, inducing):
    """NLL with the mean profiled; returns (nll, mu)."""
    n = X.shape[0]
    if inducing is None:
        C = var * corr_matrix(X, X, ls) + np.diag(noise)
    else:
        C = _fitc_cov(X, noise, GPHyperparams(0.0, var, ls), inducing)
    L, _ = chol_with_jitter(C, var)
    mu = _profiled_mean(L, y, bounds)
    r = y - mu
    half = solve_triangular(L, r, lower=True, check_finite=False)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return 0.5 * (float(half @ half) + logdet + n * np.log(2.0 * np.pi)), mu


def fit_hyperparams(
    X,
    y,
    noise,
    bounds: HyperBounds,
    inducing=None,
    constraint_floor=None,
    seed: int = 0,
    n_starts: int = 10,
    warm_start: GPHyperparams | None = None,
) -> GPHyperparams:
    """Multi-start simplex search for (mean, variance, lengthscales).

    Search runs over log-variance and log-lengthscales with the mean profiled
    in closed form.  `constraint_floor` is an elementwise lower bound on the
    lengthscales (the global rates when fitting a local residual model).
    A `warm_start` adds the previous optimum as the first start, which lets
    refits on slightly grown data get by with few random starts.
    Deterministic given the seed.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    noise = np.asarray(noise, dtype=float)
    d = X.shape[1]
    if X.shape[0] < 2 or np.unique(X, axis=0).shape[0] < 2:
        raise FittingFailedError("need at least 2 distinct design points to fit")
    floor = None
    if constraint_floor is not None:
        floor = np.atleast_1d(np.asarray(constraint_floor, dtype=float))

    def clamp_params(p):
        # overflow in exp is fine here: inf clips to the upper bound
        with np.errstate(over="ignore"):
            var = float(np.clip(np.exp(p[0]), bounds.var_lo, bounds.var_hi))
            ls = np.clip(np.exp(p[1:]), bounds.ls_lo, bounds.ls_hi)
        if floor is not None:
            ls = np.maximum(ls, floor)
        return var, ls

    def objective(p):
        var, ls = clamp_params(p)
        try:
            nll, _ = _nll_at(X, y, noise, var, ls, bounds, inducing)
        except IllConditionedError:
            return 1e12
        return nll if np.isfinite(nll) else 1e12

    rng = np.random.default_rng(seed)
    lo = np.concatenate(([np.log(bounds.var_lo)], np.log(np.maximum(bounds.ls_lo, 1e-300))))
    hi = np.concatenate(([np.log(bounds.var_hi)], np.log(bounds.ls_hi)))
    starts = lo + latin_hypercube(n_starts, 1 + d, rng) * (hi - lo)
    if warm_start is not None:
        p_warm = np.concatenate(
            (
                [np.log(max(warm_start.variance, bounds.var_lo))],
                np.log(np.maximum(warm_start.lengthscales, np.maximum(bounds.ls_lo, 1e-300))),
            )
        )
        starts = np.vstack([p_warm, starts])

    best_p, best_val = None, np.inf
    for p0 in starts:
        f0 = objective(p0)
        if f0 >= 1e12:
            continue
        res = minimize(
            objective,
            p0,
            method="Nelder-Mead",
            options={"maxfev": 200 * (1 + d), "xatol": 1e-3, "fatol": 1e-4},
        )
        cand_val = min(res.fun, f0)
        cand_p = res.x if res.fun <= f0 else p0
        if cand_val < best_val:
            best_val, best_p = cand_val, cand_p
    if best_p is None:
        raise FittingFailedError(
            f"all {n_starts} starts failed factorization (n={X.shape[0]}, d={d})"
        )
    var, ls = clamp_params(best_p)
    _, mu = _nll_at(X, y, noise, var, ls, bounds, inducing)
    return GPHyperparams(mean=mu, variance=max(var, VARIANCE_FLOOR), lengthscales=ls)
