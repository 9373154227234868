"""Doubly-truncated normal moments and a multivariate truncated-normal Gibbs sampler."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
_UNDERFLOW = 1e-292


class NumericsError(ValueError):
    """Raised on invalid numerical inputs (non-PD matrix, bad bounds)."""


@dataclass(frozen=True)
class TNParams:
    """Parent normal N(mu0, sigma0^2) truncated to (a, b)."""

    mu0: float
    sigma0: float
    a: float
    b: float

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise NumericsError("sigma0 must be positive")
        if not self.a < self.b:
            raise NumericsError("need a < b")


def _log_phi(x):
    return -0.5 * x * x - _LOG_SQRT_2PI


def _phi(x):
    out = np.exp(-0.5 * np.square(x)) / np.sqrt(2.0 * np.pi)
    return np.where(np.isinf(x), 0.0, out)


def truncated_standard_ratios(alpha, beta):
    """Mills-ratio terms of TN(0, 1, alpha, beta).

    Returns (r, q) with r = (phi(a) - phi(b)) / Z and
    q = (a*phi(a) - b*phi(b)) / Z, Z = Phi(b) - Phi(a).  Infinite bounds are
    allowed; far-tail intervals are evaluated in log space so the result
    never degenerates to 0/0.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    scalar = alpha.ndim == 0
    alpha, beta = np.atleast_1d(alpha).copy(), np.atleast_1d(beta).copy()
    if np.any(alpha >= beta):
        raise NumericsError("truncated_standard_ratios: need alpha < beta")

    # Reflect right-half intervals onto the left half, where ndtr is accurate.
    with np.errstate(invalid="ignore"):
        mid = alpha + beta
    mid = np.where(np.isnan(mid), 0.0, mid)  # (-inf, inf) intervals
    mid = np.where(np.isinf(mid) & (mid > 0), 1.0, mid)
    mid = np.where(np.isinf(mid) & (mid < 0), -1.0, mid)
    flip = mid > 0
    a = np.where(flip, -beta, alpha)
    b = np.where(flip, -alpha, beta)

    mass = ndtr(b) - ndtr(a)
    safe_mass = np.where(mass > _UNDERFLOW, mass, 1.0)
    r = (_phi(a) - _phi(b)) / safe_mass
    apha = np.where(np.isinf(a), 0.0, a) * _phi(a)
    bphb = np.where(np.isinf(b), 0.0, b) * _phi(b)
    q = (apha - bphb) / safe_mass

    tail = mass <= _UNDERFLOW
    if np.any(tail):
        # Both bounds deep in the left tail: log-scale evaluation.
        at, bt = a[tail], b[tail]
        log_fb = log_ndtr(bt)
        log_fa = log_ndtr(at)
        log_mass = log_fb + np.log1p(-np.exp(np.minimum(log_fa - log_fb, -1e-18)))
        delta = _log_phi(at) - _log_phi(bt)  # <= 0 in the left tail
        scale = np.exp(_log_phi(bt) - log_mass)
        r[tail] = scale * np.expm1(delta)
        at_term = np.where(np.isinf(at), 0.0, at * np.exp(delta))
        q[tail] = scale * (at_term - bt)

    r = np.where(flip, -r, r)
    if scalar:
        return float(r[0]), float(q[0])
    return r, q


def tn_moments_arrays(mu0, sigma0, a, b):
    """First and second raw moments of N(mu0, sigma0^2) truncated to (a, b)."""
    mu0 = np.asarray(mu0, dtype=float)
    sigma0 = np.asarray(sigma0, dtype=float)
    alpha = np.where(np.isinf(a), a, (a - mu0) / sigma0)
    beta = np.where(np.isinf(b), b, (b - mu0) / sigma0)
    r, q = truncated_standard_ratios(alpha, beta)
    m1 = mu0 + sigma0 * r
    m2 = mu0**2 + sigma0**2 + 2.0 * mu0 * sigma0 * r + sigma0**2 * q
    return m1, m2


def tn_moments(params: TNParams) -> tuple[float, float]:
    """Moments (E X, E X^2) of a doubly truncated normal."""
    m1, m2 = tn_moments_arrays(params.mu0, params.sigma0, params.a, params.b)
    return float(m1), float(m2)


def sample_truncnorm(rng, mu, sigma, a, b):
    """Draw from N(mu, sigma^2) truncated to (a, b), elementwise.

    Inverse-CDF on the truncated uniform, reflected onto the left tail for
    accuracy; intervals whose mass underflows collapse to the nearer bound.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    alpha = np.where(np.isinf(a), a, (a - mu) / sigma)
    beta = np.where(np.isinf(b), b, (b - mu) / sigma)

    with np.errstate(invalid="ignore"):
        mid = alpha + beta
    mid = np.where(np.isnan(mid), 0.0, mid)
    mid = np.where(np.isinf(mid), np.sign(mid), mid)
    flip = mid > 0
    lo = np.where(flip, -beta, alpha)
    hi = np.where(flip, -alpha, beta)

    f_lo = ndtr(lo)
    f_hi = ndtr(hi)
    u = f_lo + rng.random(size=np.broadcast(lo, hi).shape) * (f_hi - f_lo)
    z = ndtri(np.clip(u, 1e-300, 1.0 - 1e-16))
    # Degenerate mass: fall back to the bound closest to the mode.
    z = np.where(f_hi - f_lo > 0, z, np.where(np.isinf(hi), lo, hi))
    z = np.where(flip, -z, z)
    return mu + sigma * z


def _check_correlation(sigma: np.ndarray) -> None:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise NumericsError("sigma must be square")
    if not np.allclose(sigma, sigma.T, atol=1e-10):
        raise NumericsError("sigma must be symmetric")
    if not np.allclose(np.diag(sigma), 1.0, atol=1e-8):
        raise NumericsError("sigma must have unit diagonal")
    try:
        np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise NumericsError("sigma is not positive definite") from exc


def _conditional_coefficients(sigma: np.ndarray):
    """Per-coordinate conditional regression weights and variances.

    Returns (B, cond_var) with mu_j = z @ B[:, j] and
    cond_var[j] = 1 - Sigma_{j,-j} Sigma_{-j,-j}^{-1} Sigma_{-j,j}, computed
    from the precision matrix in one inversion.
    """
    omega = np.linalg.inv(sigma)
    d = np.diag(omega).copy()
    B = -omega / d[np.newaxis, :]
    np.fill_diagonal(B, 0.0)
    cond_var = 1.0 / d
    return B, cond_var


def gibbs_second_moment(sigma, lower, upper, n_samples, burn_in, rng):
    """Systematic-scan Gibbs over parallel chains; accumulates sum of Z^T Z.

    lower/upper are (m, p): one row of bounds per chain.  Pinned coordinates
    (lower == upper) are held fixed and never resampled.  Returns the p x p
    sum over all kept sweeps and chains, to be divided by m * n_samples.
    """
    sigma = np.asarray(sigma, dtype=float)
    lower = np.atleast_2d(np.asarray(lower, dtype=float))
    upper = np.atleast_2d(np.asarray(upper, dtype=float))
    m, p = lower.shape
    if np.any(lower > upper):
        raise NumericsError("inconsistent bounds: lower > upper")
    pinned = lower == upper
    free_cols = [j for j in range(p) if not np.all(pinned[:, j])]

    state = np.where(pinned, lower, 0.0)
    if free_cols:
        init_mask = ~pinned
        state[init_mask] = sample_truncnorm(
            rng, 0.0, 1.0, lower[init_mask], upper[init_mask]
        )
        B, cond_var = _conditional_coefficients(sigma)
        cond_sd = np.sqrt(np.maximum(cond_var, 1e-12))

    accum = np.zeros((p, p))
    for sweep in range(burn_in + n_samples):
        for j in free_cols:
            mu_j = state @ B[:, j]
            draws = sample_truncnorm(rng, mu_j, cond_sd[j], lower[:, j], upper[:, j])
            state[:, j] = np.where(pinned[:, j], lower[:, j], draws)
        if sweep >= burn_in:
            accum += state.T @ state
    if not free_cols:
        # Fully pinned problem: every sweep is identical.
        accum = n_samples * (state.T @ state)
    return accum


def tmvn_gibbs(sigma, lower, upper, n_samples, burn_in=100, seed=0):
    """Gibbs sampler for TN(0, sigma, lower, upper); returns (n_samples, p).

    One retained row per post-burn-in sweep; deterministic given seed.
    """
    sigma = np.asarray(sigma, dtype=float)
    _check_correlation(sigma)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if n_samples < 1:
        raise NumericsError("n_samples must be positive")
    if np.any(lower > upper):
        raise NumericsError("inconsistent bounds: lower > upper")

    rng = np.random.default_rng(seed)
    p = sigma.shape[0]
    pinned = lower == upper
    state = np.where(pinned, lower, 0.0)[np.newaxis, :].copy()
    free = ~pinned
    if np.any(free):
        state[0, free] = sample_truncnorm(rng, 0.0, 1.0, lower[free], upper[free])
        B, cond_var = _conditional_coefficients(sigma)
        cond_sd = np.sqrt(np.maximum(cond_var, 1e-12))

    out = np.empty((n_samples, p))
    for sweep in range(burn_in + n_samples):
        for j in range(p):
            if pinned[j]:
                continue
            mu_j = float(state[0] @ B[:, j])
            state[0, j] = sample_truncnorm(
                rng, np.array(mu_j), cond_sd[j], lower[j], upper[j]
            )
        if sweep >= burn_in:
            out[sweep - burn_in] = state[0]
    return out
