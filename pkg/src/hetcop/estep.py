"""Conditional latent second-moment matrices: Gibbs and mean-field E-steps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .marginals import TruncationSet
from .truncnorm import (
    NumericsError,
    _conditional_coefficients,
    gibbs_second_moment,
    tn_moments_arrays,
    truncated_standard_ratios,
)


@dataclass(frozen=True)
class CorrelationSet:
    """K latent correlation matrices with their group sample sizes."""

    matrices: tuple[np.ndarray, ...]
    n_obs: tuple[int, ...]
    method: str

    @property
    def n_groups(self) -> int:
        return len(self.matrices)


def rescale_to_correlation(matrix: np.ndarray) -> np.ndarray:
    """D^{-1/2} M D^{-1/2}: unit diagonal, symmetry preserved."""
    matrix = np.asarray(matrix, dtype=float)
    d = np.diag(matrix)
    if np.any(d <= 0):
        raise NumericsError("rescale_to_correlation: nonpositive diagonal entry")
    inv_sd = 1.0 / np.sqrt(d)
    out = matrix * np.outer(inv_sd, inv_sd)
    np.fill_diagonal(out, 1.0)
    return 0.5 * (out + out.T)


def _repair_psd(matrix: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    """Clip negative eigenvalues introduced by rounding."""
    sym = 0.5 * (matrix + matrix.T)
    eigval, eigvec = np.linalg.eigh(sym)
    if eigval[0] >= floor:
        return sym
    eigval = np.maximum(eigval, floor)
    return (eigvec * eigval) @ eigvec.T


def _pinned_correlation(lower: np.ndarray) -> np.ndarray:
    """Second-moment matrix of fully pinned latent data (no sampling)."""
    n = lower.shape[0]
    return (lower.T @ lower) / n


def _finalize(raw: np.ndarray) -> np.ndarray:
    return rescale_to_correlation(_repair_psd(raw))


def _check_dims(trunc: TruncationSet, sigma_set) -> None:
    if len(sigma_set) != trunc.n_groups:
        raise NumericsError("sigma_set / truncation group count mismatch")
    for sig, lo in zip(sigma_set, trunc.lower):
        if np.asarray(sig).shape != (lo.shape[1], lo.shape[1]):
            raise NumericsError("sigma dimension does not match data")


def estep_gibbs(
    trunc: TruncationSet,
    sigma_set,
    n_samples: int = 1000,
    burn_in: int = 100,
    seed: int = 0,
) -> CorrelationSet:
    """Monte-Carlo estimate of the conditional correlation matrices.

    Each observation's latent row is sampled from the truncated normal with
    that row's bounds; second moments are averaged over sweeps and
    observations, then rescaled to a correlation matrix.
    """
    _check_dims(trunc, sigma_set)
    matrices = []
    n_obs = []
    seeds = np.random.SeedSequence(seed).spawn(trunc.n_groups)
    for k in range(trunc.n_groups):
        lower, upper = trunc.lower[k], trunc.upper[k]
        n_k = lower.shape[0]
        n_obs.append(n_k)
        if np.all(lower == upper):
            raw = _pinned_correlation(lower)
        else:
            rng = np.random.default_rng(seeds[k])
            accum = gibbs_second_moment(
                np.asarray(sigma_set[k], dtype=float),
                lower,
                upper,
                n_samples=n_samples,
                burn_in=burn_in,
                rng=rng,
            )
            raw = accum / (n_k * n_samples)
        matrices.append(_finalize(raw))
    return CorrelationSet(tuple(matrices), tuple(n_obs), method="gibbs")


def estep_approx(trunc: TruncationSet, sigma_set) -> CorrelationSet:
    """Mean-field approximation of the conditional correlation matrices.

    Per-cell first/second moments start from the univariate truncated
    standard normal on the cell's interval, then one sweep updates them from
    each coordinate's conditional normal given the others' current moments;
    cross moments are products of first moments.
    """
    _check_dims(trunc, sigma_set)
    matrices = []
    n_obs = []
    for k in range(trunc.n_groups):
        lower, upper = trunc.lower[k], trunc.upper[k]
        n_k, p = lower.shape
        n_obs.append(n_k)
        if np.all(lower == upper):
            matrices.append(_finalize(_pinned_correlation(lower)))
            continue

        pinned = lower == upper
        m1 = np.where(pinned, lower, 0.0)
        m2 = np.where(pinned, lower**2, 1.0)
        free = ~pinned
        if np.any(free):
            init1, init2 = tn_moments_arrays(0.0, 1.0, lower[free], upper[free])
            m1[free], m2[free] = init1, init2

        sigma = np.asarray(sigma_set[k], dtype=float)
        B, cond_var = _conditional_coefficients(sigma)
        cond_sd = np.sqrt(np.maximum(cond_var, 1e-12))
        for j in range(p):
            freej = free[:, j]
            if not np.any(freej):
                continue
            w = B[:, j]
            mu = m1 @ w  # conditional mean per observation
            # E(mu^2) under the mean-field factorization: cross terms are
            # products of first moments, diagonal keeps the second moments.
            var_term = (m2 - m1**2) @ w**2 - (m2[:, j] - m1[:, j] ** 2) * w[j] ** 2
            mu2 = mu**2 + var_term
            sd = cond_sd[j]
            alpha = np.where(np.isinf(lower[:, j]), -np.inf, (lower[:, j] - mu) / sd)
            beta = np.where(np.isinf(upper[:, j]), np.inf, (upper[:, j] - mu) / sd)
            # Guard against rounding collapse of very narrow shifted intervals.
            beta = np.where(beta <= alpha, alpha + 1e-10, beta)
            r, q = truncated_standard_ratios(alpha[freej], beta[freej])
            m2[freej, j] = (
                mu2[freej] + sd**2 + 2.0 * r * mu[freej] * sd + sd**2 * q
            )
            m1[freej, j] = mu[freej] + sd * r
        raw = (m1.T @ m1) / n_k
        np.fill_diagonal(raw, m2.mean(axis=0))
        matrices.append(_finalize(raw))
    return CorrelationSet(tuple(matrices), tuple(n_obs), method="approx")
