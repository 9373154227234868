"""Empirical marginal CDFs and latent-scale truncation intervals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .data import DataError, MixedDataset


@dataclass(frozen=True)
class MarginalTable:
    """Step-function empirical CDFs, one per (group, variable).

    support[k][j] holds the sorted distinct observed values and cdf[k][j]
    the cumulative weights count(<= x) / (m + 1), m the non-missing count.
    The m+1 denominator keeps every value strictly inside (0, 1).
    """

    support: tuple[tuple[np.ndarray, ...], ...]
    cdf: tuple[tuple[np.ndarray, ...], ...]


@dataclass(frozen=True)
class TruncationSet:
    """Per-group latent truncation bounds on the standard-normal scale.

    lower[k] and upper[k] are (n_k, p) arrays; -inf/+inf are permitted.
    Continuous cells are pinned (lower == upper), missing cells are
    (-inf, +inf).
    """

    lower: tuple[np.ndarray, ...]
    upper: tuple[np.ndarray, ...]

    @property
    def n_groups(self) -> int:
        return len(self.lower)


def empirical_cdf(column, x) -> float:
    """F-hat(x) = count(values <= x) / (m + 1) over non-missing values."""
    values = np.asarray(column, dtype=float)
    values = values[~np.isnan(values)]
    if values.size == 0:
        raise DataError("empirical_cdf: all values missing")
    return float(np.count_nonzero(values <= x)) / (values.size + 1)


def estimate_marginals(dataset: MixedDataset) -> MarginalTable:
    """Build the per-group step-function CDF table for a dataset."""
    support, cdf = [], []
    for block in dataset.groups:
        g_sup, g_cdf = [], []
        for j in range(block.shape[1]):
            col = block[:, j]
            col = col[~np.isnan(col)]
            if col.size == 0:
                raise DataError(f"column {dataset.variables[j]!r}: all values missing in a group")
            vals, counts = np.unique(col, return_counts=True)
            g_sup.append(vals)
            g_cdf.append(np.cumsum(counts) / (col.size + 1))
        support.append(tuple(g_sup))
        cdf.append(tuple(g_cdf))
    return MarginalTable(support=tuple(support), cdf=tuple(cdf))


def truncation_intervals(
    dataset: MixedDataset,
    marginals: MarginalTable | None = None,
    open_tails: bool = False,
) -> TruncationSet:
    """Map each observed cell to its latent-scale interval.

    Discrete cell with value x: (Phi^-1(F(x-)), Phi^-1(F(x))), unbounded at
    the ends of the support (the top category stays finite unless
    ``open_tails``).  Continuous cells are pinned at Phi^-1(F(x)); missing
    cells get (-inf, +inf).
    """
    if marginals is None:
        marginals = estimate_marginals(dataset)
    lowers, uppers = [], []
    for k, block in enumerate(dataset.groups):
        n_k, p = block.shape
        lo = np.full((n_k, p), -np.inf)
        hi = np.full((n_k, p), np.inf)
        for j, kind in enumerate(dataset.kinds):
            sup = marginals.support[k][j]
            cdf = marginals.cdf[k][j]
            col = block[:, j]
            obs = ~np.isnan(col)
            if not np.any(obs):
                continue
            pos = np.searchsorted(sup, col[obs])
            quantiles = ndtri(cdf)
            if kind.is_discrete:
                cell_lo = np.where(pos > 0, quantiles[np.maximum(pos - 1, 0)], -np.inf)
                if open_tails:
                    cell_hi = np.where(pos < sup.size - 1, quantiles[pos], np.inf)
                else:
                    cell_hi = quantiles[pos]
                lo[obs, j] = cell_lo
                hi[obs, j] = cell_hi
            else:
                pinned = quantiles[pos]
                lo[obs, j] = pinned
                hi[obs, j] = pinned
        lowers.append(lo)
        uppers.append(hi)
    return TruncationSet(lower=tuple(lowers), upper=tuple(uppers))
