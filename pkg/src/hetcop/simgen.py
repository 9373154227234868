"""Ground-truth network generation and mixed-type data simulation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr
from scipy.stats import poisson

from .data import MixedDataset, VariableKind


class SimulationError(ValueError):
    """Raised on invalid simulation specs or irrecoverable generation failures."""


@dataclass(frozen=True)
class NetworkSpec:
    kind: str  # cluster | scalefree | random
    p: int
    n_groups: int
    rho: float = 0.25  # dissimilarity: fraction of extra edges per group
    edge_prob: float = 0.05  # random kind only
    n_clusters: int = 3  # cluster kind only
    epsilon: float = 0.1  # PD slack added to |lambda_min|
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("cluster", "scalefree", "random"):
            raise SimulationError(f"unknown network kind {self.kind!r}")
        if self.p < 2 or self.n_groups < 1:
            raise SimulationError("need p >= 2 and at least one group")
        if not 0.0 <= self.rho <= 1.0:
            raise SimulationError("rho must lie in [0, 1]")
        if not 0.0 < self.edge_prob < 1.0:
            raise SimulationError("edge_prob must lie in (0, 1)")
        if self.epsilon <= 0:
            raise SimulationError("epsilon must be positive")


@dataclass(frozen=True)
class MarginalSpec:
    """Column-type proportions and marginal parameters for observed data."""

    prop_binary: float = 0.1
    prop_ordinal: float = 0.5
    prop_poisson: float = 0.2
    prop_gaussian: float = 0.2
    binomial_prob: float = 0.5
    poisson_rate: float = 10.0
    ordinal_levels: int = 6

    def __post_init__(self):
        props = (
            self.prop_binary,
            self.prop_ordinal,
            self.prop_poisson,
            self.prop_gaussian,
        )
        if any(g < 0 for g in props) or abs(sum(props) - 1.0) > 1e-9:
            raise SimulationError("proportions must be nonnegative and sum to 1")
        if self.ordinal_levels < 2:
            raise SimulationError("ordinal_levels must be >= 2")


@dataclass(frozen=True)
class NetworkTruth:
    shared_precision: np.ndarray
    precisions: tuple[np.ndarray, ...]  # final per-group precision matrices
    correlations: tuple[np.ndarray, ...]  # their inverses, unit diagonal
    edge_sets: tuple[frozenset, ...]  # per group: {(i, j), i < j}
    shared_edges: frozenset

    @property
    def n_groups(self) -> int:
        return len(self.precisions)

    @property
    def p(self) -> int:
        return self.shared_precision.shape[0]


def _random_value(rng, size=None):
    """Uniform on [-1, -0.5] U [0.5, 1]."""
    mag = rng.uniform(0.5, 1.0, size=size)
    sign = np.where(rng.random(size=size) < 0.5, -1.0, 1.0)
    return sign * mag


def _random_edges(rng, p, edge_prob):
    edges = []
    for i in range(p):
        for j in range(i + 1, p):
            if rng.random() < edge_prob:
                edges.append((i, j))
    return edges


def _cluster_edges(rng, p, n_clusters, within=0.3, between=0.01):
    membership = np.array_split(np.arange(p), n_clusters)
    cluster_of = np.empty(p, dtype=int)
    for c, idx in enumerate(membership):
        cluster_of[idx] = c
    edges = []
    for i in range(p):
        for j in range(i + 1, p):
            prob = within if cluster_of[i] == cluster_of[j] else between
            if rng.random() < prob:
                edges.append((i, j))
    return edges


def _scalefree_edges(rng, p):
    """Preferential attachment, one edge per arriving node."""
    edges = [(0, 1)]
    degree = np.zeros(p)
    degree[0] = degree[1] = 1
    for new in range(2, p):
        probs = degree[:new] / degree[:new].sum()
        target = int(rng.choice(new, p=probs))
        edges.append((min(new, target), max(new, target)))
        degree[new] += 1
        degree[target] += 1
    return edges


def generate_truth(spec: NetworkSpec) -> NetworkTruth:
    """Build the shared graph and per-group perturbed precision matrices.

    Shared edges get symmetric values on [-1,-0.5] U [0.5,1]; each group
    additionally fills floor(rho * M) zero cells, the diagonal is raised to
    |lambda_min| + epsilon, and the matrix is passed through the
    covariance -> correlation -> precision normalization.
    """
    rng = np.random.default_rng(spec.seed)
    p = spec.p
    if spec.kind == "random":
        edges = _random_edges(rng, p, spec.edge_prob)
    elif spec.kind == "cluster":
        edges = _cluster_edges(rng, p, spec.n_clusters)
    else:
        edges = _scalefree_edges(rng, p)

    shared = np.zeros((p, p))
    for i, j in edges:
        value = _random_value(rng)
        shared[i, j] = shared[j, i] = value
    shared_edges = frozenset(edges)
    M = len(edges)

    zero_cells = [
        (i, j)
        for i in range(p)
        for j in range(i + 1, p)
        if (i, j) not in shared_edges
    ]
    n_extra = int(np.floor(spec.rho * M))

    precisions = []
    correlations = []
    edge_sets = []
    for _ in range(spec.n_groups):
        theta = shared.copy()
        if n_extra > 0:
            if n_extra > len(zero_cells):
                raise SimulationError("not enough zero cells for the perturbation")
            chosen = rng.choice(len(zero_cells), size=n_extra, replace=False)
            for c in chosen:
                i, j = zero_cells[c]
                value = _random_value(rng)
                theta[i, j] = theta[j, i] = value
        np.fill_diagonal(theta, 0.0)

        eps = spec.epsilon
        for _attempt in range(5):
            lam_min = np.linalg.eigvalsh(theta)[0]
            np.fill_diagonal(theta, abs(lam_min) + eps)
            try:
                cov = np.linalg.inv(theta)
                d = np.sqrt(np.diag(cov))
                corr = cov / np.outer(d, d)
                np.fill_diagonal(corr, 1.0)
                final = np.linalg.inv(corr)
                np.linalg.cholesky(corr)
                break
            except np.linalg.LinAlgError:
                np.fill_diagonal(theta, 0.0)
                eps *= 2.0
        else:
            raise SimulationError("could not build a positive definite precision")

        final = 0.5 * (final + final.T)
        corr = 0.5 * (corr + corr.T)
        precisions.append(final)
        correlations.append(corr)
        support = frozenset(
            (i, j)
            for i in range(p)
            for j in range(i + 1, p)
            if theta[i, j] != 0.0
        )
        edge_sets.append(support)
    return NetworkTruth(
        shared_precision=shared,
        precisions=tuple(precisions),
        correlations=tuple(correlations),
        edge_sets=tuple(edge_sets),
        shared_edges=shared_edges,
    )


def assign_column_kinds(p: int, marg: MarginalSpec, rng) -> list[VariableKind]:
    """Floor-allocation split of the p columns into marginal families."""
    n_b = int(np.floor(marg.prop_binary * p))
    n_o = int(np.floor(marg.prop_ordinal * p))
    n_p = int(np.floor(marg.prop_poisson * p))
    order = rng.permutation(p)
    kinds: list[VariableKind | None] = [None] * p
    cursor = 0
    for _ in range(n_b):
        kinds[order[cursor]] = VariableKind("binary")
        cursor += 1
    for _ in range(n_o):
        kinds[order[cursor]] = VariableKind("ordinal", levels=marg.ordinal_levels)
        cursor += 1
    for _ in range(n_p):
        kinds[order[cursor]] = VariableKind("count")
        cursor += 1
    for idx in order[cursor:]:
        kinds[idx] = VariableKind("continuous")
    return kinds


def sample_mixed_data(
    truth: NetworkTruth,
    n_per_group,
    marg: MarginalSpec | None = None,
    seed: int = 0,
) -> MixedDataset:
    """Draw latent Gaussian rows per group and push them through the
    marginal quantile transforms."""
    marg = marg or MarginalSpec()
    n_per_group = tuple(int(n) for n in n_per_group)
    if len(n_per_group) != truth.n_groups:
        raise SimulationError("n_per_group length must match the group count")
    if any(n < 1 for n in n_per_group):
        raise SimulationError("each group needs at least one observation")

    rng = np.random.default_rng(seed)
    kinds = assign_column_kinds(truth.p, marg, rng)

    blocks = []
    for k, n_k in enumerate(n_per_group):
        chol = np.linalg.cholesky(truth.correlations[k])
        z = rng.standard_normal((n_k, truth.p)) @ chol.T
        x = np.empty_like(z)
        for j, kind in enumerate(kinds):
            if kind.tag == "continuous":
                x[:, j] = z[:, j]
                continue
            u = ndtr(z[:, j])
            if kind.tag == "binary":
                x[:, j] = (u > marg.binomial_prob).astype(float)
            elif kind.tag == "ordinal":
                x[:, j] = np.minimum(
                    np.floor(u * kind.levels), kind.levels - 1
                )
            else:  # Poisson counts
                x[:, j] = poisson.ppf(u, marg.poisson_rate)
        blocks.append(x)
    return MixedDataset(
        groups=tuple(blocks),
        kinds=tuple(kinds),
        group_labels=tuple(f"g{k + 1}" for k in range(truth.n_groups)),
    )
