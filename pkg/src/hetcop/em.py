"""EM driver, penalty-grid selection, graph extraction, bootstrap stability."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .data import DataError, MixedDataset
from .estep import CorrelationSet, estep_approx, estep_gibbs, rescale_to_correlation
from .fgl import FglOptions, PrecisionSet, fgl_solve
from .marginals import estimate_marginals, truncation_intervals
from .truncnorm import NumericsError


@dataclass(frozen=True)
class EmOptions:
    max_iter: int = 50
    tol: float = 1e-4
    n_samples: int = 1000
    burn_in: int = 100
    seed: int = 0
    scale_lambda_by_n: bool = True
    open_tails: bool = False
    fgl: FglOptions = field(default_factory=FglOptions)


@dataclass(frozen=True)
class FitResult:
    theta_set: PrecisionSet
    corr_at_convergence: CorrelationSet
    lambda1: float
    lambda2: float
    method: str
    trace: tuple[float, ...]
    converged: bool

    @property
    def group_sizes(self) -> tuple[int, ...]:
        return self.corr_at_convergence.n_obs


@dataclass(frozen=True)
class EdgeGraph:
    """Per-group weighted edge lists of partial correlations."""

    variables: tuple[str, ...]
    group_labels: tuple[str, ...]
    edges: tuple[dict, ...]  # per group: {(i, j): pcor} with i < j

    def neighbors(self, group: int, vertex: int) -> set[int]:
        out = set()
        for i, j in self.edges[group]:
            if i == vertex:
                out.add(j)
            elif j == vertex:
                out.add(i)
        return out


@dataclass(frozen=True)
class StabilityReport:
    n_replicates: int
    n_failed: int
    acceptance_ratio: float
    group_labels: tuple[str, ...]
    frequencies: tuple[dict, ...]  # per group: {(i, j): occurrence fraction}
    reference_edges: tuple[tuple, ...]  # per group: sorted edge tuples
    discovery_rate: float
    discovery_rate_per_group: tuple[float, ...]


def _lambda_scale(dataset: MixedDataset, opts: EmOptions) -> float:
    if not opts.scale_lambda_by_n:
        return 1.0
    return float(np.mean(dataset.group_sizes))


def em_fit(
    dataset: MixedDataset,
    lambda1: float,
    lambda2: float,
    method: str = "approx",
    opts: EmOptions | None = None,
) -> FitResult:
    """Alternate the latent-moment E-step with the fused graphical lasso.

    Iteration 1 uses identity latent correlations; afterwards the E-step
    receives the rescaled inverse of the current precision estimate.  Stops
    on relative Frobenius change of the precision matrices.
    """
    if method not in ("gibbs", "approx"):
        raise ValueError(f"unknown E-step method {method!r}")
    if lambda1 < 0 or lambda2 < 0:
        raise ValueError("penalties must be nonnegative")
    opts = opts or EmOptions()
    trunc = truncation_intervals(
        dataset, estimate_marginals(dataset), open_tails=opts.open_tails
    )
    p = dataset.n_variables
    sigma_set = [np.eye(p) for _ in dataset.groups]
    scale = _lambda_scale(dataset, opts)
    lam1_eff, lam2_eff = lambda1 * scale, lambda2 * scale

    iter_seeds = np.random.SeedSequence(opts.seed).spawn(opts.max_iter)
    prev = [np.eye(p) for _ in dataset.groups]
    trace: list[float] = []
    theta_set = None
    corr = None
    converged = False
    for m in range(opts.max_iter):
        if method == "gibbs":
            corr = estep_gibbs(
                trunc,
                sigma_set,
                n_samples=opts.n_samples,
                burn_in=opts.burn_in,
                seed=int(iter_seeds[m].generate_state(1)[0]),
            )
        else:
            corr = estep_approx(trunc, sigma_set)
        theta_set = fgl_solve(corr, lam1_eff, lam2_eff, opts.fgl)
        change = max(
            np.linalg.norm(t_new - t_old) / max(np.linalg.norm(t_old), 1e-12)
            for t_new, t_old in zip(theta_set.matrices, prev)
        )
        trace.append(float(change))
        if change < opts.tol:
            converged = True
            break
        prev = theta_set.matrices
        sigma_set = [
            rescale_to_correlation(np.linalg.inv(t)) for t in theta_set.matrices
        ]
    theta_set = replace(theta_set, lambda1=float(lambda1), lambda2=float(lambda2))
    return FitResult(
        theta_set=theta_set,
        corr_at_convergence=corr,
        lambda1=float(lambda1),
        lambda2=float(lambda2),
        method=method,
        trace=tuple(trace),
        converged=converged,
    )


def _likelihood_terms(fit: FitResult) -> float:
    total = 0.0
    for theta, S, n_k in zip(
        fit.theta_set.matrices, fit.corr_at_convergence.matrices, fit.group_sizes
    ):
        sign, logdet = np.linalg.slogdet(theta)
        if sign <= 0:
            raise NumericsError("information criterion undefined: theta not PD")
        total += n_k * np.trace(S @ theta) - n_k * logdet
    return total


def aic(fit: FitResult) -> float:
    """n_k tr(S Theta) - n_k logdet Theta + 2 dof, summed over groups."""
    return float(_likelihood_terms(fit) + 2.0 * sum(fit.theta_set.dof))


def ebic(fit: FitResult, gamma: float = 0.5) -> float:
    """Extended BIC with the 4*gamma*log(p)*dof term; gamma=0 gives BIC."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    p = fit.theta_set.matrices[0].shape[0]
    penalty = 0.0
    for n_k, dof_k in zip(fit.group_sizes, fit.theta_set.dof):
        penalty += (np.log(n_k) + 4.0 * gamma * np.log(p)) * dof_k
    return float(_likelihood_terms(fit) + penalty)


def _score(fit: FitResult, criterion: str, gamma: float) -> float:
    if criterion == "aic":
        return aic(fit)
    if criterion == "ebic":
        return ebic(fit, gamma)
    raise ValueError(f"unknown criterion {criterion!r}")


def grid_select(
    dataset: MixedDataset,
    lambda1_grid,
    lambda2_grid,
    criterion: str = "ebic",
    gamma: float = 0.5,
    method: str = "approx",
    opts: EmOptions | None = None,
):
    """Fit every penalty pair; return (best fit, score table).

    Ties break toward larger lambda1, then larger lambda2 (sparser first).
    """
    opts = opts or EmOptions()
    lambda1_grid = list(lambda1_grid)
    lambda2_grid = list(lambda2_grid)
    if not lambda1_grid or not lambda2_grid:
        raise ValueError("penalty grids must be nonempty")

    n_points = len(lambda1_grid) * len(lambda2_grid)
    seeds = np.random.SeedSequence(opts.seed).spawn(n_points)
    table = []
    best = None
    best_key = None
    idx = 0
    for lam2 in lambda2_grid:
        for lam1 in lambda1_grid:
            point_opts = replace(opts, seed=int(seeds[idx].generate_state(1)[0]))
            idx += 1
            row = {"lambda1": float(lam1), "lambda2": float(lam2)}
            try:
                fit = em_fit(dataset, lam1, lam2, method=method, opts=point_opts)
                score = _score(fit, criterion, gamma)
            except (NumericsError, np.linalg.LinAlgError) as exc:
                row.update(score=float("nan"), converged=False, dof=None,
                           error=str(exc))
                table.append(row)
                continue
            row.update(
                score=float(score),
                converged=fit.converged,
                dof=int(sum(fit.theta_set.dof)),
            )
            table.append(row)
            key = (-score, lam1, lam2)
            if best is None or key > best_key:
                best, best_key = fit, key
    if best is None:
        raise NumericsError("all grid fits failed")
    return best, table


def partial_correlations(
    theta_set: PrecisionSet,
    variables=None,
    group_labels=None,
) -> EdgeGraph:
    """Edge graph with weights rho_ij = -theta_ij / sqrt(theta_ii theta_jj)."""
    p = theta_set.matrices[0].shape[0]
    variables = tuple(variables) if variables else tuple(f"V{j}" for j in range(p))
    group_labels = (
        tuple(group_labels)
        if group_labels
        else tuple(f"group{k}" for k in range(theta_set.n_groups))
    )
    edges = []
    for theta in theta_set.matrices:
        d = np.sqrt(np.diag(theta))
        group_edges = {}
        for i in range(p):
            for j in range(i + 1, p):
                if abs(theta[i, j]) > theta_set.zero_threshold:
                    group_edges[(i, j)] = float(-theta[i, j] / (d[i] * d[j]))
        edges.append(group_edges)
    return EdgeGraph(variables, group_labels, tuple(edges))


def neighborhood_subgraph(
    graph: EdgeGraph, target: str, union_over_groups: bool = True
) -> EdgeGraph:
    """Restrict each group's graph to the target variable and its neighbors.

    With ``union_over_groups`` the vertex set is the union of the target's
    neighborhoods across groups, applied to every group's subgraph.
    """
    if target not in graph.variables:
        raise DataError(f"unknown variable {target!r}")
    t = graph.variables.index(target)
    per_group_nbrs = [graph.neighbors(k, t) for k in range(len(graph.edges))]
    if union_over_groups:
        union = set().union(*per_group_nbrs) if per_group_nbrs else set()
        vertex_sets = [union | {t} for _ in per_group_nbrs]
    else:
        vertex_sets = [nbrs | {t} for nbrs in per_group_nbrs]

    new_edges = []
    for keep, group_edges in zip(vertex_sets, graph.edges):
        new_edges.append(
            {e: w for e, w in group_edges.items() if e[0] in keep and e[1] in keep}
        )
    return EdgeGraph(graph.variables, graph.group_labels, tuple(new_edges))


def _resample_dataset(dataset: MixedDataset, rng, literal_permutation: bool) -> MixedDataset:
    blocks = []
    for block in dataset.groups:
        n_k = block.shape[0]
        if literal_permutation:
            idx = rng.permutation(n_k)
        else:
            idx = rng.integers(0, n_k, size=n_k)
        blocks.append(block[idx])
    return MixedDataset(
        groups=tuple(blocks),
        kinds=dataset.kinds,
        group_labels=dataset.group_labels,
        variables=dataset.variables,
    )


def bootstrap_stability(
    dataset: MixedDataset,
    n_replicates: int = 200,
    lambda1_grid=(0.1, 0.2, 0.4),
    lambda2_grid=(0.0,),
    criterion: str = "ebic",
    gamma: float = 0.5,
    acceptance_ratio: float = 0.9,
    seed: int = 0,
    method: str = "approx",
    opts: EmOptions | None = None,
    literal_permutation: bool = False,
    reference_fit: FitResult | None = None,
) -> StabilityReport:
    """Edge-occurrence frequencies over resampled datasets.

    Each replicate resamples rows with replacement within each group (or
    permutes them under ``literal_permutation``), refits with grid_select,
    and contributes its selected edge sets.  Replicate failures are counted
    but do not abort the run.
    """
    if n_replicates < 1:
        raise ValueError("need at least one replicate")
    if not 0.0 <= acceptance_ratio <= 1.0:
        raise ValueError("acceptance_ratio must lie in [0, 1]")
    opts = opts or EmOptions()

    if reference_fit is None:
        reference_fit, _ = grid_select(
            dataset, lambda1_grid, lambda2_grid, criterion, gamma, method, opts
        )
    ref_graph = partial_correlations(
        reference_fit.theta_set, dataset.variables, dataset.group_labels
    )
    ref_edges = tuple(tuple(sorted(g)) for g in ref_graph.edges)

    K = dataset.n_groups
    counts: list[dict] = [{} for _ in range(K)]
    seeds = np.random.SeedSequence(seed).spawn(n_replicates)
    n_failed = 0
    for b in range(n_replicates):
        rng = np.random.default_rng(seeds[b])
        resampled = _resample_dataset(dataset, rng, literal_permutation)
        boot_opts = replace(opts, seed=int(seeds[b].generate_state(1)[0]))
        try:
            fit, _ = grid_select(
                resampled, lambda1_grid, lambda2_grid, criterion, gamma,
                method, boot_opts,
            )
        except (NumericsError, DataError, np.linalg.LinAlgError):
            n_failed += 1
            continue
        graph = partial_correlations(
            fit.theta_set, dataset.variables, dataset.group_labels
        )
        for k in range(K):
            for edge in graph.edges[k]:
                counts[k][edge] = counts[k].get(edge, 0) + 1

    n_ok = n_replicates - n_failed
    if n_ok == 0:
        raise NumericsError("every bootstrap replicate failed")
    frequencies = tuple(
        {edge: c / n_ok for edge, c in sorted(group.items())} for group in counts
    )

    per_group_rates = []
    found = 0
    total = 0
    for k in range(K):
        edges = ref_edges[k]
        if edges:
            hits = sum(
                1 for e in edges if frequencies[k].get(e, 0.0) >= acceptance_ratio
            )
            per_group_rates.append(hits / len(edges))
            found += hits
            total += len(edges)
        else:
            per_group_rates.append(1.0)
    overall = found / total if total else 1.0
    return StabilityReport(
        n_replicates=n_replicates,
        n_failed=n_failed,
        acceptance_ratio=acceptance_ratio,
        group_labels=dataset.group_labels,
        frequencies=frequencies,
        reference_edges=ref_edges,
        discovery_rate=float(overall),
        discovery_rate_per_group=tuple(per_group_rates),
    )
