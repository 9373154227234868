"""Structure-recovery and estimation-accuracy metrics: ROC, AUC, FL, EL."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .em import EmOptions, em_fit
from .fgl import PrecisionSet
from .simgen import NetworkTruth
from .truncnorm import NumericsError


class MetricError(ValueError):
    """Raised when a metric is undefined for the given inputs."""


@dataclass(frozen=True)
class RocCurve:
    """(lambda1, fpr, tpr) points at fixed lambda2, ordered by lambda1."""

    method: str
    lambda2: float
    points: tuple[tuple[float, float, float], ...]
    replicate: int = 0
    failed_points: tuple[float, ...] = ()  # lambda1 values whose fit failed

    def __post_init__(self):
        for _, fpr, tpr in self.points:
            if not (0.0 <= fpr <= 1.0 and 0.0 <= tpr <= 1.0):
                raise MetricError("fpr/tpr must lie in [0, 1]")
        lams = [lam for lam, _, _ in self.points]
        if lams != sorted(lams):
            raise MetricError("points must be ordered by lambda1")


def _edge_support(theta: np.ndarray, threshold: float) -> np.ndarray:
    p = theta.shape[0]
    iu = np.triu_indices(p, k=1)
    return np.abs(theta[iu]) > threshold


def _true_support(truth: NetworkTruth, k: int) -> np.ndarray:
    p = truth.p
    iu = np.triu_indices(p, k=1)
    mask = np.zeros(len(iu[0]), dtype=bool)
    edge_index = {
        (i, j): idx for idx, (i, j) in enumerate(zip(iu[0], iu[1]))
    }
    for i, j in truth.edge_sets[k]:
        mask[edge_index[(i, j)]] = True
    return mask


def fpr_tpr(truth: NetworkTruth, est: PrecisionSet) -> tuple[float, float]:
    """Group-averaged false/true positive rates over the i < j supports."""
    if est.n_groups != truth.n_groups:
        raise MetricError("group count mismatch between truth and estimate")
    if est.matrices[0].shape[0] != truth.p:
        raise MetricError("dimension mismatch between truth and estimate")
    fprs, tprs = [], []
    for k in range(truth.n_groups):
        true_mask = _true_support(truth, k)
        est_mask = _edge_support(est.matrices[k], est.zero_threshold)
        n_edges = int(true_mask.sum())
        n_nonedges = int((~true_mask).sum())
        if n_edges == 0:
            raise MetricError(f"group {k} has no true edges; TPR undefined")
        if n_nonedges == 0:
            raise MetricError(f"group {k} has no true non-edges; FPR undefined")
        fprs.append((est_mask & ~true_mask).sum() / n_nonedges)
        tprs.append((est_mask & true_mask).sum() / n_edges)
    return float(np.mean(fprs)), float(np.mean(tprs))


def default_lambda1_grid():
    return np.round(np.arange(0.0, 1.0 + 1e-9, 0.05), 2)


def roc_sweep(
    dataset,
    truth: NetworkTruth,
    lambda1_grid=None,
    lambda2_values=(0.0, 0.1, 1.0),
    method: str = "approx",
    opts: EmOptions | None = None,
    replicate: int = 0,
) -> list[RocCurve]:
    """One ROC curve per lambda2: a full em_fit at every (lambda1, lambda2).

    Failed fits are recorded on the curve instead of aborting the sweep.
    """
    if lambda1_grid is None:
        lambda1_grid = default_lambda1_grid()
    opts = opts or EmOptions()
    curves = []
    for lam2 in lambda2_values:
        points = []
        failed = []
        for lam1 in lambda1_grid:
            try:
                fit = em_fit(dataset, float(lam1), float(lam2), method, opts)
                fpr, tpr = fpr_tpr(truth, fit.theta_set)
            except (NumericsError, np.linalg.LinAlgError):
                failed.append(float(lam1))
                continue
            points.append((float(lam1), fpr, tpr))
        curves.append(
            RocCurve(
                method=method,
                lambda2=float(lam2),
                points=tuple(points),
                replicate=replicate,
                failed_points=tuple(failed),
            )
        )
    return curves


def auc(curve: RocCurve) -> float:
    """Trapezoidal area with (0,0)/(1,1) anchors; duplicate fpr keeps max tpr."""
    pts = [(fpr, tpr) for _, fpr, tpr in curve.points]
    pts.extend([(0.0, 0.0), (1.0, 1.0)])
    collapsed: dict[float, float] = {}
    for fpr, tpr in pts:
        collapsed[fpr] = max(collapsed.get(fpr, 0.0), tpr)
    if len(collapsed) < 2:
        raise MetricError("need at least 2 distinct fpr values")
    xs = np.array(sorted(collapsed))
    ys = np.array([collapsed[x] for x in xs])
    return float(np.trapezoid(ys, xs))


def frobenius_loss(truth: NetworkTruth, est: PrecisionSet) -> float:
    """(1/K) sum_k ||Theta_k - hat Theta_k||_F^2 / ||Theta_k||_F^2."""
    if est.n_groups != truth.n_groups:
        raise MetricError("group count mismatch between truth and estimate")
    total = 0.0
    for theta, that in zip(truth.precisions, est.matrices):
        denom = np.linalg.norm(theta) ** 2
        if denom == 0:
            raise MetricError("true precision has zero norm")
        total += np.linalg.norm(theta - that) ** 2 / denom
    return float(total / truth.n_groups)


def entropy_loss(truth: NetworkTruth, est: PrecisionSet) -> float:
    """(1/K) sum_k [tr(Theta_k^{-1} hat) - logdet(Theta_k^{-1} hat) - p]."""
    if est.n_groups != truth.n_groups:
        raise MetricError("group count mismatch between truth and estimate")
    p = truth.p
    total = 0.0
    for theta, that in zip(truth.precisions, est.matrices):
        try:
            inv_theta = np.linalg.inv(theta)
        except np.linalg.LinAlgError as exc:
            raise MetricError("singular true precision matrix") from exc
        prod = inv_theta @ that
        sign, logdet = np.linalg.slogdet(prod)
        if sign <= 0:
            raise MetricError("entropy loss undefined: estimate not PD")
        total += np.trace(prod) - logdet - p
    return float(total / truth.n_groups)
