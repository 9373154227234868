"""Joint sparse Gaussian copula graphical models for mixed-type, multi-group data."""

from .data import (
    DataError,
    MixedDataset,
    VariableKind,
    infer_variable_kinds,
    load_dataset,
    load_schema,
    save_dataset,
    save_schema,
)
from .em import (
    EdgeGraph,
    EmOptions,
    FitResult,
    StabilityReport,
    aic,
    bootstrap_stability,
    ebic,
    em_fit,
    grid_select,
    neighborhood_subgraph,
    partial_correlations,
)
from .estep import CorrelationSet, estep_approx, estep_gibbs, rescale_to_correlation
from .fgl import FglOptions, PrecisionSet, fgl_solve, fused_l1_prox, glasso_single
from .marginals import (
    MarginalTable,
    TruncationSet,
    empirical_cdf,
    estimate_marginals,
    truncation_intervals,
)
from .metrics import (
    MetricError,
    RocCurve,
    auc,
    entropy_loss,
    fpr_tpr,
    frobenius_loss,
    roc_sweep,
)
from .simgen import (
    MarginalSpec,
    NetworkSpec,
    NetworkTruth,
    SimulationError,
    generate_truth,
    sample_mixed_data,
)
from .truncnorm import (
    NumericsError,
    TNParams,
    sample_truncnorm,
    tmvn_gibbs,
    tn_moments,
)

__version__ = "0.1.0"
