"""Causal structure discovery over groups of variables under additive noise.

The package learns a causal order over vector-valued groups by iterative
sink detection (regress each group on the rest, score residual dependence
with HSIC) and then prunes the implied full graph with a multi-response
group sparse additive model.  Ships with a synthetic generator, structural
metrics, and a command line interface.
"""

from .data import (
    DatasetFormatError,
    GroupSpec,
    GroupedDataset,
    load_dataset,
    save_dataset,
    standardize,
    standardize_matrix,
)
from .discovery import (
    DiscoveryConfig,
    DiscoveryResult,
    IterationScores,
    MurgsSelection,
    discover,
    learn_order,
    murgs_parent_selection,
    prune_greedy_ind,
    prune_murgs,
    random_order_baseline,
)
from .graphs import (
    CausalOrder,
    GroupDag,
    d_separated,
    graph_from_dict,
    graph_to_dict,
    is_valid_order,
    load_graph,
    save_graph,
    super_dag_from_order,
)
from .hsic import (
    HsicResult,
    hsic_gamma_pvalue,
    hsic_statistic,
    median_heuristic_bandwidth,
    rbf_gram,
)
from .metrics import (
    MetricsReport,
    aaid,
    compute_metrics,
    oaid,
    precision_recall_f1,
    shd,
    sid,
    valid_adjustment,
)
from .mlp import (
    FittedRegressor,
    RegressorConfig,
    TrainingError,
    fit,
    predict,
    residuals,
)
from .murgs import (
    BlockUpdate,
    MurgsFit,
    SmootherMatrix,
    active_groups,
    backfit,
    gcv,
    lambda_max,
    plugin_bandwidth,
    prepare_smoothers,
    select_lambda,
    smoother_matrix,
    soft_threshold_group,
)
from .synth import (
    GanmSpec,
    GenerationError,
    GroundTruth,
    MechanismRecord,
    NoiseRecord,
    clip_to_correlation,
    generate,
    lognormal_noise_parameters,
    sample_er_dag,
    sample_gp_mechanism,
    sample_lognormal_noise,
)

__version__ = "0.1.0"

__all__ = [
    # graphs
    "CausalOrder",
    "GroupDag",
    "d_separated",
    "graph_from_dict",
    "graph_to_dict",
    "is_valid_order",
    "load_graph",
    "save_graph",
    "super_dag_from_order",
    # data
    "DatasetFormatError",
    "GroupSpec",
    "GroupedDataset",
    "load_dataset",
    "save_dataset",
    "standardize",
    "standardize_matrix",
    # regression
    "FittedRegressor",
    "RegressorConfig",
    "TrainingError",
    "fit",
    "predict",
    "residuals",
    # dependence testing
    "HsicResult",
    "hsic_gamma_pvalue",
    "hsic_statistic",
    "median_heuristic_bandwidth",
    "rbf_gram",
    # group sparse additive model
    "BlockUpdate",
    "MurgsFit",
    "SmootherMatrix",
    "active_groups",
    "backfit",
    "gcv",
    "lambda_max",
    "plugin_bandwidth",
    "prepare_smoothers",
    "select_lambda",
    "smoother_matrix",
    "soft_threshold_group",
    # synthetic data
    "GanmSpec",
    "GenerationError",
    "GroundTruth",
    "MechanismRecord",
    "NoiseRecord",
    "clip_to_correlation",
    "generate",
    "lognormal_noise_parameters",
    "sample_er_dag",
    "sample_gp_mechanism",
    "sample_lognormal_noise",
    # metrics
    "MetricsReport",
    "aaid",
    "compute_metrics",
    "oaid",
    "precision_recall_f1",
    "shd",
    "sid",
    "valid_adjustment",
    # discovery pipeline
    "DiscoveryConfig",
    "DiscoveryResult",
    "IterationScores",
    "MurgsSelection",
    "discover",
    "learn_order",
    "murgs_parent_selection",
    "prune_greedy_ind",
    "prune_murgs",
    "random_order_baseline",
    "__version__",
]
