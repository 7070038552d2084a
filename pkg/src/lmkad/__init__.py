"""One-class SVM anomaly detection with fixed and localized multiple kernels."""

from .dataset import (
    Dataset,
    FoldPlan,
    Normalizer,
    apply_normalizer,
    fit_normalizer,
    load_csv,
    plan_folds,
    split_for_occ,
)
from .kernels import (
    KernelSpec,
    format_kernel_spec,
    gaussian_bandwidth,
    gram,
    kernel_eval,
    parse_kernel_spec,
)
from .gating import (
    GateGradient,
    GatingParams,
    gate_eval,
    gate_eval_batch,
    gate_gradient,
    init_gating,
)
from .solver import DualProblem, DualSolution, compute_rho, kkt_violation, solve_dual
from .models import (
    KERNEL_PRESETS,
    LmkadConfig,
    LmkadModel,
    MkadModel,
    OcsvmModel,
    composite_gram_fixed,
    composite_gram_localized,
    decision_value,
    decision_values,
    load_model,
    predict,
    predict_batch,
    resolve_kernels,
    save_model,
    train_lmkad,
    train_mkad,
    train_ocsvm,
)
from .evaluation import (
    ClassifierConfig,
    ConfusionCounts,
    CvResult,
    FriedmanReport,
    cross_validate,
    friedman_statistics,
    friedman_test,
    gmean,
    mgmean,
    pmg,
    sv_fraction,
)

__version__ = "0.1.0"
