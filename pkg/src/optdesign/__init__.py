"""Large-scale continuous and exact D-optimal design.

Continuous designs (equivalently, minimum-volume enclosing ellipsoids)
are solved either by column generation around a certified interior-point
master solver or by away-step Frank-Wolfe, both with safe point
elimination; exact N-point designs follow by rounding plus exchange
local search with an a priori quality bound.
"""

from optdesign._kernels import BACKEND as KERNEL_BACKEND
from optdesign.colgen import (
    ColGenConfig,
    hp_constant,
    hp_filter,
    pricing,
    run_column_generation,
)
from optdesign.core import (
    DesignMatrix,
    DesignWeights,
    EllipsoidMatrix,
    ExactDesign,
    SolveReport,
    duality_gap_certificate,
    ellipsoid_from_weights,
    info_matrix,
    log_det_objective,
    mahalanobis,
    swap_update,
)
from optdesign.data import (
    avg_log_kurtosis,
    generate_mixture,
    load_dataset,
    save_dataset,
    sinh_arcsinh_transform,
)
from optdesign.exact import (
    BoundReport,
    LocalSearchConfig,
    LocalSearchResult,
    approx_bound,
    bound_report,
    brute_force_exact,
    local_search,
    round_to_exact,
    verify_lemma_tau,
)
from optdesign.frankwolfe import FwConfig, fw_hp_checkpoint, fw_solve, ky_init
from optdesign.pipeline import (
    DatasetSpec,
    RunResult,
    load_result,
    run_pipeline,
    save_result,
)
from optdesign.rmp import RmpConfig, RmpSolution, extract_support, solve_restricted

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "DesignMatrix",
    "DesignWeights",
    "EllipsoidMatrix",
    "ExactDesign",
    "SolveReport",
    "info_matrix",
    "log_det_objective",
    "ellipsoid_from_weights",
    "mahalanobis",
    "duality_gap_certificate",
    "swap_update",
    "RmpConfig",
    "RmpSolution",
    "solve_restricted",
    "extract_support",
    "ColGenConfig",
    "pricing",
    "hp_constant",
    "hp_filter",
    "run_column_generation",
    "FwConfig",
    "ky_init",
    "fw_solve",
    "fw_hp_checkpoint",
    "LocalSearchConfig",
    "LocalSearchResult",
    "BoundReport",
    "round_to_exact",
    "local_search",
    "approx_bound",
    "bound_report",
    "verify_lemma_tau",
    "brute_force_exact",
    "generate_mixture",
    "sinh_arcsinh_transform",
    "avg_log_kurtosis",
    "load_dataset",
    "save_dataset",
    "DatasetSpec",
    "RunResult",
    "run_pipeline",
    "save_result",
    "load_result",
    "__version__",
]
