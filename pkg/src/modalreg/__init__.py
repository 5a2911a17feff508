"""Modal linear regression: kernels, IRLS estimation, bandwidth asymptotics."""

from .asymptotics import (
    ConditionalDensityModel,
    OracleQuantities,
    amse,
    optimal_bandwidth,
    oracle_quantities,
)
from .errors import (
    AllStartsFailed,
    EmptySupport,
    ExperimentFailed,
    ModalRegError,
    NoConvergence,
    NotNegativeDefinite,
    NotQuadraticallyMinorizable,
    SingularSystem,
    ZeroBias,
)
from .estimator import (
    Dataset,
    FitConfig,
    FitResult,
    default_starts,
    fit,
    fit_multistart,
    irls_step,
    mem_step_gaussian,
    objective,
)
from .kernels import (
    KERNELS,
    KernelSpec,
    QMStatus,
    amse_criterion,
    get_kernel,
    kernel_constants,
    kernel_constants_numeric,
    kernel_eval,
    qm_weight,
)

__version__ = "0.1.0"
