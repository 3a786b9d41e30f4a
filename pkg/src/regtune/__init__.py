"""regtune: regularization tuning across problem instances.

Exact piecewise loss structure for LASSO/ElasticNet in lambda1 (solution-path
homotopy), the spectral rational form of the ridge loss in lambda2, empirical
risk minimization over instance collections, and continuous exponential
weights for online tuning with regret and dispersion diagnostics.
"""

from .errors import (
    DimensionMismatch,
    DomainMismatch,
    GeneralPositionViolated,
    InvalidConfig,
    NoConvergence,
    NotSPD,
    NotSymmetric,
    OutOfRange,
    ParseError,
    PathBudgetExceeded,
    RegtuneError,
    TooFewRows,
)
from .instances import (
    Dataset,
    GeneratorConfig,
    ProblemInstance,
    gen_synthetic,
    load_instance,
    loocv_draw,
    mccv_draw,
    save_instance,
)
from .linalg import (
    RationalFormReport,
    SpectralDecomp,
    gram_shift_inverse,
    rational_form_report,
    spd_solve,
    sym_eig,
)
from .solvers import (
    Coefs,
    ENParams,
    KKTReport,
    SignedSupport,
    augment,
    en_fit_cd,
    en_fit_support,
    en_objective,
    kkt_check,
    ridge_fit,
    val_loss,
)
from .paths import (
    PathSegment,
    RegPath,
    en_path,
    lambda1_max,
    lars_path,
    path_eval,
    piece_stats,
)
from .piecewise import (
    PiecewiseQuadratic,
    RidgeLossEvaluator,
    SliceGrid2D,
    TuningResult,
    build_slice,
    en_surface,
    erm_tune,
    merge_curves,
    minimize_pw,
    penalize,
    ridge_loss_evaluator,
    ridge_minimize,
    sum_curves,
    val_loss_curve,
)
from .online import (
    OnlineState,
    RegretReport,
    SamplePoint,
    default_zeta,
    dispersion_probe,
    ew_init,
    ew_sample,
    ew_update,
    run_online,
    smooth_stream,
)
from .classify import (
    BreakpointSet,
    classify_online,
    classify_tune,
    lasso_breakpoints,
    ridge_breakpoints,
    threshold_predict,
    zero_one_loss,
)

__version__ = "0.1.0"
