"""Simulation and quadrature toolkit for the fluctuation limit of fBm
intersection local time functionals."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    EmbeddingError,
    FbmCltError,
    MembershipError,
    QuadratureError,
    RegimeError,
    ResolutionError,
    UnsupportedTransformError,
)
from .gaussian_core import (  # noqa: E402
    FbmPathPair,
    ModelParams,
    TimeGrid,
    fbm_covariance,
    lnd_diagnostic,
    sample_fbm,
    sample_path_pair,
)
from .testfuncs import (  # noqa: E402
    TestFunction,
    beta_norm_direct,
    beta_norm_fourier,
    make_test_function,
)
from .constants import (  # noqa: E402
    QuadratureSpec,
    alpha_moment,
    compute_D,
    verify_lemma_a1,
    verify_lemma_a2,
)
from .functionals import (  # noqa: E402
    estimate_local_time,
    evaluate_F,
    evaluate_F_unscaled,
    lln_functional,
)
from .montecarlo import (  # noqa: E402
    ExperimentConfig,
    MomentReport,
    run_clt_experiment,
    sample_limit_law,
    two_sample_compare,
)
