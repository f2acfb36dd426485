"""Kernel ridge regression with random-feature preconditioned conjugate gradients."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .kernels import (  # noqa: E402
    Dataset,
    KernelSpec,
    gram_matrix,
    kernel_eval,
    statistical_dimension,
    theoretical_sketch_size,
)
from .precond import (  # noqa: E402
    Preconditioner,
    QualityReport,
    adaptive_build,
    build_preconditioner,
    quality_test,
)
from .sketches import ChainSpec, SketchChain, chain_apply  # noqa: E402
from .solver import (  # noqa: E402
    KrrModel,
    PcgReport,
    SolverConfig,
    energy_norm_error,
    pcg_solve,
    predict,
    rlsc_decode,
    rlsc_encode,
    train,
    train_random_features_baseline,
)
