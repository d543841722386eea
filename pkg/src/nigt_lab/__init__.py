"""Normalized stochastic optimization with momentum, gradient transport, and
self-tuning step sizes, plus synthetic problems with certified constants and
a seeded harness that verifies every guarantee at desk scale."""

from .core import (
    NORM_FLOOR,
    InvariantEvent,
    RngStream,
    StepLog,
    TrajectoryRecord,
    axpy,
    gaussian_noise,
    normalize,
    pow_sevenths,
)
from .harness import (
    OPTIMIZER_IDS,
    BoundReport,
    BoundRow,
    DescentAudit,
    MomentCheckpoint,
    MomentReport,
    RunConfig,
    SweepReport,
    SweepRow,
    bound_acceptance,
    descent_check,
    grid_sweep,
    igt_moment_check,
    rate_diagnostic,
    run,
    run_single,
    taylor_remainder_check,
    taylor_threshold,
)
from .optimizers import (
    AdaptiveState,
    LayerPartition,
    NigtState,
    NsgdmState,
    Schedule,
    adaptive_init,
    adaptive_step,
    apply_schedule,
    full_partition,
    heavy_ball_step,
    igt_extrapolate,
    layerwise_init,
    layerwise_step,
    nigt_init,
    nigt_step,
    nsgdm_step,
    sgd_step,
)
from .problems import (
    CertReport,
    OracleResponse,
    StochasticProblem,
    certify_constants,
    fd_slack,
    make_noisy_quadratic,
    make_sign_noise,
    make_streaming_least_squares,
    make_trig_bowl,
    taylor_remainder,
    with_constants,
)
from .tuning import (
    TunedParams,
    manual_params,
    nigt_bound,
    nigt_params,
    nsgdm_bound,
    nsgdm_params,
)

__version__ = "0.1.0"
