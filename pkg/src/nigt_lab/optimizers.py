"""Step rules: normalized SGD with momentum, its gradient-transport variant,
the self-tuning variant, unnormalized baselines, learning-rate schedules, and
a per-layer wrapper.

All step functions are pure state transitions: state in, state out. The
normalized family moves exactly ``eta`` per step,

    m_t = beta * m_{t-1} + (1 - beta) * g_t
    w_{t+1} = w_t - eta_t * m_t / ||m_t||,

and when ``||m_t||`` falls at or below the norm floor the step is a recorded
no-move (the direction is undefined there; substituting a random one would
break replay determinism).

The gradient-transport variant samples the gradient at the extrapolated point

    x_t = w_t + (beta / (1 - beta)) * (w_t - w_{t-1})

instead of at w_t, which keeps the momentum average an unbiased estimate of
the current gradient whenever the Hessian is constant, and nearly unbiased
when the Hessian drifts slowly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import NORM_FLOOR, InvariantEvent, RngStream, as_vector, normalize, pow_sevenths
from .errors import (
    InvalidGBound,
    InvalidInput,
    NonFiniteGradient,
    NormalizationSingularity,
    PartitionMismatch,
)
from .problems import StochasticProblem

# Floor applied when a learning rate is scaled by a weight norm, so layers
# that start at zero still move.
WEIGHT_NORM_FLOOR = 1e-8

# Relative slack for the self-tuning invariant checks; the identities hold in
# exact arithmetic, so anything beyond a few ulps is a real violation.
_INV_REL_TOL = 1e-12


def _check_grad(grad: np.ndarray) -> np.ndarray:
    grad = as_vector(grad)
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradient("gradient sample contains NaN or Inf")
    return grad


def _check_step_args(eta: float, beta: float) -> None:
    if not (eta >= 0.0 and math.isfinite(eta)):
        raise InvalidInput(f"eta must be finite and >= 0, got {eta}")
    if not (0.0 <= beta < 1.0):
        raise InvalidInput(f"beta must lie in [0, 1), got {beta}")


def _normalized_move(w: np.ndarray, m: np.ndarray, eta: float, floor: float):
    """Move ``eta`` along m / ||m||; returns (new_w, moved)."""
    try:
        unit = normalize(m, floor)
    except NormalizationSingularity:
        return w, False
    return w - eta * unit, True


# -- normalized SGD with momentum -------------------------------------------


@dataclass(frozen=True)
class NsgdmState:
    w: np.ndarray
    m: np.ndarray
    t: int  # index of the next step
    no_move: bool = False


def nsgdm_step(s: NsgdmState, grad, eta: float, beta: float, floor: float = NORM_FLOOR) -> NsgdmState:
    """One momentum update followed by a unit-length move.

    The state at t = 1 must have been initialized with m equal to the first
    gradient sample; the runner realizes that by passing beta = 0 on the
    first call.
    """
    grad = _check_grad(grad)
    _check_step_args(eta, beta)
    m = beta * s.m + (1.0 - beta) * grad
    w, moved = _normalized_move(s.w, m, eta, floor)
    return NsgdmState(w=w, m=m, t=s.t + 1, no_move=not moved)


# -- gradient-transport variant ----------------------------------------------


@dataclass(frozen=True)
class NigtState:
    w: np.ndarray
    w_prev: np.ndarray
    m: np.ndarray
    t: int  # index of the next step
    no_move: bool = False


def igt_extrapolate(w, w_prev, beta: float) -> np.ndarray:
    """x = w + (beta / (1 - beta)) * (w - w_prev).

    With the schedule beta_t = t / (t + 1) the multiplier equals t, which is
    the classical transport point for constant-Hessian objectives.
    """
    if not (0.0 <= beta < 1.0):
        raise InvalidInput(f"beta must lie in [0, 1), got {beta}")
    w = as_vector(w)
    w_prev = as_vector(w_prev)
    return w + (beta / (1.0 - beta)) * (w - w_prev)


def nigt_init(w1, problem: StochasticProblem, rng: RngStream, eta: float, floor: float = NORM_FLOOR) -> NigtState:
    """Sample once at w1, set m to it, and take the first unit-length move."""
    _check_step_args(eta, 0.0)
    w1 = as_vector(w1)
    m = _check_grad(problem.sample_grad(w1, rng).grad)
    w, moved = _normalized_move(w1, m, eta, floor)
    return NigtState(w=w, w_prev=w1, m=m, t=2, no_move=not moved)


def nigt_step(
    s: NigtState,
    problem: StochasticProblem,
    rng: RngStream,
    eta: float,
    beta: float,
    floor: float = NORM_FLOOR,
) -> NigtState:
    """Extrapolate, sample there, update momentum, move one unit step."""
    _check_step_args(eta, beta)
    x = igt_extrapolate(s.w, s.w_prev, beta)
    g = _check_grad(problem.sample_grad(x, rng).grad)
    m = beta * s.m + (1.0 - beta) * g
    w, moved = _normalized_move(s.w, m, eta, floor)
    return NigtState(w=w, w_prev=s.w, m=m, t=s.t + 1, no_move=not moved)


# -- self-tuning variant -------------------------------------------------------


@dataclass(frozen=True)
class AdaptiveState:
    """State of the self-tuning normalized method.

    ``G`` accumulates squared paired-sample gradient differences plus a
    deterministic drift term; the step size and momentum weight are derived
    from it each step:

        eta_t   = C / (G_t^2 (t+1)^3)^{1/7}
        alpha_t = 1 / (t * eta_{t-1}^2 * G_{t-1})

    with C = sqrt(7 / (26 g_bound^{6/7})), D = C^{-14/3}, G_0 = D,
    G_1 = 3 g_bound^2 + D, and eta_0 = C / D^{2/7}. These choices make
    alpha_1 = 1 exactly and keep alpha_t <= 1 and eta_t non-increasing for
    every realization, provided g_bound truly dominates the sampled
    gradient norms.
    """

    w: np.ndarray
    w_prev: np.ndarray
    m: np.ndarray
    G: float  # accumulator G_t feeding eta_t of the upcoming step t
    G_prev: float  # G_{t-1}, feeding alpha_t
    eta_prev: float  # eta_{t-1}
    t: int  # upcoming step index
    C: float
    D: float
    g_bound: float
    alpha_prev: float = math.nan  # alpha used by the step that produced this state
    delta_prev: float = math.nan  # accumulator increment added by that step
    no_move: bool = False
    violations: tuple[InvariantEvent, ...] = ()


def adaptive_init(w1, g_bound: float) -> AdaptiveState:
    if not (g_bound > 0.0 and math.isfinite(g_bound)):
        raise InvalidGBound(f"g_bound must be finite and positive, got {g_bound}")
    w1 = as_vector(w1)
    C = math.sqrt(7.0 / (26.0 * pow_sevenths(g_bound, 6)))
    D = C ** (-14.0 / 3.0)
    return AdaptiveState(
        w=w1,
        w_prev=w1,
        m=np.zeros(w1.size),
        G=3.0 * g_bound**2 + D,
        G_prev=D,
        eta_prev=C / pow_sevenths(D, 2),
        t=1,
        C=C,
        D=D,
        g_bound=g_bound,
    )


def adaptive_step(
    s: AdaptiveState,
    problem: StochasticProblem,
    rng: RngStream,
    rng_paired: RngStream,
    floor: float = NORM_FLOOR,
) -> AdaptiveState:
    """One self-tuning step.

    Two independent gradient samples are drawn at the extrapolated point
    (from the two distinct streams); only the first feeds the momentum, and
    their squared difference feeds the accumulator. Invariant violations are
    recorded on the returned state rather than silently corrected.
    """
    t = s.t
    gb2 = s.g_bound * s.g_bound
    eta_t = s.C / pow_sevenths(s.G * s.G * float(t + 1) ** 3, 1)
    alpha_t = 1.0 / (t * s.eta_prev * s.eta_prev * s.G_prev)
    beta_t = 1.0 - alpha_t

    events = []
    if alpha_t > 1.0 + _INV_REL_TOL:
        events.append(InvariantEvent("alpha_above_one", t, alpha_t, 1.0))
    if eta_t > s.eta_prev * (1.0 + _INV_REL_TOL):
        events.append(InvariantEvent("eta_increased", t, eta_t, s.eta_prev))
    g_floor = gb2 * float(t) ** 0.25
    if s.G < g_floor * (1.0 - _INV_REL_TOL):
        events.append(InvariantEvent("g_below_floor", t, s.G, g_floor))

    # beta_t / (1 - beta_t) written as (1 - alpha_t) / alpha_t: exact, and it
    # keeps executing (rather than failing a domain check) when a corrupted
    # state pushes alpha_t outside (0, 1] -- the violation is recorded above.
    x = s.w + ((1.0 - alpha_t) / alpha_t) * (s.w - s.w_prev)
    g = _check_grad(problem.sample_grad(x, rng).grad)
    g_paired = _check_grad(problem.sample_grad(x, rng_paired).grad)
    m = beta_t * s.m + alpha_t * g

    drift = gb2 * (float(t + 1) ** 0.25 - float(t) ** 0.25)
    diff = g - g_paired
    delta = float(diff @ diff) + drift
    G_next = s.G + delta
    if G_next < s.G:
        events.append(InvariantEvent("g_decreased", t, G_next, s.G))
    delta_cap = 4.0 * gb2 + drift
    if delta > delta_cap * (1.0 + _INV_REL_TOL):
        events.append(InvariantEvent("g_increment_above_bound", t, delta, delta_cap))
    if delta < drift * (1.0 - _INV_REL_TOL):
        events.append(InvariantEvent("g_increment_below_drift", t, delta, drift))

    w, moved = _normalized_move(s.w, m, eta_t, floor)
    return AdaptiveState(
        w=w,
        w_prev=s.w,
        m=m,
        G=G_next,
        G_prev=s.G,
        eta_prev=eta_t,
        t=t + 1,
        C=s.C,
        D=s.D,
        g_bound=s.g_bound,
        alpha_prev=alpha_t,
        delta_prev=delta,
        no_move=not moved,
        violations=tuple(events),
    )


# -- unnormalized baselines ---------------------------------------------------


def sgd_step(s: NsgdmState, grad, eta: float) -> NsgdmState:
    """Plain stochastic gradient step, no normalization, no memory."""
    grad = _check_grad(grad)
    _check_step_args(eta, 0.0)
    return NsgdmState(w=s.w - eta * grad, m=grad, t=s.t + 1)


def heavy_ball_step(s: NsgdmState, grad, eta: float, beta: float) -> NsgdmState:
    """Exponential-average momentum without normalization."""
    grad = _check_grad(grad)
    _check_step_args(eta, beta)
    m = beta * s.m + (1.0 - beta) * grad
    return NsgdmState(w=s.w - eta * m, m=m, t=s.t + 1)


# -- learning-rate schedules ----------------------------------------------------

SCHEDULE_CONSTANT = "constant"
SCHEDULE_WARMUP_POLY = "warmup_poly_decay"


@dataclass(frozen=True)
class Schedule:
    kind: str = SCHEDULE_CONSTANT
    eta0: float | None = None  # optional base-rate override
    warmup_steps: int = 0
    power: int = 1
    weight_norm_scaling: bool = False

    def __post_init__(self):
        if self.kind not in (SCHEDULE_CONSTANT, SCHEDULE_WARMUP_POLY):
            raise InvalidInput(f"unknown schedule kind {self.kind!r}")
        if self.power not in (1, 2):
            raise InvalidInput(f"decay power must be 1 or 2, got {self.power}")
        if self.warmup_steps < 0:
            raise InvalidInput(f"warmup_steps must be >= 0, got {self.warmup_steps}")
        if self.eta0 is not None and self.eta0 <= 0.0:
            raise InvalidInput(f"eta0 must be positive, got {self.eta0}")


def apply_schedule(sch: Schedule, t: int, T: int, base_eta: float, w_layer_norm: float | None = None) -> float:
    """Learning rate for step t of T.

    Linear ramp over the warmup steps, then polynomial decay measured from
    the warmup boundary so the two phases agree there:

        t <= warmup:  base * t / warmup
        t >  warmup:  base * ((T - t) / (T - warmup))^power

    With weight-norm scaling enabled and a norm supplied, the result is
    multiplied by max(norm, 1e-8).
    """
    if not (1 <= t <= T):
        raise InvalidInput(f"step {t} outside [1, {T}]")
    if sch.kind == SCHEDULE_CONSTANT:
        eta = base_eta
    else:
        if sch.warmup_steps >= T:
            raise InvalidInput(f"warmup_steps {sch.warmup_steps} must be < T {T}")
        if sch.warmup_steps > 0 and t <= sch.warmup_steps:
            eta = base_eta * t / sch.warmup_steps
        else:
            eta = base_eta * ((T - t) / (T - sch.warmup_steps)) ** sch.power
    if sch.weight_norm_scaling and w_layer_norm is not None:
        eta *= max(w_layer_norm, WEIGHT_NORM_FLOOR)
    return eta


# -- per-layer variant -----------------------------------------------------------


@dataclass(frozen=True)
class LayerPartition:
    """Disjoint index intervals covering [0, d), with a rate scale per layer."""

    ranges: tuple[tuple[int, int], ...]
    lr_scale: tuple[float, ...]

    def __post_init__(self):
        if len(self.ranges) != len(self.lr_scale):
            raise PartitionMismatch(
                f"{len(self.ranges)} ranges but {len(self.lr_scale)} scale factors"
            )
        if not self.ranges:
            raise PartitionMismatch("partition must contain at least one range")
        for lo, hi in self.ranges:
            if not (0 <= lo < hi):
                raise PartitionMismatch(f"bad range ({lo}, {hi})")
        for sc in self.lr_scale:
            if sc <= 0.0:
                raise PartitionMismatch(f"lr scale must be positive, got {sc}")

    def validate_cover(self, dim: int) -> None:
        covered = sorted(self.ranges)
        pos = 0
        for lo, hi in covered:
            if lo != pos:
                raise PartitionMismatch(f"ranges leave a gap or overlap at index {pos}")
            pos = hi
        if pos != dim:
            raise PartitionMismatch(f"ranges cover [0, {pos}) but dim is {dim}")


def full_partition(dim: int) -> LayerPartition:
    return LayerPartition(ranges=((0, dim),), lr_scale=(1.0,))


def _blockwise_move(
    w: np.ndarray,
    m: np.ndarray,
    eta: float,
    partition: LayerPartition,
    weight_norm_scaling: bool,
    floor: float,
):
    """Per-range normalized moves; returns (new_w, any_block_skipped)."""
    w_new = w.copy()
    skipped = False
    for (lo, hi), scale in zip(partition.ranges, partition.lr_scale):
        block = m[lo:hi]
        eta_layer = eta * scale
        if weight_norm_scaling:
            eta_layer *= max(float(np.linalg.norm(w[lo:hi])), WEIGHT_NORM_FLOOR)
        try:
            unit = normalize(block, floor)
        except NormalizationSingularity:
            skipped = True
            continue
        w_new[lo:hi] = w[lo:hi] - eta_layer * unit
    return w_new, skipped


def layerwise_init(
    w1,
    problem: StochasticProblem,
    rng: RngStream,
    eta: float,
    partition: LayerPartition,
    weight_norm_scaling: bool = False,
    floor: float = NORM_FLOOR,
) -> NigtState:
    w1 = as_vector(w1)
    partition.validate_cover(w1.size)
    m = _check_grad(problem.sample_grad(w1, rng).grad)
    w, skipped = _blockwise_move(w1, m, eta, partition, weight_norm_scaling, floor)
    return NigtState(w=w, w_prev=w1, m=m, t=2, no_move=skipped)


def layerwise_step(
    s: NigtState,
    problem: StochasticProblem,
    rng: RngStream,
    eta: float,
    beta: float,
    partition: LayerPartition,
    weight_norm_scaling: bool = False,
    floor: float = NORM_FLOOR,
) -> NigtState:
    """Gradient-transport step with one global momentum vector but per-layer
    normalization: each index range moves exactly its own scaled rate, and
    singular ranges no-move independently."""
    _check_step_args(eta, beta)
    partition.validate_cover(s.w.size)
    x = igt_extrapolate(s.w, s.w_prev, beta)
    g = _check_grad(problem.sample_grad(x, rng).grad)
    m = beta * s.m + (1.0 - beta) * g
    w, skipped = _blockwise_move(s.w, m, eta, partition, weight_norm_scaling, floor)
    return NigtState(w=w, w_prev=s.w, m=m, t=s.t + 1, no_move=skipped)
