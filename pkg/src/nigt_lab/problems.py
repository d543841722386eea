"""Synthetic stochastic problems with analytically certified constants.

Each problem ships a closed-form population objective F and gradient, a
sampling gradient oracle, and declared constants:

    L        gradient Lipschitz constant,
    rho      Hessian Lipschitz constant,
    sigma    oracle noise level (sqrt of the expected squared error),
    g_bound  almost-sure bound on sampled gradient norms (may be +inf),
    R        upper bound on F at the start point (we declare F(w1) exactly),
    M        upper bound on F everywhere (may be +inf).

:func:`certify_constants` re-measures L, rho, and sigma empirically and
fails loudly if any declared value is contradicted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import RngStream, as_vector, gaussian_noise
from .errors import (
    CertificationFailure,
    DimensionMismatch,
    InvalidInput,
    InvalidProbability,
    InvalidSpectrum,
)

NOISY_QUADRATIC = "noisy_quadratic"
SIGN_NOISE = "sign_noise"
TRIG_BOWL = "trig_bowl"
STREAMING_LEAST_SQUARES = "streaming_least_squares"

PROBLEM_KINDS = (NOISY_QUADRATIC, SIGN_NOISE, TRIG_BOWL, STREAMING_LEAST_SQUARES)


@dataclass(frozen=True)
class OracleResponse:
    """One stochastic gradient sample."""

    grad: np.ndarray


@dataclass(frozen=True, eq=False)
class StochasticProblem:
    kind: str
    dim: int
    w1: np.ndarray
    L: float
    rho: float
    sigma: float
    g_bound: float
    R: float
    M: float
    # sigma certified at w1 only (true for streaming least squares, whose
    # oracle variance depends on the query point)
    sigma_at_w1_only: bool = False
    # generative noise amplitude for the additive-noise oracles; kept separate
    # from the declared sigma so a mis-declared constant can actually be
    # caught by certification
    noise_scale: float = 0.0
    # kind-specific parameters; unused ones stay None
    eigs: np.ndarray | None = None
    p: float | None = None
    a: float | None = None
    b: float | None = None
    cov_eigs: np.ndarray | None = None
    label_noise: float | None = None
    w_star: np.ndarray | None = None

    @property
    def problem_id(self) -> str:
        if self.kind == NOISY_QUADRATIC:
            spec = f"eigs=[{';'.join(repr(float(e)) for e in self.eigs)}],sigma={self.sigma!r}"
        elif self.kind == SIGN_NOISE:
            spec = f"p={self.p!r}"
        elif self.kind == TRIG_BOWL:
            spec = f"a={self.a!r},b={self.b!r},sigma={self.sigma!r}"
        else:
            spec = (
                f"cov_eigs=[{';'.join(repr(float(e)) for e in self.cov_eigs)}],"
                f"label_noise={self.label_noise!r}"
            )
        return f"{self.kind}(d={self.dim},{spec})"

    # -- exact population quantities -------------------------------------

    def exact_value(self, w) -> float:
        w = as_vector(w)
        if self.kind == NOISY_QUADRATIC:
            return float(0.5 * np.sum(self.eigs * w * w))
        if self.kind == SIGN_NOISE:
            return 1.0
        if self.kind == TRIG_BOWL:
            return float(self.a * np.sum(1.0 - np.cos(self.b * w)))
        delta = w - self.w_star
        return float(0.5 * (np.sum(self.cov_eigs * delta * delta) + self.label_noise**2))

    def exact_grad(self, w) -> np.ndarray:
        w = as_vector(w)
        if self.kind == NOISY_QUADRATIC:
            return self.eigs * w
        if self.kind == SIGN_NOISE:
            return np.zeros(1)
        if self.kind == TRIG_BOWL:
            return self.a * self.b * np.sin(self.b * w)
        return self.cov_eigs * (w - self.w_star)

    def exact_grad_batch(self, W: np.ndarray) -> np.ndarray:
        """Exact gradients for each row of an ``(n, dim)`` array."""
        W = np.asarray(W, dtype=np.float64)
        if self.kind == NOISY_QUADRATIC:
            return self.eigs * W
        if self.kind == SIGN_NOISE:
            return np.zeros_like(W)
        if self.kind == TRIG_BOWL:
            return self.a * self.b * np.sin(self.b * W)
        return self.cov_eigs * (W - self.w_star)

    # -- stochastic oracle -------------------------------------------------

    def sample_grad(self, w, rng: RngStream) -> OracleResponse:
        """One unbiased gradient sample; draws are consumed deterministically."""
        w = as_vector(w)
        if self.kind == NOISY_QUADRATIC:
            g = self.eigs * w + gaussian_noise(rng, self.dim, self.noise_scale)
        elif self.kind == SIGN_NOISE:
            u = rng.generator.random()
            g = np.array([self.p - 1.0 if u < self.p else self.p])
        elif self.kind == TRIG_BOWL:
            g = self.a * self.b * np.sin(self.b * w)
            if self.noise_scale > 0.0:
                # bounded noise keeps the a.s. gradient bound finite:
                # per-component uniform on [-c, c] with c = sigma*sqrt(3/d)
                # gives E||zeta||^2 = sigma^2 and ||zeta|| <= sqrt(3)*sigma
                c = self.noise_scale * math.sqrt(3.0 / self.dim)
                g = g + rng.generator.uniform(-c, c, size=self.dim)
        else:
            x = rng.generator.normal(size=self.dim) * np.sqrt(self.cov_eigs)
            y = float(x @ self.w_star)
            if self.label_noise > 0.0:
                y += self.label_noise * rng.generator.normal()
            g = x * (float(x @ w) - y)
        return OracleResponse(grad=g)


# -- constructors ----------------------------------------------------------


def make_noisy_quadratic(d: int, eigs, sigma: float, w1=None) -> StochasticProblem:
    """Quadratic bowl F(w) = (1/2) sum_i eigs_i w_i^2 with Gaussian oracle noise."""
    eigs = np.asarray(eigs, dtype=np.float64)
    if eigs.ndim != 1 or eigs.size != d:
        raise DimensionMismatch(f"expected {d} eigenvalues, got shape {eigs.shape}")
    if np.any(eigs <= 0.0):
        raise InvalidSpectrum(f"eigenvalues must be positive, got {list(eigs)}")
    if sigma < 0.0:
        raise InvalidInput(f"sigma must be >= 0, got {sigma}")
    w1 = np.ones(d) if w1 is None else as_vector(w1)
    if w1.size != d:
        raise DimensionMismatch(f"w1 has dim {w1.size}, expected {d}")
    R = float(0.5 * np.sum(eigs * w1 * w1))
    return StochasticProblem(
        kind=NOISY_QUADRATIC,
        dim=d,
        w1=w1,
        L=float(np.max(eigs)),
        rho=0.0,
        sigma=float(sigma),
        g_bound=math.inf,
        R=R,
        M=math.inf,
        noise_scale=float(sigma),
        eigs=eigs,
    )


def make_sign_noise(p: float) -> StochasticProblem:
    """Flat 1-D objective whose oracle returns p w.p. 1-p and p-1 w.p. p.

    The population gradient is identically zero, yet the normalized sample
    has mean 1 - 2p > 0, so memoryless normalized descent drifts away from
    the critical point. F is set to the constant 1 so that R = M = 1.
    """
    if not (0.0 < p < 0.5):
        raise InvalidProbability(f"p must lie in (0, 1/2), got {p}")
    return StochasticProblem(
        kind=SIGN_NOISE,
        dim=1,
        w1=np.zeros(1),
        L=0.0,
        rho=0.0,
        sigma=math.sqrt(p * (1.0 - p)),
        g_bound=max(p, 1.0 - p),
        R=1.0,
        M=1.0,
        p=float(p),
    )


def make_trig_bowl(d: int, a: float, b: float, sigma: float, w1=None) -> StochasticProblem:
    """Separable non-convex bowl F(w) = sum_i a (1 - cos(b w_i)).

    All second and third derivatives are bounded (L = a b^2, rho = a b^3),
    F is bounded above by M = 2 a d, and the oracle noise is bounded uniform
    so the almost-sure gradient bound g_bound = a b sqrt(d) + sqrt(3) sigma
    is finite. This is the workhorse for step-size rules that need every
    constant finite.
    """
    if a <= 0.0 or b <= 0.0:
        raise InvalidInput(f"a and b must be positive, got a={a}, b={b}")
    if sigma < 0.0:
        raise InvalidInput(f"sigma must be >= 0, got {sigma}")
    if d < 1:
        raise InvalidInput(f"dimension must be >= 1, got {d}")
    w1 = np.full(d, 2.0 / b) if w1 is None else as_vector(w1)
    if w1.size != d:
        raise DimensionMismatch(f"w1 has dim {w1.size}, expected {d}")
    R = float(a * np.sum(1.0 - np.cos(b * w1)))
    return StochasticProblem(
        kind=TRIG_BOWL,
        dim=d,
        w1=w1,
        L=a * b * b,
        rho=a * b**3,
        sigma=float(sigma),
        g_bound=a * b * math.sqrt(d) + math.sqrt(3.0) * sigma,
        R=R,
        M=2.0 * a * d,
        noise_scale=float(sigma),
        a=float(a),
        b=float(b),
    )


def make_streaming_least_squares(
    d: int, cov_eigs, label_noise: float, w1=None, w_star=None
) -> StochasticProblem:
    """Linear regression in the streaming oracle model.

    Each sample is (x, y) with x Gaussian (diagonal covariance cov_eigs) and
    y = <x, w_star> + label_noise * N(0,1); the per-sample loss is
    (1/2)(<x, w> - y)^2. The population Hessian is constant, but the oracle
    variance grows with the distance from w_star, so sigma is declared (and
    certified) at w1 only; the problem is flagged accordingly.
    """
    cov_eigs = np.asarray(cov_eigs, dtype=np.float64)
    if cov_eigs.ndim != 1 or cov_eigs.size != d:
        raise DimensionMismatch(f"expected {d} covariance eigenvalues, got shape {cov_eigs.shape}")
    if np.any(cov_eigs <= 0.0):
        raise InvalidSpectrum(f"covariance eigenvalues must be positive, got {list(cov_eigs)}")
    if label_noise < 0.0:
        raise InvalidInput(f"label_noise must be >= 0, got {label_noise}")
    w1 = np.ones(d) if w1 is None else as_vector(w1)
    w_star = np.zeros(d) if w_star is None else as_vector(w_star)
    if w1.size != d or w_star.size != d:
        raise DimensionMismatch("w1 / w_star dimension mismatch")
    delta = w1 - w_star
    # E||grad sample - grad||^2 at w1 for Gaussian features:
    #   sum_i lam_i^2 delta_i^2 + (sum_i lam_i)(sum_i lam_i delta_i^2)
    #   + label_noise^2 sum_i lam_i
    sig2 = float(
        np.sum(cov_eigs**2 * delta**2)
        + np.sum(cov_eigs) * np.sum(cov_eigs * delta**2)
        + label_noise**2 * np.sum(cov_eigs)
    )
    R = float(0.5 * (np.sum(cov_eigs * delta * delta) + label_noise**2))
    return StochasticProblem(
        kind=STREAMING_LEAST_SQUARES,
        dim=d,
        w1=w1,
        L=float(np.max(cov_eigs)),
        rho=0.0,
        sigma=math.sqrt(sig2),
        g_bound=math.inf,
        R=R,
        M=math.inf,
        sigma_at_w1_only=True,
        cov_eigs=cov_eigs,
        label_noise=float(label_noise),
        w_star=w_star,
    )


# -- finite differences and certification ----------------------------------


def fd_step(point_norm: float) -> float:
    """Central-difference step for Hessian-vector products: 1e-5 * (1 + |w|)."""
    return 1e-5 * (1.0 + point_norm)


def fd_slack(problem: StochasticProblem, radius: float) -> float:
    """Tolerance absorbing finite-difference truncation in curvature checks.

    10 * h * rho + 1e-6, with h evaluated at the largest norm reachable in
    the sampling ball.
    """
    h = fd_step(float(np.linalg.norm(problem.w1)) + radius)
    return 10.0 * h * problem.rho + 1e-6


def taylor_remainder(problem: StochasticProblem, x, y) -> np.ndarray:
    """Second-order remainder gradF(x) - gradF(y) - H(y)(x - y).

    The Hessian-vector product is formed by central differences of the exact
    gradient, so this stays an independent measurement of curvature drift
    even on problems whose Hessian we never write down.
    """
    x = as_vector(x)
    y = as_vector(y)
    v = x - y
    sep = float(np.linalg.norm(v))
    if sep == 0.0:
        return np.zeros(problem.dim)
    u = v / sep
    h = fd_step(float(np.linalg.norm(y)))
    hvp = (problem.exact_grad(y + h * u) - problem.exact_grad(y - h * u)) / (2.0 * h) * sep
    return problem.exact_grad(x) - problem.exact_grad(y) - hvp


def ball_point(rng: RngStream, center: np.ndarray, radius: float) -> np.ndarray:
    """Uniform draw from the ball of given radius around ``center``."""
    d = center.size
    v = rng.generator.normal(size=d)
    n = float(np.linalg.norm(v))
    if n == 0.0:
        return center.copy()
    r = radius * float(rng.generator.random()) ** (1.0 / d)
    return center + (r / n) * v


@dataclass(frozen=True)
class CertReport:
    problem_id: str
    L_hat: float
    rho_hat: float
    sigma_hat: float
    L_declared: float
    rho_declared: float
    sigma_declared: float
    tol: float
    fd_slack: float
    radius: float
    n_pairs: int
    n_sigma: int
    passed: bool
    failures: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "L_hat": self.L_hat,
            "rho_hat": self.rho_hat,
            "sigma_hat": self.sigma_hat,
            "L_declared": self.L_declared,
            "rho_declared": self.rho_declared,
            "sigma_declared": self.sigma_declared,
            "tol": self.tol,
            "fd_slack": self.fd_slack,
            "radius": self.radius,
            "n_pairs": self.n_pairs,
            "n_sigma": self.n_sigma,
            "passed": self.passed,
            "failures": list(self.failures),
        }


def certify_constants(
    problem: StochasticProblem,
    n_pairs: int = 400,
    radius: float = 10.0,
    rng: RngStream | None = None,
    tol: float = 0.05,
    n_sigma: int = 20_000,
) -> CertReport:
    """Empirically validate the declared constants L, rho, and sigma.

    L_hat is the largest gradient-difference ratio over sampled pairs,
    rho_hat the largest Taylor-remainder ratio (finite-difference curvature),
    and sigma_hat the root mean squared oracle error. The check is one-sided
    for L and rho (declared values must not be exceeded) and two-sided for
    sigma. Raises :class:`CertificationFailure` with the report attached if
    any declared constant is contradicted.
    """
    if n_pairs < 100:
        raise InvalidInput(f"n_pairs must be >= 100, got {n_pairs}")
    if rng is None:
        rng = RngStream(0, 17)
    slack = fd_slack(problem, radius)
    min_sep = 1e-6 * radius

    L_hat = 0.0
    rho_hat = 0.0
    pairs_done = 0
    while pairs_done < n_pairs:
        x = ball_point(rng, problem.w1, radius)
        y = ball_point(rng, problem.w1, radius)
        sep = float(np.linalg.norm(x - y))
        if sep < min_sep:
            continue
        pairs_done += 1
        L_hat = max(L_hat, float(np.linalg.norm(problem.exact_grad(x) - problem.exact_grad(y))) / sep)
        rho_hat = max(rho_hat, float(np.linalg.norm(taylor_remainder(problem, x, y))) / sep**2)

    # sigma: RMS oracle error, at w1 only when variance is point-dependent
    if problem.sigma_at_w1_only:
        points = [problem.w1]
    else:
        points = [problem.w1] + [ball_point(rng, problem.w1, radius) for _ in range(19)]
    per_point = max(1, n_sigma // len(points))
    sq_err_sum = 0.0
    n_draws = 0
    for pt in points:
        g_exact = problem.exact_grad(pt)
        for _ in range(per_point):
            g = problem.sample_grad(pt, rng).grad
            e = g - g_exact
            sq_err_sum += float(e @ e)
            n_draws += 1
    sigma_hat = math.sqrt(sq_err_sum / n_draws)

    failures = []
    if L_hat > problem.L * (1.0 + tol):
        failures.append(f"L_hat {L_hat:.6g} exceeds declared L {problem.L:.6g} * (1+tol)")
    if rho_hat > problem.rho * (1.0 + tol) + slack:
        failures.append(f"rho_hat {rho_hat:.6g} exceeds declared rho {problem.rho:.6g} * (1+tol) + fd_slack")
    if not (problem.sigma * (1.0 - tol) <= sigma_hat <= problem.sigma * (1.0 + tol)):
        failures.append(
            f"sigma_hat {sigma_hat:.6g} outside [{problem.sigma * (1 - tol):.6g}, {problem.sigma * (1 + tol):.6g}]"
        )

    report = CertReport(
        problem_id=problem.problem_id,
        L_hat=L_hat,
        rho_hat=rho_hat,
        sigma_hat=sigma_hat,
        L_declared=problem.L,
        rho_declared=problem.rho,
        sigma_declared=problem.sigma,
        tol=tol,
        fd_slack=slack,
        radius=radius,
        n_pairs=n_pairs,
        n_sigma=n_draws,
        passed=not failures,
        failures=tuple(failures),
    )
    if failures:
        raise CertificationFailure("; ".join(failures), report=report)
    return report


def with_constants(problem: StochasticProblem, **overrides) -> StochasticProblem:
    """Copy of ``problem`` with some declared constants replaced.

    Used to assert externally supplied constants (which certification then
    validates) and by fault-injection fixtures.
    """
    allowed = {"L", "rho", "sigma", "g_bound", "R", "M"}
    bad = set(overrides) - allowed
    if bad:
        raise InvalidInput(f"cannot override {sorted(bad)}; allowed: {sorted(allowed)}")
    return replace(problem, **overrides)
