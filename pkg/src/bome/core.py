"""Domain types shared by the solver: joint points, gradients, the bilevel
oracle contract, solver configuration, and per-step diagnostics.

A bilevel problem is

    min_{v, theta} f(v, theta)   s.t.   theta in argmin_{theta'} g(v, theta')

with outer variable ``v`` (length m) and inner variable ``theta`` (length n).
Problems are supplied as a :class:`BilevelOracle` of analytic evaluators; the
solver never differentiates anything itself.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class BilevelError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(BilevelError):
    """A solver or experiment configuration violates a hard precondition."""


class NumericalError(BilevelError):
    """A non-finite value appeared where a finite one is required."""


class MissingOracleCapability(BilevelError):
    """An operation needs an optional oracle capability that is absent."""


class NotConvergedError(BilevelError):
    """An iterative subroutine hit its budget before reaching tolerance."""

    def __init__(self, message: str, marker=None):
        super().__init__(message)
        self.marker = marker


_FLOAT = np.dtype(float)


def _as_vector(x, name: str) -> np.ndarray:
    if not (type(x) is np.ndarray and x.dtype == _FLOAT and x.ndim == 1):
        x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.size < 1:
        raise ValueError(f"{name} must be a 1-D vector with at least one entry")
    if not np.isfinite(x).all():
        raise ValueError(f"{name} contains non-finite values")
    return x


@dataclass
class JointPoint:
    """A pair (v, theta) of outer and inner variables.

    Both vectors are dense float64 and must be finite and non-empty.
    """

    v: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        self.v = _as_vector(self.v, "v")
        self.theta = _as_vector(self.theta, "theta")

    @classmethod
    def _trusted(cls, v: np.ndarray, theta: np.ndarray) -> "JointPoint":
        # fast path for hot loops: caller guarantees validated float vectors
        obj = object.__new__(cls)
        obj.v = v
        obj.theta = theta
        return obj

    @property
    def m(self) -> int:
        return self.v.size

    @property
    def n(self) -> int:
        return self.theta.size

    def copy(self) -> "JointPoint":
        return JointPoint(self.v.copy(), self.theta.copy())


@dataclass
class JointGradient:
    """A gradient over the joint variable (v, theta), stored blockwise."""

    dv: np.ndarray
    dtheta: np.ndarray

    def __post_init__(self):
        if not (type(self.dv) is np.ndarray and self.dv.dtype == _FLOAT and self.dv.ndim == 1):
            self.dv = np.atleast_1d(np.asarray(self.dv, dtype=float))
        if not (
            type(self.dtheta) is np.ndarray
            and self.dtheta.dtype == _FLOAT
            and self.dtheta.ndim == 1
        ):
            self.dtheta = np.atleast_1d(np.asarray(self.dtheta, dtype=float))

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.dv, self.dv) + np.dot(self.dtheta, self.dtheta)))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.dv)) and np.all(np.isfinite(self.dtheta)))


def joint_dot(a: JointGradient, b: JointGradient) -> float:
    """Inner product of two joint gradients."""
    return float(np.dot(a.dv, b.dv) + np.dot(a.dtheta, b.dtheta))


def joint_axpy(a: JointGradient, scale: float, b: JointGradient) -> JointGradient:
    """Return a + scale * b, blockwise."""
    return JointGradient(a.dv + scale * b.dv, a.dtheta + scale * b.dtheta)


@dataclass
class ProblemMetadata:
    """Optional problem constants used only by tests and config validation.

    The solver's update rule never reads these; they exist so that step-size
    warnings and convergence-rate checks can be stated for problems whose
    constants are known.

    Attributes:
        smoothness_L: Lipschitz constant of the joint gradients of f and g.
        pl_constant_kappa: gradient-dominance constant of g(v, .):
            ||grad_theta g||^2 >= kappa * (g - min_theta g).
        bound_M: uniform bound on |f|, |g| and the gradient norms over the
            region a run visits.
        known_optimum: the bilevel optimum when available in closed form.
        known_f_opt: optimal outer objective value when known.
    """

    smoothness_L: Optional[float] = None
    pl_constant_kappa: Optional[float] = None
    bound_M: Optional[float] = None
    known_optimum: Optional[JointPoint] = None
    known_f_opt: Optional[float] = None

    def __post_init__(self):
        for name in ("smoothness_L", "pl_constant_kappa", "bound_M"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ValueError(f"{name} must be strictly positive, got {val}")


@dataclass
class BilevelOracle:
    """User-supplied evaluators for a bilevel problem.

    Required callables take a :class:`JointPoint` and return a float
    (``eval_f``, ``eval_g``) or a :class:`JointGradient` (``grad_f``,
    ``grad_g``) dimensionally consistent with the input point.

    Optional capabilities:
        exact_inner_opt: v -> theta*(v), the closed-form inner minimizer.
        exact_value: v -> min_theta g(v, theta). For problems whose inner
            minimizer is non-unique but whose optimal value is known.
        exact_value_grad: v -> gradient of the exact value function. With
            a unique minimizer this equals the partial v-gradient of g at
            (v, theta*(v)); supplying it lets exact stationarity reports
            work without ``exact_inner_opt``.
        grad_g_theta: (v, theta) -> grad_theta g, a fast path for the inner
            loop that skips assembling the full joint gradient.
    """

    eval_f: Callable[[JointPoint], float]
    grad_f: Callable[[JointPoint], JointGradient]
    eval_g: Callable[[JointPoint], float]
    grad_g: Callable[[JointPoint], JointGradient]
    exact_inner_opt: Optional[Callable[[np.ndarray], np.ndarray]] = None
    exact_value: Optional[Callable[[np.ndarray], float]] = None
    exact_value_grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    grad_g_theta: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    metadata: Optional[ProblemMetadata] = None
    name: str = ""

    def inner_grad(self, v: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """grad_theta g(v, theta), using the fast path when available."""
        if self.grad_g_theta is not None:
            return self.grad_g_theta(v, theta)
        return self.grad_g(JointPoint(v, theta)).dtheta

    def supports_exact_kkt(self) -> bool:
        if self.exact_inner_opt is not None:
            return True
        return self.exact_value is not None and self.exact_value_grad is not None


class BarrierKind(enum.Enum):
    """Choice of the dynamic barrier phi_k."""

    GRAD_NORM_SQ = "gradnorm"  # phi = eta * ||grad q_hat||^2 (default)
    VALUE = "value"            # phi = eta * max(q_hat, 0)


@dataclass
class SolverConfig:
    """All solver hyperparameters.

    Defaults mirror the recommended settings: eta = 0.5, T = 10 inner steps,
    gradient-norm-squared barrier, inner step equal to the outer step, and
    no momentum.
    """

    outer_step_xi: float = 0.05
    inner_step_alpha: Optional[float] = None
    inner_iters_T: int = 10
    eta: float = 0.5
    barrier_kind: BarrierKind = BarrierKind.GRAD_NORM_SQ
    max_outer_iters_K: int = 1000
    separate_outer_steps: Optional[tuple[float, float]] = None
    momentum_beta: float = 0.0
    kkt_eval_every: int = 10
    stop_kkt_tol: Optional[float] = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.inner_step_alpha is None:
            self.inner_step_alpha = self.outer_step_xi
        if isinstance(self.barrier_kind, str):
            self.barrier_kind = BarrierKind(self.barrier_kind)

    @property
    def xi_v(self) -> float:
        if self.separate_outer_steps is not None:
            return self.separate_outer_steps[0]
        return self.outer_step_xi

    @property
    def xi_theta(self) -> float:
        if self.separate_outer_steps is not None:
            return self.separate_outer_steps[1]
        return self.outer_step_xi


@dataclass
class StepDiagnostics:
    """Per-iteration record: the quantities of the step taken at iterate k."""

    iter_k: int
    f_value: float
    q_hat: float
    lambda_k: float
    phi_k: float
    delta_norm: float
    grad_qhat_norm: float
    kkt_value: Optional[float] = None
    wall_time_micros: int = 0


def validate_config(cfg: SolverConfig, meta: Optional[ProblemMetadata] = None) -> list[str]:
    """Validate a solver configuration.

    Hard violations (non-positive step sizes, bad iteration counts) raise
    :class:`ConfigurationError` listing every violated constraint. Soft
    theory violations against declared problem constants are returned as
    human-readable warnings; the solver still runs with them.
    """
    errors = []
    if not cfg.outer_step_xi > 0:
        errors.append(f"outer_step_xi must be > 0, got {cfg.outer_step_xi}")
    if not cfg.inner_step_alpha > 0:
        errors.append(f"inner_step_alpha must be > 0, got {cfg.inner_step_alpha}")
    if not cfg.eta > 0:
        errors.append(f"eta must be > 0, got {cfg.eta}")
    if cfg.inner_iters_T < 0:
        errors.append(f"inner_iters_T must be >= 0, got {cfg.inner_iters_T}")
    if cfg.max_outer_iters_K < 1:
        errors.append(f"max_outer_iters_K must be >= 1, got {cfg.max_outer_iters_K}")
    if cfg.kkt_eval_every < 1:
        errors.append(f"kkt_eval_every must be >= 1, got {cfg.kkt_eval_every}")
    if not 0.0 <= cfg.momentum_beta < 1.0:
        errors.append(f"momentum_beta must lie in [0, 1), got {cfg.momentum_beta}")
    if cfg.stop_kkt_tol is not None and not cfg.stop_kkt_tol > 0:
        errors.append(f"stop_kkt_tol must be > 0 when set, got {cfg.stop_kkt_tol}")
    if cfg.separate_outer_steps is not None:
        xi_v, xi_theta = cfg.separate_outer_steps
        if not xi_v > 0 or not xi_theta > 0:
            errors.append(f"separate outer steps must be > 0, got ({xi_v}, {xi_theta})")
    if errors:
        raise ConfigurationError("; ".join(errors))

    warnings: list[str] = []
    if meta is not None and meta.smoothness_L is not None:
        bound = 1.0 / meta.smoothness_L
        if cfg.xi_v > bound or cfg.xi_theta > bound:
            warnings.append(
                f"xi > 1/L: outer step ({cfg.xi_v}, {cfg.xi_theta}) exceeds "
                f"1/L = {bound:.6g}; convergence guarantees may not apply"
            )
        if cfg.inner_step_alpha > bound:
            warnings.append(
                f"alpha > 1/L: inner step {cfg.inner_step_alpha} exceeds "
                f"1/L = {bound:.6g}; inner descent may not be monotone"
            )
    return warnings
