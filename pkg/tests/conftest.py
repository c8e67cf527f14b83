"""Shared fixtures: small closed-form bilevel problems with known constants,
and brute-force reference oracles used to pin expected values."""

import numpy as np
import pytest

from bome import BilevelOracle, JointGradient, ProblemMetadata


# ---------------------------------------------------------------------------
# Quadratic bilevel test problems with known L, kappa, M
# ---------------------------------------------------------------------------

QUAD_A = np.array([[0.8, 0.2], [-0.3, 0.5]])
QUAD_THETA_TARGET = np.array([1.0, -2.0])
QUAD_V_TARGET = np.array([0.5, 0.5])


def quadratic_pl_oracle() -> BilevelOracle:
    """f and g both quadratic; g(v, .) has minimizer A v and PL constant 4.

    Declared constants: the joint Hessian of g is bounded by 2(1+||A||)^2,
    kappa = 4 from ||grad_theta g||^2 = 4 g, and M bounds values/gradients on
    the region test runs visit (starts within a few units of the origin).
    """
    A = QUAD_A

    def eval_f(p):
        dt = p.theta - QUAD_THETA_TARGET
        dv = p.v - QUAD_V_TARGET
        return float(dt @ dt + dv @ dv)

    def grad_f(p):
        return JointGradient(2.0 * (p.v - QUAD_V_TARGET), 2.0 * (p.theta - QUAD_THETA_TARGET))

    def eval_g(p):
        d = p.theta - A @ p.v
        return float(d @ d)

    def grad_g(p):
        d = p.theta - A @ p.v
        return JointGradient(-2.0 * (A.T @ d), 2.0 * d)

    def grad_g_theta(v, theta):
        return 2.0 * (theta - A @ v)

    norm_A = float(np.linalg.norm(A, 2))
    meta = ProblemMetadata(
        smoothness_L=2.0 * (1.0 + norm_A) ** 2,
        pl_constant_kappa=4.0,
        bound_M=60.0,
    )
    return BilevelOracle(
        eval_f=eval_f,
        grad_f=grad_f,
        eval_g=eval_g,
        grad_g=grad_g,
        grad_g_theta=grad_g_theta,
        exact_inner_opt=lambda v: A @ np.asarray(v, dtype=float),
        metadata=meta,
        name="quadratic_pl",
    )


ANISO_SCALES = np.array([1.0, 2.0])


def anisotropic_quadratic_oracle() -> BilevelOracle:
    """g = sum_i s_i (theta_i - (Av)_i)^2 with s = (1, 2): L = 4, kappa = 4.

    The anisotropy makes the inner-loop geometric-decay bound strict rather
    than an equality.
    """
    A = QUAD_A
    s = ANISO_SCALES

    def eval_f(p):
        dt = p.theta - QUAD_THETA_TARGET
        return float(dt @ dt)

    def grad_f(p):
        return JointGradient(np.zeros(2), 2.0 * (p.theta - QUAD_THETA_TARGET))

    def eval_g(p):
        d = p.theta - A @ p.v
        return float((s * d) @ d)

    def grad_g(p):
        d = p.theta - A @ p.v
        return JointGradient(-2.0 * (A.T @ (s * d)), 2.0 * s * d)

    def grad_g_theta(v, theta):
        return 2.0 * s * (theta - A @ v)

    meta = ProblemMetadata(
        smoothness_L=2.0 * float(s.max()),
        pl_constant_kappa=4.0 * float(s.min()),
        bound_M=60.0,
    )
    return BilevelOracle(
        eval_f=eval_f,
        grad_f=grad_f,
        eval_g=eval_g,
        grad_g=grad_g,
        grad_g_theta=grad_g_theta,
        exact_inner_opt=lambda v: A @ np.asarray(v, dtype=float),
        metadata=meta,
        name="aniso_quadratic",
    )


def double_well_oracle(tilt: float = 0.0) -> BilevelOracle:
    """1-D inner objective (theta^2 - 1)^2 + tilt * theta, independent of v."""

    def eval_f(p):
        return float(p.theta[0] ** 2)

    def grad_f(p):
        return JointGradient(np.zeros(1), np.array([2.0 * p.theta[0]]))

    def eval_g(p):
        t = p.theta[0]
        return float((t * t - 1.0) ** 2 + tilt * t)

    def grad_g(p):
        t = p.theta[0]
        return JointGradient(np.zeros(1), np.array([4.0 * t * (t * t - 1.0) + tilt]))

    def grad_g_theta(v, theta):
        t = theta[0]
        return np.array([4.0 * t * (t * t - 1.0) + tilt])

    return BilevelOracle(
        eval_f=eval_f,
        grad_f=grad_f,
        eval_g=eval_g,
        grad_g=grad_g,
        grad_g_theta=grad_g_theta,
        name="double_well",
    )


# ---------------------------------------------------------------------------
# Brute-force reference oracles
# ---------------------------------------------------------------------------


def brute_lambda_star(grad_f: JointGradient, grad_q: JointGradient) -> float:
    """Grid-plus-refinement minimizer of ||grad_f + lam * grad_q||^2, lam >= 0.

    Builds the residual vector per candidate lambda; no closed-form algebra.
    A final three-point parabola fit recovers the vertex below the grid's
    value-resolution limit.
    """
    F = np.concatenate([grad_f.dv, grad_f.dtheta])
    Q = np.concatenate([grad_q.dv, grad_q.dtheta])
    qn = np.linalg.norm(Q)
    if qn * qn <= 1e-24:
        return 0.0

    def value(lam: float) -> float:
        resid = F + lam * Q
        return float(resid @ resid)

    hi = 2.0 * np.linalg.norm(F) / qn + 1.0
    lo = 0.0
    best = 0.0
    for _ in range(3):
        grid = np.linspace(lo, hi, 1001)
        resid = F[None, :] + grid[:, None] * Q[None, :]
        vals = (resid * resid).sum(axis=1)
        best = float(grid[int(np.argmin(vals))])
        width = grid[1] - grid[0]
        lo = max(0.0, best - 2.0 * width)
        hi = best + 2.0 * width
    if best == 0.0 and value(0.0) <= value(best + (hi - lo) * 1e-3):
        return 0.0  # constrained at the boundary
    h = 1e-5 * (1.0 + best)
    num = value(best + h) - value(best - h)
    den = value(best + h) - 2.0 * value(best) + value(best - h)
    if den > 0.0:
        best = best - 0.5 * h * num / den
    return float(max(best, 0.0))


def brute_barrier_lambda(grad_f: JointGradient, grad_q: JointGradient, phi: float) -> float:
    """Smallest lam >= 0 with <grad_q, grad_f + lam*grad_q> >= phi, found by
    scan plus bisection on the constraint evaluated with raw vectors.

    This is the dual optimum of the barrier projection problem.
    """
    F = np.concatenate([grad_f.dv, grad_f.dtheta])
    Q = np.concatenate([grad_q.dv, grad_q.dtheta])
    if float(Q @ Q) <= 1e-24:  # singular case: no correction applied
        return 0.0

    def slack(lam):
        delta = F + lam * Q
        return float(Q @ delta) - phi

    if slack(0.0) >= 0.0:
        return 0.0
    hi = 1.0
    while slack(hi) < 0.0:
        hi *= 2.0
        if hi > 1e40:
            raise RuntimeError("constraint unreachable")
    lo = 0.0
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        if slack(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return float(hi)


def brute_simplex_projection(x0: np.ndarray, X: np.ndarray, grid_steps: int = 20):
    """Euclidean projection of x0 onto the convex hull of the columns of X,
    by a dense grid over simplex weights plus local pairwise refinement."""
    from itertools import combinations

    n = X.shape[1]
    weights = []
    for cuts in combinations(range(grid_steps + n - 1), n - 1):
        prev = -1
        parts = []
        for c in cuts + (grid_steps + n - 1,):
            parts.append(c - prev - 1)
            prev = c
        weights.append(np.array(parts, dtype=float) / grid_steps)
    W = np.array(weights)
    pts = W @ X.T
    w = W[int(np.argmin(((pts - x0) ** 2).sum(axis=1)))].copy()

    def value(wv):
        d = X @ wv - x0
        return float(d @ d)

    for r in range(30):
        scale = 0.5 ** r
        improved = True
        while improved:
            improved = False
            base = value(w)
            for i in range(n):
                for j in range(n):
                    if i == j:
                        continue
                    d = min(scale, w[j])
                    if d <= 0.0:
                        continue
                    cand = w.copy()
                    cand[i] += d
                    cand[j] -= d
                    if value(cand) < base - 1e-15:
                        w = cand
                        base = value(cand)
                        improved = True
    return X @ w, w


def assert_barrier_invariants(sol, atol_scale: float = 1e-9):
    """The BarrierSolution contract: nonnegative multiplier and barrier,
    feasibility, complementary slackness, and delta = grad_f + lam*grad_q."""
    assert sol.lam >= 0.0
    assert sol.phi >= 0.0
    gq = np.concatenate([sol.grad_qhat.dv, sol.grad_qhat.dtheta])
    delta = np.concatenate([sol.delta.dv, sol.delta.dtheta])
    if np.linalg.norm(gq) > 0.0:
        inner = float(gq @ delta)
        assert inner >= sol.phi - atol_scale * (1.0 + sol.phi)
        assert abs(sol.lam * (inner - sol.phi)) <= atol_scale * (1.0 + sol.lam) * (1.0 + sol.phi)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
