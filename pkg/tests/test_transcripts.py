"""Trajectory-level cross-checks: replay whole runs with plain-numpy
re-implementations of the update rule and demand matching iterates."""

import numpy as np

from bome import (
    BilevelOracle,
    JointGradient,
    JointPoint,
    SolverConfig,
    bome_step,
    coreset_oracle,
    inner_descent,
    minimax_oracle,
)


def coreset_transcript(theta0, K, xi=0.05, alpha=0.05, T=10, eta=0.5):
    """Independent scalar transcript of the update on the coreset problem."""
    x0 = np.array([3.0, -2.0])
    X = np.array([[1.0, 3.0, -2.0, -3.0], [3.0, 1.0, 2.0, 2.0]])

    def sm(v):
        e = np.exp(v - v.max())
        return e / e.sum()

    def grad_g_v(v, th):
        s = sm(v)
        d = th - X @ s
        J = np.diag(s) - np.outer(s, s)
        return -2.0 * J @ (X.T @ d)

    v = np.zeros(4)
    th = np.array(theta0, dtype=float)
    out = [(v.copy(), th.copy())]
    for _ in range(K):
        cur = th.copy()
        for _ in range(T):
            cur = cur - alpha * 2.0 * (cur - X @ sm(v))
        dq_v = grad_g_v(v, th) - grad_g_v(v, cur)
        dq_t = 2.0 * (th - X @ sm(v))
        df_t = 2.0 * (th - x0)
        nsq = dq_v @ dq_v + dq_t @ dq_t
        norm = np.sqrt(nsq)
        phi = eta * norm * norm  # through the norm, as the barrier interface takes it
        lam = max((phi - (df_t @ dq_t)) / nsq, 0.0) if nsq > 1e-24 else 0.0
        v = v - xi * (lam * dq_v)
        th = th - xi * (df_t + lam * dq_t)
        out.append((v.copy(), th.copy()))
    return out


def minimax_transcript(K, xi=0.05, alpha=0.05, T=10, eta=0.5):
    v, th = 1.0, 1.0
    out = [(v, th)]
    for _ in range(K):
        cur = th
        for _ in range(T):
            cur = cur + alpha * v  # descend on g = -v*theta
        qg_v = (-th) - (-cur)
        qg_t = -v
        f_v, f_t = th, v
        nsq = qg_v * qg_v + qg_t * qg_t
        norm = np.sqrt(nsq)
        phi = eta * norm * norm  # through the norm, as the barrier interface takes it
        lam = max((phi - (f_v * qg_v + f_t * qg_t)) / nsq, 0.0) if nsq > 1e-24 else 0.0
        v, th = v - xi * (f_v + lam * qg_v), th - xi * (f_t + lam * qg_t)
        out.append((v, th))
    return out


class TestTrajectoryReplay:
    # comparisons are near-machine-precision rather than bitwise: numpy's
    # small-matmul results depend on operand buffer alignment, so two
    # allocation patterns can differ by an ulp on identical values

    def test_coreset_matches_transcript_for_200_steps(self):
        oracle = coreset_oracle()
        cfg = SolverConfig(outer_step_xi=0.05, inner_iters_T=10, max_outer_iters_K=1)
        expected = coreset_transcript([0.0, 3.0], K=200)
        point = JointPoint(np.zeros(4), [0.0, 3.0])
        for k in range(200):
            point, _ = bome_step(oracle, point, cfg)
            ev, eth = expected[k + 1]
            np.testing.assert_allclose(point.v, ev, rtol=1e-10, atol=1e-12,
                                       err_msg=f"v diverged at step {k}")
            np.testing.assert_allclose(point.theta, eth, rtol=1e-10, atol=1e-12,
                                       err_msg=f"theta diverged at step {k}")

    def test_minimax_matches_transcript_exactly_for_500_steps(self):
        # scalar arithmetic only, so the replay is exact
        oracle = minimax_oracle()
        cfg = SolverConfig(outer_step_xi=0.05, inner_iters_T=10, max_outer_iters_K=1)
        expected = minimax_transcript(K=500)
        point = JointPoint([1.0], [1.0])
        for k in range(500):
            point, _ = bome_step(oracle, point, cfg)
            ev, eth = expected[k + 1]
            assert point.v[0] == ev and point.theta[0] == eth, f"diverged at step {k}"


class TestInnerGradFallback:
    """Oracles without the fast theta-gradient path must behave identically
    through the full joint-gradient fallback."""

    def make_pair(self):
        c = np.array([0.5, -1.5])

        def eval_f(p):
            return float(p.theta @ p.theta)

        def grad_f(p):
            return JointGradient(np.zeros(2), 2.0 * p.theta)

        def eval_g(p):
            d = p.theta - (p.v + c)
            return float(d @ d)

        def grad_g(p):
            d = p.theta - (p.v + c)
            return JointGradient(-2.0 * d, 2.0 * d)

        slow = BilevelOracle(eval_f, grad_f, eval_g, grad_g, name="slow")
        fast = BilevelOracle(
            eval_f,
            grad_f,
            eval_g,
            grad_g,
            grad_g_theta=lambda v, theta: 2.0 * (theta - (v + c)),
            name="fast",
        )
        return slow, fast

    def test_inner_descent_identical(self, rng):
        slow, fast = self.make_pair()
        v = rng.standard_normal(2)
        theta0 = rng.standard_normal(2)
        a = inner_descent(slow, v, theta0, T=7, alpha=0.1)
        b = inner_descent(fast, v, theta0, T=7, alpha=0.1)
        assert np.array_equal(a.theta_T, b.theta_T)
        assert a.g_after == b.g_after and a.steps_taken == b.steps_taken

    def test_bome_step_identical(self, rng):
        slow, fast = self.make_pair()
        point = JointPoint(rng.standard_normal(2), rng.standard_normal(2))
        cfg = SolverConfig(outer_step_xi=0.05)
        a, sol_a = bome_step(slow, point, cfg)
        b, sol_b = bome_step(fast, point, cfg)
        assert np.array_equal(a.v, b.v) and np.array_equal(a.theta, b.theta)
        assert sol_a.lam == sol_b.lam and sol_a.q_hat == sol_b.q_hat
