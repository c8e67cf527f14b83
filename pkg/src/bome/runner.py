"""The outer loop: drive the barrier solver (or a mini-max baseline) for K
iterations, collect per-step diagnostics, periodically score stationarity,
and apply the stopping rules.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass
from typing import Optional

from .core import (
    BilevelOracle,
    JointPoint,
    NumericalError,
    SolverConfig,
    StepDiagnostics,
    validate_config,
)
from .barrier_step import MomentumState, bome_step
from .baselines import PrevGrads, baseline_direction, gda_step, ogd_step
from .metrics import KktReport, kkt_exact, kkt_proxy


class Method(enum.Enum):
    BOME = "bome"
    NAIVE_GDA = "gda"
    OPTIMISTIC_GD = "ogd"


class Termination(enum.Enum):
    MAX_ITERS = "max_iters"
    KKT_TOL = "kkt_tol"
    NUMERICAL_ERROR = "numerical_error"


@dataclass
class Trace:
    """Everything one run produced.

    ``records[k]`` holds the quantities of the step taken at iterate k (the
    stationarity column is scored at that same iterate). ``final_kkt`` scores
    the point the run ended at, which for a completed run is one step past
    the last record.
    """

    records: list[StepDiagnostics]
    config_snapshot: SolverConfig
    problem_name: str
    termination: Termination
    final_point: Optional[JointPoint] = None
    final_kkt: Optional[KktReport] = None
    final_f: Optional[float] = None
    dist_to_known_opt: Optional[float] = None
    kkt_variant: str = ""
    method: Method = Method.BOME


def _score(oracle: BilevelOracle, point: JointPoint, cfg: SolverConfig) -> KktReport:
    if oracle.supports_exact_kkt():
        return kkt_exact(oracle, point)
    return kkt_proxy(oracle, point, cfg)


def run(
    oracle: BilevelOracle,
    start: JointPoint,
    cfg: SolverConfig,
    method: Method = Method.BOME,
) -> Trace:
    """Execute ``method`` from ``start`` for up to ``cfg.max_outer_iters_K``
    iterations.

    Stationarity is scored with the exact variant whenever the oracle
    supports it, otherwise with the plug-in proxy, every
    ``cfg.kkt_eval_every`` iterations and on the last record. If
    ``cfg.stop_kkt_tol`` is set the run stops at the first scored iterate
    meeting it, without applying that iterate's step. A non-finite iterate
    ends the run with the trace retained up to the failure.
    """
    validate_config(cfg, oracle.metadata)
    if isinstance(method, str):
        method = Method(method)
    point = start.copy()
    records: list[StepDiagnostics] = []
    momentum = MomentumState.zeros(point) if cfg.momentum_beta > 0 else None
    prev_grads: Optional[PrevGrads] = None
    termination = Termination.MAX_ITERS
    K = cfg.max_outer_iters_K

    for k in range(K):
        t0 = time.perf_counter()
        try:
            if method is Method.BOME:
                new_point, sol = bome_step(oracle, point, cfg, momentum)
                diag = StepDiagnostics(
                    iter_k=k,
                    f_value=float(oracle.eval_f(point)),
                    q_hat=sol.q_hat,
                    lambda_k=sol.lam,
                    phi_k=sol.phi,
                    delta_norm=sol.delta.norm(),
                    grad_qhat_norm=sol.grad_qhat.norm(),
                )
            else:
                if method is Method.NAIVE_GDA:
                    new_point = gda_step(oracle, point, cfg.outer_step_xi)
                else:
                    new_point, prev_grads = ogd_step(
                        oracle, point, prev_grads, cfg.outer_step_xi
                    )
                direction = baseline_direction(point, new_point, cfg.outer_step_xi)
                diag = StepDiagnostics(
                    iter_k=k,
                    f_value=float(oracle.eval_f(point)),
                    q_hat=0.0,
                    lambda_k=0.0,
                    phi_k=0.0,
                    delta_norm=direction.norm(),
                    grad_qhat_norm=0.0,
                )
        except NumericalError:
            termination = Termination.NUMERICAL_ERROR
            break

        if k % cfg.kkt_eval_every == 0 or k == K - 1:
            diag.kkt_value = _score(oracle, point, cfg).total
        diag.wall_time_micros = int((time.perf_counter() - t0) * 1e6)
        records.append(diag)

        if (
            cfg.stop_kkt_tol is not None
            and diag.kkt_value is not None
            and diag.kkt_value < cfg.stop_kkt_tol
        ):
            termination = Termination.KKT_TOL
            break
        point = new_point

    trace = Trace(
        records=records,
        config_snapshot=cfg,
        problem_name=oracle.name,
        termination=termination,
        final_point=point,
        final_f=float(oracle.eval_f(point)),
        method=method,
        kkt_variant="exact" if oracle.supports_exact_kkt() else "proxy",
    )
    try:
        trace.final_kkt = _score(oracle, point, cfg)
    except NumericalError:
        trace.final_kkt = None
    meta = oracle.metadata
    if meta is not None and meta.known_optimum is not None:
        opt = meta.known_optimum
        gap_v = point.v - opt.v
        gap_t = point.theta - opt.theta
        trace.dist_to_known_opt = float(
            (gap_v @ gap_v + gap_t @ gap_t) ** 0.5
        )
    return trace


def running_min_kkt(trace: Trace) -> list[tuple[int, float]]:
    """Running minimum of the scored stationarity values over a trace."""
    out: list[tuple[int, float]] = []
    best = float("inf")
    for rec in trace.records:
        if rec.kkt_value is not None:
            best = min(best, rec.kkt_value)
            out.append((rec.iter_k, best))
    if not out:
        raise ValueError("trace contains no stationarity evaluations")
    return out
