"""Command-line harness: configure experiments from JSON, run single jobs or
hyperparameter sweeps, and emit traces (CSV) and summaries (JSON) for
external plotting.

Config document shape::

    {
      "problem": "coreset" | "minimax" | "lls" | "hyperclean" | "ridge",
      "problem_params": {...},          # optional, problem-specific
      "method": "bome" | "gda" | "ogd", # default "bome"
      "solver": {"xi": 0.05, "alpha": null, "T": 10, "eta": 0.5,
                 "barrier": "gradnorm" | "value", "iters": 1000,
                 "momentum": 0.0, "kkt_every": 10, "stop_kkt_tol": null,
                 "seed": 0, "xi_v": ..., "xi_theta": ...},
      "start": "start1" | {"v": [...], "theta": [...]},
      "output_path": "trace.csv",
      "sweep": {"eta": [0.1, 0.5, 0.9], "T": [1, 10]}
    }

Unknown fields anywhere are rejected. All file output is UTF-8 with Unix
newlines; floats are printed with 17 significant digits so they round-trip
bit-exactly.
"""

from __future__ import annotations

import argparse
import copy
import itertools
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .core import (
    BarrierKind,
    BilevelOracle,
    ConfigurationError,
    JointPoint,
    SolverConfig,
    validate_config,
)
from .gradcheck import check_oracle_gradients, check_plug_in_estimator, plug_in_table_text
from .problems import (
    coreset_oracle,
    CoresetProblem,
    lls_oracle,
    make_synthetic_hyperclean,
    make_synthetic_ridge,
    hyperclean_oracle,
    minimax_oracle,
    ridge_oracle,
)
from .runner import Method, Termination, Trace, run

OUTPUT_DIR_ENV = "BOME_OUTPUT_DIR"
MAX_SWEEP_SIZE = 10_000

_TOP_LEVEL_KEYS = {
    "problem", "problem_params", "method", "solver", "start", "output_path", "sweep",
}
_SOLVER_KEYS = {
    "xi", "alpha", "T", "eta", "barrier", "iters", "momentum",
    "kkt_every", "stop_kkt_tol", "seed", "xi_v", "xi_theta",
}
_METHODS = {"bome": Method.BOME, "gda": Method.NAIVE_GDA, "ogd": Method.OPTIMISTIC_GD}

_CSV_HEADER = "k,f,q_hat,lambda,phi,delta_norm,grad_qhat_norm,kkt,wall_us"


@dataclass
class ExperimentConfig:
    """A fully validated experiment description."""

    problem: str
    problem_params: dict = field(default_factory=dict)
    method: str = "bome"
    solver: SolverConfig = field(default_factory=SolverConfig)
    start: Union[str, dict] = "default"
    output_path: Optional[str] = None
    sweep: Optional[dict] = None


# ---------------------------------------------------------------------------
# Problem registry
# ---------------------------------------------------------------------------

_CORESET_PRESETS = {
    "start1": (np.zeros(4), np.array([0.0, 3.0])),
    "start2": (np.zeros(4), np.array([-3.0, 1.0])),
    "start3": (np.zeros(4), np.array([3.5, 1.0])),
}
_CORESET_PRESETS["default"] = _CORESET_PRESETS["start1"]


def _build_coreset(params: dict, seed: int):
    allowed = {"x0", "vertices"}
    _reject_unknown(params, allowed, "problem_params")
    prob = CoresetProblem()
    if "x0" in params:
        prob = CoresetProblem(target_x0=np.asarray(params["x0"], dtype=float),
                              vertices_X=prob.vertices_X)
    if "vertices" in params:
        prob = CoresetProblem(target_x0=prob.target_x0,
                              vertices_X=np.asarray(params["vertices"], dtype=float).T)
    return coreset_oracle(prob), _CORESET_PRESETS


def _build_minimax(params: dict, seed: int):
    _reject_unknown(params, set(), "problem_params")
    presets = {"default": (np.array([1.0]), np.array([1.0]))}
    return minimax_oracle(), presets


def _build_lls(params: dict, seed: int):
    _reject_unknown(params, set(), "problem_params")
    presets = {"default": (np.array([0.0]), np.array([0.0, 3.0]))}
    return lls_oracle(), presets


def _build_hyperclean(params: dict, seed: int):
    allowed = {"seed", "m_tr", "m_val", "p", "corrupt_frac", "ridge_c"}
    _reject_unknown(params, allowed, "problem_params")
    prob = make_synthetic_hyperclean(
        seed=params.get("seed", seed),
        m_tr=params.get("m_tr", 300),
        m_val=params.get("m_val", 100),
        p=params.get("p", 10),
        corrupt_frac=params.get("corrupt_frac", 0.3),
    )
    if "ridge_c" in params:
        prob.ridge_c = float(params["ridge_c"])
    presets = {"default": (0.5 * np.ones(prob.n_train), np.zeros(prob.theta_dim))}
    return hyperclean_oracle(prob), presets


def _build_ridge(params: dict, seed: int):
    allowed = {"seed", "m_tr", "m_val", "p", "noise"}
    _reject_unknown(params, allowed, "problem_params")
    prob = make_synthetic_ridge(
        seed=params.get("seed", seed),
        m_tr=params.get("m_tr", 50),
        m_val=params.get("m_val", 30),
        p=params.get("p", 5),
        noise=params.get("noise", 0.1),
    )
    presets = {"default": (np.zeros(prob.dim), np.zeros(prob.dim))}
    return ridge_oracle(prob), presets


PROBLEM_BUILDERS = {
    "coreset": _build_coreset,
    "minimax": _build_minimax,
    "lls": _build_lls,
    "hyperclean": _build_hyperclean,
    "ridge": _build_ridge,
}

PROBLEM_DESCRIPTIONS = {
    "coreset": "project a target onto a softmax-weighted convex hull (v in R^4, theta in R^2)",
    "minimax": "scalar bilinear game min_v max_theta v*theta; optimum at the origin",
    "lls": "least squares with a line of inner minimizers (degenerate inner problem)",
    "hyperclean": "learn per-sample training weights against corrupted labels (synthetic)",
    "ridge": "learn per-coefficient ridge scales with a closed-form inner solve (synthetic)",
}


def _reject_unknown(mapping: dict, allowed: set, where: str):
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigurationError(f"unknown {where} field(s): {', '.join(unknown)}")


def build_experiment(cfg: ExperimentConfig) -> tuple[BilevelOracle, JointPoint]:
    """Instantiate the oracle and the resolved start point for a config."""
    builder = PROBLEM_BUILDERS[cfg.problem]
    oracle, presets = builder(cfg.problem_params, cfg.solver.rng_seed)
    if isinstance(cfg.start, str):
        if cfg.start not in presets:
            raise ConfigurationError(
                f"unknown start preset {cfg.start!r} for problem {cfg.problem!r}; "
                f"available: {', '.join(sorted(presets))}"
            )
        v0, theta0 = presets[cfg.start]
    else:
        v0 = np.asarray(cfg.start["v"], dtype=float)
        theta0 = np.asarray(cfg.start["theta"], dtype=float)
        ref_v, ref_theta = presets["default"]
        if v0.shape != ref_v.shape or theta0.shape != ref_theta.shape:
            raise ConfigurationError(
                f"start dimensions {v0.shape}/{theta0.shape} do not match "
                f"problem {cfg.problem!r} (expects {ref_v.shape}/{ref_theta.shape})"
            )
    return oracle, JointPoint(v0, theta0)


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------


def _solver_from_dict(raw: dict, errors: list) -> SolverConfig:
    _reject_unknown(raw, _SOLVER_KEYS, "solver")
    kwargs = {}
    mapping = {
        "xi": "outer_step_xi",
        "alpha": "inner_step_alpha",
        "T": "inner_iters_T",
        "eta": "eta",
        "iters": "max_outer_iters_K",
        "momentum": "momentum_beta",
        "kkt_every": "kkt_eval_every",
        "stop_kkt_tol": "stop_kkt_tol",
        "seed": "rng_seed",
    }
    for key, attr in mapping.items():
        if key in raw and raw[key] is not None:
            kwargs[attr] = raw[key]
    if raw.get("barrier") is not None:
        barrier = raw["barrier"]
        try:
            kwargs["barrier_kind"] = BarrierKind(barrier)
        except ValueError:
            errors.append(f"barrier must be 'gradnorm' or 'value', got {barrier!r}")
    if raw.get("xi_v") is not None or raw.get("xi_theta") is not None:
        xi = raw.get("xi", SolverConfig().outer_step_xi)
        kwargs["separate_outer_steps"] = (
            float(raw.get("xi_v", xi)),
            float(raw.get("xi_theta", xi)),
        )
    try:
        cfg = SolverConfig(**kwargs)
        validate_config(cfg)
        return cfg
    except ConfigurationError as exc:
        errors.append(str(exc))
        return SolverConfig()


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON experiment document.

    Raises :class:`ConfigurationError` carrying parse context for malformed
    JSON, or the full list of violated constraints for invalid content.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a JSON object")
    _reject_unknown(raw, _TOP_LEVEL_KEYS, "config")

    errors: list[str] = []
    problem = raw.get("problem")
    if problem not in PROBLEM_BUILDERS:
        errors.append(
            f"problem must be one of {sorted(PROBLEM_BUILDERS)}, got {problem!r}"
        )
    method = raw.get("method", "bome")
    if method not in _METHODS:
        errors.append(f"method must be one of {sorted(_METHODS)}, got {method!r}")
    elif method != "bome" and problem != "minimax":
        errors.append(f"method {method!r} is only supported on the minimax problem")

    solver_raw = raw.get("solver", {})
    if not isinstance(solver_raw, dict):
        errors.append("solver must be an object")
        solver_raw = {}
    solver = _solver_from_dict(solver_raw, errors)

    start = raw.get("start", "default")
    if isinstance(start, dict):
        unknown = sorted(set(start) - {"v", "theta"})
        if unknown:
            errors.append(f"unknown start field(s): {', '.join(unknown)}")
        if "v" not in start or "theta" not in start:
            errors.append("explicit start must provide both 'v' and 'theta'")
    elif not isinstance(start, str):
        errors.append("start must be a preset name or an object with 'v' and 'theta'")

    sweep = raw.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, dict) or not sweep:
            errors.append("sweep must be a non-empty object mapping solver fields to lists")
            sweep = None
        else:
            bad = sorted(set(sweep) - _SOLVER_KEYS)
            if bad:
                errors.append(f"sweep keys must be solver fields, got: {', '.join(bad)}")
            elif any(not isinstance(vals, list) or not vals for vals in sweep.values()):
                errors.append("every sweep entry must be a non-empty list of values")
            else:
                size = 1
                for vals in sweep.values():
                    size *= len(vals)
                if size > MAX_SWEEP_SIZE:
                    errors.append(
                        f"sweep cross-product size {size} exceeds {MAX_SWEEP_SIZE}"
                    )

    problem_params = raw.get("problem_params", {})
    if not isinstance(problem_params, dict):
        errors.append("problem_params must be an object")
        problem_params = {}

    if errors:
        raise ConfigurationError("; ".join(errors))

    cfg = ExperimentConfig(
        problem=problem,
        problem_params=problem_params,
        method=method,
        solver=solver,
        start=start,
        output_path=raw.get("output_path"),
        sweep=sweep,
    )
    # Problem params and start preset are validated by actually building.
    build_experiment(cfg)
    return cfg


def expand_sweep(cfg: ExperimentConfig) -> list[ExperimentConfig]:
    """Materialize the sweep cross-product as concrete single-run configs,
    ordered by grid index."""
    if not cfg.sweep:
        return [cfg]
    keys = sorted(cfg.sweep)
    combos = list(itertools.product(*(cfg.sweep[k] for k in keys)))
    out = []
    for idx, combo in enumerate(combos):
        child = copy.deepcopy(cfg)
        child.sweep = None
        errors: list[str] = []
        solver_raw = {k: v for k, v in zip(keys, combo)}
        base = _solver_to_dict(cfg.solver)
        base.update(solver_raw)
        child.solver = _solver_from_dict(base, errors)
        if errors:
            raise ConfigurationError("; ".join(errors))
        if cfg.output_path is not None:
            stem, ext = os.path.splitext(cfg.output_path)
            child.output_path = f"{stem}_{idx:03d}{ext or '.csv'}"
        out.append(child)
    return out


def _solver_to_dict(cfg: SolverConfig) -> dict:
    out = {
        "xi": cfg.outer_step_xi,
        "alpha": cfg.inner_step_alpha,
        "T": cfg.inner_iters_T,
        "eta": cfg.eta,
        "barrier": cfg.barrier_kind.value,
        "iters": cfg.max_outer_iters_K,
        "momentum": cfg.momentum_beta,
        "kkt_every": cfg.kkt_eval_every,
        "stop_kkt_tol": cfg.stop_kkt_tol,
        "seed": cfg.rng_seed,
    }
    if cfg.separate_outer_steps is not None:
        out["xi_v"], out["xi_theta"] = cfg.separate_outer_steps
    return out


# ---------------------------------------------------------------------------
# Emitters
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def emit_trace_csv(trace: Trace, path) -> None:
    """Write one row per iteration; the kkt column is blank on rows where
    stationarity was not evaluated."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_CSV_HEADER + "\n")
        for rec in trace.records:
            kkt = "" if rec.kkt_value is None else _fmt(rec.kkt_value)
            fh.write(
                ",".join(
                    [
                        str(rec.iter_k),
                        _fmt(rec.f_value),
                        _fmt(rec.q_hat),
                        _fmt(rec.lambda_k),
                        _fmt(rec.phi_k),
                        _fmt(rec.delta_norm),
                        _fmt(rec.grad_qhat_norm),
                        kkt,
                        str(rec.wall_time_micros),
                    ]
                )
                + "\n"
            )


def read_trace_csv(path) -> list[dict]:
    """Parse a trace CSV back into a list of row dicts (floats re-parsed)."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header != _CSV_HEADER.split(","):
            raise ValueError(f"unexpected trace header in {path}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            row = {
                "k": int(parts[0]),
                "f": float(parts[1]),
                "q_hat": float(parts[2]),
                "lambda": float(parts[3]),
                "phi": float(parts[4]),
                "delta_norm": float(parts[5]),
                "grad_qhat_norm": float(parts[6]),
                "kkt": None if parts[7] == "" else float(parts[7]),
                "wall_us": int(parts[8]),
            }
            rows.append(row)
    return rows


def summarize_trace(trace: Trace) -> dict:
    entry = {
        "problem": trace.problem_name,
        "method": trace.method.value,
        "config": _solver_to_dict(trace.config_snapshot),
        "iterations": len(trace.records),
        "termination": trace.termination.value,
        "final_f": trace.final_f,
        "final_kkt": None if trace.final_kkt is None else trace.final_kkt.total,
        "kkt_variant": trace.kkt_variant,
        "total_wall_us": int(sum(r.wall_time_micros for r in trace.records)),
    }
    kkts = [r.kkt_value for r in trace.records if r.kkt_value is not None]
    if trace.final_kkt is not None:
        kkts.append(trace.final_kkt.total)
    entry["running_min_kkt"] = min(kkts) if kkts else None
    if trace.dist_to_known_opt is not None:
        entry["dist_to_opt"] = trace.dist_to_known_opt
    return entry


def emit_summary_json(traces: list[Trace], path) -> None:
    """Write the per-run summary array. Requires at least one trace."""
    if not traces:
        raise ValueError("emit_summary_json needs at least one trace")
    payload = [summarize_trace(t) for t in traces]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _resolve_output(path: Optional[str], default_name: str) -> Path:
    out = Path(path) if path else Path(default_name)
    outdir = os.environ.get(OUTPUT_DIR_ENV)
    if outdir and not out.is_absolute():
        out = Path(outdir) / out
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    raw = _solver_to_dict(cfg.solver)
    for key in ("eta", "T", "alpha", "xi", "iters", "barrier", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    errors: list[str] = []
    cfg.solver = _solver_from_dict(raw, errors)
    if errors:
        raise ConfigurationError("; ".join(errors))
    if getattr(args, "out", None):
        cfg.output_path = args.out
    return cfg


def _run_one(cfg: ExperimentConfig) -> Trace:
    oracle, start = build_experiment(cfg)
    return run(oracle, start, cfg.solver, _METHODS[cfg.method])


def _cmd_run_or_sweep(args, is_sweep: bool) -> int:
    text = Path(args.config).read_text(encoding="utf-8")
    cfg = _apply_overrides(parse_config(text), args)
    if not is_sweep and cfg.sweep:
        raise ConfigurationError(
            "config contains a sweep; use the 'sweep' subcommand to run it"
        )
    configs = expand_sweep(cfg) if is_sweep else [cfg]
    jobs = max(1, getattr(args, "jobs", 1) or 1)
    if jobs == 1 or len(configs) == 1:
        traces = [_run_one(c) for c in configs]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            traces = list(pool.map(_run_one, configs))

    default_stem = f"{cfg.problem}_{cfg.method}"
    for idx, (sub_cfg, trace) in enumerate(zip(configs, traces)):
        csv_path = _resolve_output(sub_cfg.output_path, f"{default_stem}.csv")
        if is_sweep and sub_cfg.output_path is None:
            csv_path = csv_path.with_name(f"{csv_path.stem}_{idx:03d}{csv_path.suffix}")
        emit_trace_csv(trace, csv_path)
        print(f"wrote {csv_path}")
    summary_base = cfg.output_path or f"{default_stem}.csv"
    summary_path = _resolve_output(summary_base, summary_base)
    summary_path = summary_path.with_suffix(".summary.json")
    emit_summary_json(traces, summary_path)
    print(f"wrote {summary_path}")

    failed = [t for t in traces if t.termination is Termination.NUMERICAL_ERROR]
    for t in failed:
        print(f"run on {t.problem_name} hit a numerical error", file=sys.stderr)
    return 1 if failed else 0


def _cmd_gradcheck(args) -> int:
    name = args.problem
    if name not in PROBLEM_BUILDERS:
        print(f"unknown problem {name!r}", file=sys.stderr)
        return 2
    oracle, presets = PROBLEM_BUILDERS[name]({}, args.seed)
    v0, theta0 = presets["default"]
    rng = np.random.default_rng(args.seed)
    points = []
    for _ in range(args.points):
        if name == "hyperclean":
            # keep weights strictly inside (0, 1), away from the clip kinks
            v = rng.uniform(0.2, 0.8, size=v0.size)
        else:
            v = v0 + 0.5 * rng.standard_normal(v0.size)
        theta = theta0 + 0.5 * rng.standard_normal(theta0.size)
        points.append(JointPoint(v, theta))
    reports = check_oracle_gradients(oracle, points)
    ok = True
    for label, report in reports.items():
        print(f"gradient check for {label} on {name!r}:")
        print(report.to_text())
        print()
        ok = ok and report.passed
    if oracle.exact_inner_opt is not None:
        errors = check_plug_in_estimator(
            oracle, points[: min(5, len(points))], [1, 2, 4, 8, 16], alpha=0.05
        )
        print("plug-in constraint-gradient error vs inner steps:")
        print(plug_in_table_text(errors))
    return 0 if ok else 1


def _cmd_list_problems() -> int:
    for name in sorted(PROBLEM_BUILDERS):
        print(f"{name:<12} {PROBLEM_DESCRIPTIONS[name]}")
    return 0


def _add_override_flags(p: argparse.ArgumentParser):
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--xi", type=float, default=None)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--barrier", choices=["gradnorm", "value"], default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--jobs", type=int, default=1)


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="bome", description="first-order bilevel optimization harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single experiment from a JSON config")
    p_run.add_argument("config")
    _add_override_flags(p_run)

    p_sweep = sub.add_parser("sweep", help="run the sweep cross-product of a config")
    p_sweep.add_argument("config")
    _add_override_flags(p_sweep)

    p_gc = sub.add_parser("gradcheck", help="finite-difference check a problem's gradients")
    p_gc.add_argument("problem")
    p_gc.add_argument("--seed", type=int, default=0)
    p_gc.add_argument("--points", type=int, default=20)

    sub.add_parser("list-problems", help="list built-in problems")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run_or_sweep(args, is_sweep=False)
        if args.command == "sweep":
            return _cmd_run_or_sweep(args, is_sweep=True)
        if args.command == "gradcheck":
            return _cmd_gradcheck(args)
        if args.command == "list-problems":
            return _cmd_list_problems()
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
