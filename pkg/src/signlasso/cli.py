"""Command-line entry point: fit, check, and simulate over file-based inputs.

stdout carries only the paths of written artifacts, one per line; all logging
goes to stderr at the level set by SIGNLASSO_LOG (error, info, or debug).

Exit codes
----------
fit:      0 converged, 2 solver stopped without convergence, 1 I/O or parse error
check:    0 all requested checks pass, 3 some check failed,
          4 singular active block, 1 I/O or parse error
simulate: 0 sweep completed (replicate failures are logged, not fatal),
          1 configuration or I/O error
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .conditions import (
    AssumptionConstants,
    blocked_gram,
    check_assumptions,
    proposition_diagnostics,
)
from .errors import ConfigError, SignLassoError, SingularBlockError
from .fileio import read_counts_csv, read_matrix_csv, read_vector_csv
from .harness import (
    DesignSpec,
    ExperimentConfig,
    parse_beta_tilde_mode,
    run_experiment,
    write_report_json,
    write_results_csv,
    write_summary_csv,
)
from .model import CoefVector, DesignMatrix
from .prelim import MleConfig, fit_mle, oracle_perturbation
from .solver import SolverConfig, fit
from .working import build_working_problem

logger = logging.getLogger("signlasso")

_CONSTANT_KEYS = {
    "max_row_norm",
    "max_col_norm",
    "min_eigen_active",
    "max_eigen_cross12",
    "max_eigen_cross21",
    "max_eigen_inactive",
    "min_beta_scaled",
    "c1",
    "tau",
}


def _setup_logging() -> None:
    level_name = os.environ.get("SIGNLASSO_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    level = levels.get(level_name, logging.ERROR)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("signlasso")
    root.handlers.clear()
    root.addHandler(handler)
    root.setLevel(level)


def _emit(path: Path) -> None:
    print(path)


def _resolve_beta_tilde(mode: str, X: DesignMatrix, counts, beta_star, seed: int) -> CoefVector:
    """Resolve --beta-tilde: a CSV path, 'mle', or 'oracle:SCALE'."""
    if mode not in ("mle",) and not mode.startswith("oracle:") and Path(mode).exists():
        return CoefVector(read_vector_csv(mode))
    kind, scale = parse_beta_tilde_mode(mode)
    if kind == "mle":
        result = fit_mle(X, counts, MleConfig())
        if not result.converged:
            logger.warning("MLE stopped without convergence (grad norm %.3g)", result.grad_norm)
        return result.beta
    if beta_star is None:
        raise ConfigError("beta-tilde", "oracle mode requires --beta-star")
    return oracle_perturbation(beta_star, X.n, scale, seed)


def _load_constants(path: str | None) -> AssumptionConstants:
    if path is None:
        return AssumptionConstants()
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ConfigError("constants", "must be a JSON object")
    unknown = set(raw) - _CONSTANT_KEYS
    if unknown:
        raise ConfigError("constants", f"unknown keys {sorted(unknown)}")
    return AssumptionConstants(**raw)


def load_experiment_config(path) -> ExperimentConfig:
    """Parse and validate an experiment JSON file with field-path diagnostics."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(str(path), "top-level value must be an object")

    def require(name, types, what):
        if name not in raw:
            raise ConfigError(name, "is required")
        value = raw[name]
        if not isinstance(value, types) or isinstance(value, bool):
            raise ConfigError(name, f"must be {what}")
        return value

    design_raw = require("design", dict, "an object")
    try:
        design = DesignSpec(**design_raw)
    except (TypeError, ValueError, SignLassoError) as exc:
        raise ConfigError("design", str(exc)) from exc

    beta_raw = require("beta_star", list, "a list of numbers")
    try:
        beta_star = CoefVector(np.asarray(beta_raw, dtype=float))
    except ValueError as exc:
        raise ConfigError("beta_star", str(exc)) from exc

    n_grid = require("n_grid", list, "a list of integers")
    for k, value in enumerate(n_grid):
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"n_grid[{k}]", "must be an integer")

    numbers = {}
    for name in ("c1", "c2", "alpha_coef"):
        numbers[name] = float(require(name, (int, float), "a number"))
    replicates = require("replicates", int, "an integer")
    seed = require("seed", int, "an integer")

    beta_tilde_mode = raw.get("beta_tilde_mode", "oracle:1.0")
    if not isinstance(beta_tilde_mode, str):
        raise ConfigError("beta_tilde_mode", "must be a string")
    try:
        parse_beta_tilde_mode(beta_tilde_mode)
    except ValueError as exc:
        raise ConfigError("beta_tilde_mode", str(exc)) from exc

    constants = None
    if raw.get("constants") is not None:
        if not isinstance(raw["constants"], dict):
            raise ConfigError("constants", "must be an object")
        unknown = set(raw["constants"]) - _CONSTANT_KEYS
        if unknown:
            raise ConfigError("constants", f"unknown keys {sorted(unknown)}")
        try:
            constants = AssumptionConstants(**raw["constants"])
        except (TypeError, ValueError) as exc:
            raise ConfigError("constants", str(exc)) from exc

    extra = {}
    for name, kind in (
        ("tau", (int, float)),
        ("redraw_design", bool),
        ("max_sweeps", int),
        ("solver_tol", (int, float)),
        ("kkt_tol", (int, float)),
    ):
        if name in raw:
            if not isinstance(raw[name], kind) or (
                kind is int and isinstance(raw[name], bool)
            ):
                raise ConfigError(name, f"must be of type {kind}")
            extra[name] = raw[name]

    known = {
        "design", "beta_star", "n_grid", "c1", "c2", "alpha_coef", "replicates",
        "seed", "beta_tilde_mode", "constants", "tau", "redraw_design",
        "max_sweeps", "solver_tol", "kkt_tol",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(sorted(unknown)[0], "is not a recognized field")

    return ExperimentConfig(
        design=design,
        beta_star=beta_star,
        n_grid=tuple(n_grid),
        c1=numbers["c1"],
        c2=numbers["c2"],
        alpha_coef=numbers["alpha_coef"],
        replicates=replicates,
        seed=seed,
        beta_tilde_mode=beta_tilde_mode,
        constants=constants,
        **extra,
    )


def cmd_fit(args) -> int:
    X = DesignMatrix(read_matrix_csv(args.x))
    counts = read_counts_csv(args.y)
    beta_star = CoefVector(read_vector_csv(args.beta_star)) if args.beta_star else None
    beta_tilde = _resolve_beta_tilde(args.beta_tilde, X, counts, beta_star, args.seed)
    problem = build_working_problem(X, beta_tilde, counts)
    result = fit(problem, SolverConfig(alpha=args.alpha))

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = result.to_dict()
    payload["alpha"] = args.alpha
    payload["beta_tilde"] = beta_tilde.values.tolist()
    target = out_dir / "fit.json"
    target.write_text(json.dumps(payload, indent=2) + "\n")
    _emit(target)
    return 0 if result.converged else 2


def cmd_check(args) -> int:
    X = DesignMatrix(read_matrix_csv(args.x))
    counts = read_counts_csv(args.y)
    beta_star = CoefVector(read_vector_csv(args.beta_star))
    beta_tilde = _resolve_beta_tilde(args.beta_tilde, X, counts, beta_star, args.seed)
    constants = _load_constants(args.constants)
    problem = build_working_problem(X, beta_tilde, counts)
    report = check_assumptions(X, problem, beta_star, constants)
    bg = blocked_gram(problem, beta_star.support)
    diag = proposition_diagnostics(bg, beta_star, beta_tilde, args.alpha, X.n)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "alpha": args.alpha,
        "conditions": report.to_dict(),
        "events": diag.to_dict(),
        "constants": constants.to_dict(),
    }
    target = out_dir / "report.json"
    target.write_text(json.dumps(payload, indent=2) + "\n")
    _emit(target)
    return 0 if report.all_passed else 3


def cmd_simulate(args) -> int:
    config = load_experiment_config(args.config)
    if args.seed is not None:
        from dataclasses import replace

        config = replace(config, seed=args.seed)
    if args.alpha is not None:
        from dataclasses import replace

        config = replace(config, alpha_coef=args.alpha)

    result = run_experiment(config, threads=args.threads)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / "results.csv"
    summary_path = out_dir / "summary.csv"
    report_path = out_dir / "report.json"
    write_results_csv(result, results_path)
    write_summary_csv(result.summary, summary_path)
    write_report_json(result, report_path)
    for path in (results_path, summary_path, report_path):
        _emit(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="signlasso",
        description="Sign-consistent L1-penalized estimation for sparse Poisson models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="solve the penalized working problem from CSVs")
    p_fit.add_argument("--x", required=True, help="design matrix CSV")
    p_fit.add_argument("--y", required=True, help="counts CSV (single column)")
    p_fit.add_argument("--alpha", type=float, required=True, help="L1 penalty level")
    p_fit.add_argument(
        "--beta-tilde", default="mle",
        help="expansion point: CSV path, 'mle', or 'oracle:SCALE' (needs --beta-star)",
    )
    p_fit.add_argument("--beta-star", default=None, help="true coefficients CSV")
    p_fit.add_argument("--seed", type=int, default=0, help="seed for oracle mode")
    p_fit.add_argument("--out", required=True, help="output directory")
    p_fit.set_defaults(func=cmd_fit)

    p_check = sub.add_parser("check", help="evaluate recovery conditions and events")
    p_check.add_argument("--x", required=True, help="design matrix CSV")
    p_check.add_argument("--y", required=True, help="counts CSV (single column)")
    p_check.add_argument("--beta-star", required=True, help="true coefficients CSV")
    p_check.add_argument(
        "--beta-tilde", default="mle",
        help="expansion point: CSV path, 'mle', or 'oracle:SCALE'",
    )
    p_check.add_argument("--alpha", type=float, default=0.0, help="penalty level for the events")
    p_check.add_argument("--constants", default=None, help="JSON file of condition bounds")
    p_check.add_argument("--seed", type=int, default=0, help="seed for oracle mode")
    p_check.add_argument("--out", required=True, help="output directory")
    p_check.set_defaults(func=cmd_check)

    p_sim = sub.add_parser("simulate", help="run a Monte-Carlo sign-recovery sweep")
    p_sim.add_argument("--config", required=True, help="experiment JSON file")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--threads", type=int, default=1, help="replicate thread cap")
    p_sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_sim.add_argument("--alpha", type=float, default=None, help="override alpha_coef")
    p_sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SingularBlockError as exc:
        logger.error("singular active block: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ConfigError, SignLassoError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, OverflowError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
