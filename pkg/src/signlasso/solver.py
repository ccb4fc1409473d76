"""L1-penalized weighted least squares by cyclic coordinate descent.

The objective is ||y_work - x_work @ beta||_2^2 + alpha * ||beta||_1, with no
1/(2n) normalization anywhere.  Under this convention the subgradient
threshold is alpha/2: a minimizer satisfies

    (x_work^T (y_work - x_work beta))_j  = (alpha/2) sign(beta_j)   if beta_j != 0,
    |(x_work^T (y_work - x_work beta))_j| <= alpha/2                if beta_j == 0.

All internal formulas follow this single convention to avoid factor drift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .model import CoefVector, _as_readonly
from .working import WorkingProblem


def soft_threshold(z, gamma):
    """sign(z) * max(|z| - gamma, 0); at |z| == gamma exactly, returns 0."""
    return np.sign(z) * np.maximum(np.abs(z) - gamma, 0.0)


@dataclass(frozen=True)
class SolverConfig:
    alpha: float
    max_sweeps: int = 1000
    tol: float = 1e-9
    kkt_tol: float = 1e-6

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be positive")
        if self.tol <= 0 or self.kkt_tol <= 0:
            raise ValueError("tol and kkt_tol must be positive")


@dataclass(frozen=True)
class KktReport:
    """Per-coordinate optimality report for the penalized objective.

    ``correlations`` holds g = x_work^T (y_work - x_work beta).  Active
    coordinates carry the stationarity residual |g_j - (alpha/2) sign(beta_j)|,
    inactive ones the subgradient slack |g_j| - alpha/2 (negative when strictly
    interior).  ``passed`` applies the tolerance coordinatewise.
    """

    alpha: float
    kkt_tol: float
    correlations: np.ndarray
    is_active: np.ndarray
    stationarity_residual: np.ndarray
    subgradient_slack: np.ndarray
    passed: np.ndarray

    def __post_init__(self):
        for name in ("correlations", "stationarity_residual", "subgradient_slack"):
            object.__setattr__(self, name, _as_readonly(getattr(self, name)))
        for name in ("is_active", "passed"):
            object.__setattr__(self, name, _as_readonly(getattr(self, name), dtype=bool))

    @property
    def all_passed(self) -> bool:
        return bool(np.all(self.passed))

    def to_dict(self) -> dict:
        def listed(values):
            # Inapplicable entries are NaN internally; emit null for strict JSON.
            return [None if np.isnan(v) else float(v) for v in values]

        return {
            "alpha": self.alpha,
            "kkt_tol": self.kkt_tol,
            "correlations": self.correlations.tolist(),
            "is_active": self.is_active.tolist(),
            "stationarity_residual": listed(self.stationarity_residual),
            "subgradient_slack": listed(self.subgradient_slack),
            "passed": self.passed.tolist(),
            "all_passed": self.all_passed,
        }


@dataclass(frozen=True)
class FitResult:
    beta_hat: CoefVector
    sweeps_used: int
    kkt_report: KktReport
    converged: bool
    objective: float

    def to_dict(self) -> dict:
        return {
            "beta_hat": self.beta_hat.values.tolist(),
            "support": self.beta_hat.support.tolist(),
            "signs": self.beta_hat.signs().tolist(),
            "sweeps_used": self.sweeps_used,
            "converged": self.converged,
            "objective": self.objective,
            "kkt": self.kkt_report.to_dict(),
        }


def objective_value(problem: WorkingProblem, beta_values: np.ndarray, alpha: float) -> float:
    r = problem.y_work - problem.x_work @ beta_values
    return float(r @ r + alpha * np.sum(np.abs(beta_values)))


def kkt_check(problem: WorkingProblem, beta: CoefVector, alpha: float, kkt_tol: float) -> KktReport:
    """Check the subgradient optimality conditions at beta."""
    if beta.p != problem.p:
        raise ValueError("beta length does not match problem")
    g = problem.x_work.T @ (problem.y_work - problem.x_work @ beta.values)
    half = 0.5 * alpha
    active = np.abs(beta.values) > beta.zero_tol
    stationarity = np.full(beta.p, np.nan)
    slack = np.full(beta.p, np.nan)
    passed = np.empty(beta.p, dtype=bool)
    stationarity[active] = np.abs(g[active] - half * np.sign(beta.values[active]))
    slack[~active] = np.abs(g[~active]) - half
    passed[active] = stationarity[active] <= kkt_tol
    passed[~active] = slack[~active] <= kkt_tol
    return KktReport(
        alpha=float(alpha),
        kkt_tol=float(kkt_tol),
        correlations=g,
        is_active=active,
        stationarity_residual=stationarity,
        subgradient_slack=slack,
        passed=passed,
    )


def gram_form_gradient(problem: WorkingProblem, beta_values: np.ndarray) -> np.ndarray:
    """The optimality conditions in Gram form: C (beta - beta_tilde) - W.

    Equals -1/n times the raw correlations x_work^T (y_work - x_work beta);
    a minimizer has (C (beta - beta_tilde) - W)_j = -(alpha/2n) sign(beta_j)
    on its active set.  Kept alongside the raw form so the two can be checked
    against each other.
    """
    C = problem.gram()
    W = problem.noise()
    return C @ (np.asarray(beta_values, dtype=float) - problem.beta_tilde.values) - W


def fit(problem: WorkingProblem, config: SolverConfig) -> FitResult:
    """Minimize the penalized objective by cyclic coordinate descent.

    Warm-starts at the working problem's expansion point.  Convergence
    requires both a maximum coordinate change at most ``config.tol`` over a
    full sweep and a full KKT pass at ``config.kkt_tol``.  When sweeps run
    out the best iterate is returned with ``converged=False``.

    Raises
    ------
    NumericalError
        If the objective becomes non-finite or increases across a sweep.
    """
    X = problem.x_work
    y = problem.y_work
    p = problem.p
    half = 0.5 * config.alpha

    col_sq = np.einsum("ij,ij->j", X, X)
    beta = problem.beta_tilde.values.copy()
    # Coordinates with an identically zero column cannot affect the fit;
    # the penalty pins them at zero.
    beta[col_sq == 0.0] = 0.0

    resid = y - X @ beta
    prev_obj = float(resid @ resid + config.alpha * np.sum(np.abs(beta)))
    if not np.isfinite(prev_obj):
        raise NumericalError("objective is non-finite at the warm start")

    report = None
    converged = False
    sweeps = 0
    for sweeps in range(1, config.max_sweeps + 1):
        max_delta = 0.0
        for j in range(p):
            if col_sq[j] == 0.0:
                continue
            old = beta[j]
            if old != 0.0:
                resid += X[:, j] * old
            z = float(X[:, j] @ resid)
            new = float(soft_threshold(z, half)) / col_sq[j]
            if new != 0.0:
                resid -= X[:, j] * new
            beta[j] = new
            delta = abs(new - old)
            if delta > max_delta:
                max_delta = delta

        # Refresh the residual to stop float drift from accumulating across
        # sweeps, then enforce monotonicity of the true objective.
        resid = y - X @ beta
        obj = float(resid @ resid + config.alpha * np.sum(np.abs(beta)))
        if not np.isfinite(obj):
            raise NumericalError(f"objective became non-finite at sweep {sweeps}")
        if obj > prev_obj + 1e-10 * (1.0 + abs(prev_obj)):
            raise NumericalError(
                f"objective increased from {prev_obj!r} to {obj!r} at sweep {sweeps}"
            )
        prev_obj = obj

        if max_delta <= config.tol:
            candidate = CoefVector(beta)
            report = kkt_check(problem, candidate, config.alpha, config.kkt_tol)
            if report.all_passed:
                converged = True
                break
            # Coordinate stall without optimality: keep sweeping.
            report = None

    beta_hat = CoefVector(beta)
    if report is None:
        report = kkt_check(problem, beta_hat, config.alpha, config.kkt_tol)
    return FitResult(
        beta_hat=beta_hat,
        sweeps_used=sweeps,
        kkt_report=report,
        converged=converged,
        objective=prev_obj,
    )
