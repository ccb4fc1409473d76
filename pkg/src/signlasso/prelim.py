"""Preliminary estimators used as the expansion point of the working problem.

Two modes: the unpenalized Poisson MLE via damped Newton, and an oracle mode
that perturbs the true coefficients by at most ``scale / n`` per coordinate.
The oracle mode exists because theory experiments need an expansion point
whose error shrinks like 1/n, which the MLE does not deliver (its parametric
rate is 1/sqrt(n)); both modes are reported separately by the harness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import RankDeficientError
from .model import CoefVector, DesignMatrix, _check_counts, intensities, log_likelihood

# Relative singular-value cutoff for the full-column-rank precondition.
_RANK_RTOL = 1e-8
# Ridge added to the negated Hessian when its Cholesky factorization fails.
_NEWTON_RIDGE = 1e-10


@dataclass(frozen=True)
class MleConfig:
    max_iter: int = 100
    grad_tol: float = 1e-8
    step_halving_max: int = 30

    def __post_init__(self):
        if self.max_iter < 1 or self.step_halving_max < 1 or self.grad_tol <= 0:
            raise ValueError("MleConfig fields must be positive")


@dataclass(frozen=True)
class MleFit:
    """MLE result; ``converged`` flags whether the gradient tolerance was met."""

    beta: CoefVector
    converged: bool
    iterations: int
    grad_norm: float
    log_likelihood: float


def fit_mle(X: DesignMatrix, counts, config: MleConfig | None = None) -> MleFit:
    """Unpenalized Poisson MLE by damped Newton with step halving.

    The log-likelihood never decreases across accepted steps beyond float
    resolution (a 4-ulp slack keeps full Newton steps acceptable at the
    plateau).  When no acceptable step exists or iterations run out, the last
    iterate is returned flagged ``converged=False`` rather than raised.

    Raises
    ------
    RankDeficientError
        If n < p or the smallest singular value of X is below 1e-8 times the
        largest.
    """
    config = config or MleConfig()
    y = _check_counts(counts, X.n)
    if X.n < X.p:
        raise RankDeficientError(f"need n >= p, got n={X.n}, p={X.p}")
    sv = np.linalg.svd(X.values, compute_uv=False)
    if sv[-1] <= _RANK_RTOL * sv[0]:
        raise RankDeficientError(
            f"design is rank deficient: smallest/largest singular value "
            f"= {sv[-1]:.3g}/{sv[0]:.3g}"
        )

    beta = np.zeros(X.p)
    ll = log_likelihood(X, CoefVector(beta), y)
    grad_norm = np.inf
    iterations = 0
    converged = False
    for iterations in range(1, config.max_iter + 1):
        lam = intensities(X, CoefVector(beta))
        grad = X.values.T @ (y - lam)
        grad_norm = float(np.max(np.abs(grad)))
        if grad_norm <= config.grad_tol:
            converged = True
            break

        neg_hess = (X.values.T * lam) @ X.values
        try:
            factor = cho_factor(neg_hess, lower=True)
        except LinAlgError:
            factor = cho_factor(neg_hess + _NEWTON_RIDGE * np.eye(X.p), lower=True)
        direction = cho_solve(factor, grad)

        # Near the optimum the true improvement drops below the float
        # resolution of the log-likelihood; the slack keeps the full Newton
        # step acceptable there so convergence stays quadratic.
        slack = 4.0 * np.finfo(float).eps * (1.0 + abs(ll))
        step = 1.0
        accepted = False
        for _ in range(config.step_halving_max):
            candidate = beta + step * direction
            try:
                ll_new = log_likelihood(X, CoefVector(candidate), y)
            except OverflowError:
                step *= 0.5
                continue
            if ll_new >= ll - slack:
                beta = candidate
                ll = ll_new
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break

    if not converged:
        # Recompute at the final iterate so the flag reflects where we stopped.
        lam = intensities(X, CoefVector(beta))
        grad_norm = float(np.max(np.abs(X.values.T @ (y - lam))))
        converged = grad_norm <= config.grad_tol

    return MleFit(
        beta=CoefVector(beta),
        converged=converged,
        iterations=iterations,
        grad_norm=grad_norm,
        log_likelihood=ll,
    )


def oracle_perturbation(beta_star: CoefVector, n: int, scale: float, seed: int) -> CoefVector:
    """beta_star plus a uniform perturbation bounded by scale/n per coordinate."""
    if n < 1:
        raise ValueError("n must be positive")
    if scale < 0:
        raise ValueError("scale must be nonnegative")
    rng = np.random.default_rng(seed)
    u = rng.uniform(-1.0, 1.0, beta_star.p)
    return CoefVector(beta_star.values + (scale / n) * u, zero_tol=beta_star.zero_tol)
