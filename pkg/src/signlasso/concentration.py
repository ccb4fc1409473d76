"""Moment and tail-bound numerics backing the variance analysis.

Exact Stirling-number arithmetic for Poisson raw moments, the two-sided
Bernstein tail bound, and the population analogue of the blocked Gram matrix
built from the true intensities instead of estimated ones.  The bound
calculator is descriptive: it reports numbers and never gates the solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RangeError
from .model import CoefVector, DesignMatrix, _as_readonly, intensities
from .conditions import _split_support

# Exact-integer guard: partition counts beyond this exceed what the float
# moment formulas downstream can represent faithfully.
STIRLING_MAX = 20


def _stirling_triangle(max_ell: int) -> list[list[int]]:
    rows = [[1]]
    for m in range(2, max_ell + 1):
        prev = rows[-1]
        row = []
        for j in range(1, m + 1):
            left = j * prev[j - 1] if j <= len(prev) else 0
            right = prev[j - 2] if j >= 2 else 0
            row.append(left + right)
        rows.append(row)
    return rows


_STIRLING_ROWS = _stirling_triangle(STIRLING_MAX)


def stirling2(ell: int, i: int) -> int:
    """Number of partitions of an ell-element set into i nonempty blocks.

    Exact integer arithmetic, valid for 1 <= i <= ell <= 20.
    """
    if not 1 <= ell <= STIRLING_MAX:
        raise RangeError(f"ell must lie in [1, {STIRLING_MAX}], got {ell}")
    if not 1 <= i <= ell:
        raise RangeError(f"i must lie in [1, ell], got i={i}, ell={ell}")
    return _STIRLING_ROWS[ell - 1][i - 1]


def poisson_raw_moment(lam: float, ell: int) -> float:
    """E[Y^ell] for Y ~ Poisson(lam): sum_i lam^i * stirling2(ell, i)."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    if not 1 <= ell <= STIRLING_MAX:
        raise RangeError(f"ell must lie in [1, {STIRLING_MAX}], got {ell}")
    return float(sum(lam**i * stirling2(ell, i) for i in range(1, ell + 1)))


@dataclass(frozen=True)
class BernsteinParams:
    """Variance proxy nu, moment scale c, and deviation level t."""

    nu: float
    c: float
    t: float

    def __post_init__(self):
        if self.nu <= 0 or self.c <= 0 or self.t <= 0:
            raise ValueError("nu, c, and t must all be positive")


def bernstein_tail(params: BernsteinParams) -> float:
    """Two-sided tail bound 2 exp(-t^2 / (2 (nu + c t))) in (0, 2]."""
    return 2.0 * math.exp(-params.t**2 / (2.0 * (params.nu + params.c * params.t)))


@dataclass(frozen=True)
class PopulationGram:
    """Blocked Gram of the truth-weighted design sqrt(lambda*) x rowwise.

    ``lambda_bar`` is max(1, max intensity); ``lambda_bar_source`` records
    whether the intensities came from the generating coefficients or from an
    estimate.
    """

    C_star: np.ndarray
    C11_star: np.ndarray
    C12_star: np.ndarray
    C21_star: np.ndarray
    C22_star: np.ndarray
    q: int
    active_idx: np.ndarray
    inactive_idx: np.ndarray
    lambda_star: np.ndarray
    lambda_bar: float
    lambda_bar_source: str

    def __post_init__(self):
        for name in ("C_star", "C11_star", "C12_star", "C21_star", "C22_star", "lambda_star"):
            object.__setattr__(self, name, _as_readonly(getattr(self, name)))
        for name in ("active_idx", "inactive_idx"):
            object.__setattr__(self, name, _as_readonly(getattr(self, name), dtype=np.int64))

    @property
    def p(self) -> int:
        return self.C_star.shape[0]


def population_gram(X: DesignMatrix, beta_star: CoefVector, support) -> PopulationGram:
    """Blocked Gram built from the true intensities exp(x_i beta_star)."""
    active, inactive = _split_support(support, X.p)
    lam = intensities(X, beta_star)
    x_star = X.values * np.sqrt(lam)[:, None]
    C_full = x_star.T @ x_star / X.n
    perm = np.concatenate([active, inactive])
    C = C_full[np.ix_(perm, perm)]
    q = active.size
    return PopulationGram(
        C_star=C,
        C11_star=C[:q, :q],
        C12_star=C[:q, q:],
        C21_star=C[q:, :q],
        C22_star=C[q:, q:],
        q=q,
        active_idx=active,
        inactive_idx=inactive,
        lambda_star=lam,
        lambda_bar=float(max(1.0, np.max(lam))),
        lambda_bar_source="true_coefficients",
    )


def active_gram_gap(C11: np.ndarray, C11_star: np.ndarray) -> float:
    """Spectral-norm distance between estimated and population active blocks."""
    return float(np.linalg.norm(np.asarray(C11) - np.asarray(C11_star), 2))
