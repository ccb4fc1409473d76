"""Blocked Gram, recovery conditions, and the sufficient-event diagnostics."""

import numpy as np
import pytest

from conftest import make_instance
from signlasso import (
    AssumptionConstants,
    CoefVector,
    DesignMatrix,
    EmptySupportError,
    SingularBlockError,
    SolverConfig,
    blocked_gram,
    build_working_problem,
    check_assumptions,
    fit,
    irrepresentable_vector,
    kkt_check,
    proposition_diagnostics,
)


def _unweighted_problem(X, counts=None):
    X = np.asarray(X, dtype=float)
    if counts is None:
        counts = np.zeros(X.shape[0], dtype=int)
    return build_working_problem(
        DesignMatrix(X), CoefVector(np.zeros(X.shape[1])), counts
    )


def test_blocked_gram_hand_instance():
    problem = _unweighted_problem([[1.0, 0.0], [1.0, 1.0]])
    bg = blocked_gram(problem, [0])
    np.testing.assert_allclose(bg.C, [[1.0, 0.5], [0.5, 0.5]], rtol=1e-15)
    np.testing.assert_allclose(bg.C11, [[1.0]], rtol=1e-15)
    np.testing.assert_allclose(bg.C22, [[0.5]], rtol=1e-15)


def test_blocked_gram_orthogonal_design():
    H = np.array([[1, 1], [1, -1], [1, 1], [1, -1]], dtype=float)
    problem = _unweighted_problem(H)
    bg = blocked_gram(problem, [0])
    np.testing.assert_allclose(bg.C, np.eye(2), atol=1e-15)
    assert np.all(bg.C12 == 0.0)


def test_blocked_gram_symmetry_and_reassembly():
    rng = np.random.default_rng(211)
    inst = make_instance(rng, n=30, p=5, q=2)
    bg = blocked_gram(inst["problem"], inst["beta_star"].support)
    np.testing.assert_array_equal(bg.C12, bg.C21.T)
    reassembled = np.block([[bg.C11, bg.C12], [bg.C21, bg.C22]])
    assert np.array_equal(reassembled, bg.C)
    w = np.concatenate([bg.W1, bg.W2])
    assert np.array_equal(w, bg.W)


def test_blocked_gram_rejects_empty_support():
    problem = _unweighted_problem(np.eye(3))
    with pytest.raises(EmptySupportError):
        blocked_gram(problem, [])


def test_check_assumptions_orthogonal_design():
    H = np.array([[1, 1], [1, -1], [1, 1], [1, -1]], dtype=float)
    X = DesignMatrix(H)
    problem = _unweighted_problem(H)
    beta_star = CoefVector([1.0, 0.0])
    report = check_assumptions(X, problem, beta_star, AssumptionConstants(min_eigen_active=1.0))
    assert report.irrep_margin == 1.0
    assert report.lambda_min_C11 == pytest.approx(1.0)
    assert report.passes["eigen_active"]
    assert report.passes["irrepresentable"]
    d = irrepresentable_vector(blocked_gram(problem, [0]), beta_star)
    assert np.all(d == 0.0)


def test_check_assumptions_full_support_conventions():
    rng = np.random.default_rng(223)
    inst = make_instance(rng, n=25, p=3, q=3)
    report = check_assumptions(
        inst["X"], inst["problem"], inst["beta_star"], AssumptionConstants()
    )
    assert report.irrep_margin == 1.0
    assert report.lambda_max_C22 == 0.0
    assert report.lambda_max_C12 == 0.0
    assert report.q == 3


def test_check_assumptions_two_predictor_closed_form():
    # p = 2, q = 1: the irrepresentability statistic is |c21 / c11| computed
    # from scalar sums, so the margin has a closed form.
    rng = np.random.default_rng(227)
    n = 40
    x1 = rng.standard_normal(n)
    x2 = 0.6 * x1 + 0.8 * rng.standard_normal(n)
    X = DesignMatrix(np.column_stack([x1, x2]))
    beta_star = CoefVector([0.8, 0.0])
    problem = build_working_problem(X, beta_star, rng.integers(0, 4, n))
    lam = problem.lambda_tilde
    c11 = float(np.sum(lam * x1 * x1) / n)
    c21 = float(np.sum(lam * x2 * x1) / n)
    expected_margin = 1.0 - abs(c21 / c11)
    report = check_assumptions(X, problem, beta_star, AssumptionConstants())
    assert report.irrep_margin == pytest.approx(expected_margin, abs=1e-10)


def test_check_assumptions_reports_observed_constants():
    rng = np.random.default_rng(229)
    inst = make_instance(rng, n=50, p=4, q=2)
    X = inst["X"]
    report = check_assumptions(X, inst["problem"], inst["beta_star"], None)
    assert report.row_norm_max == pytest.approx(float(np.max(X.row_norms())))
    assert report.col_norm_max == pytest.approx(float(np.max(X.col_norms())))
    # beta_min statistic with default c1 = 1 is just min |active beta|.
    expected = float(np.min(np.abs(inst["beta_star"].values[:2])))
    assert report.beta_min_scaled == pytest.approx(expected)


def test_beta_min_scaling_with_c1():
    rng = np.random.default_rng(233)
    inst = make_instance(rng, n=100, p=3, q=1)
    report = check_assumptions(
        inst["X"], inst["problem"], inst["beta_star"], AssumptionConstants(c1=0.5)
    )
    expected = 100 ** 0.25 * float(np.abs(inst["beta_star"].values[0]))
    assert report.beta_min_scaled == pytest.approx(expected)


def test_singular_active_block_raises():
    X = np.column_stack([np.ones(6), np.ones(6), np.arange(6.0)])
    problem = _unweighted_problem(X)
    beta_star = CoefVector([1.0, 1.0, 0.0])
    with pytest.raises(SingularBlockError):
        check_assumptions(DesignMatrix(X), problem, beta_star, None)


def test_proposition_zero_remainder_when_tilde_is_truth():
    rng = np.random.default_rng(239)
    inst = make_instance(rng, n=30, p=4, q=2, tilde_scale=0.0)
    bg = blocked_gram(inst["problem"], inst["beta_star"].support)
    diag = proposition_diagnostics(bg, inst["beta_star"], inst["beta_star"], 1.0, 30)
    assert np.all(diag.R1 == 0.0)
    assert np.all(diag.R2 == 0.0)


def test_proposition_noise_free_events():
    # With eps = 0 injected (counts equal to intensities would be needed; use
    # beta_tilde = beta_star and replace the response by the exact mean),
    # alpha = 0 makes the active event hold iff |beta*_1| > 0 and the
    # inactive event hold trivially.
    X = DesignMatrix(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
    beta_star = CoefVector([0.7, 0.0])
    from signlasso.working import WorkingProblem

    lam = np.exp(X.values @ beta_star.values)
    x_work = X.values * np.sqrt(lam)[:, None]
    problem = WorkingProblem(
        y_work=x_work @ beta_star.values,
        x_work=x_work,
        lambda_tilde=lam,
        eps_tilde=np.zeros(3),
        beta_tilde=beta_star,
    )
    bg = blocked_gram(problem, [0])
    diag = proposition_diagnostics(bg, beta_star, beta_star, 0.0, 3)
    assert np.all(bg.W == 0.0)
    assert diag.An_holds
    assert diag.Bn_holds


def test_d_matches_irrepresentable_vector():
    rng = np.random.default_rng(241)
    inst = make_instance(rng, n=40, p=5, q=2, rho=0.3)
    bg = blocked_gram(inst["problem"], inst["beta_star"].support)
    diag = proposition_diagnostics(bg, inst["beta_star"], inst["beta_tilde"], 2.0, 40)
    np.testing.assert_array_equal(diag.d, irrepresentable_vector(bg, inst["beta_star"]))
    # The candidate minimizer lives on the true active set.
    assert set(diag.beta_check.support) <= set(bg.active_idx)


def test_full_support_makes_inactive_event_vacuous():
    rng = np.random.default_rng(251)
    inst = make_instance(rng, n=30, p=3, q=3)
    bg = blocked_gram(inst["problem"], inst["beta_star"].support)
    diag = proposition_diagnostics(bg, inst["beta_star"], inst["beta_tilde"], 1.0, 30)
    assert diag.Bn_holds
    assert diag.d.size == 0
    assert diag.zeta.size == 0


def _implication_sweep(rng, count):
    """Instances where both events hold must have sign-recovering solutions."""
    events = 0
    for _ in range(count):
        p = int(rng.integers(2, 7))
        q = int(rng.integers(1, min(p, 3) + 1))
        n = int(rng.integers(40, 140))
        rho = float(rng.choice([0.0, 0.2, 0.5]))
        inst = make_instance(
            rng, n=n, p=p, q=q, rho=rho,
            tilde_scale=float(rng.choice([0.0, 0.5, 2.0])),
        )
        alpha = float(rng.choice([0.5, 1.0, 2.0])) * n**0.75
        problem = inst["problem"]
        bg = blocked_gram(problem, inst["beta_star"].support)
        diag = proposition_diagnostics(bg, inst["beta_star"], inst["beta_tilde"], alpha, n)
        if not (diag.An_holds and diag.Bn_holds):
            continue
        events += 1
        result = fit(problem, SolverConfig(alpha=alpha, tol=1e-12, kkt_tol=1e-8))
        assert result.converged, "solver must converge on these benign instances"
        assert np.array_equal(
            result.beta_hat.signs(), inst["beta_star"].signs()
        ), "events held but signs were not recovered"
        # The candidate minimizer built from the event algebra is itself
        # optimal: it passes the KKT check at 1e-6.
        report = kkt_check(problem, diag.beta_check, alpha, 1e-6)
        assert report.all_passed
    return events


def test_event_implication_property():
    rng = np.random.default_rng(257)
    events = _implication_sweep(rng, 80)
    assert events >= 10, f"too few event-positive instances ({events}) to be meaningful"
