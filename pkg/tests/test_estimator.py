import math

import numpy as np
import pytest
from scipy.special import kolmogi
from scipy.stats import norm

import tailgauge.estimator as est
from tailgauge.errors import (
    ConfigurationError,
    DomainError,
    EvaluationOverflowError,
    InsufficientTailError,
)
from tailgauge.models import ExpAffine, ObservationSet, TailIndexDGP, sample_tail_index


def make_obs(design, response):
    return ObservationSet(design=np.asarray(design, float),
                          response=np.asarray(response, float), seed=0)


def random_fixture(rng, n=40, p=3, theta_scale=0.4):
    x = rng.uniform(-1.0, 1.0, size=(n, p - 1))
    design = np.column_stack([np.ones(n), x])
    alpha = np.exp(rng.uniform(0.3, 1.0) + x @ rng.uniform(-0.5, 0.5, p - 1))
    y = rng.uniform(size=n) ** (-1.0 / alpha)
    obs = make_obs(design, 1.5 * y + 1.0)  # shift up so thresholds exceed 1
    theta = rng.uniform(-theta_scale, theta_scale, p)
    thr = est.resolve_threshold(obs.response, est.ThresholdSpec.quantile(0.5))
    return obs, thr, theta


def finite_difference_gradient(fun, theta, h=1e-6):
    theta = np.asarray(theta, float)
    grad = np.zeros_like(theta)
    for j in range(theta.size):
        step = np.zeros_like(theta)
        step[j] = h * max(1.0, abs(theta[j]))
        grad[j] = (fun(theta + step) - fun(theta - step)) / (2.0 * step[j])
    return grad


# ---------------------------------------------------------------------------
# Threshold resolution
# ---------------------------------------------------------------------------

def test_top_count_on_small_sample():
    y = np.arange(1.0, 11.0)
    thr = est.resolve_threshold(y, est.ThresholdSpec.top_count(3))
    assert thr.w == 7.0
    assert thr.n_tail == 3


def test_quantile_resolution():
    y = np.arange(1.0, 101.0)  # 100 distinct values
    thr = est.resolve_threshold(y, est.ThresholdSpec.quantile(0.9))
    assert thr.w == 90.0
    assert thr.n_tail == 10


def test_top_count_all_points_fails_w_floor():
    y = np.array([0.5, 2.0, 3.0, 4.0])
    with pytest.raises(InsufficientTailError, match="exceed 1"):
        est.resolve_threshold(y, est.ThresholdSpec.top_count(4))


def test_threshold_spec_validation():
    with pytest.raises(ConfigurationError):
        est.ThresholdSpec.quantile(1.0)
    with pytest.raises(ConfigurationError):
        est.ThresholdSpec.top_count(0)
    with pytest.raises(ConfigurationError):
        est.ThresholdSpec.value(math.inf)
    with pytest.raises(InsufficientTailError):
        est.resolve_threshold(np.array([1.0, 2.0]), est.ThresholdSpec.top_count(3))


def test_counts_recomputed_with_ties():
    y = np.array([1.5, 2.0, 2.0, 2.0, 3.0, 4.0])
    thr = est.resolve_threshold(y, est.ThresholdSpec.value(2.0))
    assert thr.n_tail == 2  # strict inequality drops the ties


# ---------------------------------------------------------------------------
# Objective / score / Hessian
# ---------------------------------------------------------------------------

def test_objective_at_zero_is_sum_of_logs():
    obs = make_obs([[1.0], [1.0], [1.0], [1.0]], [1.0, 2.0, 4.0, 8.0])
    thr = est.resolve_threshold(obs.response, est.ThresholdSpec.value(1.5))
    expected = sum(math.log(v / 1.5) for v in (2.0, 4.0, 8.0))
    assert est.objective(np.zeros(1), obs, thr) == pytest.approx(expected)


def test_intercept_only_closed_form_is_stationary():
    rng = np.random.default_rng(4)
    y = rng.uniform(size=200) ** (-1.0 / 2.0)
    obs = make_obs(np.ones((200, 1)), y)
    thr = est.resolve_threshold(obs.response, est.ThresholdSpec.quantile(0.5))
    t = np.log(obs.response[obs.response > thr.w] / thr.w)
    theta0 = math.log(thr.n_tail / t.sum())
    assert est.score(np.array([theta0]), obs, thr) == pytest.approx(np.zeros(1), abs=1e-10)
    for delta in (-0.1, 0.1):
        assert est.objective(np.array([theta0 + delta]), obs, thr) > est.objective(
            np.array([theta0]), obs, thr
        )


def test_objective_brute_force_five_rows():
    design = [[1.0, 0.2], [1.0, -0.4], [1.0, 0.9], [1.0, 0.5], [1.0, -0.1]]
    response = [3.0, 1.2, 7.5, 2.4, 5.0]
    obs = make_obs(design, response)
    thr = est.resolve_threshold(obs.response, est.ThresholdSpec.value(2.0))
    theta = np.array([0.3, -0.7])
    brute = 0.0
    for row, y in zip(design, response):
        if y > 2.0:
            eta = row[0] * theta[0] + row[1] * theta[1]
            brute += math.exp(eta) * math.log(y / 2.0) - eta
    assert est.objective(theta, obs, thr) == pytest.approx(brute, rel=1e-12)


def test_score_and_hessian_match_finite_differences():
    rng = np.random.default_rng(11)
    for _ in range(5):
        obs, thr, theta = random_fixture(rng, n=20, p=3)
        fun = lambda th: est.objective(th, obs, thr)
        analytic = est.score(theta, obs, thr)
        fd = finite_difference_gradient(fun, theta)
        assert np.allclose(analytic, fd, rtol=1e-6, atol=1e-8)
        H = est.hessian(theta, obs, thr)
        fd_H = np.column_stack(
            [
                finite_difference_gradient(
                    lambda th: est.score(th, obs, thr)[j], theta, h=1e-6
                )
                for j in range(theta.size)
            ]
        )
        assert np.allclose(H, fd_H, rtol=1e-5, atol=1e-6)


def test_hessian_single_row_unit():
    obs = make_obs([[1.0], [1.0]], [1.0, math.e])
    thr = est.TailThreshold(est.ThresholdSpec.value(1.0), w=1.0, n_tail=1)
    # log(e / 1) = 1 and exp(0) = 1, so the 1x1 Hessian is 1
    assert est.hessian(np.zeros(1), obs, thr) == pytest.approx(np.array([[1.0]]))


def test_hessian_positive_semidefinite():
    rng = np.random.default_rng(12)
    for _ in range(5):
        obs, thr, theta = random_fixture(rng)
        eigs = np.linalg.eigvalsh(est.hessian(theta, obs, thr))
        assert eigs.min() >= -1e-10


def test_empty_tail_warns_and_returns_zero():
    obs = make_obs([[1.0, 0.1], [1.0, 0.2]], [2.0, 3.0])
    thr = est.TailThreshold(est.ThresholdSpec.value(10.0), w=10.0, n_tail=0)
    with pytest.warns(UserWarning):
        assert np.array_equal(est.score(np.zeros(2), obs, thr), np.zeros(2))


def test_overflow_guard_reports_row():
    obs = make_obs([[1.0, 0.5], [1.0, 800.0]], [3.0, 4.0])
    thr = est.resolve_threshold(obs.response, est.ThresholdSpec.value(2.0))
    with pytest.raises(EvaluationOverflowError) as excinfo:
        est.objective(np.array([0.0, 1.0]), obs, thr)
    assert excinfo.value.row == 1


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------

def test_fit_intercept_only_matches_hill_closed_form():
    rng = np.random.default_rng(21)
    y = rng.uniform(size=5000) ** (-1.0 / 3.0)
    obs = make_obs(np.ones((5000, 1)), y)
    result = est.fit(obs, est.ThresholdSpec.quantile(0.9))
    t = np.log(obs.response[obs.response > result.threshold.w] / result.threshold.w)
    closed_form = math.log(result.n_tail / t.sum())
    assert result.theta[0] == pytest.approx(closed_form, abs=1e-8)
    assert result.trace.converged


def test_fit_recovers_exp_linear_coefficients():
    dgp = TailIndexDGP("exp-linear", ExpAffine(0.5, 1.0))
    hits = np.zeros(2)
    runs = 100
    for r in range(runs):
        obs = sample_tail_index(dgp, 100_000, seed=9000 + r)
        result = est.fit(obs, est.ThresholdSpec.quantile(0.99))
        se = result.standard_errors
        hits += np.abs(result.theta - np.array([0.5, 1.0])) <= 3.0 * se
    assert np.all(hits / runs >= 0.9)


def test_fit_requires_enough_tail_rows():
    obs = make_obs([[1.0, 0.1], [1.0, 0.4], [1.0, 0.9]], [1.5, 2.5, 30.0])
    with pytest.raises(InsufficientTailError):
        est.fit(obs, est.ThresholdSpec.top_count(2))


def test_fit_detects_rank_deficiency():
    rng = np.random.default_rng(3)
    n = 400
    constant = np.full(n, 0.7)
    design = np.column_stack([np.ones(n), constant])
    y = rng.uniform(size=n) ** (-1.0 / 2.0) + 1.0
    with pytest.raises(est.RankDeficiencyError) as excinfo:
        est.fit(ObservationSet(design=design, response=y, seed=0),
                est.ThresholdSpec.quantile(0.5))
    assert excinfo.value.eigenvalues is not None


def test_fit_determinism():
    dgp = TailIndexDGP("exp-linear", ExpAffine(0.5, 1.0))
    obs = sample_tail_index(dgp, 50_000, seed=5150)
    a = est.fit(obs, est.ThresholdSpec.quantile(0.95))
    b = est.fit(obs, est.ThresholdSpec.quantile(0.95))
    assert a.theta.tobytes() == b.theta.tobytes()


def test_affine_reparameterization_consistency():
    dgp = TailIndexDGP("exp-linear", ExpAffine(0.4, 0.8))
    obs = sample_tail_index(dgp, 40_000, seed=606)
    result = est.fit(obs, est.ThresholdSpec.quantile(0.95))

    a, b = 2.0, -3.0
    x = obs.covariates[:, 0]
    remapped = ObservationSet(
        design=np.column_stack([np.ones(obs.n), a + b * x]), response=obs.response, seed=0
    )
    result2 = est.fit(remapped, est.ThresholdSpec.quantile(0.95))
    assert result2.theta[1] == pytest.approx(result.theta[1] / b, rel=1e-6)
    assert result2.theta[0] == pytest.approx(
        result.theta[0] - a * result.theta[1] / b, rel=1e-6
    )
    eta = obs.design @ result.theta
    eta2 = remapped.design @ result2.theta
    assert np.allclose(np.exp(eta), np.exp(eta2), atol=1e-8)


def test_objective_convexity_property():
    rng = np.random.default_rng(77)
    obs, thr, _ = random_fixture(rng, n=60, p=3)
    for _ in range(25):
        t1 = rng.uniform(-0.6, 0.6, 3)
        t2 = rng.uniform(-0.6, 0.6, 3)
        lam = rng.uniform(0.05, 0.95)
        mix = est.objective(lam * t1 + (1 - lam) * t2, obs, thr)
        assert mix <= lam * est.objective(t1, obs, thr) + (1 - lam) * est.objective(
            t2, obs, thr
        ) + 1e-9


# ---------------------------------------------------------------------------
# Confidence intervals and residuals
# ---------------------------------------------------------------------------

def test_interval_halfwidth_value():
    fit_like = est.TailIndexFit(
        theta=np.array([1.0]),
        gram=np.eye(1),
        gram_eigenvalues=np.array([1.0]),
        covariance=np.array([[0.04]]),
        threshold=est.TailThreshold(est.ThresholdSpec.value(2.0), w=2.0, n_tail=25),
        trace=est.SolverTrace(iterations=3, grad_norm=0.0, converged=True),
    )
    intervals = est.confidence_intervals(fit_like, 0.95)
    half = intervals[0, 1] - 1.0
    assert half == pytest.approx(norm.ppf(0.975) * 0.2, abs=1e-12)
    assert half == pytest.approx(0.392, abs=1e-3)
    with pytest.raises(DomainError):
        est.confidence_intervals(fit_like, 1.2)


def test_exponential_residuals_properties():
    dgp = TailIndexDGP("exp-linear", ExpAffine(0.5, 1.0))
    theta_star = np.array([0.5, 1.0])
    crit = kolmogi(0.01)
    passes = 0
    runs = 50
    for r in range(runs):
        obs = sample_tail_index(dgp, 20_000, seed=3200 + r)
        diag = est.exponential_residuals(theta_star, obs, est.ThresholdSpec.quantile(0.9))
        assert np.all(diag.residuals > 0.0)
        assert abs(diag.residuals.mean() - 1.0) <= 4.0 / math.sqrt(diag.n_tail)
        passes += diag.ks_statistic <= crit / math.sqrt(diag.n_tail)
    assert passes >= 0.97 * runs


def test_exponential_residuals_accepts_fit():
    dgp = TailIndexDGP("exp-linear", ExpAffine(0.5, 1.0))
    obs = sample_tail_index(dgp, 30_000, seed=88)
    result = est.fit(obs, est.ThresholdSpec.quantile(0.95))
    diag = est.exponential_residuals(result, obs)
    assert diag.n_tail == result.n_tail
    with pytest.raises(ConfigurationError):
        est.exponential_residuals(np.array([0.5, 1.0]), obs)  # threshold required


def test_standardized_estimate_shape():
    dgp = TailIndexDGP("exp-linear", ExpAffine(0.5, 1.0))
    obs = sample_tail_index(dgp, 30_000, seed=99)
    result = est.fit(obs, est.ThresholdSpec.quantile(0.95))
    z = est.standardized_estimate(result, (0.5, 1.0))
    assert z.shape == (2,)
    assert np.all(np.isfinite(z))
