"""Linear tail-index regression.

The exponent is modeled as ``alpha(x) = exp(x' theta)`` and estimated from
the observations above a threshold w by minimizing

    sum_i { exp(x_i' theta) * log(y_i / w) - x_i' theta } * 1(y_i > w),

a convex function of theta (every retained log(y_i / w) is positive). The
solver is damped Newton with step halving. Inference uses the retained-
sample Gram matrix: sqrt(n0) * Gram^(1/2) (theta_hat - theta*) is
asymptotically standard normal, so the reported covariance is
(n0 * Gram)^(-1). The Gram matrix of the tail sample tends to become
nearly singular as the threshold grows when alpha truly varies; fitting
aborts with a rank-deficiency error (reporting the eigenvalues) instead of
returning an unstable estimate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import kstest, norm

from .errors import (
    ConfigurationError,
    ConvergenceError,
    DomainError,
    EvaluationOverflowError,
    InsufficientTailError,
    RankDeficiencyError,
)
from .models import ObservationSet

__all__ = [
    "ThresholdSpec",
    "TailThreshold",
    "TailIndexFit",
    "SolverTrace",
    "ResidualDiagnostics",
    "resolve_threshold",
    "tail_mask",
    "objective",
    "score",
    "hessian",
    "fit",
    "confidence_intervals",
    "exponential_residuals",
    "standardized_estimate",
]

_EXP_GUARD = 700.0  # exp() argument cap; beyond this the row is reported, not saturated
GRAM_EIGENVALUE_FLOOR = 1e-12  # times trace/p


@dataclass(frozen=True)
class ThresholdSpec:
    """How to pick the threshold: quantile mass, top count, or absolute value."""

    kind: str
    value: float

    @classmethod
    def quantile(cls, tau: float) -> "ThresholdSpec":
        if not 0.0 < tau < 1.0:
            raise ConfigurationError(f"threshold quantile must lie in (0, 1), got {tau}")
        return cls("quantile", float(tau))

    @classmethod
    def top_count(cls, n0: int) -> "ThresholdSpec":
        if int(n0) != n0 or n0 < 1:
            raise ConfigurationError(f"top count must be a positive integer, got {n0}")
        return cls("top-count", int(n0))

    @classmethod
    def value(cls, w: float) -> "ThresholdSpec":
        if not np.isfinite(w):
            raise ConfigurationError(f"threshold value must be finite, got {w}")
        return cls("value", float(w))

    def describe(self) -> dict:
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class TailThreshold:
    """A resolved threshold: the spec, the value w, and the retained count."""

    spec: ThresholdSpec
    w: float
    n_tail: int


def resolve_threshold(
    response: np.ndarray, spec: ThresholdSpec, *, min_count: int = 2
) -> TailThreshold:
    """Resolve a threshold spec against a response vector.

    The quantile spec maps tau to the ceil(tau * n)-th order statistic
    (left-continuous, type 1); the top-count spec maps n0 to the
    (n - n0)-th order statistic. Retained counts use the strict rule
    y > w and are recomputed after resolution. Raises when the resolved
    threshold does not exceed 1 or retains fewer than ``min_count`` rows.
    """
    y = np.asarray(response, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise DomainError("response must be a non-empty vector")
    n = y.size
    if spec.kind == "quantile":
        k = math.ceil(spec.value * n)
        w = float(np.partition(y, k - 1)[k - 1])
    elif spec.kind == "top-count":
        n0 = int(spec.value)
        if n0 > n:
            raise InsufficientTailError(f"top count {n0} exceeds sample size {n}")
        # Retaining every point leaves no order statistic below the sample;
        # the model support floor w = 1 then fails the w > 1 requirement.
        w = 1.0 if n0 == n else float(np.partition(y, n - n0 - 1)[n - n0 - 1])
    elif spec.kind == "value":
        w = spec.value
    else:
        raise ConfigurationError(f"unknown threshold kind {spec.kind!r}")

    if not w > 1.0:
        raise InsufficientTailError(
            f"resolved threshold w={w:.6g} does not exceed 1; the tail model "
            "is only defined above the support floor"
        )
    n_tail = int(np.count_nonzero(y > w))
    if n_tail < min_count:
        raise InsufficientTailError(
            f"only {n_tail} observations above w={w:.6g}; need at least {min_count}"
        )
    return TailThreshold(spec=spec, w=w, n_tail=n_tail)


def tail_mask(response: np.ndarray, threshold: TailThreshold) -> np.ndarray:
    """Boolean mask of the strictly retained observations (y > w)."""
    return np.asarray(response, dtype=float) > threshold.w


def _retained(data: ObservationSet, threshold: TailThreshold):
    mask = tail_mask(data.response, threshold)
    idx = np.flatnonzero(mask)
    X = data.design[idx]
    logratio = np.log(data.response[idx] / threshold.w)
    return X, logratio, idx


def _linear_predictor(X: np.ndarray, theta: np.ndarray, idx: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (X.shape[1],):
        raise DomainError(f"theta must have length {X.shape[1]}, got shape {theta.shape}")
    eta = X @ theta
    too_big = eta > _EXP_GUARD
    if np.any(too_big):
        row = int(idx[np.argmax(too_big)])
        raise EvaluationOverflowError(
            f"exp(x'theta) overflows at row {row} (x'theta = {eta.max():.3g})", row=row
        )
    return eta


def objective(theta, data: ObservationSet, threshold: TailThreshold) -> float:
    """Negative log-likelihood of the retained sample (convex in theta)."""
    X, t, idx = _retained(data, threshold)
    if X.shape[0] == 0:
        warnings.warn("no observations above the threshold; objective is 0", stacklevel=2)
        return 0.0
    eta = _linear_predictor(X, theta, idx)
    return float(np.sum(np.exp(eta) * t - eta))


def score(theta, data: ObservationSet, threshold: TailThreshold) -> np.ndarray:
    """Gradient of the objective: sum of x_i * (exp(x_i'theta) log(y_i/w) - 1)."""
    X, t, idx = _retained(data, threshold)
    if X.shape[0] == 0:
        warnings.warn("no observations above the threshold; score is zero", stacklevel=2)
        return np.zeros(data.p)
    eta = _linear_predictor(X, theta, idx)
    return X.T @ (np.exp(eta) * t - 1.0)


def hessian(theta, data: ObservationSet, threshold: TailThreshold) -> np.ndarray:
    """Hessian of the objective: sum of x_i x_i' exp(x_i'theta) log(y_i/w).

    A positively weighted Gram sum, hence symmetric positive semidefinite.
    """
    X, t, idx = _retained(data, threshold)
    if X.shape[0] == 0:
        warnings.warn("no observations above the threshold; Hessian is zero", stacklevel=2)
        return np.zeros((data.p, data.p))
    eta = _linear_predictor(X, theta, idx)
    return (X * (np.exp(eta) * t)[:, None]).T @ X


@dataclass(frozen=True)
class SolverTrace:
    iterations: int
    grad_norm: float
    converged: bool


@dataclass(frozen=True)
class TailIndexFit:
    """Fitted tail-index regression with Gram-based inference quantities."""

    theta: np.ndarray
    gram: np.ndarray
    gram_eigenvalues: np.ndarray
    covariance: np.ndarray
    threshold: TailThreshold
    trace: SolverTrace

    @property
    def n_tail(self) -> int:
        return self.threshold.n_tail

    @property
    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))


def fit(
    data: ObservationSet,
    threshold_spec: ThresholdSpec,
    *,
    max_iter: int = 100,
    grad_tol: float = 1e-10,
) -> TailIndexFit:
    """Fit the tail-index regression by damped Newton iteration.

    Starts at the constant-index maximum likelihood value for the
    intercept (zeros elsewhere), which keeps exp(.) moderate. Convergence
    is declared when the gradient norm falls below
    ``grad_tol * max(1, |objective|)``.

    Raises :class:`InsufficientTailError` when fewer than p + 1 rows are
    retained, :class:`RankDeficiencyError` when the retained-sample Gram
    matrix (or a Newton Hessian) is numerically singular, and
    :class:`ConvergenceError` after ``max_iter`` iterations.
    """
    threshold = resolve_threshold(data.response, threshold_spec, min_count=data.p + 1)
    X, t, idx = _retained(data, threshold)
    n0, p = X.shape

    gram = X.T @ X / n0
    eigs = np.linalg.eigvalsh(gram)
    floor = GRAM_EIGENVALUE_FLOOR * float(np.trace(gram)) / p
    if eigs[0] <= floor:
        raise RankDeficiencyError(
            f"tail Gram matrix is numerically singular (min eigenvalue "
            f"{eigs[0]:.3e} <= floor {floor:.3e}); the tail sample carries "
            "no usable covariate variation",
            eigenvalues=eigs,
        )

    theta = np.zeros(p)
    theta[0] = math.log(n0 / float(t.sum()))

    def value(th) -> float:
        try:
            eta = _linear_predictor(X, th, idx)
        except EvaluationOverflowError:
            return math.inf
        return float(np.sum(np.exp(eta) * t - eta))

    f = value(theta)
    grad = X.T @ (np.exp(X @ theta) * t - 1.0)
    grad_norm = float(np.linalg.norm(grad))
    iterations = 0
    converged = grad_norm <= grad_tol * max(1.0, abs(f))

    while not converged and iterations < max_iter:
        iterations += 1
        eta = _linear_predictor(X, theta, idx)
        weights = np.exp(eta) * t
        H = (X * weights[:, None]).T @ X
        try:
            step = np.linalg.solve(H, -grad)
        except np.linalg.LinAlgError:
            raise RankDeficiencyError(
                "Newton Hessian is singular; tail Gram eigenvalues "
                f"{np.array2string(eigs, precision=3)}",
                eigenvalues=eigs,
            ) from None
        lam = 1.0
        slope = float(grad @ step)
        f_new = value(theta + lam * step)
        while f_new > f + 1e-4 * lam * slope and lam > 1e-12:
            lam *= 0.5
            f_new = value(theta + lam * step)
        theta = theta + lam * step
        f = f_new
        grad = X.T @ (np.exp(X @ theta) * t - 1.0)
        grad_norm = float(np.linalg.norm(grad))
        converged = grad_norm <= grad_tol * max(1.0, abs(f))

    trace = SolverTrace(iterations=iterations, grad_norm=grad_norm, converged=converged)
    if not converged:
        raise ConvergenceError(
            f"Newton solver did not converge in {max_iter} iterations "
            f"(gradient norm {grad_norm:.3e})",
            trace=trace,
        )
    covariance = np.linalg.inv(n0 * gram)
    return TailIndexFit(
        theta=theta,
        gram=gram,
        gram_eigenvalues=eigs,
        covariance=covariance,
        threshold=threshold,
        trace=trace,
    )


def confidence_intervals(fit_result: TailIndexFit, level: float) -> np.ndarray:
    """Per-coefficient normal intervals theta_j +/- z_(1+level)/2 * se_j.

    Returns a (p, 2) array of (lower, upper) bounds.
    """
    if not 0.0 < level < 1.0:
        raise DomainError(f"coverage level must lie in (0, 1), got {level}")
    if fit_result.covariance is None:
        raise RankDeficiencyError(
            "covariance undefined for this fit", eigenvalues=fit_result.gram_eigenvalues
        )
    z = norm.ppf(0.5 * (1.0 + level))
    half = z * fit_result.standard_errors
    return np.column_stack([fit_result.theta - half, fit_result.theta + half])


@dataclass(frozen=True)
class ResidualDiagnostics:
    """Tail residuals and their distance from the unit exponential law."""

    residuals: np.ndarray
    ks_statistic: float

    @property
    def n_tail(self) -> int:
        return self.residuals.size


def exponential_residuals(
    theta, data: ObservationSet, threshold: TailThreshold | ThresholdSpec | None = None
) -> ResidualDiagnostics:
    """Residuals r_i = exp(x_i'theta) * log(y_i / w) over the retained rows.

    At the true coefficient vector these are i.i.d. unit exponential given
    the tail event, so the returned Kolmogorov-Smirnov statistic against
    Exp(1) measures specification error. ``theta`` may be a coefficient
    vector (with an explicit threshold) or a :class:`TailIndexFit`.
    """
    if isinstance(theta, TailIndexFit):
        if threshold is None:
            threshold = theta.threshold
        theta = theta.theta
    if threshold is None:
        raise ConfigurationError("a threshold is required when passing a raw theta")
    if isinstance(threshold, ThresholdSpec):
        threshold = resolve_threshold(data.response, threshold)
    X, t, idx = _retained(data, threshold)
    if X.shape[0] == 0:
        raise InsufficientTailError("no observations above the threshold")
    eta = _linear_predictor(X, theta, idx)
    residuals = np.exp(eta) * t
    ks = float(kstest(residuals, "expon").statistic)
    return ResidualDiagnostics(residuals=residuals, ks_statistic=ks)


def standardized_estimate(fit_result: TailIndexFit, theta_star) -> np.ndarray:
    """sqrt(n0) * Gram^(1/2) (theta_hat - theta*), standard normal in the limit.

    Gram^(1/2) is the symmetric positive semidefinite square root.
    """
    theta_star = np.asarray(theta_star, dtype=float)
    evals, evecs = np.linalg.eigh(fit_result.gram)
    root = (evecs * np.sqrt(np.maximum(evals, 0.0))) @ evecs.T
    return math.sqrt(fit_result.n_tail) * (root @ (fit_result.theta - theta_star))
