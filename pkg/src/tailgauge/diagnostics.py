"""Tail rank-condition diagnostics.

Given a sample and a family of tail events, these functions measure how the
covariate distribution behaves conditional on the response being extreme:
conditional Gram matrices and their eigenvalues, conditional variances and
their ratios to the unconditional ones, histogram density estimates, and
mode-partitioned variances for multimodal concentration. A least-squares
fit of the minimum Gram eigenvalue against 1/log(w)^2 checks whether the
eigenvalue decay matches the uniform-exponent rate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, InsufficientTailError
from .estimator import TailThreshold, tail_mask
from .models import ObservationSet

__all__ = [
    "HistogramDensity",
    "ModePartition",
    "TailConditionRecord",
    "TailConditionReport",
    "CovariateVariance",
    "DecayRateFit",
    "histogram_density",
    "multimode_variance",
    "conditional_gram",
    "conditional_variance",
    "decay_slope",
    "decay_rate_fit",
    "tail_condition_report",
    "type1_quantile",
]


def type1_quantile(values: np.ndarray, tau: float) -> float:
    """Left-continuous order-statistic quantile: the ceil(tau*n)-th smallest value."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise DomainError("cannot take a quantile of an empty vector")
    if not 0.0 < tau <= 1.0:
        raise DomainError(f"quantile level must lie in (0, 1], got {tau}")
    k = math.ceil(tau * values.size)
    return float(np.partition(values, k - 1)[k - 1])


# ---------------------------------------------------------------------------
# Histogram density of a [0, 1] variable conditional on a tail event
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HistogramDensity:
    """Histogram density estimate over bins ((j-1)h, jh].

    Masses are counts / (n_total * tail_mass * h): the denominator uses the
    nominal tail probability mass rather than the realized tail count, so
    h * sum(masses) equals n_tail / (n_total * tail_mass) exactly (and 1
    whenever the realized count matches the nominal mass). Both counts are
    reported.
    """

    h: float
    edges: np.ndarray
    counts: np.ndarray
    masses: np.ndarray
    tail_mass: float
    n_total: int
    n_tail: int

    @property
    def n_bins(self) -> int:
        return self.counts.size

    def bin_bounds(self) -> list[tuple[float, float]]:
        return [(float(self.edges[j]), float(self.edges[j + 1])) for j in range(self.n_bins)]


def _bin_count(h: float) -> int:
    n_bins = int(round(1.0 / h))
    if n_bins < 1 or abs(n_bins * h - 1.0) > 1e-9:
        raise DomainError(f"bin width {h} does not divide 1")
    return n_bins


def histogram_density(values, mask, tail_mass: float, h: float) -> HistogramDensity:
    """Histogram density of values in [0, 1] conditional on a mask.

    ``tail_mass`` is the probability mass of the conditioning event (for a
    right tail at quantile level tau this is 1 - tau; for a left tail it is
    tau itself). Values sitting exactly on a bin edge j*h belong to bin j;
    zero belongs to bin 1.
    """
    values = np.asarray(values, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if values.shape != mask.shape or values.ndim != 1:
        raise DomainError("values and mask must be 1-D arrays of equal length")
    if values.size == 0:
        raise DomainError("empty sample")
    if np.any(values < 0.0) or np.any(values > 1.0):
        raise DomainError("histogram values must lie in [0, 1]")
    if not 0.0 < tail_mass <= 1.0:
        raise DomainError(f"tail mass must lie in (0, 1], got {tail_mass}")
    n_bins = _bin_count(h)
    edges = np.arange(n_bins + 1) * h
    selected = values[mask]
    idx = np.searchsorted(edges, selected, side="left")
    idx = np.clip(idx, 1, n_bins)
    counts = np.bincount(idx - 1, minlength=n_bins)
    masses = counts / (values.size * tail_mass * h)
    return HistogramDensity(
        h=h,
        edges=edges,
        counts=counts,
        masses=masses,
        tail_mass=tail_mass,
        n_total=values.size,
        n_tail=int(selected.size),
    )


# ---------------------------------------------------------------------------
# Mode partitions and partitioned variance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModePartition:
    """Ordered mode locations with midpoint cutoffs between neighbours."""

    modes: tuple
    cutoffs: tuple

    @classmethod
    def from_modes(cls, modes) -> "ModePartition":
        modes = tuple(float(m) for m in modes)
        if len(modes) == 0:
            raise ConfigurationError("at least one mode is required")
        if any(b <= a for a, b in zip(modes, modes[1:])):
            raise ConfigurationError(f"modes must be strictly increasing, got {modes}")
        cutoffs = tuple((a + b) / 2.0 for a, b in zip(modes, modes[1:]))
        return cls(modes=modes, cutoffs=cutoffs)

    @property
    def k(self) -> int:
        return len(self.modes)

    def segments(self) -> list[tuple[float, float]]:
        """Half-open segments [lo, hi) covering the line, one per mode."""
        bounds = (-math.inf,) + self.cutoffs + (math.inf,)
        return list(zip(bounds[:-1], bounds[1:]))


def multimode_variance(values, mask, partition: ModePartition) -> float:
    """Sum of within-segment variances of the masked values.

    Segments are split at the partition cutoffs (left-closed). An empty
    segment contributes zero and triggers a warning. With a single mode
    (no cutoffs) this is the plain conditional variance.
    """
    values = np.asarray(values, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    selected = values[mask]
    if selected.size == 0:
        raise InsufficientTailError("empty mask in partitioned variance")
    total = 0.0
    for lo, hi in partition.segments():
        seg = selected[(selected >= lo) & (selected < hi)]
        if seg.size == 0:
            warnings.warn(
                f"no observations in segment [{lo:.4g}, {hi:.4g}); contributes 0",
                stacklevel=2,
            )
            continue
        total += float(np.var(seg))
    return total


# ---------------------------------------------------------------------------
# Conditional Gram matrix and variances
# ---------------------------------------------------------------------------

def _selection_mask(data: ObservationSet, selector) -> np.ndarray:
    if isinstance(selector, TailThreshold):
        return tail_mask(data.response, selector)
    mask = np.asarray(selector, dtype=bool)
    if mask.shape != (data.n,):
        raise DomainError(f"mask must have length {data.n}")
    return mask


def conditional_gram(data: ObservationSet, selector) -> tuple[np.ndarray, np.ndarray]:
    """Average of x x' over the selected rows, with ascending eigenvalues.

    ``selector`` is a resolved :class:`TailThreshold` (strict y > w rule)
    or an explicit boolean mask.
    """
    mask = _selection_mask(data, selector)
    m = int(mask.sum())
    if m == 0:
        raise InsufficientTailError("no observations selected for the Gram matrix")
    X = data.design[mask]
    gram = X.T @ X / m
    return gram, np.linalg.eigvalsh(gram)


@dataclass(frozen=True)
class CovariateVariance:
    """Per-covariate conditional variance and its ratio to the full sample."""

    variance: np.ndarray
    unconditional: np.ndarray
    ratio: np.ndarray
    n_tail: int


def conditional_variance(data: ObservationSet, mask) -> CovariateVariance:
    """Variance of each (non-intercept) covariate over the masked rows."""
    mask = _selection_mask(data, mask)
    m = int(mask.sum())
    if m == 0:
        raise InsufficientTailError("empty mask in conditional variance")
    if m == 1:
        warnings.warn("single observation in the tail; variance is 0", stacklevel=2)
    cov = data.covariates
    variance = np.var(cov[mask], axis=0)
    unconditional = np.var(cov, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(unconditional > 0.0, variance / unconditional, np.nan)
    return CovariateVariance(
        variance=variance, unconditional=unconditional, ratio=ratio, n_tail=m
    )


# ---------------------------------------------------------------------------
# Eigenvalue decay-rate fit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayRateFit:
    """Least-squares decay fit; slope near 1 indicates 1/log(w)^2 decay."""

    slope: float
    intercept: float
    w_grid: tuple
    n_tail: tuple
    min_eigenvalues: tuple
    inv_log_sq: tuple


def decay_slope(w_grid, min_eigenvalues) -> tuple[float, float]:
    """Slope and intercept of log(min eig) on log(1/log(w)^2)."""
    w = np.asarray(w_grid, dtype=float)
    eigs = np.asarray(min_eigenvalues, dtype=float)
    if w.size != eigs.size or w.size < 3:
        raise ConfigurationError("need at least 3 (w, eigenvalue) pairs")
    if np.any(w <= 1.0) or np.any(eigs <= 0.0):
        raise DomainError("w must exceed 1 and eigenvalues must be positive")
    regressor = np.log(1.0 / np.log(w) ** 2)
    if np.ptp(regressor) < 1e-12:
        raise ConfigurationError("degenerate w grid: log(w) values are indistinguishable")
    slope, intercept = np.polyfit(regressor, np.log(eigs), 1)
    return float(slope), float(intercept)


def decay_rate_fit(data: ObservationSet, w_grid, *, min_tail: int = 100) -> DecayRateFit:
    """Fit the decay rate of the tail Gram's minimum eigenvalue over a w grid."""
    w_grid = tuple(float(w) for w in w_grid)
    if len(w_grid) < 3:
        raise ConfigurationError("need at least 3 grid points")
    y = data.response
    n_tails, eig_mins = [], []
    for w in w_grid:
        if not w > 1.0:
            raise DomainError(f"grid threshold {w} must exceed 1")
        mask = y > w
        m = int(mask.sum())
        if m < min_tail:
            raise InsufficientTailError(
                f"only {m} observations above w={w:.6g}; need at least {min_tail}"
            )
        _, eigs = conditional_gram(data, mask)
        n_tails.append(m)
        eig_mins.append(float(eigs[0]))
    slope, intercept = decay_slope(w_grid, eig_mins)
    return DecayRateFit(
        slope=slope,
        intercept=intercept,
        w_grid=w_grid,
        n_tail=tuple(n_tails),
        min_eigenvalues=tuple(eig_mins),
        inv_log_sq=tuple(1.0 / math.log(w) ** 2 for w in w_grid),
    )


# ---------------------------------------------------------------------------
# Per-tau tail condition report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailConditionRecord:
    tau: float
    w: float
    n_tail: int
    variance: tuple
    variance_ratio: tuple
    gram_eigenvalues: tuple
    density: HistogramDensity | None = None
    multimode_variance: float | None = None
    multimode_variance_all: float | None = None
    multimode_ratio: float | None = None

    def to_dict(self) -> dict:
        out = {
            "tau": self.tau,
            "w": self.w,
            "n_tail": self.n_tail,
            "variance": list(self.variance),
            "variance_ratio": list(self.variance_ratio),
            "gram_eigenvalues": list(self.gram_eigenvalues),
        }
        if self.multimode_variance is not None:
            out["multimode_variance"] = self.multimode_variance
            out["multimode_variance_all"] = self.multimode_variance_all
            out["multimode_ratio"] = self.multimode_ratio
        return out


@dataclass(frozen=True)
class TailConditionReport:
    records: tuple

    def to_dict(self) -> dict:
        return {"records": [r.to_dict() for r in self.records]}


def tail_condition_report(
    data: ObservationSet,
    taus,
    *,
    h: float = 0.01,
    partition: ModePartition | None = None,
    side: str = "right",
) -> TailConditionReport:
    """Per-tau conditional diagnostics of the first covariate.

    Right tails condition on {y >= Q_tau(y)} (tail mass 1 - tau); left
    tails on {y <= Q_tau(y)} (tail mass tau), closed at the order-statistic
    quantile in both cases. Histogram densities require the covariate to
    live in [0, 1].
    """
    if side not in ("right", "left"):
        raise ConfigurationError(f"side must be 'right' or 'left', got {side!r}")
    if data.p < 2:
        raise ConfigurationError("report needs at least one non-intercept covariate")
    y = data.response
    x = data.covariates[:, 0]
    records = []
    for tau in sorted(float(t) for t in taus):
        if not 0.0 < tau < 1.0:
            raise ConfigurationError(f"tau must lie in (0, 1), got {tau}")
        q = type1_quantile(y, tau)
        if side == "right":
            mask = y >= q
            mass = 1.0 - tau
        else:
            mask = y <= q
            mass = tau
        density = histogram_density(x, mask, mass, h)
        cv = conditional_variance(data, mask)
        _, eigs = conditional_gram(data, mask)
        record = dict(
            tau=tau,
            w=q,
            n_tail=cv.n_tail,
            variance=tuple(cv.variance),
            variance_ratio=tuple(cv.ratio),
            gram_eigenvalues=tuple(eigs),
            density=density,
        )
        if partition is not None:
            vm_tail = multimode_variance(x, mask, partition)
            vm_all = multimode_variance(x, np.ones_like(mask, dtype=bool), partition)
            record.update(
                multimode_variance=vm_tail,
                multimode_variance_all=vm_all,
                multimode_ratio=vm_tail / vm_all if vm_all > 0 else math.nan,
            )
        records.append(TailConditionRecord(**record))
    return TailConditionReport(records=tuple(records))
