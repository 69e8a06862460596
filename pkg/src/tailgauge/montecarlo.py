"""Seeded, sharded simulation experiments.

Three experiment families: the rank experiment estimates conditional
densities and variance ratios of the covariate given tail events of the
response; the coverage experiment validates the estimator's limit law by
repeated fitting; the rate experiment compares empirical conditional
variances of the exponent against the exact uniform-exponent oracle and
the 1/log(w)^2 benchmark.

Sampling is block-deterministic (see :mod:`tailgauge.streams`): results are
bit-identical across shard counts for a fixed seed, and every experiment
result carries a configuration echo (seed included) sufficient for replay.
Desk-scale defaults use 1e7 draws; raise ``n`` to approach reference scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import kstest

from . import serialize
from .diagnostics import ModePartition, TailConditionReport, tail_condition_report
from .errors import (
    ConfigurationError,
    ConvergenceError,
    ExperimentError,
    InsufficientTailError,
    RankDeficiencyError,
)
from .estimator import (
    ThresholdSpec,
    confidence_intervals,
    exponential_residuals,
    fit,
    standardized_estimate,
)
from .models import (
    Affine,
    ExpAffine,
    ExtremalQuantileDGP,
    TailIndexDGP,
    UniformLaw,
    UniformTailOracle,
    builtin_dgp,
    oracle_conditional_moments,
    sample_extremal_quantile,
    sample_tail_index,
)
from .streams import BLOCK_SIZE, derive_seed

__all__ = [
    "ExperimentConfig",
    "CoverageConfig",
    "RateConfig",
    "RankExperimentResult",
    "CoverageResult",
    "RateExperimentResult",
    "run_rank_experiment",
    "run_coverage_experiment",
    "run_rate_experiment",
    "sample_dgp",
]

DEFAULT_TAUS = (0.9, 0.95, 0.99, 0.995)


def _resolve_dgp(dgp):
    if isinstance(dgp, str):
        return builtin_dgp(dgp)
    if isinstance(dgp, (TailIndexDGP, ExtremalQuantileDGP)):
        return dgp
    raise ConfigurationError(f"unsupported DGP specification {dgp!r}")


def sample_dgp(dgp, n: int, seed: int, *, shards: int = 1):
    """Sample either framework's DGP through the shared block streams."""
    dgp = _resolve_dgp(dgp)
    if isinstance(dgp, TailIndexDGP):
        return sample_tail_index(dgp, n, seed, shards=shards)
    return sample_extremal_quantile(dgp, n, seed, shards=shards)


def _dgp_echo(dgp) -> dict:
    echo = {"name": dgp.name, "x_law": dgp.x_law.descriptor()}
    if isinstance(dgp, TailIndexDGP):
        echo["family"] = "tail-index"
        if hasattr(dgp.alpha_fn, "descriptor"):
            echo["alpha"] = dgp.alpha_fn.descriptor()
    else:
        echo["family"] = "extremal"
        echo["noise"] = dgp.noise
        echo["noise_alpha"] = dgp.noise_alpha
        for label, fn in (("beta", dgp.beta_fn), ("scale", dgp.scale_fn)):
            if hasattr(fn, "descriptor"):
                echo[label] = fn.descriptor()
    return echo


# ---------------------------------------------------------------------------
# Rank experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """Rank-experiment configuration.

    ``n * (1 - max(taus))`` must be at least 1000 so the thinnest tail
    still carries enough observations for a stable density estimate.
    """

    dgp: object
    n: int = 10_000_000
    taus: tuple = DEFAULT_TAUS
    h: float = 0.01
    seed: int = 0
    shards: int = 1
    partition: ModePartition | None = None
    out_dir: Path | None = None

    def __post_init__(self):
        object.__setattr__(self, "dgp", _resolve_dgp(self.dgp))
        taus = tuple(sorted(float(t) for t in self.taus))
        if not taus or any(not 0.0 < t < 1.0 for t in taus):
            raise ConfigurationError(f"taus must lie in (0, 1), got {self.taus}")
        object.__setattr__(self, "taus", taus)
        if self.n < 1:
            raise ConfigurationError(f"n must be positive, got {self.n}")
        if self.n * (1.0 - taus[-1]) < 1000.0:
            raise ConfigurationError(
                f"n={self.n} leaves fewer than 1000 expected tail observations "
                f"at tau={taus[-1]}"
            )
        if self.shards < 1:
            raise ConfigurationError(f"shards must be >= 1, got {self.shards}")
        if self.out_dir is not None:
            object.__setattr__(self, "out_dir", Path(self.out_dir))

    def echo(self) -> dict:
        # the shard count is deliberately absent: results are shard-count
        # invariant, and replay artifacts must be too
        return {
            "experiment": "rank",
            "dgp": _dgp_echo(self.dgp),
            "n": self.n,
            "taus": list(self.taus),
            "h": self.h,
            "seed": self.seed,
            "block_size": BLOCK_SIZE,
            "partition_modes": list(self.partition.modes) if self.partition else None,
        }


@dataclass(frozen=True)
class RankExperimentResult:
    config: dict
    report: TailConditionReport

    def densities(self) -> dict:
        return {r.tau: r.density for r in self.report.records}


def run_rank_experiment(config: ExperimentConfig) -> RankExperimentResult:
    """Estimate per-tau conditional densities and variance ratios of X.

    Conditions on right-tail events {Y >= Q_tau(Y)} for each tau in the
    grid; writes per-tau density CSVs, a report JSON, and a config echo to
    ``config.out_dir`` when set. Output is deterministic in (seed, n)
    regardless of shard count.
    """
    data = sample_dgp(config.dgp, config.n, config.seed, shards=config.shards)
    report = tail_condition_report(
        data, config.taus, h=config.h, partition=config.partition, side="right"
    )
    result = RankExperimentResult(config=config.echo(), report=report)
    if config.out_dir is not None:
        _write_rank_outputs(config, result)
    return result


def _write_rank_outputs(config: ExperimentConfig, result: RankExperimentResult) -> None:
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    serialize.write_json(out / "config.json", result.config)
    serialize.write_json(out / "report.json", result.report.to_dict())
    for record in result.report.records:
        serialize.write_csv(
            out / f"density_tau_{record.tau:g}.csv",
            ("bin_lo", "bin_hi", "density"),
            serialize.density_csv_rows(record.density),
        )


# ---------------------------------------------------------------------------
# Coverage experiment (limit-law validation)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoverageConfig:
    """Repeated-fit validation of the estimator's asymptotic normality.

    The DGP must be exp-linear, alpha(x) = exp(theta0 + theta1 * x), so the
    true coefficient vector is well defined.
    """

    theta_star: tuple = (0.5, 1.0)
    n: int = 100_000
    threshold: ThresholdSpec = field(default_factory=lambda: ThresholdSpec.quantile(0.99))
    replications: int = 500
    level: float = 0.95
    seed: int = 0
    x_law: UniformLaw = field(default_factory=lambda: UniformLaw(0.0, 1.0))

    def __post_init__(self):
        if self.replications < 100:
            raise ConfigurationError(
                f"need at least 100 replications, got {self.replications}"
            )
        if not 0.0 < self.level < 1.0:
            raise ConfigurationError(f"level must lie in (0, 1), got {self.level}")
        if len(self.theta_star) != 2:
            raise ConfigurationError("theta_star must have length 2 (intercept, slope)")

    def dgp(self) -> TailIndexDGP:
        return TailIndexDGP(
            "exp-linear", ExpAffine(self.theta_star[0], self.theta_star[1]), self.x_law
        )

    def echo(self) -> dict:
        return {
            "experiment": "coverage",
            "theta_star": list(self.theta_star),
            "n": self.n,
            "threshold": self.threshold.describe(),
            "replications": self.replications,
            "level": self.level,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class CoverageResult:
    config: dict
    coverage: np.ndarray
    standardized: np.ndarray
    ks_statistics: np.ndarray
    ks_pvalues: np.ndarray
    residual_ks: np.ndarray
    failures: tuple

    @property
    def n_success(self) -> int:
        return self.standardized.shape[0]

    def summary(self) -> dict:
        return {
            "config": self.config,
            "coverage": self.coverage.tolist(),
            "standardized_mean": self.standardized.mean(axis=0).tolist(),
            "standardized_variance": self.standardized.var(axis=0).tolist(),
            "ks_statistics": self.ks_statistics.tolist(),
            "ks_pvalues": self.ks_pvalues.tolist(),
            "replications": self.n_success,
            "failures": list(self.failures),
        }


def run_coverage_experiment(config: CoverageConfig) -> CoverageResult:
    """Fit R independent replications and measure interval coverage.

    Also collects the standardized estimates sqrt(n0) Gram^(1/2)
    (theta_hat - theta*), whose components should look standard normal,
    and the per-replication KS statistic of the exponential residuals at
    the true coefficients. Replications that fail to converge are recorded,
    not dropped silently; more than 5% failures aborts the experiment.
    """
    dgp = config.dgp()
    theta_star = np.asarray(config.theta_star, dtype=float)
    coverage_hits = np.zeros(theta_star.size)
    standardized, residual_ks, failures = [], [], []
    for r in range(config.replications):
        rep_seed = derive_seed(config.seed, r)
        data = sample_tail_index(dgp, config.n, rep_seed)
        try:
            fit_result = fit(data, config.threshold)
        except (ConvergenceError, RankDeficiencyError, InsufficientTailError) as exc:
            failures.append((r, f"{type(exc).__name__}: {exc}"))
            continue
        intervals = confidence_intervals(fit_result, config.level)
        coverage_hits += (intervals[:, 0] <= theta_star) & (theta_star <= intervals[:, 1])
        standardized.append(standardized_estimate(fit_result, theta_star))
        residual_ks.append(
            exponential_residuals(theta_star, data, fit_result.threshold).ks_statistic
        )
    if len(failures) > 0.05 * config.replications:
        raise ExperimentError(
            f"{len(failures)} of {config.replications} replications failed to fit"
        )
    standardized = np.asarray(standardized)
    n_ok = standardized.shape[0]
    ks = [kstest(standardized[:, j], "norm") for j in range(theta_star.size)]
    return CoverageResult(
        config=config.echo(),
        coverage=coverage_hits / n_ok,
        standardized=standardized,
        ks_statistics=np.array([k.statistic for k in ks]),
        ks_pvalues=np.array([k.pvalue for k in ks]),
        residual_ks=np.asarray(residual_ks),
        failures=tuple(failures),
    )


# ---------------------------------------------------------------------------
# Rate experiment (eigenvalue / variance decay against the oracle)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateConfig:
    """Decay comparison for a uniform-exponent DGP (affine alpha over uniform x)."""

    dgp: object = None
    n: int = 10_000_000
    w_grid: tuple = (10.0, 100.0, 1000.0)
    seed: int = 0
    shards: int = 1
    min_tail: int = 100

    def __post_init__(self):
        dgp = _resolve_dgp(self.dgp) if self.dgp is not None else TailIndexDGP(
            "uniform-exponent", Affine(0.0, 1.0), UniformLaw(1.5, 3.5)
        )
        if not isinstance(dgp, TailIndexDGP) or not isinstance(dgp.alpha_fn, Affine):
            raise ConfigurationError(
                "rate experiment requires a tail-index DGP with an affine exponent "
                "(so the exponent is uniformly distributed)"
            )
        object.__setattr__(self, "dgp", dgp)
        grid = tuple(sorted(float(w) for w in self.w_grid))
        if len(grid) < 1 or grid[0] <= 1.0:
            raise ConfigurationError("w grid entries must exceed 1")
        object.__setattr__(self, "w_grid", grid)

    def oracle(self) -> UniformTailOracle:
        ends = self.dgp.alpha_fn(np.array([self.dgp.x_law.low, self.dgp.x_law.high]))
        return UniformTailOracle(float(ends.min()), float(ends.max()))

    def echo(self) -> dict:
        return {
            "experiment": "rate",
            "dgp": _dgp_echo(self.dgp),
            "n": self.n,
            "w_grid": list(self.w_grid),
            "seed": self.seed,
        }


@dataclass(frozen=True)
class RateRow:
    w: float
    n_tail: int
    empirical_variance: float
    oracle_variance: float
    inv_log_sq: float

    @property
    def ratio(self) -> float:
        return self.empirical_variance / self.oracle_variance


@dataclass(frozen=True)
class RateExperimentResult:
    config: dict
    rows: tuple

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "rows": [
                {
                    "w": r.w,
                    "n_tail": r.n_tail,
                    "empirical_variance": r.empirical_variance,
                    "oracle_variance": r.oracle_variance,
                    "inv_log_sq": r.inv_log_sq,
                    "ratio": r.ratio,
                }
                for r in self.rows
            ],
        }


def run_rate_experiment(config: RateConfig) -> RateExperimentResult:
    """Tabulate Var(Z | Y > w) against the exact oracle and 1/log(w)^2."""
    data = sample_dgp(config.dgp, config.n, config.seed, shards=config.shards)
    z = np.asarray(config.dgp.alpha_fn(data.covariates[:, 0]), dtype=float)
    y = data.response
    oracle = config.oracle()
    rows = []
    for w in config.w_grid:
        mask = y > w
        m = int(mask.sum())
        if m < config.min_tail:
            raise InsufficientTailError(
                f"only {m} observations above w={w:.6g}; need {config.min_tail}"
            )
        _, oracle_var = oracle_conditional_moments(oracle, w)
        rows.append(
            RateRow(
                w=w,
                n_tail=m,
                empirical_variance=float(np.var(z[mask])),
                oracle_variance=oracle_var,
                inv_log_sq=1.0 / math.log(w) ** 2,
            )
        )
    return RateExperimentResult(config=config.echo(), rows=tuple(rows))
