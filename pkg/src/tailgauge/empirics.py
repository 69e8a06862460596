"""Daily-return pipeline: ingestion, tail events in time, and crisis-mode
conditional variances.

Dates are normalized to t = i/T in (0, 1] and extreme losses are the
left-tail events {Y <= Q_tau(Y)} (closed at the order-statistic quantile).
For each tau the report carries the histogram density of t given a loss
event, the mode-partitioned conditional variance of t, and its ratio to
the same partitioned variance over the full period. Both the partitioned
and the plain variance denominators are emitted so either normalization
can be read off.

Mode locations are data, not code: presets live in a JSON resource (the
named financial-crisis specifications) and any comma list can be supplied
instead. Raw index data is not bundled; see the README for the expected
CSV schema. A deterministic synthetic i.i.d. fixture generator is provided
for CI use.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.stats import t as student_t

from .diagnostics import (
    HistogramDensity,
    ModePartition,
    histogram_density,
    multimode_variance,
    type1_quantile,
)
from .errors import ConfigurationError, IngestionError, InsufficientTailError
from .serialize import fmt
from .streams import block_rng, block_spans

__all__ = [
    "ReturnSeries",
    "LeftTailRecord",
    "LeftTailReport",
    "load_price_series",
    "subperiod",
    "left_tail_report",
    "mode_presets",
    "partition_from_preset",
    "synthetic_returns",
    "write_returns_csv",
]

DEFAULT_LOSS_TAUS = (0.1, 0.05, 0.01, 0.005)


@dataclass(frozen=True)
class ReturnSeries:
    """Daily log returns with calendar dates and normalized times.

    ``t[i] = (i + 1) / T`` so the last observation sits at t = 1. When the
    series is built from prices, returns are log differences and dates are
    aligned to the later day of each pair.
    """

    dates: np.ndarray
    returns: np.ndarray
    t: np.ndarray
    prices: np.ndarray | None = None

    def __post_init__(self):
        returns = np.ascontiguousarray(self.returns, dtype=float)
        t = np.ascontiguousarray(self.t, dtype=float)
        if returns.ndim != 1 or returns.size == 0:
            raise IngestionError("return series must be a non-empty vector")
        if t.shape != returns.shape or self.dates.shape != returns.shape:
            raise IngestionError("dates, returns, and t must have equal length")
        if not np.all(np.isfinite(returns)):
            raise IngestionError("non-finite return encountered")
        returns.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "returns", returns)
        object.__setattr__(self, "t", t)

    @property
    def T(self) -> int:
        return self.returns.size


def _normalized_t(T: int) -> np.ndarray:
    return np.arange(1, T + 1) / T


def load_price_series(
    path,
    *,
    date_col: str = "date",
    value_col: str = "price",
    kind: str = "price",
) -> ReturnSeries:
    """Read a CSV with a date column and either a price or a return column.

    Prices must be strictly positive and dates strictly increasing; row
    numbers in error messages count from 1 and include the header row.
    """
    if kind not in ("price", "return"):
        raise ConfigurationError(f"kind must be 'price' or 'return', got {kind!r}")
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"input file not found: {path}")
    # round_trip parsing: re-reading our own 17-digit output must be bit-exact
    frame = pd.read_csv(path, float_precision="round_trip")
    for col in (date_col, value_col):
        if col not in frame.columns:
            raise IngestionError(
                f"column {col!r} not in {path.name}; available: {list(frame.columns)}"
            )
    try:
        dates = pd.to_datetime(frame[date_col], format="mixed").to_numpy()
    except (ValueError, TypeError) as exc:
        raise IngestionError(f"unparseable date in column {date_col!r}: {exc}") from None
    deltas = np.diff(dates)
    bad = np.flatnonzero(deltas <= np.timedelta64(0))
    if bad.size:
        row = int(bad[0]) + 3  # 1-based, header + offending second row
        raise IngestionError(
            f"dates must be strictly increasing; violation at file row {row}"
        )
    values = frame[value_col].to_numpy(dtype=float)
    if np.any(~np.isfinite(values)):
        row = int(np.flatnonzero(~np.isfinite(values))[0]) + 2
        raise IngestionError(f"non-finite value at file row {row}")
    if kind == "price":
        if values.size < 2:
            raise IngestionError("need at least two prices to form a return")
        nonpos = np.flatnonzero(values <= 0.0)
        if nonpos.size:
            row = int(nonpos[0]) + 2
            raise IngestionError(f"non-positive price at file row {row}")
        returns = np.diff(np.log(values))
        return ReturnSeries(
            dates=dates[1:], returns=returns, t=_normalized_t(returns.size), prices=values
        )
    return ReturnSeries(dates=dates, returns=values, t=_normalized_t(values.size))


def subperiod(series: ReturnSeries, start, end) -> ReturnSeries:
    """Restrict to returns dated within [start, end], renormalizing t."""
    start = np.datetime64(pd.Timestamp(start))
    end = np.datetime64(pd.Timestamp(end))
    if start > end:
        raise IngestionError(f"subperiod start {start} is after end {end}")
    mask = (series.dates >= start) & (series.dates <= end)
    if not mask.any():
        raise IngestionError(f"no observations between {start} and {end}")
    returns = series.returns[mask]
    return ReturnSeries(
        dates=series.dates[mask], returns=returns, t=_normalized_t(returns.size)
    )


# ---------------------------------------------------------------------------
# Left-tail report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LeftTailRecord:
    tau: float
    quantile: float
    n_observations: int
    density: HistogramDensity
    var_km_tail: float
    var_km_all: float
    var_km_ratio: float
    var_tail: float
    var_all: float
    var_ratio: float

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "quantile": self.quantile,
            "n_observations": self.n_observations,
            "var_km_tail": self.var_km_tail,
            "var_km_all": self.var_km_all,
            "var_km_ratio": self.var_km_ratio,
            "var_tail": self.var_tail,
            "var_all": self.var_all,
            "var_ratio": self.var_ratio,
        }


@dataclass(frozen=True)
class LeftTailReport:
    T: int
    h: float
    modes: tuple
    records: tuple

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "h": self.h,
            "modes": list(self.modes),
            "records": [r.to_dict() for r in self.records],
        }


def left_tail_report(
    series: ReturnSeries,
    taus=DEFAULT_LOSS_TAUS,
    partition: ModePartition | None = None,
    h: float = 0.01,
) -> LeftTailReport:
    """Density of t and partitioned variance of t given extreme losses.

    Conditions on {Y <= Q_tau(Y)} for each tau. With no partition (or a
    single mode) the partitioned variance reduces to the plain conditional
    variance. Warns when the smallest tau leaves fewer than 10 expected
    tail observations.
    """
    taus = tuple(sorted((float(t) for t in taus), reverse=True))
    if not taus or any(not 0.0 < t < 1.0 for t in taus):
        raise ConfigurationError(f"taus must lie in (0, 1), got {taus}")
    if partition is None:
        partition = ModePartition.from_modes([0.0])
    y = series.returns
    T = series.T
    if T * min(taus) < 10.0:
        warnings.warn(
            f"tau={min(taus)} leaves about {T * min(taus):.0f} tail observations; "
            "estimates will be noisy",
            stacklevel=2,
        )
    full_mask = np.ones(T, dtype=bool)
    var_km_all = multimode_variance(series.t, full_mask, partition)
    var_all = float(np.var(series.t))
    records = []
    for tau in taus:
        q = type1_quantile(y, tau)
        mask = y <= q
        n_obs = int(mask.sum())
        if n_obs == 0:
            raise InsufficientTailError(f"no observations at or below Q_{tau}")
        density = histogram_density(series.t, mask, tau, h)
        var_km_tail = multimode_variance(series.t, mask, partition)
        var_tail = float(np.var(series.t[mask]))
        records.append(
            LeftTailRecord(
                tau=tau,
                quantile=q,
                n_observations=n_obs,
                density=density,
                var_km_tail=var_km_tail,
                var_km_all=var_km_all,
                var_km_ratio=var_km_tail / var_km_all if var_km_all > 0 else math.nan,
                var_tail=var_tail,
                var_all=var_all,
                var_ratio=var_tail / var_all if var_all > 0 else math.nan,
            )
        )
    return LeftTailReport(T=T, h=h, modes=partition.modes, records=tuple(records))


# ---------------------------------------------------------------------------
# Mode presets and synthetic fixture
# ---------------------------------------------------------------------------

def mode_presets() -> dict:
    """Named crisis-mode specifications shipped as editable package data."""
    text = resources.files("tailgauge").joinpath("data/mode_presets.json").read_text()
    return {name: tuple(values) for name, values in json.loads(text).items()}


def partition_from_preset(name: str) -> ModePartition:
    presets = mode_presets()
    if name not in presets:
        raise ConfigurationError(
            f"unknown mode preset {name!r}; available: {', '.join(sorted(presets))}"
        )
    return ModePartition.from_modes(presets[name])


def synthetic_returns(T: int, seed: int, *, scale: float = 0.01, df: float = 4.0) -> ReturnSeries:
    """Deterministic i.i.d. Student-t return fixture (no time structure).

    Exchangeability makes the conditional density of t flat and every
    variance ratio one up to sampling noise, which is what the pipeline
    tests assert against.
    """
    if T < 1:
        raise ConfigurationError(f"T must be positive, got {T}")
    parts = []
    for j, _, m in block_spans(T):
        u = block_rng(seed, j).random(m)
        u = np.where(u == 0.0, 2.0**-53, u)
        parts.append(scale * student_t.ppf(u, df))
    returns = np.concatenate(parts)
    dates = np.datetime64("1990-01-01") + np.arange(T).astype("timedelta64[D]")
    return ReturnSeries(dates=dates, returns=returns, t=_normalized_t(T))


def write_returns_csv(series: ReturnSeries, path, *, date_col="date", value_col="return"):
    """Write a return series in the CSV schema the loader expects."""
    path = Path(path)
    days = pd.to_datetime(series.dates)
    lines = [f"{date_col},{value_col}"]
    lines.extend(
        f"{day.date().isoformat()},{fmt(r)}" for day, r in zip(days, series.returns)
    )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
