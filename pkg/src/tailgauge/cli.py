"""Command-line front door.

Subcommands: ``simulate`` (rank experiment, optionally the extremal
non-degeneracy table), ``estimate`` (tail-index regression on a CSV),
``diagnose`` (tail condition report for a CSV), and ``empirics`` (daily
return pipeline). Every run writes a manifest before any other artifact;
re-running with the manifest's flag set reproduces all outputs
byte-identically. Exit codes: 0 success, 1 domain or configuration error,
2 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import traceback
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__, serialize
from .diagnostics import ModePartition, tail_condition_report
from .empirics import (
    DEFAULT_LOSS_TAUS,
    left_tail_report,
    load_price_series,
    mode_presets,
    subperiod,
)
from .errors import ConfigurationError, IngestionError, TailgaugeError
from .estimator import ThresholdSpec, confidence_intervals, exponential_residuals, fit
from .extremal import verify_nondegeneracy
from .models import (
    BUILTIN_DGP_NAMES,
    ExtremalQuantileDGP,
    ObservationSet,
    builtin_dgp,
    dgp_from_config,
    load_dgp_config,
    pareto_rectangle_dgp,
)
from .montecarlo import DEFAULT_TAUS, ExperimentConfig, run_rank_experiment

__all__ = ["RunManifest", "build_parser", "dispatch", "main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse parser that reports usage problems via exit code 1."""

    def error(self, message):
        raise _UsageError(f"{message}\n{self.format_usage()}")


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to replay a run bit-identically.

    The shard count is not part of the manifest: results are shard-count
    invariant, so it is pure execution scheduling, and recording it would
    make otherwise identical runs differ byte-wise.
    """

    subcommand: str
    arguments: dict
    seed: int
    version: str
    input_digests: dict
    outputs: tuple

    def to_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "arguments": self.arguments,
            "seed": self.seed,
            "version": self.version,
            "input_digests": self.input_digests,
            "outputs": list(self.outputs),
        }


def _parse_floats(text: str, what: str) -> tuple:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise ConfigurationError(f"could not parse {what} list {text!r}") from None
    if not values:
        raise ConfigurationError(f"empty {what} list")
    return values

_DGP4M_MODES = (0.0, math.pi / 10, math.pi / 5, 3 * math.pi / 10)


def resolve_modes(arg: str | None) -> ModePartition | None:
    """Turn --modes into a partition: preset name, 'dgp4m', or comma list."""
    if arg is None:
        return None
    presets = mode_presets()
    if arg in presets:
        return ModePartition.from_modes(presets[arg])
    if arg == "dgp4m":
        return ModePartition.from_modes(_DGP4M_MODES)
    return ModePartition.from_modes(_parse_floats(arg, "modes"))


def _load_design_csv(path, response_col: str) -> ObservationSet:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"data file not found: {path}")
    frame = pd.read_csv(path, float_precision="round_trip")
    if response_col not in frame.columns:
        raise ConfigurationError(
            f"response column {response_col!r} not in {path.name}; "
            f"available: {list(frame.columns)}"
        )
    # covariates: the remaining numeric columns, in file order
    covariate_cols = [
        c
        for c in frame.columns
        if c != response_col and pd.api.types.is_numeric_dtype(frame[c])
    ]
    if not covariate_cols:
        raise ConfigurationError("no numeric covariate columns besides the response")
    try:
        y = frame[response_col].to_numpy(dtype=float)
    except (ValueError, TypeError) as exc:
        raise IngestionError(f"non-numeric response in {path.name}: {exc}") from None
    covs = frame[covariate_cols].to_numpy(dtype=float)
    design = np.column_stack([np.ones(len(frame)), covs])
    return ObservationSet(design=design, response=y, seed=0)


def _out_dir(args) -> Path:
    if args.out_dir is not None:
        return Path(args.out_dir)
    stamp = datetime.now().strftime("%Y%m%dT%H%M%S")
    return Path("tailgauge-out") / stamp


def _write_manifest(args, out_dir: Path, inputs: dict, outputs: list) -> None:
    skip = {"handler", "out_dir", "json_errors", "shards"}
    arguments = {
        key: (str(value) if isinstance(value, Path) else value)
        for key, value in sorted(vars(args).items())
        if key not in skip and not callable(value)
    }
    digests = {}
    for name, p in inputs.items():
        if not Path(p).exists():
            raise ConfigurationError(f"{name} file not found: {p}")
        digests[name] = serialize.sha256_file(p)
    manifest = RunManifest(
        subcommand=args.subcommand,
        arguments=arguments,
        seed=getattr(args, "seed", 0),
        version=__version__,
        input_digests=digests,
        outputs=tuple(outputs),
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    serialize.write_json(out_dir / "manifest.json", manifest.to_dict())


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _resolve_cli_dgp(args):
    if args.dgp_config is not None:
        return dgp_from_config(load_dgp_config(args.dgp_config))
    if args.dgp is None:
        raise ConfigurationError(
            f"one of --dgp / --dgp-config is required; built-in DGPs: "
            f"{', '.join(BUILTIN_DGP_NAMES)}"
        )
    return builtin_dgp(args.dgp)


def _cmd_simulate(args) -> None:
    dgp = _resolve_cli_dgp(args)
    taus = _parse_floats(args.taus, "taus")
    partition = resolve_modes(args.modes)
    out_dir = _out_dir(args)
    outputs = ["config.json", "report.json"]
    outputs += [f"density_tau_{tau:g}.csv" for tau in sorted(taus)]
    if args.verify_theorem3:
        outputs += ["nondegeneracy_comparison.csv", "nondegeneracy_report.json"]
    inputs = {}
    if args.dgp_config is not None:
        inputs["dgp_config"] = args.dgp_config
    _write_manifest(args, out_dir, inputs, outputs)

    config = ExperimentConfig(
        dgp=dgp,
        n=args.n,
        taus=taus,
        h=args.h,
        seed=args.seed,
        shards=args.shards,
        partition=partition,
        out_dir=out_dir,
    )
    run_rank_experiment(config)

    if args.verify_theorem3:
        alpha = args.verify_alpha
        if alpha is None:
            alpha = dgp.noise_alpha if isinstance(dgp, ExtremalQuantileDGP) else 2.0
        companion = pareto_rectangle_dgp(alpha, name=f"{dgp.name}-rectangle")
        if args.verify_noise == "abs-student-t":
            companion = ExtremalQuantileDGP(
                companion.name,
                beta_fn=companion.beta_fn,
                scale_fn=companion.scale_fn,
                noise_alpha=alpha,
                x_law=companion.x_law,
                noise="abs-student-t",
            )
        report = verify_nondegeneracy(
            companion,
            _parse_floats(args.verify_levels, "verification levels"),
            args.n,
            args.seed,
            shards=args.shards,
        )
        serialize.write_json(out_dir / "nondegeneracy_report.json", report.to_dict())
        serialize.write_csv(
            out_dir / "nondegeneracy_comparison.csv",
            (
                "level",
                "w",
                "n_tail",
                "mode",
                "sup_empirical_vs_exact",
                "max_se_units",
                "sup_empirical_vs_limit",
                "sup_exact_vs_limit",
                "var_x1",
                "var_x2",
            ),
            [
                (
                    r.level,
                    r.w,
                    r.n_tail,
                    r.mode,
                    r.sup_empirical_vs_exact,
                    r.max_se_units,
                    r.sup_empirical_vs_limit,
                    r.sup_exact_vs_limit,
                    r.var_x1,
                    r.var_x2,
                )
                for r in report.records
            ],
        )


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------

def _threshold_from_args(args) -> ThresholdSpec:
    given = [
        spec
        for spec in (
            ("quantile", args.threshold_quantile),
            ("top-count", args.top_count),
            ("value", args.threshold_value),
        )
        if spec[1] is not None
    ]
    if len(given) != 1:
        raise ConfigurationError(
            "exactly one of --threshold-quantile / --top-count / --threshold-value "
            "is required"
        )
    kind, value = given[0]
    if kind == "quantile":
        return ThresholdSpec.quantile(value)
    if kind == "top-count":
        return ThresholdSpec.top_count(value)
    return ThresholdSpec.value(value)


def _cmd_estimate(args) -> None:
    out_dir = _out_dir(args)
    out_name = args.out or "estimate.json"
    out_path = Path(out_name)
    if not out_path.is_absolute():
        out_path = out_dir / out_path
    _write_manifest(args, out_dir, {"data": args.data}, [str(out_path.name)])

    data = _load_design_csv(args.data, args.response)
    spec = _threshold_from_args(args)
    result = fit(data, spec)
    intervals = confidence_intervals(result, args.level)
    residuals = exponential_residuals(result, data)
    serialize.write_json(
        out_path,
        {
            "theta": result.theta,
            "standard_errors": result.standard_errors,
            "intervals": intervals,
            "gram_eigenvalues": result.gram_eigenvalues,
            "n0": result.n_tail,
            "w": result.threshold.w,
            "ks_statistic": residuals.ks_statistic,
            "level": args.level,
            "iterations": result.trace.iterations,
            "converged": result.trace.converged,
            "threshold_spec": result.threshold.spec.describe(),
        },
    )


# ---------------------------------------------------------------------------
# diagnose
# ---------------------------------------------------------------------------

def _cmd_diagnose(args) -> None:
    taus = _parse_floats(args.taus, "taus")
    out_dir = _out_dir(args)
    report_name = args.out or "report.json"
    outputs = [report_name] + [f"histogram_tau_{tau:g}.csv" for tau in sorted(taus)]
    _write_manifest(args, out_dir, {"data": args.data}, outputs)

    data = _load_design_csv(args.data, args.response)
    partition = resolve_modes(args.modes)
    report = tail_condition_report(data, taus, h=args.h, partition=partition, side="right")
    serialize.write_json(out_dir / report_name, report.to_dict())
    for record in report.records:
        serialize.write_csv(
            out_dir / f"histogram_tau_{record.tau:g}.csv",
            ("bin_lo", "bin_hi", "density"),
            serialize.density_csv_rows(record.density),
        )


# ---------------------------------------------------------------------------
# empirics
# ---------------------------------------------------------------------------

def _cmd_empirics(args) -> None:
    if (args.prices is None) == (args.returns is None):
        raise ConfigurationError("exactly one of --prices / --returns is required")
    taus = _parse_floats(args.taus, "taus")
    out_dir = _out_dir(args)
    outputs = ["empirics_report.json"] + [
        f"density_tau_{tau:g}.csv" for tau in sorted(taus, reverse=True)
    ]
    path = args.prices if args.prices is not None else args.returns
    _write_manifest(args, out_dir, {"data": path}, outputs)

    kind = "price" if args.prices is not None else "return"
    value_col = args.value_col or ("price" if kind == "price" else "return")
    series = load_price_series(
        path, date_col=args.date_col, value_col=value_col, kind=kind
    )
    if args.start is not None or args.end is not None:
        start = args.start or str(pd.Timestamp(series.dates.min()).date())
        end = args.end or str(pd.Timestamp(series.dates.max()).date())
        series = subperiod(series, start, end)
    partition = resolve_modes(args.modes)
    report = left_tail_report(series, taus, partition, h=args.h)
    serialize.write_json(out_dir / "empirics_report.json", report.to_dict())
    for record in report.records:
        serialize.write_csv(
            out_dir / f"density_tau_{record.tau:g}.csv",
            ("bin_lo", "bin_hi", "density"),
            serialize.density_csv_rows(record.density),
        )


# ---------------------------------------------------------------------------
# Parser and dispatch
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument(
        "--shards", type=int, default=None,
        help="worker count for sampling (default: available cores); results are shard-count invariant",
    )
    common.add_argument("--out-dir", type=Path, default=None, help="output directory")
    common.add_argument(
        "--json-errors", action="store_true", help="emit machine-readable errors on stderr"
    )

    parser = _Parser(prog="tailgauge", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_sim = sub.add_parser("simulate", parents=[common], help="run the rank experiment")
    p_sim.add_argument("--dgp", help=f"built-in DGP ({', '.join(BUILTIN_DGP_NAMES)})")
    p_sim.add_argument("--dgp-config", help="path to a JSON DGP configuration")
    p_sim.add_argument("--n", type=int, default=10_000_000, help="draw count (default 1e7)")
    p_sim.add_argument("--taus", default=",".join(str(t) for t in DEFAULT_TAUS))
    p_sim.add_argument("--h", type=float, default=0.01, help="histogram bin width")
    p_sim.add_argument(
        "--modes", default=None,
        help="mode partition: preset name, 'dgp4m', or comma list of locations",
    )
    p_sim.add_argument(
        "--verify-theorem3", action="store_true",
        help="also emit the rectangle-law non-degeneracy comparison table",
    )
    p_sim.add_argument("--verify-levels", default="0.95,0.99",
                       help="response quantile levels for the non-degeneracy table")
    p_sim.add_argument("--verify-noise", choices=("pareto", "abs-student-t"), default="pareto")
    p_sim.add_argument("--verify-alpha", type=float, default=None,
                       help="noise tail exponent of the companion rectangle model")
    p_sim.set_defaults(handler=_cmd_simulate)

    p_est = sub.add_parser("estimate", parents=[common], help="fit the tail-index regression")
    p_est.add_argument("--data", required=True, help="CSV with header")
    p_est.add_argument("--response", default="y", help="response column name (default 'y')")
    p_est.add_argument("--threshold-quantile", type=float, default=None)
    p_est.add_argument("--top-count", type=int, default=None)
    p_est.add_argument("--threshold-value", type=float, default=None)
    p_est.add_argument("--level", type=float, default=0.95)
    p_est.add_argument("--out", default=None, help="output JSON name (inside --out-dir)")
    p_est.set_defaults(handler=_cmd_estimate)

    p_diag = sub.add_parser("diagnose", parents=[common], help="tail condition diagnostics")
    p_diag.add_argument(
        "--data", required=True,
        help="CSV with header; first covariate must lie in [0, 1] for histograms",
    )
    p_diag.add_argument("--response", default="y")
    p_diag.add_argument("--taus", default="0.9,0.95,0.99,0.995")
    p_diag.add_argument("--h", type=float, default=0.01)
    p_diag.add_argument("--modes", default=None)
    p_diag.add_argument("--out", default=None, help="report JSON name (inside --out-dir)")
    p_diag.set_defaults(handler=_cmd_diagnose)

    p_emp = sub.add_parser("empirics", parents=[common], help="daily-return left-tail pipeline")
    p_emp.add_argument("--prices", default=None, help="CSV of price levels")
    p_emp.add_argument("--returns", default=None, help="CSV of log returns")
    p_emp.add_argument("--date-col", default="date")
    p_emp.add_argument("--value-col", default=None)
    p_emp.add_argument("--taus", default=",".join(str(t) for t in DEFAULT_LOSS_TAUS))
    p_emp.add_argument("--h", type=float, default=0.01)
    p_emp.add_argument("--modes", default="four-mode")
    p_emp.add_argument("--start", default=None)
    p_emp.add_argument("--end", default=None)
    p_emp.set_defaults(handler=_cmd_empirics)
    return parser


def dispatch(argv) -> int:
    """Parse argv and run the selected subcommand; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if args.shards is None:
        args.shards = os.cpu_count() or 1
    try:
        args.handler(args)
        return 0
    except TailgaugeError as exc:
        if getattr(args, "json_errors", False):
            print(
                json.dumps({"error": type(exc).__name__, "message": str(exc)}),
                file=sys.stderr,
            )
        else:
            print(f"tailgauge: error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


def main(argv=None) -> int:
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
