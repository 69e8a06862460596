import json
from pathlib import Path

import pytest

import tailgauge.empirics as emp
from tailgauge.cli import dispatch, resolve_modes
from tailgauge.errors import ConfigurationError
from tailgauge.estimator import ThresholdSpec, fit
from tailgauge.models import ExpAffine, TailIndexDGP, sample_tail_index
from tailgauge.serialize import fmt


def run(args):
    return dispatch([str(a) for a in args])


def make_estimation_csv(path, n=20_000, seed=5):
    dgp = TailIndexDGP("exp-linear", ExpAffine(0.5, 1.0))
    obs = sample_tail_index(dgp, n, seed)
    lines = ["y,x"]
    lines += [f"{fmt(y)},{fmt(x)}" for y, x in zip(obs.response, obs.covariates[:, 0])]
    Path(path).write_text("\n".join(lines) + "\n")
    return obs


def tree_bytes(root: Path) -> dict:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def test_simulate_happy_path(tmp_path):
    out = tmp_path / "run"
    code = run(
        ["simulate", "--dgp", "dgp1m-tail", "--n", 1_000_000, "--seed", 7,
         "--shards", 2, "--out-dir", out]
    )
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["subcommand"] == "simulate"
    assert manifest["seed"] == 7
    assert set(manifest["outputs"]) <= {p.name for p in out.iterdir()}
    assert (out / "report.json").exists()
    for tau in ("0.9", "0.95", "0.99", "0.995"):
        assert (out / f"density_tau_{tau}.csv").exists()


def test_simulate_unknown_dgp_lists_names(tmp_path, capsys):
    code = run(["simulate", "--dgp", "unknown", "--out-dir", tmp_path / "x"])
    assert code == 1
    err = capsys.readouterr().err
    for name in ("dgp1m-tail", "dgp4m-extremal"):
        assert name in err


def test_simulate_json_errors(tmp_path, capsys):
    code = run(
        ["simulate", "--dgp", "unknown", "--json-errors", "--out-dir", tmp_path / "x"]
    )
    assert code == 1
    payload = json.loads(capsys.readouterr().err.strip())
    assert payload["error"] == "ConfigurationError"


def test_unknown_flag_exits_one(capsys):
    assert run(["simulate", "--bogus"]) == 1
    assert "usage" in capsys.readouterr().err


def test_missing_subcommand_exits_one(capsys):
    assert run([]) == 1


def test_simulate_run_and_shard_determinism(tmp_path):
    outs = []
    for tag, shards in (("a", 1), ("b", 1), ("c", 3)):
        out = tmp_path / tag
        assert run(
            ["simulate", "--dgp", "dgp1m-tail", "--n", 1_200_000, "--seed", 3,
             "--shards", shards, "--taus", "0.9,0.99", "--out-dir", out]
        ) == 0
        outs.append(tree_bytes(out))
    assert outs[0] == outs[1]
    assert outs[0] == outs[2]


def test_simulate_dgp_config_and_modes(tmp_path):
    config = tmp_path / "dgp.json"
    config.write_text(json.dumps({"dgp": "dgp4m-tail"}))
    out = tmp_path / "run"
    code = run(
        ["simulate", "--dgp-config", config, "--n", 400_000, "--taus", "0.9,0.99",
         "--modes", "dgp4m", "--out-dir", out]
    )
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert "multimode_ratio" in report["records"][0]
    manifest = json.loads((out / "manifest.json").read_text())
    assert "dgp_config" in manifest["input_digests"]


def test_simulate_nondegeneracy_table(tmp_path):
    out = tmp_path / "run"
    code = run(
        ["simulate", "--dgp", "dgp1m-extremal", "--n", 400_000, "--taus", "0.9",
         "--verify-theorem3", "--verify-levels", "0.9", "--verify-alpha", 2.0,
         "--out-dir", out]
    )
    assert code == 0
    table = (out / "nondegeneracy_comparison.csv").read_text().splitlines()
    assert table[0].startswith("level,w,n_tail,mode")
    assert "exact" in table[1]
    report = json.loads((out / "nondegeneracy_report.json").read_text())
    assert report["records"][0]["max_se_units"] == pytest.approx(
        float(table[1].split(",")[5])
    )


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------

def test_estimate_matches_library_fit(tmp_path):
    csv = tmp_path / "data.csv"
    obs = make_estimation_csv(csv)
    out = tmp_path / "run"
    code = run(
        ["estimate", "--data", csv, "--threshold-quantile", 0.95,
         "--level", 0.95, "--out-dir", out]
    )
    assert code == 0
    payload = json.loads((out / "estimate.json").read_text())
    reference = fit(obs, ThresholdSpec.quantile(0.95))
    assert payload["theta"] == pytest.approx(list(reference.theta))
    assert payload["n0"] == reference.n_tail
    assert payload["w"] == reference.threshold.w
    assert payload["converged"] is True
    assert len(payload["intervals"]) == 2
    assert payload["gram_eigenvalues"][0] <= payload["gram_eigenvalues"][1]


def test_estimate_missing_file(tmp_path, capsys):
    code = run(
        ["estimate", "--data", tmp_path / "nope.csv", "--threshold-quantile", 0.9,
         "--out-dir", tmp_path / "o"]
    )
    assert code == 1
    assert "not found" in capsys.readouterr().err


def test_estimate_requires_threshold(tmp_path, capsys):
    csv = tmp_path / "data.csv"
    make_estimation_csv(csv, n=5000)
    code = run(["estimate", "--data", csv, "--out-dir", tmp_path / "o"])
    assert code == 1


def test_estimate_skips_non_numeric_columns(tmp_path):
    csv = tmp_path / "data.csv"
    obs = make_estimation_csv(csv)
    lines = csv.read_text().splitlines()
    lines[0] = "label," + lines[0]
    body = [f"row{i},{line}" for i, line in enumerate(lines[1:])]
    csv.write_text("\n".join([lines[0]] + body) + "\n")
    out = tmp_path / "run"
    code = run(
        ["estimate", "--data", csv, "--threshold-quantile", 0.95, "--out-dir", out]
    )
    assert code == 0
    payload = json.loads((out / "estimate.json").read_text())
    reference = fit(obs, ThresholdSpec.quantile(0.95))
    assert payload["theta"] == pytest.approx(list(reference.theta))


def test_estimate_rejects_multiple_threshold_flags(tmp_path, capsys):
    csv = tmp_path / "data.csv"
    make_estimation_csv(csv, n=5000)
    code = run(
        ["estimate", "--data", csv, "--threshold-quantile", 0.9, "--top-count", 100,
         "--out-dir", tmp_path / "o"]
    )
    assert code == 1
    assert "exactly one" in capsys.readouterr().err


def test_diagnose_out_flag(tmp_path):
    csv = tmp_path / "data.csv"
    make_estimation_csv(csv, n=30_000)
    out = tmp_path / "run"
    code = run(
        ["diagnose", "--data", csv, "--taus", "0.9", "--out", "tails.json",
         "--out-dir", out]
    )
    assert code == 0
    assert (out / "tails.json").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert "tails.json" in manifest["outputs"]


def test_estimate_determinism(tmp_path):
    csv = tmp_path / "data.csv"
    make_estimation_csv(csv, n=8000)
    blobs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert run(
            ["estimate", "--data", csv, "--top-count", 500, "--out-dir", out]
        ) == 0
        blobs.append((out / "estimate.json").read_bytes())
    assert blobs[0] == blobs[1]


# ---------------------------------------------------------------------------
# diagnose
# ---------------------------------------------------------------------------

def test_diagnose_outputs(tmp_path):
    csv = tmp_path / "data.csv"
    make_estimation_csv(csv, n=50_000)
    out = tmp_path / "run"
    code = run(
        ["diagnose", "--data", csv, "--taus", "0.9,0.99", "--out-dir", out]
    )
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert [r["tau"] for r in report["records"]] == [0.9, 0.99]
    hist = (out / "histogram_tau_0.99.csv").read_text().splitlines()
    assert hist[0] == "bin_lo,bin_hi,density"
    assert len(hist) == 101


# ---------------------------------------------------------------------------
# empirics
# ---------------------------------------------------------------------------

def test_empirics_pipeline(tmp_path):
    series = emp.synthetic_returns(30_000, seed=9)
    csv = emp.write_returns_csv(series, tmp_path / "returns.csv")
    out = tmp_path / "run"
    code = run(
        ["empirics", "--returns", csv, "--taus", "0.1,0.01", "--modes", "four-mode",
         "--out-dir", out]
    )
    assert code == 0
    report = json.loads((out / "empirics_report.json").read_text())
    assert report["T"] == 30_000
    assert report["modes"] == [0.0, 0.61, 0.83, 0.958]
    assert {r["tau"] for r in report["records"]} == {0.1, 0.01}
    assert (out / "density_tau_0.1.csv").exists()


def test_empirics_requires_exactly_one_input(tmp_path, capsys):
    code = run(["empirics", "--out-dir", tmp_path / "x"])
    assert code == 1
    assert "exactly one" in capsys.readouterr().err


def test_empirics_prices_and_subperiod(tmp_path):
    data = Path(__file__).parent / "data" / "sample_prices.csv"
    out = tmp_path / "run"
    code = run(
        ["empirics", "--prices", data, "--taus", "0.2", "--modes", "0.5",
         "--start", "2019-01-10", "--end", "2019-03-01", "--out-dir", out]
    )
    assert code == 0
    report = json.loads((out / "empirics_report.json").read_text())
    assert report["T"] < 80


def test_no_writes_outside_out_dir(tmp_path, monkeypatch):
    workdir = tmp_path / "cwd"
    workdir.mkdir()
    monkeypatch.chdir(workdir)
    series = emp.synthetic_returns(5_000, seed=2)
    csv = emp.write_returns_csv(series, tmp_path / "r.csv")
    out = tmp_path / "out"
    assert run(["empirics", "--returns", csv, "--taus", "0.1", "--out-dir", out]) == 0
    assert list(workdir.iterdir()) == []


def test_resolve_modes_forms():
    assert resolve_modes(None) is None
    assert resolve_modes("four-mode").modes == (0.0, 0.61, 0.83, 0.958)
    assert resolve_modes("0.1,0.5,0.9").cutoffs == (0.3, 0.7)
    assert len(resolve_modes("dgp4m").modes) == 4
    with pytest.raises(ConfigurationError):
        resolve_modes("not-a-preset")
