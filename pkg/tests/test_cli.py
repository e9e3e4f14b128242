import filecmp
import json
import os
from pathlib import Path

import pytest

from riskpipe.cli import main, parse_months, run
from riskpipe.ingest import read_table

ANALYZE_OUTPUTS = {
    "regression_pooled.csv", "regression_unpooled.csv", "regression_fixed_effects.csv", "regression_fits.csv",
    "model_comparison.csv", "dropped.csv", "correlations.csv", "loglog_slope.csv", "presence_tests.csv",
    "ks_matrix.csv", "ks_summary.csv", "breach_tests.csv",
}


def chain(out: Path, orgs=300, seed=7, svg=False):
    d = str(out)
    assert main(["synth", "--orgs", str(orgs), "--seed", str(seed), "--mode", "events", "--out", d]) == 0
    assert main(["aggregate", "--data", d, "--out", d]) == 0
    assert main(["analyze", "--profiles", f"{d}/profiles.csv", "--breaches", f"{d}/breaches.csv", "--out", d]) == 0
    args = ["report", "--profiles", f"{d}/profiles.csv", "--breaches", f"{d}/breaches.csv", "--out", d]
    assert main(args + (["--svg"] if svg else [])) == 0


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    chain(out, svg=True)
    return out


def test_happy_path_inventory(pipeline):
    names = set(os.listdir(pipeline))
    assert ANALYZE_OUTPUTS <= names
    assert {"profiles.csv", "diagnostics.json"} <= names
    for cmd in ("synth", "aggregate", "analyze", "report"):
        assert f"manifest_{cmd}.json" in names
    assert any(n.startswith("fig_hist_") for n in names)
    for n in ("fig_scatter.csv", "fig_coeffs.csv", "fig_industry_bot.csv", "fig_unpooled.csv", "fig_breach.csv"):
        assert n in names


def test_manifest_lists_outputs(pipeline):
    doc = json.loads((pipeline / "manifest_analyze.json").read_text())
    assert doc["command"] == "analyze"
    assert {o["path"] for o in doc["outputs"]} == ANALYZE_OUTPUTS
    assert doc["parameters"] == {"alpha": 0.01, "ci": 0.98, "min_rows": 10}
    assert {i["role"] for i in doc["inputs"]} == {"profiles", "breaches"}
    assert all(len(i["sha256"]) == 64 for i in doc["inputs"] + doc["outputs"])


def test_figure_files_load(pipeline):
    for name in sorted(os.listdir(pipeline)):
        if name.startswith("fig_") and name.endswith(".csv"):
            header, rows = read_table(pipeline / name)
            assert header
            assert all(len(r) == len(header) for r in rows)


def test_pooled_table(pipeline):
    header, rows = read_table(pipeline / "regression_pooled.csv")
    assert [r["regressor"] for r in rows] == ["t0", "t_hat", "T_CF", "T_CT", "S_Ri", "S_Re", "intercept"]
    _, cmp_rows = read_table(pipeline / "model_comparison.csv")
    assert sum(int(r["selected"]) for r in cmp_rows) == 1


def test_insufficient_data_exits_2(tmp_path, pipeline, capsys):
    lines = (pipeline / "profiles.csv").read_text().splitlines()[:4]
    small = tmp_path / "small.csv"
    small.write_text("\n".join(lines) + "\n")
    assert main(["analyze", "--profiles", str(small), "--out", str(tmp_path / "o")]) == 2
    assert "insufficient data" in capsys.readouterr().err


def test_missing_file_exits_2(tmp_path, capsys):
    missing = tmp_path / "nope.csv"
    assert main(["analyze", "--profiles", str(missing), "--out", str(tmp_path)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_bad_flag_exits_1(capsys):
    assert run(["analyze", "--no-such-flag"]) == 1
    assert "usage" in capsys.readouterr().err
    assert run(["frobnicate"]) == 1
    assert run(["analyze", "--profiles", "x", "--out", "y", "--alpha", "2"]) == 1


def test_breach_command(tmp_path, pipeline):
    out = tmp_path / "b"
    assert main(["breach", "--profiles", str(pipeline / "profiles.csv"),
                 "--breaches", str(pipeline / "breaches.csv"), "--out", str(out)]) == 0
    assert (out / "breach_tests.csv").read_text() == (pipeline / "breach_tests.csv").read_text()


def test_empty_breaches_give_header_only_figure(tmp_path, pipeline):
    empty = tmp_path / "none.csv"
    empty.write_text("org_id,year\n")
    out = tmp_path / "r"
    assert main(["report", "--profiles", str(pipeline / "profiles.csv"), "--analysis", str(pipeline),
                 "--breaches", str(empty), "--out", str(out)]) == 0
    assert (out / "fig_breach.csv").read_text() == "factor,factor_present,n_orgs,n_breached,percent_breached\n"


def test_thread_count_does_not_change_output(tmp_path, pipeline, monkeypatch):
    monkeypatch.setenv("RISKPIPE_THREADS", "1")
    out = tmp_path / "t1"
    assert main(["analyze", "--profiles", str(pipeline / "profiles.csv"), "--breaches",
                 str(pipeline / "breaches.csv"), "--out", str(out)]) == 0
    for name in ANALYZE_OUTPUTS:
        assert filecmp.cmp(out / name, pipeline / name, shallow=False), name


def test_months_parsing():
    assert parse_months("2015-11..2016-02") == ["2015-11", "2015-12", "2016-01", "2016-02"]
    assert parse_months("2015-01,2015-03") == ["2015-01", "2015-03"]


def test_aggregate_month_window(tmp_path, pipeline):
    out = tmp_path / "q1"
    assert main(["aggregate", "--data", str(pipeline), "--months", "2015-01..2015-03", "--out", str(out)]) == 0
    doc = json.loads((out / "diagnostics.json").read_text())
    assert doc["aggregation"]["out_of_window"]["infections"] > 0
