import json
import subprocess
import sys

import pytest

from repchain.cli import format_table, main
from repchain.experiments import SweepResult


def test_one_shot_writes_report(tmp_path, capsys):
    cfg = tmp_path / "chain.cfg"
    cfg.write_text("chain.n_links = 3\nchain.total_length_km = 200\n")
    out = tmp_path / "report.csv"
    rc = main(["one-shot", "--config", str(cfg), "--trials", "1e4", "--seed", "7", "--output", str(out)])
    assert rc == 0
    text = out.read_text()
    assert text.splitlines()[0] == "n_links,fidelity_analytic,fidelity_sim,stderr,ci_low,ci_high,samples"
    assert "fidelity_sim" in capsys.readouterr().out


def test_sweep_lambda_both_populates_columns(tmp_path):
    out = tmp_path / "sweep.csv"
    rc = main(["sweep-lambda", "--engine", "both", "--n-links", "8", "--lambda", "1000,2000",
               "--requests", "5000", "--output", str(out)])
    assert rc == 0
    res = SweepResult.from_csv(out.read_text())
    for row in res.where():
        assert row["fidelity_analytic"] is not None and row["fidelity_sim"] is not None


def test_json_output(tmp_path):
    out = tmp_path / "d.json"
    rc = main(["optimize-distance", "--set", "distance.km=100", "--set", "search.n_max=20",
               "--output", str(out), "--json"])
    assert rc == 0
    payload = json.loads(out.read_text())
    assert payload["kind"] == "distance" and len(payload["rows"]) == 2


def test_default_output_path(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["heatmap", "--set", "heatmap.coherence_s=1", "--set", "heatmap.alpha=1",
                 "--set", "search.n_max=10"]) == 2  # misspelt key
    assert main(["heatmap", "--set", "heatmap.coherence_time_s=1", "--set", "heatmap.alpha=1",
                 "--set", "search.n_max=10"]) == 0
    assert (tmp_path / "heatmap.csv").exists()


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus"],
        ["one-shot", "--nope"],
        ["one-shot", "--set", "node.alpha=2"],
        ["one-shot", "--set", "novalue"],
        ["one-shot", "--trials", "abc"],
        ["stream", "--engine", "fast"],
        ["one-shot", "--config", "/does/not/exist.cfg"],
    ],
)
def test_usage_and_config_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "usage" in capsys.readouterr().err


def test_runtime_error_exit_1(tmp_path, capsys):
    # output path under a regular file cannot be created
    blocker = tmp_path / "file"
    blocker.write_text("")
    rc = main(["optimize-distance", "--set", "distance.km=100", "--set", "search.n_max=5",
               "--output", str(blocker / "x.csv")])
    assert rc == 1
    assert "error" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "repchain", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("one-shot", "stream", "sweep-lambda", "optimize-distance", "heatmap", "validate"):
        assert cmd in proc.stdout


def test_format_table_truncates():
    res = SweepResult("x", ("n_links", "lambda"), [(i, float(i)) for i in range(30)])
    text = format_table(res, limit=5)
    assert text.splitlines()[-1] == "... 25 more rows"
