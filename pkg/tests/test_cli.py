import json
import subprocess
import sys

import pytest

from bitgas.cli import main


def test_source_then_ensemble_from_file(tmp_path, capsys):
    assert main(["source", "--bits", "4096", "--prob", "0.1", "--seed", "3", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    assert main(["ensemble", "--source", str(tmp_path / "source.bin"), "--format", "json"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["M"] == 4096 and summary["N"] == 4095 and summary["model"] == "C-model"


def test_ensemble_csv_stdout(capsys):
    assert main(["ensemble", "--model", "b", "--bits", "8", "--count", "100", "--prob", "0.5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "value,count,energy"
    assert sum(int(l.split(",")[1]) for l in lines[1:]) == 100


def test_ensemble_writes_files(tmp_path, capsys):
    args = ["ensemble", "--bits", "2048", "--temperature", "1e-3", "--seeds", "2", "--out", str(tmp_path),
            "--format", "json"]
    assert main(args) == 0
    payload = json.loads(capsys.readouterr().out)
    assert [s["seed"] for s in payload] == [0, 1]
    assert (tmp_path / "c_M2048_seed1.summary.json").exists()
    assert (tmp_path / "aggregate.json").exists()


def test_theory_json(capsys):
    assert main(["theory", "--model", "b", "--bits", "4", "--prob", "0.5", "--count", "16", "--format", "json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["formula"] == "binomial"
    assert out["points"][2] == [2, pytest.approx(6)]


def test_sweep_stdout(capsys):
    assert main(["sweep", "--bits", "64", "--points", "5", "--t-min", "1e-3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "M,T,n0_b,n0_c_exact,n0_c_closed,condensed"
    assert len(lines) == 1 + 5 + 1  # grid plus the inserted T_c(64) row


def test_sweep_single_model(capsys):
    assert main(["sweep", "--bits", "64", "--points", "3", "--model", "b", "--t-min", "1e-2"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "M,T,n0_b"


def test_figure_command(tmp_path, capsys):
    out = tmp_path / "f2"
    args = ["figure", "2", "--bits", "1024", "--temperatures", "1e-3", "1e-2", "--out", str(out)]
    assert main(args) == 0
    assert (out / "fig2.gp").exists()
    assert (out / "fig2_T0.001.hist.csv").exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["ensemble", "--bits", "64", "--temperature", "0.3"],
        ["ensemble", "--bits", "64"],
        ["theory", "--model", "c", "--bits", "64", "--prob", "0.3", "--formula", "binomial"],
        ["ensemble", "--temperature", "0.1"],
    ],
)
def test_domain_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "error" in capsys.readouterr().err


def test_bad_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["ensemble", "--no-such-flag"])
    assert exc.value.code == 2


def test_io_failure_exits_3(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["source", "--bits", "64", "--prob", "0.5", "--out", str(blocker / "sub")]) == 3
    assert main(["ensemble", "--source", str(tmp_path / "missing.bin")]) == 3


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "bitgas", "theory", "--bits", "16", "--prob", "0.3", "--count", "10"],
        capture_output=True, text=True, cwd=tmp_path,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("value,population\n")
