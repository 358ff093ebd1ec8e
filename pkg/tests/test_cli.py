"""CLI behaviour: outputs, exit codes, reproducibility across runs/threads."""
import csv
import json
import subprocess
import sys

import pytest

from conftest import FIXTURES, REPO_ROOT


def run_cli(*args, cwd=REPO_ROOT):
    return subprocess.run(
        [sys.executable, "-m", "poqlab", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


ZZ = str(FIXTURES / "ZZ.json")
Z1 = str(FIXTURES / "Z.json")
MIXED = str(FIXTURES / "mixed-2term.json")


def test_ground_z_and_zz():
    r = run_cli("ground", "--ham", ZZ)
    assert r.returncode == 0
    assert "lambda0 = -1.000000000000" in r.stdout
    r = run_cli("ground", "--ham", Z1)
    assert r.returncode == 0
    assert "lambda0 = -1.000000000000" in r.stdout


def test_ground_matches_sidecar_and_oracle(fixtures_dir):
    for name in ("mixed-2term", "random-3qubit"):
        side = json.loads((fixtures_dir / f"{name}.expected.json").read_text())
        r = run_cli("ground", "--ham", str(fixtures_dir / f"{name}.json"))
        assert r.returncode == 0
        lam = float(r.stdout.splitlines()[0].split("=")[1])
        assert abs(lam - side["lambda0"]) < 1e-9


def test_ground_writes_state(tmp_path):
    out = tmp_path / "gs.json"
    r = run_cli("ground", "--ham", ZZ, "--out", str(out))
    assert r.returncode == 0
    payload = json.loads(out.read_text())
    assert payload["layout"] == [["W", 2]]
    amps = [complex(re, im) for re, im in payload["amplitudes"]]
    assert abs(abs(amps[1]) - 1.0) < 1e-12


def test_value_honest_ground():
    r = run_cli("value", "--ham", ZZ, "--strategy", "honest", "--p", "0.5")
    assert r.returncode == 0
    assert "omega = 1.000000000000" in r.stdout


def test_value_magic_square_classical():
    r = run_cli("value", "--game", "magic-square", "--strategy", "classical_random")
    assert r.returncode == 0
    assert "omega = 0.500000000000" in r.stdout


def test_value_embeds_n1(tmp_path):
    r = run_cli("value", "--ham", Z1, "--strategy", "honest", "--p", "0.5")
    assert r.returncode == 0
    assert "embedded n=1" in r.stdout
    assert "omega = 1.000000000000" in r.stdout


def test_play_reproducible(tmp_path):
    t1, t2 = tmp_path / "t1.jsonl", tmp_path / "t2.jsonl"
    args = (
        "play", "--game", "magic-square", "--strategy", "classical_random",
        "--rounds", "400", "--seed", "9",
    )
    r1 = run_cli(*args, "--out", str(t1))
    r2 = run_cli(*args, "--out", str(t2))
    assert r1.returncode == r2.returncode == 0
    assert t1.read_bytes() == t2.read_bytes()
    assert r1.stdout.replace(str(t1), "X") == r2.stdout.replace(str(t2), "X")
    assert len(t1.read_text().splitlines()) == 400


def test_play_requires_seed():
    r = run_cli("play", "--game", "magic-square", "--rounds", "10")
    assert r.returncode == 2


def test_extract_report(tmp_path):
    out = tmp_path / "report.json"
    r = run_cli(
        "extract", "--ham", ZZ, "--strategy", "honest", "--p", "0.5",
        "--out", str(out),
    )
    assert r.returncode == 0
    assert "fidelity_ground = 1.000000000000" in r.stdout
    assert "energy = -1.000000000000" in r.stdout
    report = json.loads(out.read_text())
    assert set(report) == {
        "n", "p_used", "epsilon", "alpha", "gamma", "energy", "bound",
        "slack", "fidelity_ground", "q_ab",
    }
    assert abs(sum(report["q_ab"].values()) - 1.0) < 1e-9


def test_extract_strict_out_of_regime():
    args = (
        "extract", "--ham", ZZ, "--strategy", "depolarized:delta=0.1",
        "--p", "0.5",
    )
    r = run_cli(*args)
    assert r.returncode == 0
    assert "OUT-OF-REGIME" in r.stdout
    r = run_cli(*args, "--strict")
    assert r.returncode == 3


def test_extract_invalid_ham_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n":1,"k":1,"terms":[{"coeff":2.0,"pauli":"Z"}]}')
    r = run_cli("extract", "--ham", str(bad), "--p", "0.5")
    assert r.returncode == 2
    assert "error:" in r.stderr


def test_rigidity_command():
    r = run_cli("rigidity", "--n", "2", "--strategy", "honest_lwpbt")
    assert r.returncode == 0
    assert "max_deviation" in r.stdout
    assert "deviation[II]" in r.stdout


def test_params_command_exact():
    r = run_cli("params", "--n", "2", "--gamma", "1", "--alpha", "1/2", "--C", "3")
    assert r.returncode == 0
    assert "p_star = 1/1073741824" in r.stdout
    r = run_cli("params", "--n", "2", "--gamma", "1", "--alpha", "2", "--C", "3")
    assert r.returncode == 2


def test_sweep_csv_round_trip(tmp_path):
    out = tmp_path / "sweep.csv"
    r = run_cli(
        "sweep", "--ham", ZZ, "--strategy", "honest", "--p", "0.5",
        "--delta-grid", "0,0.05", "--out", str(out), "--no-plot",
    )
    assert r.returncode == 0
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [row["delta"] for row in rows] == ["0.0", "0.05"]
    assert float(rows[0]["epsilon"]) <= 1e-9
    assert float(rows[1]["epsilon"]) > float(rows[0]["epsilon"])
    for row in rows:
        assert float(row["slack"]) >= -1e-9


def test_sweep_renders_figure(tmp_path):
    out = tmp_path / "sweep.csv"
    r = run_cli(
        "sweep", "--ham", ZZ, "--strategy", "honest", "--p", "0.5",
        "--delta-grid", "0,0.05", "--out", str(out),
    )
    assert r.returncode == 0
    fig = tmp_path / "sweep.png"
    assert fig.exists()
    assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


@pytest.mark.parametrize(
    "args",
    [
        ("ground", "--ham", ZZ),
        ("value", "--ham", MIXED, "--strategy", "honest", "--p", "0.25"),
        ("value", "--game", "magic-square", "--strategy", "classical_random"),
        ("params", "--n", "3", "--gamma", "3/4", "--alpha", "1/4"),
        ("extract", "--ham", ZZ, "--strategy", "honest", "--p", "0.5", "--format", "json"),
    ],
    ids=("ground", "value-ham", "value-ms", "params", "extract"),
)
def test_exact_mode_byte_identical_across_runs(args):
    r1 = run_cli(*args)
    r2 = run_cli(*args)
    assert r1.returncode == r2.returncode == 0
    assert r1.stdout == r2.stdout


def test_exact_mode_byte_identical_across_threads(tmp_path):
    outs = []
    for threads in ("1", "4"):
        out = tmp_path / f"sweep-{threads}.csv"
        r = run_cli(
            "sweep", "--ham", MIXED, "--strategy", "honest", "--p", "0.3",
            "--delta-grid", "0,0.02", "--threads", threads,
            "--out", str(out), "--no-plot",
        )
        assert r.returncode == 0
        outs.append((r.stdout, out.read_bytes()))
    assert outs[0] == outs[1]
