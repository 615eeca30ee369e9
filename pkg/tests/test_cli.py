import json
import subprocess
import sys

import numpy as np
import pytest

from channel_ergodics import KrausAtom, KrausMeasure, save_channel
from channel_ergodics.cli import main

from conftest import MAIN_P, unitary_channel


@pytest.fixture()
def markov_file(tmp_path):
    path = tmp_path / "markov.json"
    path.write_text(json.dumps({"P": MAIN_P.tolist(), "convention": "column"}))
    return str(path)


@pytest.fixture()
def unitary_file(tmp_path):
    path = tmp_path / "unitary.json"
    save_channel(unitary_channel(theta=2.0), path)
    return str(path)


@pytest.fixture()
def markov_channel_file(tmp_path, markov_km):
    path = tmp_path / "markov_channel.json"
    save_channel(markov_km, path)
    return str(path)


@pytest.fixture()
def bad_channel_file(tmp_path):
    km = KrausMeasure([KrausAtom(1.0, 1.4 * np.eye(2))])
    path = tmp_path / "bad.json"
    save_channel(km, path)
    return str(path)


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_ok(markov_channel_file, capsys):
    code, out, _ = run_cli(["validate", markov_channel_file], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["stochastic"] is True
    assert rep["choi_min_eigenvalue"] >= -1e-10


def test_validate_non_stochastic_exit_2(bad_channel_file, capsys):
    code, out, _ = run_cli(["validate", bad_channel_file], capsys)
    assert code == 2
    rep = json.loads(out)
    assert rep["stochastic"] is False
    assert rep["stochastic_residual"] > 0.1
    assert "error" in rep


def test_malformed_file_exit_2(tmp_path, capsys):
    bad = tmp_path / "junk.json"
    bad.write_text("{oops")
    code, out, _ = run_cli(["validate", str(bad)], capsys)
    assert code == 2
    assert "error" in json.loads(out)


def test_dim_cap_exit_2(tmp_path, capsys):
    km = KrausMeasure([KrausAtom(1.0, np.eye(17))])
    path = tmp_path / "big.json"
    save_channel(km, path)
    code, out, _ = run_cli(["validate", str(path)], capsys)
    assert code == 2


def test_spectral_unitary(unitary_file, capsys):
    code, out, _ = run_cli(["spectral", unitary_file], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["lambda"] == pytest.approx(1.0, abs=1e-12)
    rho = np.array(rep["rho_fixed"])
    assert rho[..., 0] == pytest.approx(np.eye(2) / 2, abs=1e-9)
    # the documented report schema is present in full
    for key in ("lambda", "rho_fixed", "irreducible", "phi_erg", "minimal_subspaces", "spectral_gap"):
        assert key in rep
    assert rep["irreducible"] is False  # unitary conjugation is reducible


def test_spectral_curves(markov_channel_file, tmp_path, capsys):
    curves = tmp_path / "cesaro.csv"
    code, out, _ = run_cli(
        ["spectral", markov_channel_file, "--curves", str(curves), "--n-steps", "200"], capsys
    )
    assert code == 0
    lines = curves.read_text().strip().split("\n")
    assert lines[0] == "n,cesaro_distance"
    assert len(lines) == 201
    assert json.loads(out)["cesaro_distance_final"] < 1e-2


def test_irreducibility_and_phi_erg(markov_channel_file, capsys):
    code, out, err = run_cli(["irreducibility", markov_channel_file], capsys)
    assert code == 0
    assert json.loads(out)["irreducible"] is True
    assert "effective seed: 0" in err
    code, out, _ = run_cli(["phi-erg", markov_channel_file], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["phi_erg"] is True and rep["irreducible"] is True


def test_purification_command(markov_channel_file, unitary_file, tmp_path, capsys):
    code, out, _ = run_cli(
        ["purification", markov_channel_file, "--max-depth", "2", "--max-exact-depth", "4"],
        capsys,
    )
    assert code == 0
    rep = json.loads(out)
    assert rep["verdict"] == "purifying-evidence"
    assert rep["witness"] is not None and all(w.startswith("V") for w in rep["witness"])
    assert rep["d_n"]["1"] == 0.0 if "1" in rep["d_n"] else True

    code, out, _ = run_cli(
        ["purification", unitary_file, "--max-depth", "3", "--max-exact-depth", "4"], capsys
    )
    rep = json.loads(out)
    assert rep["verdict"] == "non-purifying-witness"
    assert rep["decay_verdict"] == "non-purifying-witness"


def test_trajectory_command_with_dump(markov_channel_file, tmp_path, capsys):
    dump = tmp_path / "paths.jsonl"
    code, out, _ = run_cli(
        [
            "trajectory", markov_channel_file,
            "--n-steps", "300", "--n-paths", "2", "--seed", "5",
            "--dump-paths", str(dump),
        ],
        capsys,
    )
    assert code == 0
    rep = json.loads(out)
    assert rep["n_steps"] == 300
    bary = np.array(rep["empirical_barycenter"])
    assert bary[..., 0].trace() == pytest.approx(1.0, abs=1e-10)
    lines = dump.read_text().strip().split("\n")
    assert len(lines) == 2
    assert set(json.loads(lines[0])) == {"word", "log_weight"}


def test_lyapunov_command(markov_channel_file, capsys):
    code, out, _ = run_cli(
        ["lyapunov", markov_channel_file, "--n-steps", "5000", "--n-paths", "4", "--seed", "1"],
        capsys,
    )
    assert code == 0
    rep = json.loads(out)
    assert rep["gamma"][0] == pytest.approx(-0.3187494, abs=0.05)
    assert rep["gamma"][1] == "-inf"
    assert rep["neg_infinity"] == [False, True]
    assert rep["stderr"][1] is None


def test_entropy_command(markov_channel_file, capsys):
    code, out, _ = run_cli(["entropy", markov_channel_file], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["h_channel_nats"] == pytest.approx(0.63749888703533473716, abs=1e-10)


def test_markov_report_and_determinism(markov_file, tmp_path, capsys):
    out1 = tmp_path / "r1.json"
    out2 = tmp_path / "r2.json"
    base = ["markov-report", markov_file, "--n-steps", "4000", "--n-paths", "4", "--seed", "7"]
    assert main(base + ["-o", str(out1)]) == 0
    assert main(base + ["-o", str(out2)]) == 0
    capsys.readouterr()
    assert out1.read_bytes() == out2.read_bytes()  # byte-identical report
    rep = json.loads(out1.read_text())
    assert rep["gamma2"] == "-inf"
    assert rep["h_classical"] == pytest.approx(0.6374988870353347, abs=1e-12)
    assert abs(rep["gamma1"] - rep["gamma1_predicted"]) < 0.05


def test_markov_report_row_convention(tmp_path, capsys):
    path = tmp_path / "row.json"
    path.write_text(json.dumps({"P": MAIN_P.T.tolist(), "convention": "row"}))
    code, out, _ = run_cli(
        ["markov-report", str(path), "--n-steps", "2000", "--n-paths", "2"], capsys
    )
    assert code == 0
    rep = json.loads(out)
    assert np.array(rep["P"]) == pytest.approx(MAIN_P)
    assert rep["stationary"] == pytest.approx([4 / 7, 3 / 7], abs=1e-12)


def test_seed_env_override(markov_file, capsys, monkeypatch):
    monkeypatch.setenv("CHANNEL_ERGODICS_SEED", "123")
    code, out, err = run_cli(
        ["markov-report", markov_file, "--n-steps", "100", "--n-paths", "1"], capsys
    )
    assert code == 0
    assert json.loads(out)["seed"] == 123
    assert "effective seed: 123" in err


def test_console_script_entry_point(markov_file):
    # the installed entry point runs end to end in a fresh interpreter
    proc = subprocess.run(
        [sys.executable, "-m", "channel_ergodics.cli", "markov-report", markov_file,
         "--n-steps", "200", "--n-paths", "1"],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0, proc.stderr
    rep = json.loads(proc.stdout)
    assert rep["command"] == "markov-report"


def test_reports_reparse_under_schema(markov_channel_file, capsys):
    # round-trip: every emitted channel report is valid JSON that reparses
    for cmd in (["validate"], ["spectral"], ["irreducibility"], ["phi-erg"]):
        code, out, _ = run_cli(cmd + [markov_channel_file], capsys)
        assert code == 0
        assert isinstance(json.loads(out), dict)
