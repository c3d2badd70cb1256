import csv
import io
import json
import os
import subprocess
import sys

import pytest

from qesdwp.cli import main


def run(capsys, *argv):
    status = main(list(argv))
    out, err = capsys.readouterr()
    return status, out, err


def run_json(capsys, *argv):
    status, out, err = run(capsys, *argv, "--format", "json")
    return status, json.loads(out)


def test_solve_razavy(capsys):
    status, doc = run_json(capsys, "solve", "razavy", "--xi", "2", "--m", "2", "--method", "both")
    assert status == 0 and doc["schema_version"] == "1"
    assert [s["energy"] for s in doc["states"]] == [3, 11]
    assert doc["diagnostics"]["agreement"] < 1e-9


def test_solve_manning(capsys):
    status, doc = run_json(capsys, "solve", "manning", "--v1", "1", "--v2", "-12", "--n", "1")
    assert status == 0
    assert {s["energy"] for s in doc["states"]} == {-4}
    assert [s["v3"] for s in doc["states"]] == pytest.approx([15.2554, 26.7446], abs=5e-5)


def test_solve_shifman_ground(capsys):
    status, doc = run_json(capsys, "solve", "shifman", "--a", "0.1", "--n", "0")
    assert status == 0 and len(doc["states"]) == 1 and doc["states"][0]["energy"] == 0


def test_complex_roots_are_pairs(capsys):
    _, doc = run_json(capsys, "solve", "razavy", "--xi", "2", "--m", "8")
    assert any(isinstance(r, list) for s in doc["states"] for r in s["roots"])


def test_table_splitting(capsys):
    status, out, _ = run(capsys, "table", "razavy-splitting", "--xi", "2", "--m-max", "12")
    assert status == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    m12 = [r for r in rows if r["M"] == "12"]
    assert abs(float(m12[0]["energy"]) - 22.59494691) < 5e-8
    assert abs(float(m12[1]["delta"]) - 0.00002127) < 5e-8
    assert m12[0]["delta"] == ""


def test_table_shifman(capsys):
    _, out, _ = run(capsys, "table", "shifman-t4", "--a", "0.1")
    rows = list(csv.DictReader(io.StringIO(out)))
    by_n = {}
    for r in rows:
        by_n.setdefault(int(r["n"]), []).append(float(r["energy"]))
    assert by_n[0] == [0.0]
    assert by_n[1] == pytest.approx([-0.5193, 0.0193], abs=5e-5)
    assert by_n[2] == pytest.approx([-2.0067, -0.5479, 0.05457], abs=5e-5)


def test_table_manning(capsys):
    _, out, _ = run(capsys, "table", "manning-t1")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert sorted({float(r["v2"]) for r in rows}) == [-18.0, -12.0, -6.0]
    v3 = sorted(float(r["v3"]) for r in rows if r["v2"] == "-18")
    assert v3 == pytest.approx([26.8458, 41.1214, 66.0329], abs=5e-5)


def test_table_razavy_t2(capsys):
    _, doc = run_json(capsys, "table", "razavy-t2")
    assert doc["columns"] == ["xi", "M", "level", "energy"]
    assert [r[3] for r in doc["rows"] if r[1] == 3] == pytest.approx([2.753788749, 9, 19.24621125], abs=5e-9)


@pytest.mark.parametrize(
    "argv,total",
    [
        (["verify", "razavy", "--xi", "2", "--m", "3", "--richardson"], 3),
        (["verify", "shifman", "--a", "0.1", "--n", "2", "--x-max", "12", "--points", "12001"], 3),
        (["verify", "manning", "--v1", "1", "--v2", "-6", "--n", "0"], 1),
    ],
)
def test_verify_examples(capsys, argv, total):
    status, doc = run_json(capsys, *argv)
    grid = doc["diagnostics"]["grid"]
    assert status == 0 and grid["matched"] == grid["total"] == total
    if "--richardson" in argv:
        assert grid["max_error"] < 1e-4


def test_verify_manning_energy(capsys):
    _, doc = run_json(capsys, "verify", "manning", "--v1", "1", "--v2", "-6", "--n", "0")
    assert doc["diagnostics"]["grid"]["matches"][0]["grid_energy"] == pytest.approx(-1.0, abs=1e-3)


def test_verify_mismatch_exit_code(capsys):
    status, doc = run_json(capsys, "verify", "razavy", "--xi", "2", "--m", "3", "--points", "201", "--tol", "1e-8")
    assert status == 3 and doc["diagnostics"]["grid"]["matched"] < 3


def test_plot_data_values(capsys):
    _, out, _ = run(capsys, "plot-data", "fig1", "--samples", "3")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert float(rows[1]["x"]) == 0.0 and float(rows[1]["value"]) == pytest.approx(-4.255)
    _, out, _ = run(capsys, "plot-data", "fig3", "--samples", "3")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert float(rows[1]["value"]) == pytest.approx(-0.15)


def test_plot_data_fig2_energies(capsys):
    _, out, _ = run(capsys, "plot-data", "fig2")
    energies = [float(r["value"]) for r in csv.DictReader(io.StringIO(out)) if r["series"] == "energy"]
    assert len(energies) == 12
    assert energies[0] == pytest.approx(22.59494691, abs=5e-8)
    assert energies[-1] == pytest.approx(185.7777543, abs=5e-7)


@pytest.mark.parametrize(
    "argv",
    [
        ["plot-data", "fig9"],
        ["plot-data", "fig1", "--samples", "1"],
        ["solve", "razavy", "--xi", "2"],
        ["solve", "manning", "--v1", "-1", "--v2", "-6", "--n", "0"],
        ["solve", "razavy", "--xi", "abc", "--m", "2"],
        ["table", "razavy-splitting", "--m-max", "0"],
        ["verify", "razavy", "--xi", "2", "--m", "2", "--points", "200"],
    ],
)
def test_error_paths(capsys, argv):
    status, out, err = run(capsys, *argv)
    assert status == 1 and out == ""
    assert err.startswith("error: ") and err.count("\n") == 1
    assert len(err.split(": ", 2)) == 3


def test_bad_seed_env(capsys, monkeypatch):
    monkeypatch.setenv("QESDWP_SEED", "x")
    status, out, err = run(capsys, "solve", "razavy", "--xi", "2", "--m", "2")
    assert status == 1 and out == "" and err.startswith("error: usage:")


def test_method_disagreement_exit_code(capsys, monkeypatch):
    from qesdwp import bethe

    real = bethe.reconstruct_observables
    monkeypatch.setattr(
        bethe,
        "reconstruct_observables",
        lambda p, z: type(real(p, z))(real(p, z).energy + 1.0, None, None),
    )
    status, out, err = run(capsys, "solve", "razavy", "--xi", "2", "--m", "3")
    assert status == 2 and out == "" and err.startswith("error: ")


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "razavy", "--xi", "2", "--m", "9"],
        ["table", "shifman-t4"],
        ["plot-data", "fig2", "--samples", "11"],
    ],
)
def test_output_is_byte_identical(capsys, argv):
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second


def test_csv_and_json_carry_the_same_numbers(capsys):
    argv = ["solve", "shifman", "--a", "0.1", "--n", "2"]
    _, doc = run_json(capsys, *argv)
    _, out, _ = run(capsys, *argv, "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [float(r["energy"]) for r in rows] == [s["energy"] for s in doc["states"]]
    for r, s in zip(rows, doc["states"]):
        assert [float(c) for c in r["coeffs"].split(";")] == s["coeffs"]


def test_seed_env_changes_nothing(capsys, monkeypatch):
    argv = ["solve", "razavy", "--xi", "2", "--m", "10"]
    monkeypatch.setenv("QESDWP_SEED", "1")
    _, a = run_json(capsys, *argv)
    monkeypatch.setenv("QESDWP_SEED", "987654")
    _, b = run_json(capsys, *argv)
    ea = [s["energy"] for s in a["states"]]
    eb = [s["energy"] for s in b["states"]]
    assert max(abs(x - y) for x, y in zip(ea, eb)) <= 1e-10


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "qesdwp.cli", "solve", "razavy", "--xi", "2", "--m", "1"],
        capture_output=True,
        text=True,
        env={**os.environ, "QESDWP_SEED": "5"},
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["states"][0]["energy"] == 5
