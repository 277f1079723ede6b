import json
import os

import numpy as np
from vortexflow import cli


def write_config(tmp_path, text):
    p = tmp_path / "exp.ini"
    p.write_text(text)
    return str(p)


FAST_DIPOLE = """[surface]
kind = torus
L1 = 1.0
L2 = 1.0
[grid]
n1 = 96
n2 = 96
[vortices]
positions = 0.3 0.5, 0.7 0.5
charges = 1 -1
[run]
eps = 0.1
T = 0.002
snapshot_stride = 4
ode_dt = 2e-4
[output]
prefix = fast
"""


def test_example_config_parses(tmp_path):
    path = write_config(tmp_path, cli.example_config())
    ec = cli.load_config(path)
    assert ec.surface.kind == "torus" and ec.config.n == 2


def test_simulate_pde_smoke(tmp_path):
    path = write_config(tmp_path, FAST_DIPOLE)
    out = str(tmp_path / "out")
    rc = cli.main(["simulate-pde", "--config", path, "--out", out])
    assert rc == 0
    tracks = out + "/fast_pde_tracks.csv"
    assert os.path.exists(tracks) and os.path.exists(tracks + ".json")
    from vortexflow.fileio import read_trajectory

    times, positions, charges, meta = read_trajectory(tracks)
    assert sorted(charges.tolist()) == [-1, 1]
    assert meta["provenance"] == "pde" and "config_hash" in meta
    diag = np.loadtxt(out + "/fast_pde_diagnostics.csv", delimiter=",", skiprows=1)
    assert diag.shape[1] == 5


def test_simulate_ode_smoke(tmp_path):
    path = write_config(tmp_path, FAST_DIPOLE.replace("T = 0.002", "T = 0.01"))
    out = str(tmp_path / "out")
    rc = cli.main(["simulate-ode", "--config", path, "--out", out])
    assert rc == 0
    with open(out + "/fast_ode_tracks.csv.json") as f:
        meta = json.load(f)
    assert meta["provenance"] == "ode" and "t_star" in meta


def test_zero_vortex_config(tmp_path):
    text = FAST_DIPOLE.replace("positions = 0.3 0.5, 0.7 0.5", "positions =").replace(
        "charges = 1 -1", "charges ="
    )
    path = write_config(tmp_path, text)
    out = str(tmp_path / "out")
    rc = cli.main(["simulate-pde", "--config", path, "--out", out])
    assert rc == 0
    raw = open(out + "/fast_pde_tracks.csv").read().strip().splitlines()
    assert raw == ["t,vortex_id,charge,x1,x2"]  # header only
    diag = np.loadtxt(out + "/fast_pde_diagnostics.csv", delimiter=",", skiprows=1)
    assert np.all(np.abs(diag[:, 1]) < 1e-12)  # energy stays ~0


def test_malformed_config_exit_2(tmp_path, capsys):
    text = FAST_DIPOLE.replace("charges = 1 -1", "charges = 1")
    path = write_config(tmp_path, text)
    rc = cli.main(["simulate-pde", "--config", path, "--out", str(tmp_path)])
    assert rc == 2
    assert "vortices.charges" in capsys.readouterr().err


def test_coincident_vortices_exit_2(tmp_path, capsys):
    text = FAST_DIPOLE.replace("0.3 0.5, 0.7 0.5", "0.3 0.5, 0.3 0.5")
    path = write_config(tmp_path, text)
    rc = cli.main(["simulate-ode", "--config", path, "--out", str(tmp_path)])
    assert rc == 2


def test_sphere_pde_exit_2(tmp_path, capsys):
    text = FAST_DIPOLE.replace("kind = torus", "kind = sphere").replace(
        "positions = 0.3 0.5, 0.7 0.5", "positions = 1.0 1.0, 2.1 4.1"
    ).replace("charges = 1 -1", "charges = 1 1")
    path = write_config(tmp_path, text)
    rc = cli.main(["compare", "--config", path, "--out", str(tmp_path)])
    assert rc == 2
    assert "torus-only" in capsys.readouterr().err


def test_compare_single_eps_no_verdict(tmp_path):
    text = FAST_DIPOLE.replace("eps = 0.1", "eps_list = 0.1").replace("T = 0.002", "T = 0.004")
    path = write_config(tmp_path, text)
    out = str(tmp_path / "out")
    rc = cli.main(["compare", "--config", path, "--out", out])
    assert rc == 0
    with open(out + "/fast_compare.json") as f:
        report = json.load(f)
    assert len(report["rows"]) == 1
    assert report["D_monotone_decreasing"] is None


def test_green_table_bit_stable(tmp_path):
    path = write_config(tmp_path, FAST_DIPOLE)
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert cli.main(["green-table", "--config", path, "--out", out1]) == 0
    assert cli.main(["green-table", "--config", path, "--out", out2]) == 0
    a = open(out1 + "/fast_green_table.csv").read()
    b = open(out2 + "/fast_green_table.csv").read()
    assert a == b and a.splitlines()[0] == "x1,x2,y1,y2,G,grad_norm,H"


def test_selftest_exits_zero(capsys):
    assert cli.cmd_selftest() == 0
    out = capsys.readouterr().out
    assert "0 failure(s)" in out and "FAIL" not in out


def test_energy_expansion_cli(tmp_path):
    text = FAST_DIPOLE.replace("eps = 0.1", "eps_list = 0.12 0.06").replace("n1 = 96", "n1 = 128").replace("n2 = 96", "n2 = 128")
    path = write_config(tmp_path, text)
    out = str(tmp_path / "out")
    rc = cli.main(["energy-expansion", "--config", path, "--out", out])
    assert rc == 0
    rows = np.loadtxt(out + "/fast_energy_expansion.csv", delimiter=",", skiprows=1)
    assert rows.shape == (2, 5)
    assert rows[0, 0] > rows[1, 0]  # decreasing eps ladder
