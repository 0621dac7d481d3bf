import json
import math

import numpy as np
import pytest

from monoqt.cli import (
    FigureDataset,
    cmd_check,
    cmd_derivs,
    cmd_fig1,
    cmd_fig2,
    cmd_fig3,
    cmd_fig4,
    main,
)
from monoqt.errors import ArgumentError
from monoqt.monogamy import CAVITY_PARTITIONS, analysis_422
from monoqt.states import DensityMatrix, cluster4, s224, w_state
from monoqt.statefile import load_state, save_state


@pytest.fixture
def cluster_file(tmp_path):
    path = tmp_path / "cluster4.json"
    save_state(cluster4(), path)
    return path


def test_fig1_rows():
    ds = cmd_fig1(20)
    assert ds.columns == ("k", "tau") and len(ds.rows) == 18
    tau = ds.column("tau")
    assert abs(tau[0] - 0.00603) < 1e-4 and abs(tau[-1] - 0.06989) < 1e-4
    assert np.all(np.diff(tau) > 0)
    assert len(cmd_fig1(3).rows) == 1
    with pytest.raises(ArgumentError):
        cmd_fig1(2)


def test_fig2_identity_and_signs():
    for name in CAVITY_PARTITIONS:
        ds = cmd_fig2(partition=name, steps=50)
        tau4, pure, mixed = (ds.column(c) for c in ("tau4", "tau3_pure", "tau3_mixed"))
        assert np.max(np.abs(tau4 - pure - mixed)) < 1e-10
        assert min(tau4.min(), pure.min(), mixed.min()) >= -1e-9
        assert ds.rows[0][0] == 0 and abs(ds.rows[0][3]) < 1e-12
    with pytest.raises(ArgumentError):
        cmd_fig2(partition="c2_first")


def test_fig3_grid():
    ds = cmd_fig3()
    assert len(ds.rows) == 400
    assert ds.column("sc_residual").min() >= -1e-9
    for a, kt, c, r in ds.rows:
        if a == 1.0:
            assert abs(c) < 1e-15 and abs(r) < 1e-15
    # 4 beta^2 xi^2 chi^2 peaks at xi^2 = chi^2 = 1/2, i.e. kt = ln 2
    fine = cmd_fig3(grid=2)
    assert fine.columns == ("alpha", "kt", "c_sq_joint", "sc_residual")


def test_fig4_matches_closed_form():
    ds = cmd_fig4()
    assert len(ds.rows) == 100
    assert ds.column("m_sef").min() >= 0 and ds.column("m_sc").max() <= 0
    assert ds.rows[0][1:] == (0.0, 0.0)
    assert analysis_422(math.pi / 4)[1] == -0.5


def test_derivs_endpoints():
    x = cmd_derivs("x", 50)
    c = cmd_derivs("C", 50)
    assert x.columns == ("x", "dE_dx", "d2E_dx2")
    assert abs(x.rows[-1][2] + 2 / (3 * math.log(16))) < 1e-12
    assert abs(c.rows[-1][2] - 2 / (3 * math.log(4))) < 1e-12
    assert x.column("d2E_dx2").max() < 0 and c.column("d2E_dC2").min() > 0
    with pytest.raises(ArgumentError):
        cmd_derivs("y")


def test_csv_round_trip_is_exact():
    for ds in (cmd_fig1(7), cmd_fig2(steps=9), cmd_derivs("C", 11)):
        back = FigureDataset.from_csv(ds.to_csv())
        assert back.columns == ds.columns and back.rows == ds.rows
        assert back.provenance["version"] == ds.provenance["version"]


def test_csv_layout(tmp_path, capsys):
    out = tmp_path / "fig2.csv"
    assert main(["fig2", "--steps", "5", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    assert any("kt_range" in ln for ln in comments) and any("command" in ln for ln in comments)
    assert lines[len(comments)] == "kt,tau4,tau3_pure,tau3_mixed"
    assert len(lines) == len(comments) + 6
    assert main(["fig1", "--n", "4"]) == 0
    assert "k,tau" in capsys.readouterr().out


def test_check_catalogue(cluster_file, tmp_path):
    rep = cmd_check(cluster_file, k=4)
    assert abs(rep["reports"][0]["tau"] - 1) < 1e-9
    rep = cmd_check(cluster_file, partition="0|1|2,3", k=3)
    assert rep["dims"] == [2, 2, 4] and abs(rep["reports"][0]["tau"]) < 1e-6
    path = tmp_path / "s224.json"
    save_state(s224(), path)
    assert abs(cmd_check(path, k=3)["reports"][0]["tau"]) < 1e-6
    chain = cmd_check(cluster_file, k="chain")
    assert [r["k"] for r in chain["reports"]] == [3, 4] and chain["nondecreasing"]


def test_check_methods(tmp_path):
    path = tmp_path / "w.json"
    save_state(w_state(4), path)
    vals = [cmd_check(path, k=4, method=m)["reports"][0]["raw_tau"] for m in (None, "closed", "discord")]
    assert max(vals) - min(vals) < 1e-7
    assert main(["check", str(path), "--k", "3", "--method", "closed"]) == 4
    mixed = tmp_path / "mixed.json"
    save_state(DensityMatrix((2, 2, 2), w_state(3).to_density().matrix), mixed)
    rep = cmd_check(mixed, k=3, restarts=2)
    assert rep["kind"] == "mixed" and rep["reports"][0]["method"] == "mixed_type2"
    assert main(["check", str(mixed), "--method", "discord"]) == 4


def test_check_exit_codes(cluster_file, tmp_path, capsys):
    assert main(["check", str(cluster_file), "--k", "4"]) == 0
    assert json.loads(capsys.readouterr().out)["reports"][0]["k"] == 4
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "pure", "dims": [2, 2], "data": [[1, 0]]}))
    assert main(["check", str(bad)]) == 2
    assert "data" in capsys.readouterr().err
    assert main(["check", str(tmp_path / "missing.json")]) == 2
    big = tmp_path / "big.json"
    save_state(DensityMatrix((2,) * 7, np.eye(128) / 128), big)
    assert main(["check", str(big), "--k", "3"]) == 3
    assert main(["check", str(cluster_file), "--k", "seven"]) == 4
    assert main(["check", str(cluster_file), "--partition", "0|1"]) == 4
    assert main(["frobnicate"]) == 4
    assert main(["fig1", "--n", "2"]) == 4


def test_fuzz_command(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["fuzz", "--dims", "2,2,2", "--ineq", "sef_nqubit", "--samples", "200", "--seed", "7"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["violations"] == 0
    c = tmp_path / "c.json"
    assert main(["fuzz", "--dims", "3,3,3", "--inject", "ou333", "--ineq", "sc_nqubit", "--samples", "1",
                 "--out", str(c)]) == 0
    rep = json.loads(c.read_text())
    assert rep["violations"] == 1 and rep["violation_list"][0]["injected"] == "ou333"
    assert main(["fuzz", "--dims", "2,3,2", "--ineq", "sef_nqubit", "--samples", "1"]) == 4
    assert main(["fuzz", "--dims", "2,x", "--ineq", "sef_nqubit", "--samples", "1"]) == 4
    assert main(["fuzz", "--dims", "4,4,4,4", "--ineq", "sc_nqubit", "--samples", "1"]) == 3


def test_state_subcommands(cluster_file, tmp_path, capsys):
    assert main(["state", "validate", str(cluster_file)]) == 0
    assert json.loads(capsys.readouterr().out)["valid"]
    grouped = tmp_path / "g.json"
    assert main(["state", "convert", str(cluster_file), "--out", str(grouped), "--partition", "0|1|2,3",
                 "--to", "mixed"]) == 0
    st = load_state(grouped)
    assert isinstance(st, DensityMatrix) and st.dims == (2, 2, 4)
    back = tmp_path / "p.json"
    assert main(["state", "convert", str(grouped), "--out", str(back), "--to", "pure"]) == 0
    assert main(["state", "validate", str(grouped)]) == 0
    mixed = tmp_path / "m.json"
    save_state(DensityMatrix((2, 2), np.eye(4) / 4), mixed)
    assert main(["state", "convert", str(mixed), "--out", str(back), "--to", "pure"]) == 2
    new = tmp_path / "w.json"
    assert main(["state", "new", "w", "--n", "5", "--out", str(new)]) == 0
    assert load_state(new).dims == (2,) * 5
