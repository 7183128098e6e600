import json

import pytest

from spacetime_spins.circuit import builtin, render
from spacetime_spins.cli import main
from spacetime_spins.experiment import CurvePoint, write_curves
from spacetime_spins.modelio import graph_export, load_model, model_from_dict, model_to_dict
from spacetime_spins.oracle import exact_partition
from spacetime_spins.spacetime import gauge_basis
from spacetime_spins.spinmodel import GeneralPauli, IndependentXZ, build_hamiltonian, simplify


@pytest.mark.parametrize("channel", [IndependentXZ(0.1, 0.05), GeneralPauli(0.8, 0.1, 0.05, 0.05)])
def test_model_dict_round_trip(channel):
    model = simplify(build_hamiltonian(gauge_basis(builtin("rep_memory", d=3, T=3)), channel))
    back = model_from_dict(json.loads(json.dumps(model_to_dict(model))))
    assert back == model
    eta = [1] * len(model.interactions)
    assert exact_partition(back, eta) == exact_partition(model, eta)
    g = graph_export(model)
    assert len(g["vertices"]) == model.num_spins and len(g["hyperedges"]) == len(model.interactions)


def test_build_model(tmp_path, capsys):
    out = tmp_path / "m.json"
    graph = tmp_path / "g.json"
    rc = main(["build-model", "--builtin", "rep_memory", "--param", "d=3", "--px", "0.1",
               "--half", "x", "--out", str(out), "--graph", str(graph)])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["spins"] == load_model(out).num_spins
    assert json.loads(graph.read_text())["vertices"]


def test_inspect_and_oracle(tmp_path, capsys):
    path = tmp_path / "c.txt"
    path.write_text(render(builtin("rep_memory", d=3, T=3)))
    assert main(["inspect", "--circuit", str(path), "--stabilizers"]) == 0
    text = capsys.readouterr().out
    assert "stab " in text and "OBS XL" in text
    assert main(["oracle", "--circuit", str(path), "--px", "0.1"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert 0.5 < res["ml_success"] < 1 and res["failure"] == pytest.approx(1 - res["ml_success"])


def test_run_and_estimate(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"family": "rep_memory", "distances": [3], "ps": [0.1],
                               "realizations": 50, "seed": 1}))
    assert main(["run-experiment", str(cfg), "--output", str(tmp_path / "r"), "--quiet"]) == 0
    assert (tmp_path / "r.csv").read_text().startswith("d,p,rate,ci,n,seed")
    pts = [CurvePoint(d, p, 0.3 + b * (p - 0.1), 0.002, 100, 0)
           for d, b in ((3, 1.0), (5, 2.0)) for p in (0.09, 0.1, 0.11)]
    write_curves(pts, tmp_path / "s.csv")
    capsys.readouterr()
    assert main(["estimate-threshold", str(tmp_path / "s.csv"), "--boot", "50"]) == 0
    assert json.loads(capsys.readouterr().out)["x_c"] == pytest.approx(0.1)


def test_exit_codes(tmp_path, capsys):
    assert main(["inspect", "--builtin", "nope"]) == 1
    assert main(["inspect"]) == 1
    assert main(["run-experiment", str(tmp_path / "missing.json")]) == 1
    assert main(["oracle", "--builtin", "rep_memory", "--param", "d=9"]) == 2
    flat = [CurvePoint(d, p, 0.3, 0.002, 100, 0) for d in (3, 5) for p in (0.09, 0.1)]
    write_curves(flat, tmp_path / "f.csv")
    assert main(["estimate-threshold", str(tmp_path / "f.csv")]) == 2
    with pytest.raises(SystemExit):
        main(["frobnicate"])
