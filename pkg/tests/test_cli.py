import csv
import io
import json
import subprocess
import sys

import numpy as np

from kreinflow.cli import run
from kreinflow.models import unbalanced_example
from kreinflow.numerics import matrix_to_json
from oracles import eigencount


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def report(capsys, *argv):
    code, out, err = call(capsys, *argv)
    assert code == 0, err
    return json.loads(out)["report"]


def test_sig_unbalanced_file(tmp_path, capsys):
    t = unbalanced_example(0.5 * np.exp(0.4j), 1.1)
    cfg = {"model": "sig", "matrix": matrix_to_json(t.matrix), "symmetry": t.symmetry.to_json()}
    rep = report(capsys, "sig", "--config", write(tmp_path, cfg))
    assert rep["summary"] == "Sig = 1"
    for h in (0.3, 1.6):
        cfg["h"] = h
        assert report(capsys, "sig", "--config", write(tmp_path, cfg))["signature"] == 1


def test_sig_random_balanced(tmp_path, capsys):
    cfg = {"model": "sig", "random": {"n": 3, "scale": 0.7}}
    assert report(capsys, "sig", "--config", write(tmp_path, cfg), "--seed", "4")[
        "summary"] == "Sig = 0"


def test_sig_unitary_auto_h(tmp_path, capsys):
    m = np.diag(np.exp(1j * np.array([0.3, 1.2, -0.4, 2.0])))
    rep = report(capsys, "sig", "--config",
                 write(tmp_path, {"model": "sig", "matrix": matrix_to_json(m)}))
    assert rep["admissible_h"] and rep["signature"] == 0
    lo, hi = rep["admissible_h"][0]
    assert lo < 1 < hi


def test_sig_boundary_eigenvalue_exit_2(tmp_path, capsys):
    t = unbalanced_example(0.5, 0.3)
    cfg = {"matrix": matrix_to_json(t.matrix), "symmetry": t.symmetry.to_json(), "h": float(np.log(2))}
    code, _, err = call(capsys, "sig", "--config", write(tmp_path, cfg))
    assert code == 2 and json.loads(err)["exit_code"] == 2


def test_flow_paths(tmp_path, capsys):
    rep = report(capsys, "flow", "--config", write(tmp_path, {
        "path": "gamma_T", "example": {"kind": "jordan", "phi": 0.4, "a": 0.5}}))
    assert rep["flow"]["total"] == 0
    rep = report(capsys, "flow", "--config", write(tmp_path, {
        "path": "shift_loop", "N": 32, "r": 0.5}))
    assert rep["flow"]["total"] == 2


def test_flow_bound_states(tmp_path, capsys):
    rng = np.random.default_rng(3)
    a = rng.normal(size=(6, 6))
    h = (a + a.T) / 2
    cfg = {"path": "bound_states", "H": matrix_to_json(h), "interval": [-1.3, 2.1]}
    rep = report(capsys, "flow", "--config", write(tmp_path, cfg))
    assert rep["flow"]["total"] == eigencount(h, -1.3, 2.1)


def test_bound_states_command(tmp_path, capsys):
    cfg = {"model": "bound-states", "random": {"n": 7}, "interval": [-1.0, 1.5]}
    rep = report(capsys, "bound-states", "--config", write(tmp_path, cfg), "--seed", "9")
    assert rep["count"] == rep["direct_count"]


def test_harper_command(tmp_path, capsys):
    rep = report(capsys, "harper", "--config", write(tmp_path, {
        "model": "harper", "p": 3, "q": 1, "E": 1.366, "grid": 1024}))
    assert rep["weighted_count"] == rep["oracle_flow"] == -1


def test_harper_band_energy_exit_2(tmp_path, capsys):
    code, _, err = call(capsys, "harper", "--config",
                        write(tmp_path, {"p": 3, "q": 1, "E": 0.0}))
    assert code == 2 and json.loads(err)["admissible"]


def test_bottmaslov_command(tmp_path, capsys):
    psi = np.array([[1.0], [1.0]]) / np.sqrt(2)
    cfg = {"psi": matrix_to_json(psi), "generator": matrix_to_json(np.eye(2)),
           "t_range": [-0.5, 2.5]}
    rep = report(capsys, "bottmaslov", "--config", write(tmp_path, cfg))
    assert isinstance(rep["flow"]["total"], int)


def test_examples_and_selfcheck(capsys):
    rep = report(capsys, "examples")
    assert all(e["max_deviation"] <= 1e-9 for e in rep["examples"])
    rep = report(capsys, "selfcheck", "--seed", "1")
    assert rep["passed"]


def test_malformed_input_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"path": "shift_loop",\n "N": }')
    code, _, err = call(capsys, "flow", "--config", str(bad))
    assert code == 1 and "line 2" in json.loads(err)["message"]
    code, _, err = call(capsys, "flow", "--config",
                        write(tmp_path, {"path": "shift_loop", "N": 32, "r": 0.5, "x": 1}))
    assert code == 1 and "unknown keys" in err
    code, _, _ = call(capsys, "sig", "--tol", "nonsense")
    assert code == 1


def test_pinned_path_exit_3(tmp_path, capsys):
    cfg = {"path": "hamiltonian", "H": matrix_to_json(np.zeros((2, 2))),
           "P": matrix_to_json(np.zeros((2, 2))), "E": 0.0,
           "T0": matrix_to_json(np.eye(2)), "t_range": [0, 1], "dt": 0.1}
    code, _, err = call(capsys, "flow", "--config", write(tmp_path, cfg))
    assert code == 3 and "t" in json.loads(err)


def test_deterministic_output(tmp_path, capsys):
    cfg = write(tmp_path, {"model": "sig", "random": {"n": 2}})
    outs = []
    for k in range(2):
        out = tmp_path / f"out{k}.json"
        assert run(["sig", "--config", cfg, "--seed", "17", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["header"]["seed"] == 17


def test_csv_trace_layout(tmp_path, capsys):
    cfg = write(tmp_path, {"path": "gamma_T", "example": {"kind": "boost", "eta": 0.5}})
    code, out, _ = call(capsys, "flow", "--config", cfg, "--format", "csv", "--trace")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["t", "phase_1", "phase_2"]
    data = np.array(rows[1:], dtype=float)
    assert np.all(np.diff(data[:, 0]) > 0)
    assert np.all(np.diff(data[:, 1:], axis=1) >= 0)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "kreinflow", "examples"],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 0 and json.loads(res.stdout)["header"]["command"] == "examples"


def test_help_documents_exit_codes():
    res = subprocess.run([sys.executable, "-m", "kreinflow", "flow", "--help"],
                         capture_output=True, text=True, timeout=60)
    assert "exit codes" in res.stdout and "column 1 is the parameter" in res.stdout
