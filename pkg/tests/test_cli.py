import io
import json
import subprocess
import sys

import pytest

from contactdyn import __version__
from contactdyn.cli import run

DARBOUX_CONFIG = {
    "manifold": {"kind": "darboux"},
    "hamiltonians": {"H": "1 + 0.2*sin(x1)", "F": {"expr": "0.3*y1"},
                     "G": {"builtin": "constant", "params": {"value": 0.5}}},
    "flow": {"dt": 0.01, "t_samples": 10},
    "seeds": [[0.1, 0.2, 0.3], [0.0, -0.2, 0.1]],
    "grid": {"resolution": 7},
    "norm": {"strict": False},
    "command": {"a": -0.5, "b": 0.5, "c": 3.2, "zeta": "t^2"},
}


def call(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def scalars(text):
    return {s["name"]: s["value"] for s in json.loads(text)["scalars"]}


@pytest.fixture
def config(tmp_path):
    def write(cfg=DARBOUX_CONFIG, name="run.json"):
        p = tmp_path / name
        p.write_text(json.dumps(cfg))
        return str(p)
    return write


def test_norm_of_constant_on_sphere():
    code, out, _ = call(["norm", "--hamiltonian", "1", "--manifold", "hopf"])
    assert code == 0
    assert scalars(out)["total"] == pytest.approx(1.0, abs=1e-12)


def test_report_header():
    code, out, _ = call(["norm", "--hamiltonian", "1", "--manifold", "hopf"])
    d = json.loads(out)
    assert d["tool_version"] == __version__
    assert len(d["config_hash"]) == 64 and d["schema_version"]


def test_divergent_factors_experiment():
    code, out, _ = call(["experiment", "divergent_factors", "--k", "4"])
    assert code == 0
    d = json.loads(out)
    assert scalars(out)["h_1_origin"] == pytest.approx(1.3862943611198906, abs=1e-3)
    assert d["passed"] and d["params"]["k"] == 4


def test_sphere_experiment_flags():
    code, out, _ = call(["experiment", "sphere"])
    flags = json.loads(out)["pass_flags"]
    for name in ["norm_H", "norm_F", "norm_H_inverse", "norm_F_inverse",
                 "norm_inverse_of_H_compose_F", "trajectory_error", "conformal_error"]:
        assert flags[name] is True
    # the two statements refuted by the closed-form mean are reported as failing
    assert flags["norm_H_compose_F_gt_16"] is False
    assert flags["mean_integral_vs_e3h_oracle"] is False
    assert code == 0


@pytest.mark.parametrize("verb", ["flow", "compose", "invert", "conjugate", "reparam"])
def test_system_verbs_emit_trajectories(config, verb):
    code, out, err = call([verb, "--config", config(), "--format", "csv"])
    assert code == 0, err
    lines = out.splitlines()
    assert lines[0] == "seed_id,t,x1,y1,z,h"
    assert len(lines) == 1 + 2 * 11


def test_compose_routes_agree(config):
    cfg = dict(DARBOUX_CONFIG, command={"hamiltonian": "H", "other": "F"})
    a = call(["compose", "--config", config(cfg), "--format", "csv"])[1]
    cfg["command"]["route"] = "hamiltonian"
    b = call(["compose", "--config", config(cfg, "b.json"), "--format", "csv"])[1]
    rows = [[float(v) for v in line.split(",")] for line in a.splitlines()[1:]]
    rows_b = [[float(v) for v in line.split(",")] for line in b.splitlines()[1:]]
    assert max(abs(u - v) for r, s in zip(rows, rows_b) for u, v in zip(r, s)) < 1e-5


def test_lift_emits_theta(config):
    code, out, _ = call(["lift", "--config", config(), "--format", "csv"])
    assert code == 0 and out.splitlines()[0] == "seed_id,t,x1,y1,z,theta"
    code, out, _ = call(["lift", "--config", config()])
    flags = json.loads(out)["pass_flags"]
    assert flags == {"admissible_norm": True, "admissible_norm_upper": True, "cutoff_agreement": True}


def test_norm_and_distance(config):
    code, out, _ = call(["norm", "--config", config()])
    assert code == 0 and scalars(out)["total"] == pytest.approx(1.4, abs=1e-6)
    code, out, _ = call(["distance", "--config", config()])
    s = scalars(out)
    assert code == 0 and s["d_alpha"] == pytest.approx(s["d_bar_M"] + s["conf_sup"] + s["ham_norm"])


def test_named_series_csv(config):
    code, out, _ = call(["norm", "--config", config(), "--format", "csv", "--series", "integrand"])
    assert code == 0 and out.splitlines()[0] == "t,max,min,osc,mean"
    code, _, err = call(["norm", "--config", config(), "--format", "csv", "--series", "nope"])
    assert code == 2 and "nope" in err


def test_output_file(config, tmp_path):
    target = tmp_path / "out.json"
    code, out, _ = call(["flow", "--config", config(), "--out", str(target)])
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["name"] == "flow"


def test_deterministic_reports(config):
    a = call(["flow", "--config", config()])[1]
    b = call(["flow", "--config", config()])[1]
    assert a == b


def test_overrides_change_the_hash(config):
    a = json.loads(call(["flow", "--config", config()])[1])["config_hash"]
    b = json.loads(call(["flow", "--config", config(), "--dt", "0.005"])[1])["config_hash"]
    assert a != b


def test_grid_override(config):
    code, out, _ = call(["norm", "--config", config(), "--grid", "5,5,9"])
    assert code == 0 and json.loads(out)["meta"]["grid"]["nodes"] == 225


@pytest.mark.parametrize("cfg", [
    {"bogus": 1},
    {"manifold": {"kind": "torus"}},
    {"flow": {"dt": -1}},
    {"hamiltonians": {"H": 3}},
    {"seeds": []},
])
def test_schema_errors_exit_2(config, cfg):
    code, _, err = call(["flow", "--config", config(cfg)])
    assert code == 2 and err.startswith("error:")


def test_missing_and_broken_config(tmp_path):
    assert call(["flow", "--config", str(tmp_path / "none.json")])[0] == 2
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert call(["flow", "--config", str(p)])[0] == 2


@pytest.mark.parametrize("argv", [
    ["flow", "--hamiltonian", "foo(x1)"],
    ["flow", "--hamiltonian", "cos(xi1)", "--manifold", "darboux"],
    ["norm", "--hamiltonian", "1/x1", "--manifold", "darboux"],
    ["experiment", "no_such_thing"],
    ["experiment"],
    ["experiment", "sphere", "--k", "3"],
    ["cauchy", "nowhere"],
    ["flow", "--grid", "a,b"],
    ["frobnicate"],
])
def test_validation_errors_exit_2(argv):
    assert call(argv)[0] == 2


def test_numerical_failure_exits_3():
    code, _, err = call(["flow", "--hamiltonian", "exp(exp(exp(10*y1)))", "--manifold", "darboux"])
    assert code == 3 and "StepExplosion" in err


def test_pole_crossing_exits_3(config):
    cfg = {"manifold": {"kind": "hopf"}, "hamiltonians": {"H": "0.5*cos(xi1)"},
           "seeds": [[-1.5707963, 0.0, 0.01]]}
    assert call(["flow", "--config", config(cfg)])[0] == 3


def test_cauchy_verb():
    code, out, _ = call(["cauchy", "cantor", "--ks", "2,3,4"])
    d = json.loads(out)
    assert code == 0 and d["meta"]["non_cauchy"] == ["ham_norm"]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "contactdyn", "--version"], capture_output=True,
                       text=True)
    assert r.returncode == 0 and __version__ in r.stdout
